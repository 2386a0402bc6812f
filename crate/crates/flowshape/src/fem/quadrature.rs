//! Symmetric triangle quadrature rules (Dunavant), degrees 1 through 6.
//!
//! Points are barycentric, weights sum to 1: the integral over a physical
//! triangle T is `area(T) * sum_k w_k f(p_k)`.

#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadRule {
    pub degree: usize,
    pub points: &'static [QuadPoint],
}

const fn pt(l0: f64, l1: f64, l2: f64, w: f64) -> QuadPoint {
    QuadPoint {
        bary: [l0, l1, l2],
        weight: w,
    }
}

/// 3 permutations of (a, b, b) with a = 1 - 2b.
macro_rules! perm3 {
    ($a:expr, $b:expr, $w:expr) => {
        [pt($a, $b, $b, $w), pt($b, $a, $b, $w), pt($b, $b, $a, $w)]
    };
}

const DEG1: [QuadPoint; 1] = [pt(
    1.0 / 3.0,
    1.0 / 3.0,
    1.0 / 3.0,
    1.0,
)];

const DEG2: [QuadPoint; 3] = perm3!(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);

const DEG3: [QuadPoint; 4] = {
    let g = perm3!(0.6, 0.2, 25.0 / 48.0);
    [
        pt(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, -27.0 / 48.0),
        g[0],
        g[1],
        g[2],
    ]
};

const DEG4: [QuadPoint; 6] = {
    let a = perm3!(
        1.0 - 2.0 * 0.445948490915965,
        0.445948490915965,
        0.223381589678011
    );
    let b = perm3!(
        1.0 - 2.0 * 0.091576213509771,
        0.091576213509771,
        0.109951743655322
    );
    [a[0], a[1], a[2], b[0], b[1], b[2]]
};

const DEG5: [QuadPoint; 7] = {
    let a = perm3!(
        1.0 - 2.0 * 0.470142064105115,
        0.470142064105115,
        0.132394152788506
    );
    let b = perm3!(
        1.0 - 2.0 * 0.101286507323456,
        0.101286507323456,
        0.125939180544827
    );
    [
        pt(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225),
        a[0],
        a[1],
        a[2],
        b[0],
        b[1],
        b[2],
    ]
};

const DEG6: [QuadPoint; 12] = {
    let a = perm3!(
        1.0 - 2.0 * 0.063089014491502,
        0.063089014491502,
        0.050844906370207
    );
    let b = perm3!(
        1.0 - 2.0 * 0.249286745170910,
        0.249286745170910,
        0.116786275726379
    );
    const C1: f64 = 0.310352451033785;
    const C2: f64 = 0.053145049844816;
    const C3: f64 = 1.0 - C1 - C2;
    const WC: f64 = 0.082851075618374;
    [
        a[0],
        a[1],
        a[2],
        b[0],
        b[1],
        b[2],
        pt(C1, C2, C3, WC),
        pt(C2, C1, C3, WC),
        pt(C1, C3, C2, WC),
        pt(C2, C3, C1, WC),
        pt(C3, C1, C2, WC),
        pt(C3, C2, C1, WC),
    ]
};

/// Smallest tabulated rule exact for polynomials of the given total degree.
pub fn quad_rule(degree: usize) -> QuadRule {
    match degree {
        0 | 1 => QuadRule {
            degree: 1,
            points: &DEG1,
        },
        2 => QuadRule {
            degree: 2,
            points: &DEG2,
        },
        3 => QuadRule {
            degree: 3,
            points: &DEG3,
        },
        4 => QuadRule {
            degree: 4,
            points: &DEG4,
        },
        5 => QuadRule {
            degree: 5,
            points: &DEG5,
        },
        _ => QuadRule {
            degree: 6,
            points: &DEG6,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
    }

    /// int_T l0^p l1^q l2^r dx = p! q! r! / (p+q+r+2)! * 2 * area on the
    /// reference triangle (area 1/2), i.e. weights-sum-1 rules must return
    /// p! q! r! * 2 / (p+q+r+2)!.
    fn exact_bary_monomial(p: usize, q: usize, r: usize) -> f64 {
        factorial(p) * factorial(q) * factorial(r) * 2.0 / factorial(p + q + r + 2)
    }

    #[test]
    fn weights_sum_to_one() {
        for d in 1..=6 {
            let rule = quad_rule(d);
            let s: f64 = rule.points.iter().map(|p| p.weight).sum();
            assert!((s - 1.0).abs() < 1e-14, "degree {d}: weight sum {s}");
            for p in rule.points {
                let b: f64 = p.bary.iter().sum();
                assert!((b - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn integrates_barycentric_monomials_exactly() {
        for d in 1..=6 {
            let rule = quad_rule(d);
            for p in 0..=d {
                for q in 0..=(d - p) {
                    let r = d - p - q;
                    let approx: f64 = rule
                        .points
                        .iter()
                        .map(|qp| {
                            qp.weight
                                * qp.bary[0].powi(p as i32)
                                * qp.bary[1].powi(q as i32)
                                * qp.bary[2].powi(r as i32)
                        })
                        .sum();
                    let exact = exact_bary_monomial(p, q, r);
                    assert!(
                        (approx - exact).abs() < 1e-14,
                        "degree {d} monomial ({p},{q},{r}): {approx} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn degree_selection_is_monotone() {
        assert_eq!(quad_rule(0).degree, 1);
        assert_eq!(quad_rule(4).degree, 4);
        assert_eq!(quad_rule(9).degree, 6);
    }
}
