//! Plain-text mesh format:
//! `vertices N` / N lines `x y` / `cells M` / M lines `i j k` /
//! `boundary K` / K lines `i j marker`.

use std::fmt::Write as _;
use std::path::Path;

use super::{Marker, TriMesh};
use crate::{Error, Result};

pub fn write_mesh_txt(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "vertices {}", mesh.n_vertices()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{} {}", v[0], v[1]).unwrap();
    }
    writeln!(out, "cells {}", mesh.n_cells()).unwrap();
    for c in mesh.cells() {
        writeln!(out, "{} {} {}", c[0], c[1], c[2]).unwrap();
    }
    writeln!(out, "boundary {}", mesh.boundary_edges().len()).unwrap();
    for &(a, b, m) in mesh.boundary_edges() {
        writeln!(out, "{} {} {}", a, b, m).unwrap();
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

struct Lines<'a> {
    path: &'a Path,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        for (i, line) in self.iter.by_ref() {
            let line = line.trim();
            if !line.is_empty() {
                return Ok((i + 1, line));
            }
        }
        Err(Error::Parse {
            path: self.path.display().to_string(),
            line: 0,
            message: "unexpected end of file".into(),
        })
    }

    fn err<T>(&self, line: usize, message: String) -> Result<T> {
        Err(Error::Parse {
            path: self.path.display().to_string(),
            line,
            message,
        })
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let (no, line) = self.next()?;
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(word), Some(count), None) if word == name => count
                .parse()
                .map_err(|_| ())
                .or_else(|_| self.err(no, format!("bad {name} count {count:?}"))),
            _ => self.err(no, format!("expected `{name} N`, found {line:?}")),
        }
    }

    fn tokens<const K: usize>(&mut self) -> Result<(usize, [&'a str; K])> {
        let (no, line) = self.next()?;
        let mut out = [""; K];
        let mut it = line.split_whitespace();
        for slot in out.iter_mut() {
            match it.next() {
                Some(t) => *slot = t,
                None => return self.err(no, format!("expected {K} fields, found {line:?}")),
            }
        }
        if it.next().is_some() {
            return self.err(no, format!("expected {K} fields, found {line:?}"));
        }
        Ok((no, out))
    }
}

pub fn read_mesh_txt(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = Lines {
        path,
        iter: text.lines().enumerate(),
    };

    let nv = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, [x, y]) = lines.tokens::<2>()?;
        let parse = |t: &str| -> Result<f64> {
            t.parse()
                .map_err(|_| ())
                .or_else(|_| lines.err(no, format!("bad coordinate {t:?}")))
        };
        vertices.push([parse(x)?, parse(y)?]);
    }

    let nc = lines.section("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (no, toks) = lines.tokens::<3>()?;
        let mut cell = [0usize; 3];
        for (slot, t) in cell.iter_mut().zip(toks) {
            *slot = t
                .parse()
                .map_err(|_| ())
                .or_else(|_| lines.err(no, format!("bad vertex index {t:?}")))?;
        }
        cells.push(cell);
    }

    let nb = lines.section("boundary")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (no, [a, b, m]) = lines.tokens::<3>()?;
        let idx = |t: &str| -> Result<usize> {
            t.parse()
                .map_err(|_| ())
                .or_else(|_| lines.err(no, format!("bad vertex index {t:?}")))
        };
        let marker: Marker = m
            .parse()
            .or_else(|_| lines.err(no, format!("unknown marker {m:?}")))?;
        boundary.push((idx(a)?, idx(b)?, marker));
    }

    TriMesh::new(vertices, cells, boundary)
}
