//! Cross-run tables from history.csv files: J/J0 per step and obstacle
//! edge ratio per step, one column per run, step-aligned.

use std::path::{Path, PathBuf};

use flowshape::{Error, Result};

pub struct RunSeries {
    pub name: String,
    pub j_ratio: Vec<f64>,
    pub edge_ratio: Vec<f64>,
}

fn malformed(path: &Path, line: usize, message: String) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    }
}

pub fn parse_history(dir: &Path) -> Result<RunSeries> {
    let path = dir.join("history.csv");
    let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| malformed(&path, 1, "empty history".to_string()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let col = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| malformed(&path, 1, format!("missing column '{name}'")))
    };
    let c_step = col("step")?;
    let c_jr = col("J_over_J0")?;
    let c_er = col("edge_ratio")?;

    let mut series = RunSeries {
        name: run_name(dir),
        j_ratio: Vec::new(),
        edge_ratio: Vec::new(),
    };
    for (i, row) in lines.enumerate() {
        if row.is_empty() {
            continue;
        }
        let lineno = i + 2;
        let fields: Vec<&str> = row.split(',').collect();
        let get = |c: usize| -> Result<f64> {
            fields
                .get(c)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| malformed(&path, lineno, format!("bad field {c}")))
        };
        let step = get(c_step)? as usize;
        if step != series.j_ratio.len() {
            return Err(malformed(
                &path,
                lineno,
                format!("expected step {}, found {step}", series.j_ratio.len()),
            ));
        }
        series.j_ratio.push(get(c_jr)?);
        series.edge_ratio.push(get(c_er)?);
    }
    if series.j_ratio.is_empty() {
        return Err(malformed(&path, 1, "no data rows".to_string()));
    }
    Ok(series)
}

fn run_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

/// Step-aligned CSV: shorter runs leave trailing cells empty.
fn table(series: &[RunSeries], select: fn(&RunSeries) -> &[f64], decimals: usize) -> String {
    let mut s = String::from("step");
    for r in series {
        s.push(',');
        s.push_str(&r.name);
    }
    s.push('\n');
    let rows = series.iter().map(|r| select(r).len()).max().unwrap_or(0);
    for step in 0..rows {
        s.push_str(&step.to_string());
        for r in series {
            s.push(',');
            if let Some(v) = select(r).get(step) {
                s.push_str(&format!("{v:.decimals$}"));
            }
        }
        s.push('\n');
    }
    s
}

pub fn cmd_report(runs: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let mut series = Vec::with_capacity(runs.len());
    for dir in runs {
        series.push(parse_history(dir)?);
    }
    // basenames can collide across parent dirs; keep columns distinct
    for i in 1..series.len() {
        let taken = series[..i].iter().any(|s| s.name == series[i].name);
        if taken {
            series[i].name = format!("{}#{}", series[i].name, i + 1);
        }
    }
    let j_table = table(&series, |r| &r.j_ratio, 6);
    let e_table = table(&series, |r| &r.edge_ratio, 2);
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.display().to_string(),
                source,
            })?;
            for (name, text) in [
                ("report_j_ratio.csv", &j_table),
                ("report_edge_ratio.csv", &e_table),
            ] {
                let path = dir.join(name);
                std::fs::write(&path, text).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                println!("wrote {}", path.display());
            }
        }
        None => {
            println!("# J/J0 per step");
            print!("{j_table}");
            println!();
            println!("# obstacle edge ratio per step");
            print!("{e_table}");
        }
    }
    Ok(())
}
