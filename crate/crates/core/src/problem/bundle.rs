//! Problem bundles: a directory holding `A.csv`, `b.csv` and `meta.json`
//! (finite problems) or `L.csv` and `meta.json` (Gaussian streams).
//!
//! Matrix CSV files start with a `# rows cols` header followed by one
//! comma-separated row per line. Values use the shortest decimal that
//! round-trips, so save/load is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GaussianProblem, LeastSquaresProblem, Problem, ProblemMeta};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct CsvError {
    pub line: usize,
    pub msg: String,
}

fn csv_err(line: usize, msg: impl Into<String>) -> CsvError {
    CsvError {
        line,
        msg: msg.into(),
    }
}

pub fn format_matrix_csv(m: &DenseMatrix) -> String {
    let mut out = format!("# {} {}\n", m.rows(), m.cols());
    for row in m.row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> std::result::Result<DenseMatrix, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| csv_err(1, "empty file"))?;
    let dims = header
        .strip_prefix('#')
        .ok_or_else(|| csv_err(1, "expected header `# rows cols`"))?;
    let dims: Vec<&str> = dims.split_whitespace().collect();
    let [rows, cols] = dims[..] else {
        return Err(csv_err(1, "expected header `# rows cols`"));
    };
    let rows: usize = rows.parse().map_err(|_| csv_err(1, format!("bad row count {rows:?}")))?;
    let cols: usize = cols.parse().map_err(|_| csv_err(1, format!("bad column count {cols:?}")))?;
    let total = rows
        .checked_mul(cols)
        .ok_or_else(|| csv_err(1, "matrix size overflows"))?;
    let mut data = Vec::with_capacity(total.min(text.len()));
    let mut seen_rows = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if seen_rows == rows {
            if line.trim().is_empty() {
                continue;
            }
            return Err(csv_err(lineno, format!("more than {rows} data rows")));
        }
        let before = data.len();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| csv_err(lineno, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(csv_err(lineno, format!("non-finite value {field:?}")));
            }
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(csv_err(
                lineno,
                format!("expected {cols} values, found {}", data.len() - before),
            ));
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(csv_err(
            text.lines().count().max(1),
            format!("expected {rows} data rows, found {seen_rows}"),
        ));
    }
    if rows == 0 || cols == 0 {
        return Ok(DenseMatrix::zeros(rows, cols));
    }
    DenseMatrix::from_row_major(rows, cols, data).map_err(|e| csv_err(1, e.to_string()))
}

/// Contents of `meta.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub family: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_norm: Option<f64>,
}

pub fn parse_bundle_meta(text: &str) -> std::result::Result<BundleMeta, serde_json::Error> {
    serde_json::from_str(text)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(io_err(&path))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = read_file(path)?;
    parse_matrix_csv(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

fn read_meta(dir: &Path) -> Result<BundleMeta> {
    let path = dir.join("meta.json");
    let text = read_file(&path)?;
    parse_bundle_meta(&text).map_err(|e| Error::Parse {
        path,
        msg: e.to_string(),
    })
}

fn write_meta(dir: &Path, meta: &BundleMeta) -> Result<()> {
    let mut text = serde_json::to_string_pretty(meta).map_err(|e| Error::Numeric(e.to_string()))?;
    text.push('\n');
    write_file(dir.join("meta.json"), &text)
}

fn column(v: &DenseVector) -> DenseMatrix {
    DenseMatrix::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn save_problem(p: &LeastSquaresProblem, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(dir.join("A.csv"), &format_matrix_csv(&p.a))?;
    write_file(dir.join("b.csv"), &format_matrix_csv(&column(&p.b)))?;
    write_meta(
        dir,
        &BundleMeta {
            family: p.meta.family.clone(),
            parameters: p.meta.parameters.clone(),
            seed: p.meta.seed,
            x_star: p.x_star.as_ref().map(|x| x.to_vec()),
            residual_norm: p.residual_norm,
        },
    )
}

pub fn load_problem(dir: &Path) -> Result<LeastSquaresProblem> {
    let a = read_matrix(&dir.join("A.csv"))?;
    let b_path = dir.join("b.csv");
    let b = read_matrix(&b_path)?;
    if b.cols() != 1 {
        return Err(Error::Parse {
            path: b_path,
            msg: format!("expected a single column, found {}", b.cols()),
        });
    }
    let meta = read_meta(dir)?;
    let mut p = LeastSquaresProblem::new(a, DenseVector::from_vec(b.as_slice().to_vec()))?;
    if let Some(x) = meta.x_star {
        if x.len() != p.n() {
            return Err(Error::Parse {
                path: dir.join("meta.json"),
                msg: format!("x_star has length {}, A has {} columns", x.len(), p.n()),
            });
        }
        p.x_star = Some(DenseVector::try_from_vec(x)?);
    }
    p.residual_norm = meta.residual_norm;
    p.meta = ProblemMeta {
        family: meta.family,
        parameters: meta.parameters,
        seed: meta.seed,
    };
    Ok(p)
}

pub fn save_gaussian(g: &GaussianProblem, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(dir.join("L.csv"), &format_matrix_csv(&g.l_factor))?;
    write_meta(
        dir,
        &BundleMeta {
            family: g.meta.family.clone(),
            parameters: g.meta.parameters.clone(),
            seed: g.meta.seed,
            x_star: Some(g.x_star.to_vec()),
            residual_norm: Some(g.noise_std),
        },
    )
}

pub fn load_gaussian(dir: &Path) -> Result<GaussianProblem> {
    let l = read_matrix(&dir.join("L.csv"))?;
    let meta = read_meta(dir)?;
    let x = meta.x_star.ok_or_else(|| Error::Parse {
        path: dir.join("meta.json"),
        msg: "Gaussian bundle requires x_star".into(),
    })?;
    GaussianProblem::from_factor(
        l,
        DenseVector::try_from_vec(x)?,
        ProblemMeta {
            family: meta.family,
            parameters: meta.parameters,
            seed: meta.seed,
        },
    )
}

/// Loads either bundle kind; the presence of `L.csv` marks a Gaussian stream.
pub fn load_bundle(dir: &Path) -> Result<Problem> {
    if dir.join("L.csv").exists() {
        load_gaussian(dir).map(Problem::Gaussian)
    } else {
        load_problem(dir).map(Problem::Finite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = DenseMatrix::from_rows(&[vec![0.1, -1e-300, 1.0 / 3.0], vec![5e300, 0.0, -2.5]]);
        let back = parse_matrix_csv(&format_matrix_csv(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(parse_matrix_csv("").is_err());
        assert!(parse_matrix_csv("1 1\n2\n").is_err());
        assert!(parse_matrix_csv("# 1 2\n1\n").is_err());
        assert!(parse_matrix_csv("# 2 1\n1\n").is_err());
        assert!(parse_matrix_csv("# 1 1\nNaN\n").is_err());
        assert!(parse_matrix_csv("# 1 1\ninf\n").is_err());
        assert!(parse_matrix_csv("# 1 1\n1\n2\n").is_err());
        assert!(parse_matrix_csv("# 99999999999 99999999999\n").is_err());
        assert_eq!(parse_matrix_csv("# 1 1\n1,\n").unwrap_err().line, 2);
    }

    #[test]
    fn meta_rejects_unknown_fields() {
        assert!(parse_bundle_meta(r#"{"family":"x","bogus":1}"#).is_err());
        let m = parse_bundle_meta(r#"{"family":"x","seed":18446744073709551615}"#).unwrap();
        assert_eq!(m.seed, Some(u64::MAX));
    }
}
