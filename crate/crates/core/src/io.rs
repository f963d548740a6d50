//! Fiducial files and JSON run reports.
//!
//! A fiducial file is plain text: `#`-prefixed header lines of the form
//! `# key value`, then one line per amplitude holding the real and imaginary
//! parts in `%.16e` format. The header must contain `d`; `seed`,
//! `symmetry` and `potential` are optional.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search::{welch_bound, SearchConfig, SearchResult};
use crate::verify::VerificationReport;
use crate::weyl::norm;

/// Largest accepted deviation of a loaded vector's norm from 1.
pub const NORM_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report: {0}")]
    Json(#[from] serde_json::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> FileError {
    FileError::Parse { line, message: message.into() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiducialFile {
    pub d: usize,
    pub seed: Option<u64>,
    pub symmetry: Option<String>,
    pub potential: Option<f64>,
    pub amplitudes: Vec<C64>,
}

impl FiducialFile {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        Self {
            d: amplitudes.len(),
            seed: None,
            symmetry: None,
            potential: None,
            amplitudes,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# d {}", self.d).unwrap();
        if let Some(seed) = self.seed {
            writeln!(out, "# seed {seed}").unwrap();
        }
        if let Some(sym) = &self.symmetry {
            writeln!(out, "# symmetry {sym}").unwrap();
        }
        if let Some(p) = self.potential {
            writeln!(out, "# potential {p:.16e}").unwrap();
        }
        for z in &self.amplitudes {
            writeln!(out, "{:.16e} {:.16e}", z.re, z.im).unwrap();
        }
        out
    }

    /// Parse and renormalise. Line numbers in errors are 1-based.
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let mut d: Option<usize> = None;
        let mut seed = None;
        let mut symmetry = None;
        let mut potential = None;
        let mut amplitudes = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let mut parts = header.trim().splitn(2, char::is_whitespace);
                let key = parts.next().unwrap_or("");
                let value = parts.next().unwrap_or("").trim();
                match key {
                    "d" => {
                        let v: usize = value
                            .parse()
                            .map_err(|_| parse_err(line_no, format!("invalid dimension {value:?}")))?;
                        if v == 0 {
                            return Err(parse_err(line_no, "dimension must be positive"));
                        }
                        d = Some(v);
                    }
                    "seed" => {
                        seed = Some(
                            value
                                .parse()
                                .map_err(|_| parse_err(line_no, format!("invalid seed {value:?}")))?,
                        )
                    }
                    "symmetry" => symmetry = Some(value.to_string()),
                    "potential" => {
                        potential = Some(
                            value
                                .parse()
                                .map_err(|_| parse_err(line_no, format!("invalid potential {value:?}")))?,
                        )
                    }
                    _ => {}
                }
                continue;
            }
            let Some(dim) = d else {
                return Err(parse_err(line_no, "amplitude before the '# d' header"));
            };
            if amplitudes.len() == dim {
                return Err(parse_err(line_no, format!("more than d = {dim} amplitude lines")));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(
                    line_no,
                    format!("expected two reals, found {} fields", fields.len()),
                ));
            }
            let num = |s: &str| -> Result<f64, FileError> {
                let v: f64 = s
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("unparsable real {s:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(line_no, format!("non-finite value {s:?}")))
                }
            };
            amplitudes.push(C64::new(num(fields[0])?, num(fields[1])?));
        }
        let Some(d) = d else {
            return Err(parse_err(last_line.max(1), "missing '# d' header"));
        };
        if amplitudes.len() != d {
            return Err(parse_err(
                last_line + 1,
                format!("expected {d} amplitude lines, found {}", amplitudes.len()),
            ));
        }
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > NORM_SLACK {
            return Err(FileError::Invalid(format!(
                "vector norm {n} differs from 1 by more than {NORM_SLACK}"
            )));
        }
        amplitudes.iter_mut().for_each(|z| *z /= n);
        Ok(Self { d, seed, symmetry, potential, amplitudes })
    }

    pub fn read(path: &Path) -> Result<Self, FileError> {
        Self::parse(&read_text(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), FileError> {
        write_text(path, &self.render())
    }
}

pub fn read_text(path: &Path) -> Result<String, FileError> {
    std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    std::fs::write(path, text).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Search parameters and outcome as stored in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub d: usize,
    pub seed: u64,
    pub symmetry: [i64; 4],
    pub symmetry_modulus: u64,
    pub max_restarts: usize,
    pub max_iterations: usize,
    pub convergence_gap: f64,
    pub polish: bool,
    pub converged: bool,
    /// `None` when no restart produced a usable vector.
    pub achieved_potential: Option<f64>,
    pub welch_bound: f64,
    pub restarts_used: usize,
    pub restart_index: usize,
    pub iterations: usize,
    pub overlap_residual: Option<f64>,
    /// `[re, im]` per amplitude.
    pub fiducial: Vec<[f64; 2]>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl SearchSummary {
    pub fn new(config: &SearchConfig, result: &SearchResult) -> Self {
        Self {
            d: config.d,
            seed: config.master_seed,
            symmetry: config.symmetry.signed_entries(),
            symmetry_modulus: config.symmetry.modulus(),
            max_restarts: config.max_restarts,
            max_iterations: config.max_iterations,
            convergence_gap: config.convergence_gap,
            polish: config.polish,
            converged: result.converged,
            achieved_potential: finite(result.achieved_potential),
            welch_bound: welch_bound(config.d),
            restarts_used: result.restarts_used,
            restart_index: result.restart_index,
            iterations: result.iterations,
            overlap_residual: finite(result.overlap_residual),
            fiducial: result.fiducial.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String, FileError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self, FileError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `<fiducial path>.report.json`
pub fn report_path(fiducial: &Path) -> std::path::PathBuf {
    let mut name = fiducial.as_os_str().to_owned();
    name.push(".report.json");
    name.into()
}
