//! Problem files (TOML), spectral-data files (JSON) and CSV tables.

use crate::asymptotics::{DecayRow, DeviationRow};
use crate::error::{Error, Result};
use crate::forward::Eigenvalue;
use crate::inverse::ReconstructionResult;
use crate::potential::{sampled, Potential};
use crate::types::{ProblemSpec, Singularity, SpectralData, SpectralDatum};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use std::path::Path;

pub const FORMAT_NAME: &str = "singular-dirac/spectral-data";
pub const FORMAT_VERSION: u32 = 1;

/// Complex number as an explicit `{ re, im }` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexField {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<ComplexField> for Complex<f64> {
    fn from(c: ComplexField) -> Self {
        Complex::new(c.re, c.im)
    }
}

impl From<Complex<f64>> for ComplexField {
    fn from(c: Complex<f64>) -> Self {
        Self { re: c.re, im: c.im }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularityField {
    pub gamma: f64,
    pub mu: ComplexField,
    #[serde(default)]
    pub eta: f64,
}

/// Potential registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialField {
    Zero,
    Constant { q1: ComplexField, q2: ComplexField },
    /// `q1 = a·sin(w x)`, `q2 = a·cos(w x)`.
    Trig { amplitude: ComplexField, frequency: f64 },
    /// Inline table `x → (q1, q2)`, interpolated by natural cubic splines.
    Samples { x: Vec<f64>, q1: Vec<ComplexField>, q2: Vec<ComplexField> },
}

/// Solver settings; every field is optional and CLI flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverField {
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cond_cap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<Vec<f64>>,
}

/// A boundary value problem with its solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default, rename = "singularity")]
    pub singularities: Vec<SingularityField>,
    pub potential: PotentialField,
    #[serde(default)]
    pub solver: SolverField,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

impl ProblemFile {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::Parse { path: origin.into(), reason: e.to_string() })?;
        file.to_spec()?;
        Ok(file)
    }

    /// Reads, parses and validates a problem file.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read_text(path)?, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem file serializes")
    }

    /// SHA-256 of the canonical TOML form, as lowercase hex.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn potential(&self) -> Result<Potential<f64>> {
        Ok(match &self.potential {
            PotentialField::Zero => Potential::Zero,
            PotentialField::Constant { q1, q2 } => Potential::Constant { q1: (*q1).into(), q2: (*q2).into() },
            PotentialField::Trig { amplitude, frequency } => {
                if !frequency.is_finite() {
                    return Err(Error::spec("potential.frequency", "must be finite"));
                }
                Potential::Trig { amplitude: (*amplitude).into(), frequency: *frequency }
            }
            PotentialField::Samples { x, q1, q2 } => sampled(
                x.clone(),
                q1.iter().map(|v| (*v).into()).collect(),
                q2.iter().map(|v| (*v).into()).collect(),
            )?,
        })
    }

    /// The validated problem.
    pub fn to_spec(&self) -> Result<ProblemSpec<f64>> {
        let sings = self.singularities.iter().map(|s| Singularity::new(s.gamma, s.mu.into(), s.eta)).collect();
        ProblemSpec::new(sings, self.alpha, self.beta, self.potential()?)
    }
}

/// Full-precision decimal text of `v` (17 significant digits).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct ComplexOut {
    re: Box<RawValue>,
    im: Box<RawValue>,
}

#[derive(Serialize)]
struct DatumOut {
    k: i64,
    lambda: ComplexOut,
    a: ComplexOut,
}

#[derive(Serialize)]
struct TolerancesOut {
    rtol: Box<RawValue>,
    atol: Box<RawValue>,
}

#[derive(Serialize)]
struct FileOut {
    format: &'static str,
    version: u32,
    solver_version: String,
    problem_sha256: String,
    #[serde(rename = "K")]
    k: usize,
    strip_height: Box<RawValue>,
    tolerances: TolerancesOut,
    data: Vec<DatumOut>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatumIn {
    k: i64,
    lambda: ComplexField,
    a: ComplexField,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TolerancesIn {
    rtol: f64,
    atol: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIn {
    format: String,
    version: u32,
    solver_version: String,
    problem_sha256: String,
    #[serde(rename = "K")]
    k: usize,
    strip_height: f64,
    tolerances: TolerancesIn,
    data: Vec<DatumIn>,
}

/// Spectral data with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDataFile {
    pub solver_version: String,
    pub problem_sha256: String,
    pub rtol: f64,
    pub atol: f64,
    pub data: SpectralData<f64>,
}

fn raw(v: f64) -> Box<RawValue> {
    RawValue::from_string(format_f64(v)).expect("finite float is valid JSON")
}

fn raw_c(z: Complex<f64>) -> ComplexOut {
    ComplexOut { re: raw(z.re), im: raw(z.im) }
}

impl SpectralDataFile {
    pub fn new(data: SpectralData<f64>, problem: &ProblemFile, rtol: f64, atol: f64) -> Self {
        Self { solver_version: env!("CARGO_PKG_VERSION").into(), problem_sha256: problem.hash(), rtol, atol, data }
    }

    pub fn to_json(&self) -> String {
        let out = FileOut {
            format: FORMAT_NAME,
            version: FORMAT_VERSION,
            solver_version: self.solver_version.clone(),
            problem_sha256: self.problem_sha256.clone(),
            k: self.data.k_max(),
            strip_height: raw(self.data.strip_height()),
            tolerances: TolerancesOut { rtol: raw(self.rtol), atol: raw(self.atol) },
            data: self.data.iter().map(|d| DatumOut { k: d.k, lambda: raw_c(d.lambda), a: raw_c(d.a) }).collect(),
        };
        let mut s = serde_json::to_string_pretty(&out).expect("spectral data serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let parse = |reason: String| Error::Parse { path: origin.into(), reason };
        let f: FileIn = serde_json::from_str(text).map_err(|e| parse(e.to_string()))?;
        if f.format != FORMAT_NAME {
            return Err(parse(format!("format `{}` is not `{FORMAT_NAME}`", f.format)));
        }
        if f.version != FORMAT_VERSION {
            return Err(parse(format!("unsupported version {}", f.version)));
        }
        let data = SpectralData::new(
            f.data.into_iter().map(|d| SpectralDatum { k: d.k, lambda: d.lambda.into(), a: d.a.into() }).collect(),
            f.strip_height,
        )?;
        if data.k_max() != f.k {
            return Err(Error::DataMismatch(format!("header K = {} but data cover K = {}", f.k, data.k_max())));
        }
        Ok(Self {
            solver_version: f.solver_version,
            problem_sha256: f.problem_sha256,
            rtol: f.tolerances.rtol,
            atol: f.tolerances.atol,
            data,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }
}

fn csv_table<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

pub const FORWARD_HEADER: [&str; 6] = ["k", "lambda_re", "lambda_im", "a_re", "a_im", "residual"];
pub const RECONSTRUCTION_HEADER: [&str; 7] = ["x", "q1_re", "q1_im", "q2_re", "q2_im", "solve_residual", "cond_est"];
pub const DECAY_HEADER: [&str; 7] = ["lambda_re", "lambda_im", "delta12_re", "delta12_im", "delta0_re", "delta0_im", "abs_diff"];
pub const DEVIATION_HEADER: [&str; 6] = ["k", "lambda_re", "lambda_im", "lambda0_re", "lambda0_im", "abs_diff"];

/// `k, λ_k, a_k, |Δ₁₂(λ_k)|`.
pub fn forward_csv(eigs: &[Eigenvalue<f64>]) -> String {
    csv_table(
        &FORWARD_HEADER,
        eigs.iter().map(|e| {
            vec![
                e.k.to_string(),
                format_f64(e.lambda.re),
                format_f64(e.lambda.im),
                format_f64(e.a.re),
                format_f64(e.a.im),
                format_f64(e.residual),
            ]
        }),
    )
}

/// `x, q1, q2, solve residual, condition estimate` per grid point.
pub fn reconstruction_csv(result: &ReconstructionResult<f64>) -> String {
    csv_table(
        &RECONSTRUCTION_HEADER,
        result.points.iter().map(|p| {
            vec![
                format_f64(p.x),
                format_f64(p.q.a11.re),
                format_f64(p.q.a11.im),
                format_f64(p.q.a12.re),
                format_f64(p.q.a12.im),
                format_f64(p.residual),
                format_f64(p.cond),
            ]
        }),
    )
}

pub fn decay_csv(rows: &[DecayRow<f64>]) -> String {
    csv_table(
        &DECAY_HEADER,
        rows.iter().map(|r| {
            vec![
                format_f64(r.lambda.re),
                format_f64(r.lambda.im),
                format_f64(r.delta12.re),
                format_f64(r.delta12.im),
                format_f64(r.delta0.re),
                format_f64(r.delta0.im),
                format_f64(r.scaled_diff),
            ]
        }),
    )
}

pub fn deviation_csv(rows: &[DeviationRow<f64>]) -> String {
    csv_table(
        &DEVIATION_HEADER,
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                format_f64(r.lambda.re),
                format_f64(r.lambda.im),
                format_f64(r.lambda0.re),
                format_f64(r.lambda0.im),
                format_f64(r.diff),
            ]
        }),
    )
}
