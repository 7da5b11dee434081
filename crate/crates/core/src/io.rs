//! Problem files (JSON in), reports (JSON out) and profiles (CSV out).
//!
//! Every float written by this module carries 17 significant digits, so
//! identical runs produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::criteria::{CriteriaReport, EpsilonVerdict, Prediction};
use crate::expr::{self, Expression, ValidationReport};
use crate::grid::{Grading, RadialGrid};
use crate::solver::{IterationConfig, ProblemSpec, ProfileSet, SolveReport};
use crate::verify::{GrowthReport, ResidualReport};
use crate::{Error, Result};

/// Lattice used for the sampled checks run at load time.
pub const VALIDATION_CAP: f64 = 10.0;
pub const VALIDATION_SAMPLES: usize = 11;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradingSpec {
    #[default]
    Uniform,
    Geometric(f64),
}

impl From<GradingSpec> for Grading {
    fn from(g: GradingSpec) -> Self {
        match g {
            GradingSpec::Uniform => Grading::Uniform,
            GradingSpec::Geometric(q) => Grading::Geometric(q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_max: f64,
    pub points: usize,
    #[serde(default)]
    pub grading: GradingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationSpec {
    pub max_iterations: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub value_cap: f64,
}

impl Default for IterationSpec {
    fn default() -> Self {
        let c = IterationConfig::default();
        IterationSpec {
            max_iterations: c.max_iterations,
            abs_tol: c.abs_tol,
            rel_tol: c.rel_tol,
            value_cap: c.value_cap,
        }
    }
}

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub m: usize,
    pub p: f64,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(default)]
    pub beta: Option<f64>,
    pub coefficients: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients_lower: Option<Vec<String>>,
    pub nonlinearities: Vec<String>,
    pub grid: GridSpec,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub iteration: IterationSpec,
}

/// Command-line overrides applied on top of a problem file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub grid_points: Option<usize>,
    pub r_max: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
    pub abs_tol: Option<f64>,
}

/// A problem file turned into solver inputs.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    /// The file with overrides applied and every default filled in.
    pub file: ProblemFile,
    pub spec: ProblemSpec,
    pub grid: Arc<RadialGrid>,
    pub config: IterationConfig,
    pub epsilon: f64,
    pub validation: ValidationReport,
    pub warnings: Vec<String>,
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

pub fn load_problem(path: &Path, overrides: &Overrides) -> Result<LoadedProblem> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    problem_from_json(&text, overrides)
}

pub fn problem_from_json(text: &str, overrides: &Overrides) -> Result<LoadedProblem> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(&path, e.into_inner().to_string())
    })?;
    if let Some(points) = overrides.grid_points {
        file.grid.points = points;
    }
    if let Some(r_max) = overrides.r_max {
        file.grid.r_max = r_max;
    }
    if let Some(eps) = overrides.epsilon {
        file.epsilon = Some(eps);
    }
    if let Some(k) = overrides.max_iterations {
        file.iteration.max_iterations = k;
    }
    if let Some(tol) = overrides.abs_tol {
        file.iteration.abs_tol = tol;
    }
    build(file)
}

fn build(mut file: ProblemFile) -> Result<LoadedProblem> {
    let m = file.m;
    if m == 0 {
        return Err(schema("m", "must be at least 1"));
    }
    if !(file.p > 1.0) || !file.p.is_finite() {
        return Err(schema("p", format!("must exceed 1, got {}", file.p)));
    }
    if !(f64::from(file.n) - 1.0 >= file.p) {
        return Err(schema(
            "N",
            format!("N - 1 >= p is required, got N = {}, p = {}", file.n, file.p),
        ));
    }
    let lengths = [
        ("coefficients", Some(file.coefficients.len())),
        (
            "coefficients_lower",
            file.coefficients_lower.as_ref().map(Vec::len),
        ),
        ("nonlinearities", Some(file.nonlinearities.len())),
    ];
    for (key, len) in lengths {
        if let Some(len) = len {
            if len != m {
                return Err(schema(key, format!("expected {m} entries, found {len}")));
            }
        }
    }
    let beta = file.beta.unwrap_or(1.0 / m as f64);
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(schema("beta", format!("must be positive, got {beta}")));
    }
    file.beta = Some(beta);
    let epsilon = file.epsilon.unwrap_or(crate::criteria::DEFAULT_EPSILON);
    if !(epsilon > 0.0) {
        return Err(schema(
            "epsilon",
            format!("must be positive, got {epsilon}"),
        ));
    }
    file.epsilon = Some(epsilon);

    let it = &file.iteration;
    let config = IterationConfig {
        max_iterations: it.max_iterations,
        abs_tol: it.abs_tol,
        rel_tol: it.rel_tol,
        value_cap: it.value_cap,
    };
    config
        .validate(beta)
        .map_err(|e| schema("iteration", e.to_string()))?;
    let grid = RadialGrid::new(file.grid.r_max, file.grid.points, file.grid.grading.into())
        .map(Arc::new)
        .map_err(|e| schema("grid", e.to_string()))?;

    let unknowns = expr::unknown_names(m);
    let unknowns: Vec<&str> = unknowns.iter().map(String::as_str).collect();
    let parse_list = |key: &str, sources: &[String], vars: &[&str]| -> Result<Vec<Expression>> {
        sources
            .iter()
            .enumerate()
            .map(|(i, s)| {
                expr::parse(s, vars).map_err(|source| Error::Expression {
                    path: format!("{key}[{i}]"),
                    source,
                })
            })
            .collect()
    };
    let coefficients = parse_list("coefficients", &file.coefficients, &["r"])?;
    let coefficients_lower = file
        .coefficients_lower
        .as_deref()
        .map(|l| parse_list("coefficients_lower", l, &["r"]))
        .transpose()?;
    let nonlinearities = parse_list("nonlinearities", &file.nonlinearities, &unknowns)?;

    let spec = ProblemSpec::new(
        file.p,
        file.n,
        coefficients,
        coefficients_lower,
        nonlinearities,
        Some(beta),
    )
    .map_err(|e| schema("", e.to_string()))?;
    if spec.coefficients_lower().is_some() {
        spec.check_lower_coefficients(&grid).map_err(|e| match e {
            Error::InvalidArgument(msg) => schema("coefficients_lower", msg),
            other => other,
        })?;
    }

    let validation =
        expr::validate_nonlinearity(spec.nonlinearities(), m, VALIDATION_CAP, VALIDATION_SAMPLES)
            .map_err(|source| Error::Expression {
            path: "nonlinearities".into(),
            source,
        })?;
    let warnings = validation.warnings();
    Ok(LoadedProblem {
        file,
        spec,
        grid,
        config,
        epsilon,
        validation,
        warnings,
    })
}

/// Verdict summary for one ε of an `--epsilon-scan`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonScanEntry {
    pub epsilon: f64,
    pub cond5: EpsilonVerdict,
    pub cond13: EpsilonVerdict,
    pub prediction: Prediction,
}

/// The JSON report. Sections not produced by a subcommand are omitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub problem: ProblemFile,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criteria: Option<CriteriaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_scan: Option<Vec<EpsilonScanEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthReport>,
}

impl RunReport {
    pub fn new(command: &str, problem: &LoadedProblem) -> Self {
        RunReport {
            version: crate::VERSION.to_string(),
            command: command.to_string(),
            problem: problem.file.clone(),
            warnings: problem.warnings.clone(),
            solve: None,
            criteria: None,
            epsilon_scan: None,
            residuals: None,
            growth: None,
        }
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose numbers are written by [`format_float`].
struct FullPrecision(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FullPrecision {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn profiles_csv(profiles: &ProfileSet) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["r".to_string()];
    header.extend(expr::unknown_names(profiles.components()));
    w.write_record(&header).expect("in-memory write");
    for (k, &r) in profiles.grid().nodes().iter().enumerate() {
        let mut row = vec![format_float(r)];
        row.extend(profiles.profiles().iter().map(|p| format_float(p[k])));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

/// Reads a profile CSV written by [`profiles_csv`] back into a grid and profiles.
pub fn read_profiles_csv(path: &Path, m: usize) -> Result<ProfileSet> {
    let io_err = |message: String| Error::Io {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(e.to_string()))?;
    let header = reader.headers().map_err(|e| io_err(e.to_string()))?.clone();
    let mut expected = vec!["r".to_string()];
    expected.extend(expr::unknown_names(m));
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(io_err(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut nodes = Vec::new();
    let mut profiles = vec![Vec::new(); m];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(e.to_string()))?;
        let values = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| io_err(format!("row {}: {e}", line + 2)))?;
        nodes.push(values[0]);
        for (dst, v) in profiles.iter_mut().zip(&values[1..]) {
            dst.push(*v);
        }
    }
    let grid = Arc::new(RadialGrid::from_nodes(nodes).map_err(|e| io_err(e.to_string()))?);
    ProfileSet::new(grid, profiles)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
