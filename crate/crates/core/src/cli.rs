//! The `plap-radial` command line.
//!
//! Exit codes: 0 success, 2 schema violation, 3 expression syntax error,
//! 4 non-convergence (files are still written), 5 evaluation domain error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::criteria::{self, CriteriaReport, Prediction, EPSILON_SCAN};
use crate::io::{self, EpsilonScanEntry, LoadedProblem, Overrides, RunReport};
use crate::solver;
use crate::verify::{self, GrowthClass};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 4;

pub const REPORT_FILE: &str = "report.json";
pub const PROFILES_FILE: &str = "profiles.csv";

#[derive(Debug, Parser)]
#[command(
    name = "plap-radial",
    version,
    about = "Radial p-Laplacian systems: solve, classify, verify"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve by successive approximation; writes profiles.csv and report.json.
    Solve(CommonArgs),
    /// Classify the integral conditions and predict the applicable conclusion.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        /// Also report verdicts for eps in {0.01, 0.1, 0.5, 1}.
        #[arg(long)]
        epsilon_scan: bool,
    },
    /// Residuals of a stored profile CSV against the problem.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_name = "CSV")]
        profile: PathBuf,
    },
    /// Solve on [0, R], [0, 2R], ... and classify bounded versus growing.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Smallest domain radius (defaults to the problem's r_max).
        #[arg(long)]
        base_r: Option<f64>,
        #[arg(long, default_value_t = 4)]
        doublings: u32,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub problem: PathBuf,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Absolute tolerance on the sup-norm step.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid_points: self.grid_points,
            r_max: self.r_max,
            epsilon: self.epsilon,
            max_iterations: self.max_iter,
            abs_tol: self.tol,
        }
    }

    fn load(&self) -> Result<LoadedProblem> {
        let problem = io::load_problem(&self.problem, &self.overrides())?;
        for w in &problem.warnings {
            eprintln!("warning: {w}");
        }
        Ok(problem)
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Solve(common) => run_solve(&common),
        Command::Predict {
            common,
            epsilon_scan,
        } => run_predict(&common, epsilon_scan),
        Command::Verify { common, profile } => run_verify(&common, &profile),
        Command::Sweep {
            common,
            base_r,
            doublings,
        } => run_sweep(&common, base_r, doublings),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })
}

fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    io::write_file(&dir.join(REPORT_FILE), &io::to_json(report))
}

pub fn run_solve(common: &CommonArgs) -> Result<i32> {
    let problem = common.load()?;
    let (profiles, solve) =
        solver::solve_radial_system(&problem.spec, &problem.grid, &problem.config)?;
    let residuals = verify::fixed_point_residual(&problem.spec, &problem.grid, &profiles)?;
    let converged = solve.converged;
    println!(
        "solve: {} after {} iterations, sup u = {:.6e}, fixed-point residual {:.3e}",
        if converged {
            "converged"
        } else if solve.capped {
            "hit value cap"
        } else {
            "did not converge"
        },
        solve.iterations_used,
        profiles.sup(),
        residuals.sup_fixed_point_residual
    );
    let mut report = RunReport::new("solve", &problem);
    report.solve = Some(solve);
    report.residuals = Some(residuals);
    prepare_out(&common.out)?;
    io::write_file(
        &common.out.join(PROFILES_FILE),
        &io::profiles_csv(&profiles),
    )?;
    write_report(&common.out, &report)?;
    Ok(if converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

pub fn run_predict(common: &CommonArgs, epsilon_scan: bool) -> Result<i32> {
    let problem = common.load()?;
    let grid = criteria::weight_grid_for(&problem.grid);
    let report = criteria::predict_on(&problem.spec, problem.epsilon, &grid)?;
    let scan = if epsilon_scan {
        let entries = EPSILON_SCAN
            .iter()
            .map(|&eps| {
                let r: CriteriaReport = criteria::predict_on(&problem.spec, eps, &grid)?;
                Ok(EpsilonScanEntry {
                    epsilon: eps,
                    cond5: r.cond5,
                    cond13: r.cond13,
                    prediction: r.prediction,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Some(entries)
    } else {
        None
    };
    println!("predict: {}", prediction_label(&report.prediction));
    let mut out = RunReport::new("predict", &problem);
    out.criteria = Some(report);
    out.epsilon_scan = scan;
    prepare_out(&common.out)?;
    write_report(&common.out, &out)?;
    Ok(EXIT_OK)
}

pub fn prediction_label(p: &Prediction) -> &'static str {
    match p {
        Prediction::BoundedExists => "BoundedExists",
        Prediction::NoBoundedRadial => "NoBoundedRadial",
        Prediction::AllSolutionsLarge => "AllSolutionsLarge",
        Prediction::Inconclusive => "Inconclusive",
        Prediction::Conflict(_) => "Conflict",
    }
}

pub fn run_verify(common: &CommonArgs, profile: &Path) -> Result<i32> {
    let problem = common.load()?;
    let stored = io::read_profiles_csv(profile, problem.spec.m())?;
    let grid = stored.grid().clone();
    let residuals = verify::fixed_point_residual(&problem.spec, &grid, &stored)?;
    println!(
        "verify: fixed-point residual {:.3e}, interior differential residual {:.3e}",
        residuals.sup_fixed_point_residual, residuals.sup_ode_residual_interior
    );
    let mut report = RunReport::new("verify", &problem);
    report.residuals = Some(residuals);
    prepare_out(&common.out)?;
    write_report(&common.out, &report)?;
    Ok(EXIT_OK)
}

pub fn run_sweep(common: &CommonArgs, base_r: Option<f64>, doublings: u32) -> Result<i32> {
    let problem = common.load()?;
    let base_r = base_r.unwrap_or(problem.file.grid.r_max);
    let growth = verify::classify_growth(
        &problem.spec,
        base_r,
        problem.file.grid.points,
        doublings,
        &problem.config,
    )?;
    let label = match growth.classification {
        GrowthClass::Saturating => "Saturating".to_string(),
        GrowthClass::Growing { exponent: Some(s) } => format!("Growing (exponent {s:.3})"),
        GrowthClass::Growing { exponent: None } => "Growing (value cap reached)".to_string(),
        GrowthClass::Inconclusive => "Inconclusive".to_string(),
    };
    println!("sweep: {label} over radii {:?}", growth.domain_radii);
    let mut report = RunReport::new("sweep", &problem);
    report.growth = Some(growth);
    prepare_out(&common.out)?;
    write_report(&common.out, &report)?;
    Ok(EXIT_OK)
}
