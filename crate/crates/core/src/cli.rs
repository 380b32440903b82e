//! Command-line front end. Exit codes: 0 success, 2 input error, 3
//! numerical nonconvergence.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::calculus::{LaurentPoly, LineFn};
use crate::dilation::{power_dilation, schaffer_block};
use crate::doi::doi_semispectral;
use crate::error::{Error, Result};
use crate::intermediate::intermediate_general;
use crate::linalg::{
    matrix_from_json, matrix_to_json, random_ensemble, ComplexMatrix, Contraction, Dissipative, Hermitian,
    OperatorKind, Unitary,
};
use crate::shift::{
    ssf_contraction_pair, ssf_dissipative_additive, ssf_dissipative_resolvent_pair, ssf_selfadjoint_pair,
    ssf_unitary_pair_tracked, verify_trace_formula, OperatorPair, QuadratureSpec, Residual, SsfSample, TestFn,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "traceform", version, about = "Spectral shift functions and trace formulas for matrix pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Gauss–Legendre nodes for path integrals.
    #[arg(long, default_value_t = 32, global = true)]
    pub t_nodes: usize,
    /// Angular grid size (power of two).
    #[arg(long, default_value_t = 2048, global = true)]
    pub theta_grid: usize,
    /// Path steps for eigenphase tracking.
    #[arg(long, default_value_t = 2000, global = true)]
    pub steps: usize,
    /// Operator-class validation tolerance.
    #[arg(long, default_value_t = 1e-10, global = true)]
    pub tolerance: f64,
    /// Seed for generated inputs.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Use the half-step shifted angular grid.
    #[arg(long, global = true)]
    pub shift_grid: bool,
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn spec(&self) -> Result<QuadratureSpec> {
        let spec = QuadratureSpec {
            t_nodes: self.t_nodes,
            theta_grid: self.theta_grid,
            path_steps: self.steps,
            shift_grid: self.shift_grid,
            tolerance: self.tolerance,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairClass {
    Contraction,
    Unitary,
    Selfadjoint,
    DissipativeResolvent,
    DissipativeAdditive,
}

/// Input pair: two matrix files, or a random pair of dimension `--dim`.
#[derive(Debug, Clone, Args)]
pub struct PairInput {
    /// Unperturbed operator (matrix JSON).
    pub x0: Option<PathBuf>,
    /// Perturbed operator (matrix JSON).
    pub x1: Option<PathBuf>,
    /// Generate a random pair of this dimension from `--seed` instead.
    #[arg(long, conflicts_with_all = ["x0", "x1"])]
    pub dim: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral shift function of a pair, with a trace-formula report.
    Ssf {
        #[arg(long, value_enum)]
        class: PairClass,
        #[command(flatten)]
        input: PairInput,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Residuals of the trace formula for a pair and an SSF file.
    Verify {
        #[arg(long, value_enum)]
        class: PairClass,
        #[command(flatten)]
        input: PairInput,
        /// SSF samples (CSV written by `ssf`).
        #[arg(long)]
        ssf: PathBuf,
        /// Test function as Laurent JSON (inline or a path); repeatable.
        #[arg(long = "f")]
        functions: Vec<String>,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Intermediate contraction between two contractions.
    Intermediate {
        #[command(flatten)]
        input: PairInput,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Unitary dilation of a contraction.
    Dilate {
        /// Contraction (matrix JSON).
        t: PathBuf,
        /// Power dilation order.
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Emit the central Schäffer window of this half-width instead.
        #[arg(long)]
        window: Option<usize>,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Double operator integral `Σ φ_k(T1) K ψ_k(T0)` for the divided
    /// difference of `f`.
    Doi {
        #[command(flatten)]
        input: PairInput,
        /// Analytic polynomial as Laurent JSON (inline or a path).
        #[arg(long = "f")]
        function: String,
        /// Middle operator (matrix JSON); defaults to `T1 − T0`.
        #[arg(long)]
        k: Option<PathBuf>,
        #[command(flatten)]
        config: RunConfig,
    },
}

/// Parse the process arguments, run, and return the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let s = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    matrix_from_json(&s)
}

fn class_kind(class: PairClass) -> OperatorKind {
    match class {
        PairClass::Contraction => OperatorKind::Contraction,
        PairClass::Unitary => OperatorKind::Unitary,
        PairClass::Selfadjoint => OperatorKind::Hermitian,
        PairClass::DissipativeResolvent | PairClass::DissipativeAdditive => OperatorKind::Dissipative,
    }
}

fn load_pair(input: &PairInput, kind: OperatorKind, seed: u64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    match (&input.x0, &input.x1, input.dim) {
        (Some(a), Some(b), None) => Ok((read_matrix(a)?, read_matrix(b)?)),
        (None, None, Some(n)) if n > 0 => Ok((random_ensemble(kind, n, seed), random_ensemble(kind, n, seed + 1))),
        _ => Err(Error::InvalidInput("give two matrix files or --dim".into())),
    }
}

fn operator_pair(class: PairClass, x0: ComplexMatrix, x1: ComplexMatrix, tol: f64) -> Result<OperatorPair> {
    crate::linalg::ensure_same_dim(&x0, &x1)?;
    Ok(match class {
        PairClass::Contraction => {
            OperatorPair::Contraction(Contraction::with_tolerance(x0, tol)?, Contraction::with_tolerance(x1, tol)?)
        }
        PairClass::Unitary => {
            OperatorPair::Unitary(Unitary::with_tolerance(x0, tol)?, Unitary::with_tolerance(x1, tol)?)
        }
        PairClass::Selfadjoint => {
            OperatorPair::Hermitian(Hermitian::with_tolerance(x0, tol)?, Hermitian::with_tolerance(x1, tol)?)
        }
        PairClass::DissipativeResolvent | PairClass::DissipativeAdditive => {
            OperatorPair::Dissipative(Dissipative::with_tolerance(x0, tol)?, Dissipative::with_tolerance(x1, tol)?)
        }
    })
}

fn battery(class: PairClass) -> Vec<TestFn> {
    let mono = |n| LaurentPoly::monomial(n);
    match class {
        PairClass::Contraction => (1..=3).map(|n| TestFn::Circle(mono(n))).collect(),
        PairClass::Unitary => [1, 2, 3, -1].into_iter().map(|n| TestFn::Circle(mono(n))).collect(),
        PairClass::Selfadjoint => (1..=3).map(|n| TestFn::Polynomial(mono(n))).collect(),
        PairClass::DissipativeResolvent | PairClass::DissipativeAdditive => {
            (1..=3).map(|n| TestFn::Line(LineFn::new(mono(n)).expect("analytic monomial"))).collect()
        }
    }
}

fn parse_function(s: &str) -> Result<LaurentPoly> {
    let text = if s.trim_start().starts_with('{') {
        s.to_string()
    } else {
        fs::read_to_string(s).map_err(|e| Error::InvalidInput(format!("{s}: {e}")))?
    };
    Ok(serde_json::from_str(&text)?)
}

fn test_function(class: PairClass, p: LaurentPoly) -> Result<TestFn> {
    Ok(match class {
        PairClass::Contraction | PairClass::Unitary => TestFn::Circle(p),
        PairClass::Selfadjoint => TestFn::Polynomial(p),
        PairClass::DissipativeResolvent | PairClass::DissipativeAdditive => TestFn::Line(LineFn::new(p)?),
    })
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::InvalidInput(format!("{}: {e}", dir.display())))
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn write_ssf(path: &Path, xi: &SsfSample) -> Result<()> {
    xi.write_csv(BufWriter::new(File::create(path)?))
}

fn residuals(pair: &OperatorPair, fs: &[TestFn], xi: &SsfSample) -> Result<Vec<Residual>> {
    fs.iter().map(|f| verify_trace_formula(pair, f, xi)).collect()
}

fn max_relative(res: &[Residual]) -> f64 {
    res.iter().map(|r| r.relative).fold(0.0, f64::max)
}

fn compute_ssf(class: PairClass, pair: &OperatorPair, spec: &QuadratureSpec) -> Result<(SsfSample, serde_json::Value)> {
    Ok(match pair {
        OperatorPair::Contraction(t0, t1) => (ssf_contraction_pair(t0, t1, spec)?, json!({})),
        OperatorPair::Unitary(u0, u1) => {
            let (xi, track) = ssf_unitary_pair_tracked(u0.matrix(), u1.matrix(), spec)?;
            (xi, json!({ "phase_track": track }))
        }
        OperatorPair::Hermitian(a0, a1) => (ssf_selfadjoint_pair(a0, a1)?, json!({})),
        OperatorPair::Dissipative(l0, l1) => {
            if class == PairClass::DissipativeAdditive {
                let k = l1.matrix() - l0.matrix();
                (ssf_dissipative_additive(l0, &k, spec)?, json!({}))
            } else {
                (ssf_dissipative_resolvent_pair(l0, l1, spec)?, json!({}))
            }
        }
    })
}

fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Ssf { class, input, config } => {
            let spec = config.spec()?;
            let (x0, x1) = load_pair(input, class_kind(*class), config.seed)?;
            let pair = operator_pair(*class, x0, x1, config.tolerance)?;
            let (xi, extra) = compute_ssf(*class, &pair, &spec)?;
            let res = residuals(&pair, &battery(*class), &xi)?;
            prepare_out(&config.out)?;
            write_ssf(&config.out.join("ssf.csv"), &xi)?;
            let report = json!({
                "class": class,
                "quadrature": spec,
                "ssf": xi.summary_json(),
                "csv": "ssf.csv",
                "residuals": res,
                "max_relative_residual": max_relative(&res),
                "converged": true,
                "details": extra,
            });
            write_json(&config.out.join("report.json"), &report)?;
            Ok(EXIT_OK)
        }
        Command::Verify { class, input, ssf, functions, config } => {
            let (x0, x1) = load_pair(input, class_kind(*class), config.seed)?;
            let pair = operator_pair(*class, x0, x1, config.tolerance)?;
            let file = File::open(ssf).map_err(|e| Error::InvalidInput(format!("{}: {e}", ssf.display())))?;
            let xi = SsfSample::read_csv(file)?;
            let fs = if functions.is_empty() {
                battery(*class)
            } else {
                functions.iter().map(|s| test_function(*class, parse_function(s)?)).collect::<Result<_>>()?
            };
            let res = residuals(&pair, &fs, &xi)?;
            for r in &res {
                println!("{}\t{:.3e}\t{:.3e}", r.function, r.absolute, r.relative);
            }
            prepare_out(&config.out)?;
            let report = json!({
                "class": class,
                "ssf": ssf.file_name().map(|s| s.to_string_lossy().into_owned()),
                "residuals": res,
                "max_relative_residual": max_relative(&res),
            });
            write_json(&config.out.join("verify.json"), &report)?;
            Ok(EXIT_OK)
        }
        Command::Intermediate { input, config } => {
            let spec = config.spec()?;
            let (x0, x1) = load_pair(input, OperatorKind::Contraction, config.seed)?;
            let t0 = Contraction::with_tolerance(x0, config.tolerance)?;
            let t1 = Contraction::with_tolerance(x1, config.tolerance)?;
            let r = intermediate_general(&t0, &t1, &spec)?;
            prepare_out(&config.out)?;
            write_ssf(&config.out.join("xi0.csv"), &r.xi0)?;
            write_ssf(&config.out.join("xi1.csv"), &r.xi1)?;
            write_ssf(&config.out.join("xi.csv"), &r.xi)?;
            let pair = OperatorPair::Contraction(t0, t1);
            let res = residuals(&pair, &battery(PairClass::Contraction), &r.xi)?;
            let report = json!({
                "T": serde_json::from_str::<serde_json::Value>(&matrix_to_json(&r.t))?,
                "certificates": r.certificates,
                "xi0": "xi0.csv",
                "xi1": "xi1.csv",
                "xi": "xi.csv",
                "residuals": res,
            });
            write_json(&config.out.join("intermediate.json"), &report)?;
            Ok(if r.certificates.passed { EXIT_OK } else { EXIT_NUMERICAL })
        }
        Command::Dilate { t, order, window, config } => {
            let t = Contraction::with_tolerance(read_matrix(t)?, config.tolerance)?;
            let (m, name) = match window {
                Some(w) => (schaffer_block(&t, *w)?.matrix, "window.json"),
                None => (power_dilation(&t, *order)?.w, "dilation.json"),
            };
            prepare_out(&config.out)?;
            fs::write(config.out.join(name), matrix_to_json(&m) + "\n")?;
            Ok(EXIT_OK)
        }
        Command::Doi { input, function, k, config } => {
            let f = parse_function(function)?;
            let (x0, x1) = load_pair(input, OperatorKind::Contraction, config.seed)?;
            let t0 = Contraction::with_tolerance(x0, config.tolerance)?;
            let t1 = Contraction::with_tolerance(x1, config.tolerance)?;
            let k = match k {
                Some(p) => read_matrix(p)?,
                None => t1.matrix() - t0.matrix(),
            };
            let v = doi_semispectral(&f, &t1, &t0, &k)?;
            prepare_out(&config.out)?;
            fs::write(config.out.join("doi.json"), matrix_to_json(&v) + "\n")?;
            Ok(EXIT_OK)
        }
    }
}
