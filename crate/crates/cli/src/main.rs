//! `proxmed`: command-line front end for the proximal mediation library.
//!
//! Exit codes: 0 success, 1 validation failed, 2 schema or input error,
//! 3 numerical failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use proximal_mediation::bridges::{Bandwidth, Encoding, KernelConfig, KernelSpec};
use proximal_mediation::dgp::{sample, SamplerConfig};
use proximal_mediation::estimators::{
    cross_fit_mr, estimate_plugin, evaluate_mr, BridgeMethod, Estimand, FitPlan, S3Form, Strategy,
};
use proximal_mediation::experiments::{run_study, StudyConfig};
use proximal_mediation::io::to_json_string;
use proximal_mediation::model::{mediator_joint, AnySpec, Dataset};
use proximal_mediation::nuisance::NuisanceMode;
use proximal_mediation::oracle::{
    check_completeness, population_psi_via_h, solve_outcome_bridge, solve_treatment_bridge, ProxySide,
};
use proximal_mediation::{fixtures, to_population, true_estimands, validate_spec, Error};

#[derive(Parser)]
#[command(name = "proxmed", version, about = "Causal effects through a hidden mediator measured by two proxies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BridgeArg {
    Tabular,
    Kernel,
}

#[derive(Subcommand)]
enum Command {
    /// Check a specification's modelling assumptions.
    Validate {
        /// Spec file or built-in fixture name (D1, F1, G1, GAUSS1).
        spec: String,
    },
    /// Exact estimands, bridge residuals and completeness ranks.
    Oracle {
        spec: String,
        #[arg(long, default_value_t = 1)]
        a: usize,
        #[arg(long = "a-prime", default_value_t = 0)]
        a_prime: usize,
    },
    /// Draw a seeded sample as CSV (x,a,z,w,y).
    Simulate {
        spec: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate ψ₁, ψ₂ or ψ₃ from a CSV sample.
    Estimate {
        data: PathBuf,
        #[arg(long)]
        estimand: String,
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 1)]
        a: usize,
        #[arg(long = "a-prime", default_value_t = 0)]
        a_prime: usize,
        /// Cross-fitting folds for s5; 1 disables sample splitting.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bridge estimator; tabular needs integer-coded x, z and w.
        #[arg(long, value_enum)]
        bridges: Option<BridgeArg>,
        #[arg(long = "lambda-h")]
        lambda_h: Option<f64>,
        #[arg(long = "lambda-q")]
        lambda_q: Option<f64>,
        /// Fixed kernel bandwidth instead of the median heuristic.
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Run a robustness or convergence study described by a JSON config.
    Study {
        config: PathBuf,
        /// CSV report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

enum Failure {
    Invalid,
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Validate { spec } => validate(&spec),
        Command::Oracle { spec, a, a_prime } => oracle(&spec, a, a_prime),
        Command::Simulate {
            spec,
            n,
            seed,
            stream,
            out,
        } => simulate(&spec, n, seed, stream, out.as_deref()),
        Command::Estimate {
            data,
            estimand,
            strategy,
            a,
            a_prime,
            folds,
            seed,
            bridges,
            lambda_h,
            lambda_q,
            bandwidth,
        } => estimate(EstimateArgs {
            data,
            estimand,
            strategy,
            a,
            a_prime,
            folds,
            seed,
            bridges,
            lambda_h,
            lambda_q,
            bandwidth,
        }),
        Command::Study { config, out, json } => study(&config, out.as_deref(), json.as_deref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid) => ExitCode::from(1),
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

/// A spec file path, or a fixture name when no such file exists.
fn load_spec(arg: &str) -> Result<AnySpec, Error> {
    let path = Path::new(arg);
    if path.exists() {
        AnySpec::from_json_str(&std::fs::read_to_string(path)?)
    } else if fixtures::is_fixture(arg) {
        fixtures::load(arg)
    } else {
        Err(Error::InvalidInput(format!(
            "`{arg}` is neither a readable file nor a fixture ({})",
            fixtures::NAMES.join(", ")
        )))
    }
}

fn print_json(value: &impl serde::Serialize) -> CmdResult {
    writeln!(io::stdout().lock(), "{}", to_json_string(value)?)?;
    Ok(())
}

fn validate(arg: &str) -> CmdResult {
    match load_spec(arg)? {
        AnySpec::Discrete(spec) => {
            let report = validate_spec(&spec);
            print_json(&report)?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Invalid)
            }
        }
        // parameter checks already ran while parsing
        AnySpec::Gaussian(g) => print_json(&json!({ "spec": g.name, "checks": [] })),
    }
}

fn oracle(arg: &str, a: usize, a_prime: usize) -> CmdResult {
    let spec = match load_spec(arg)? {
        AnySpec::Discrete(s) => s,
        AnySpec::Gaussian(g) => {
            if a > 1 || a_prime > 1 {
                return Err(Error::InvalidInput("treatment levels are 0 and 1".into()).into());
            }
            return print_json(&json!({
                "spec": g.name,
                "a": a,
                "a_prime": a_prime,
                "psi1": g.psi1(a, a_prime),
                "outcome_bridge": { "w": g.b, "a": g.c, "x": g.d },
            }));
        }
    };
    let levels = spec.space.a_levels;
    if a >= levels || a_prime >= levels {
        return Err(Error::InvalidInput(format!("treatment levels must be below {levels}")).into());
    }
    let report = validate_spec(&spec);
    if !report.passed() {
        print_json(&report)?;
        return Err(Failure::Invalid);
    }
    let pop = to_population(&spec)?;
    let full = mediator_joint(&spec)?;
    let truth = true_estimands(&spec, a, a_prime);
    let h = solve_outcome_bridge(&pop)?;
    let q = solve_treatment_bridge(&pop, a)?;
    let identified = population_psi_via_h(&pop, &h, a, a_prime);
    let z_side = check_completeness(&full, ProxySide::ZSide);
    let w_side = check_completeness(&full, ProxySide::WSide);
    print_json(&json!({
        "spec": spec.name,
        "a": a,
        "a_prime": a_prime,
        "psi1": truth.psi1,
        "psi2": truth.psi2,
        "psi3": truth.psi3,
        "identified": identified,
        "bridges": {
            "h_residual": h.residual_norm,
            "q_residual": q.residual_norm,
            "h": h.to_json(),
            "q": q.to_json(),
        },
        "completeness": { "z_side": z_side, "w_side": w_side },
    }))
}

fn simulate(arg: &str, n: usize, seed: u64, stream: u64, out: Option<&Path>) -> CmdResult {
    let spec = load_spec(arg)?;
    let data = sample(&spec, &SamplerConfig::new(seed, n).with_stream(stream))?;
    match out {
        Some(p) => data.write_csv(BufWriter::new(File::create(p)?))?,
        None => data.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

struct EstimateArgs {
    data: PathBuf,
    estimand: String,
    strategy: String,
    a: usize,
    a_prime: usize,
    folds: usize,
    seed: u64,
    bridges: Option<BridgeArg>,
    lambda_h: Option<f64>,
    lambda_q: Option<f64>,
    bandwidth: Option<f64>,
}

fn estimate(args: EstimateArgs) -> CmdResult {
    let estimand: Estimand = args.estimand.parse()?;
    let strategy: Strategy = args.strategy.parse()?;
    let source = args.data.display().to_string();
    let data = Dataset::read_csv(File::open(&args.data)?, &source)?;
    let space = data.infer_space();
    let a_levels = space.as_ref().map_or(2, |s| s.a_levels);
    if args.a >= a_levels || args.a_prime >= a_levels {
        return Err(Error::InvalidInput(format!("treatment levels must be below {a_levels}")).into());
    }
    let bridges = args.bridges.unwrap_or(if space.is_some() { BridgeArg::Tabular } else { BridgeArg::Kernel });
    let (nuisance, encoding) = match &space {
        Some(s) => (NuisanceMode::Tabular(s.clone()), Encoding::discrete(s)),
        None => (NuisanceMode::Continuous, Encoding::continuous(a_levels)),
    };
    let bridges = match (bridges, &space) {
        (BridgeArg::Tabular, Some(s)) => BridgeMethod::Tabular(s.clone()),
        (BridgeArg::Tabular, None) => {
            return Err(Error::InvalidInput("tabular bridges need integer-coded x, z and w".into()).into())
        }
        (BridgeArg::Kernel, _) => {
            let mut k = KernelConfig::new(encoding);
            k.lambda_h = args.lambda_h;
            k.lambda_q = args.lambda_q;
            if let Some(bw) = args.bandwidth {
                if !(bw > 0.0 && bw.is_finite()) {
                    return Err(Error::InvalidInput("bandwidth must be positive".into()).into());
                }
                let spec = KernelSpec {
                    bandwidth: Bandwidth::Fixed(bw),
                };
                k.kernel_h = spec;
                k.kernel_q = spec;
            }
            BridgeMethod::Kernel(k)
        }
    };
    let plan = FitPlan {
        nuisance,
        bridges,
        misspecify: Default::default(),
    };
    let result = if strategy == Strategy::S5Mr && args.folds >= 2 {
        cross_fit_mr(&data, &plan, estimand, args.a, args.a_prime, args.folds, args.seed)?
    } else {
        let f = plan.fit(&data, args.a, args.a_prime)?;
        if strategy == Strategy::S5Mr {
            evaluate_mr(&data, &f.h, &f.q, &f.nu, estimand, args.a, args.a_prime)?
        } else {
            estimate_plugin(
                &data,
                estimand,
                strategy,
                &f.h,
                &f.q,
                &f.nu,
                args.a,
                args.a_prime,
                S3Form::Derivation,
            )?
        }
    };
    print_json(&result)
}

fn study(config: &Path, out: Option<&Path>, json_out: Option<&Path>) -> CmdResult {
    let cfg = StudyConfig::from_json_str(&std::fs::read_to_string(config)?)?;
    let report = run_study(&cfg)?;
    match out {
        Some(p) => report.write_csv(BufWriter::new(File::create(p)?))?,
        None => report.write_csv(io::stdout().lock())?,
    }
    if let Some(p) = json_out {
        let mut f = File::create(p)?;
        writeln!(f, "{}", report.to_json()?)?;
    }
    Ok(())
}
