//! `infer`: file-driven front end to the inference library.
//!
//! Exit codes: 0 solved, commuting or demo passed; 1 input error, diagram
//! mismatch or demo failure; 2 overdetermined; 3 undetermined; 4 solver did
//! not converge.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use infer_core::correspondence::{SchemaSpec, DEFAULT_COMMA_CAP};
use infer_core::updating::{bayes_update, maxent_linear, mle, update, InferenceOutcome};
use infer_core::wire::{GeometryWire, JointWire, MaxentWire, MleWire, OutcomeWire, ProblemWire};
use infer_core::{geometry_report, scenarios, Error, Slot};

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_OVERDETERMINED: u8 = 2;
const EXIT_UNDETERMINED: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "infer", version, about = "Entropic updating, information geometry and diagram checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Iteration cap override.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Seed of diagnostic restarts and demo draws; 0 unless given.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Argument of the deviation holding the unknown.
    #[arg(long, global = true, value_enum)]
    slot: Option<SlotArg>,
    /// Suppress the human-readable summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SlotArg {
    First,
    Second,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a general inference problem.
    Update {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Posterior over hypotheses after observing one row of a joint table.
    Bayes {
        #[arg(long)]
        joint: PathBuf,
        #[arg(long)]
        observe: String,
    },
    /// Maximum-entropy update under linear moments.
    Maxent {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Maximum-likelihood natural parameters of an exponential family.
    Mle {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Metric and dual connections of a deviation at a chart point.
    Geometry {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Check that a verifiability schema commutes.
    VerifyDiagram {
        #[arg(long)]
        schema: PathBuf,
    },
    /// Run a named demonstration scenario.
    Demo { name: String },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: String) -> Failure {
    Failure { code: EXIT_INPUT, message }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let value = serde_path_to_error::deserialize(de).map_err(|e| {
        let path_s = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            input_error(format!(
                "{}: malformed JSON at line {} column {}: {inner}",
                path.display(),
                inner.line(),
                inner.column()
            ))
        } else {
            input_error(format!("{}: invalid field `{path_s}`: {inner}", path.display()))
        }
    })?;
    Ok(value)
}

struct Runner {
    cli: Cli,
}

impl Runner {
    fn emit<T: Serialize>(&self, value: &T) -> Result<(), Failure> {
        let text = output::to_json(value).map_err(|e| input_error(format!("serialization failed: {e}")))?;
        match &self.cli.out {
            Some(p) => fs::write(p, text).map_err(|e| input_error(format!("cannot write {}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn say(&self, line: &str) {
        if !self.cli.quiet {
            eprintln!("{line}");
        }
    }

    fn outcome(&self, o: &InferenceOutcome) -> Result<u8, Failure> {
        self.emit(&OutcomeWire::from(o))?;
        let code = match o {
            InferenceOutcome::Solved(s) => {
                self.say(&format!("solved: objective {:e}, {} iterations", s.objective, s.iterations));
                EXIT_OK
            }
            InferenceOutcome::Overdetermined { residual } => {
                self.say(&format!("overdetermined: infeasibility residual {residual:e}"));
                EXIT_OVERDETERMINED
            }
            InferenceOutcome::Undetermined { witnesses } => {
                self.say(&format!("undetermined: {} distinct minimizers", witnesses.len()));
                EXIT_UNDETERMINED
            }
        };
        Ok(code)
    }

    fn run(&self) -> Result<u8, Failure> {
        match &self.cli.command {
            Command::Update { problem } => {
                let mut wire: ProblemWire = read_json(problem)?;
                let o = &mut wire.options;
                if let Some(t) = self.cli.tol {
                    o.tol = t;
                }
                if let Some(m) = self.cli.max_iter {
                    o.max_iter = m;
                }
                if let Some(s) = self.cli.slot {
                    o.slot = match s {
                        SlotArg::First => Slot::First,
                        SlotArg::Second => Slot::Second,
                    };
                }
                if let Some(seed) = self.cli.seed {
                    o.seed = seed;
                }
                let p = wire.into_problem()?;
                log::info!("update: {} atoms, {} constraint terms", p.initial.len(), p.constraints.terms().len());
                self.outcome(&update(&p)?)
            }
            Command::Bayes { joint, observe } => {
                let j = read_json::<JointWire>(joint)?.into_joint()?;
                self.outcome(&bayes_update(&j, observe)?)
            }
            Command::Maxent { problem } => {
                let (prior, moments, normalize) = read_json::<MaxentWire>(problem)?.parts()?;
                self.outcome(&maxent_linear(&prior, &moments, normalize)?)
            }
            Command::Mle { problem } => {
                let (family, counts) = read_json::<MleWire>(problem)?.parts()?;
                let theta = mle(&family, &counts)?;
                self.emit(&serde_json::json!({ "theta": theta }))?;
                self.say(&format!("mle: {} natural parameters", theta.len()));
                Ok(EXIT_OK)
            }
            Command::Geometry { problem } => {
                let w: GeometryWire = read_json(problem)?;
                let chart = w.chart.build()?;
                let report = geometry_report(&w.divergence.into(), chart.as_chart(), &w.theta)?;
                let out = infer_core::wire::GeometryOutput::from(&report);
                self.emit(&out)?;
                self.say(&format!(
                    "geometry: symmetry {:e}, duality residual {:e}",
                    out.checks.symmetry, out.checks.duality_residual
                ));
                Ok(EXIT_OK)
            }
            Command::VerifyDiagram { schema } => {
                let spec: SchemaSpec = read_json(schema)?;
                let verdict = spec.build(DEFAULT_COMMA_CAP)?.check()?;
                self.emit(&verdict)?;
                match &verdict.mismatch {
                    None => {
                        self.say("diagram commutes");
                        Ok(EXIT_OK)
                    }
                    Some(m) => {
                        self.say(&format!(
                            "diagram does not commute: {:?} {} goes to {} observationally and {} theoretically",
                            m.kind,
                            m.fact,
                            m.observational.join(" ↦ "),
                            m.theoretical.join(" ↦ ")
                        ));
                        Ok(EXIT_INPUT)
                    }
                }
            }
            Command::Demo { name } => {
                let report = scenarios::run_demo(name, self.cli.seed.unwrap_or(0))?;
                self.emit(&report)?;
                self.say(&format!(
                    "{} {}: {} cases, max residual {:e}",
                    if report.passed { "PASS" } else { "FAIL" },
                    report.name,
                    report.cases,
                    report.max_residual
                ));
                for n in &report.notes {
                    self.say(&format!("  {n}"));
                }
                Ok(if report.passed { EXIT_OK } else { EXIT_INPUT })
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter("INFER_LOG")).init();
    // Usage errors exit 1 so that 2 stays reserved for overdetermined problems.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    let quiet = cli.quiet;
    match (Runner { cli }).run() {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if !quiet || f.code == EXIT_INPUT {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
