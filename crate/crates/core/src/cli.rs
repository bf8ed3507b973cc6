//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
//! format error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::dataio::{read_dataset_file, write_dataset, Dataset};
use crate::discovery::{HypothesisSet, ModelAverage, ParameterPrior, PairHypothesis};
use crate::error::Error;
use crate::harness::{count_pair_types, emit_tables, run_grid, ExperimentConfig};
use crate::inference::Evidence;
use crate::model::{ConfounderRule, NetworkStructure};
use crate::netio::read_network_file;
use crate::sampler::{generate_mix, MixSpec};
use crate::scoring::{log_marginal_likelihood, tally_counts, DirichletPrior};

#[derive(Debug, Parser)]
#[command(name = "causalmix", version, about = "Causal structure learning from mixed observational and experimental data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Log marginal likelihood of a dataset under one structure.
    Score {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated arcs such as `X->Y`, or `none` for no arcs.
        #[arg(long)]
        structure: String,
        /// Use a_ijk = ESS / (q_i r_i) (default ESS 1).
        #[arg(long, value_name = "ESS", num_args = 0..=1, default_missing_value = "1")]
        prior_ess_uniform: Option<f64>,
    },
    /// Posterior over X->Y, Y->X and no arc for one pair.
    Posterior {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Generate a mixed experimental/observational dataset over one pair.
    Sample {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Experimental cases (even); half manipulate X, half manipulate Y.
        #[arg(long)]
        m: usize,
        /// Observational cases.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Model-averaged distribution of Y given a state of X.
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// State of X; a leading `!` means X is manipulated.
        #[arg(long, allow_hyphen_values = true)]
        given: String,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Count node pairs by causal relation and confounding.
    Classify {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, value_enum, default_value_t = RuleArg::ExclusivePaths)]
        rule: RuleArg,
    },
    /// Run the pairwise evaluation grid and write CSV tables.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Observe,
    Manipulate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    ExclusivePaths,
    SharedAncestor,
}

impl From<RuleArg> for ConfounderRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::ExclusivePaths => ConfounderRule::ExclusivePaths,
            RuleArg::SharedAncestor => ConfounderRule::SharedAncestor,
        }
    }
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(Error::Io(e))
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn existing(path: &Path) -> CliResult<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        usage(format!("no such file: {}", path.display()))
    }
}

fn parse_structure(d: &Dataset, spec: &str) -> CliResult<NetworkStructure> {
    NetworkStructure::parse_arcs(d.variables().to_vec(), spec).map_err(|e| match e {
        Error::InvalidArgument(_) | Error::UnknownVariable(_) | Error::Cycle(_) | Error::InvalidStructure(_) => {
            Failure::Usage(e.to_string())
        }
        other => Failure::Data(other),
    })
}

fn pair_data(path: &Path, x: &str, y: &str) -> CliResult<Dataset> {
    let d = read_dataset_file(existing(path)?)?;
    let lookup = |name: &str| d.column(name).map_err(|e| Failure::Usage(e.to_string()));
    let (xi, yi) = (lookup(x)?, lookup(y)?);
    if xi == yi {
        return usage("--x and --y must name different variables");
    }
    Ok(d.project(&[xi, yi])?)
}

fn execute(cmd: Command, out: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Score {
            data,
            structure,
            prior_ess_uniform,
        } => {
            let d = read_dataset_file(existing(&data)?)?;
            let s = parse_structure(&d, &structure)?;
            let ess = prior_ess_uniform.unwrap_or(1.0);
            if !(ess.is_finite() && ess > 0.0) {
                return usage("--prior-ess-uniform must be positive");
            }
            let prior = DirichletPrior::bdeu(&s, ess)?;
            let lml = log_marginal_likelihood(&tally_counts(&d, &s)?, &prior)?;
            writeln!(out, "log_marginal={lml}")?;
            writeln!(out, "marginal={:e}", lml.exp())?;
        }
        Command::Posterior { data, x, y } => {
            let d = pair_data(&data, &x, &y)?;
            let hyp = HypothesisSet::pairwise(d.variables()[0].clone(), d.variables()[1].clone())?;
            let avg = ModelAverage::fit(&d, &hyp, ParameterPrior::default())?;
            let arrows = [format!("{x}->{y}"), format!("{y}->{x}"), "none".to_string()];
            for h in PairHypothesis::ALL {
                writeln!(
                    out,
                    "P({})={}\t{}",
                    h.label(),
                    avg.posterior.probability(h.index()),
                    arrows[h.index()]
                )?;
            }
        }
        Command::Sample {
            network,
            x,
            y,
            m,
            n,
            seed,
            out: path,
        } => {
            if m % 2 != 0 {
                return usage(format!("--m must be even, got {m}"));
            }
            let net = read_network_file(existing(&network)?)?;
            let s = net.structure();
            let lookup = |name: &str| s.id(name).map_err(|e| Failure::Usage(e.to_string()));
            let (xi, yi) = (lookup(&x)?, lookup(&y)?);
            if xi == yi {
                return usage("--x and --y must name different variables");
            }
            let d = generate_mix(&net, &MixSpec { x: xi, y: yi, m, n, seed })?;
            std::fs::write(&path, write_dataset(&d))?;
            writeln!(out, "wrote {} cases to {}", d.len(), path.display())?;
        }
        Command::Predict {
            data,
            x,
            y,
            given,
            mode,
        } => {
            let d = pair_data(&data, &x, &y)?;
            let (label, flagged) = match given.strip_prefix('!') {
                Some(rest) => (rest, true),
                None => (given.as_str(), false),
            };
            let manipulate = match (mode, flagged) {
                (Some(Mode::Observe), true) => {
                    return usage("`!` marks a manipulated state but --mode is observe")
                }
                (Some(Mode::Manipulate), _) | (None, true) => true,
                _ => false,
            };
            let Some(k) = d.variables()[0].state_index(label) else {
                return usage(format!("`{label}` is not a state of {x}"));
            };
            let hyp = HypothesisSet::pairwise(d.variables()[0].clone(), d.variables()[1].clone())?;
            let avg = ModelAverage::fit(&d, &hyp, ParameterPrior::default())?;
            let ev = if manipulate {
                Evidence::manipulated(0, k)
            } else {
                Evidence::observed(0, k)
            };
            let dist = avg.predict(1, ev)?;
            for (state, p) in d.variables()[1].states().iter().zip(dist) {
                writeln!(out, "P({y}={state})={p}")?;
            }
        }
        Command::Classify { network, rule } => {
            let net = read_network_file(existing(&network)?)?;
            if net.len() < 2 {
                return usage("network has fewer than two variables, so there are no pairs");
            }
            let c = count_pair_types(net.structure(), rule.into())?;
            writeln!(out, "related_confounded={}", c.related_confounded)?;
            writeln!(out, "related_unconfounded={}", c.related_unconfounded)?;
            writeln!(out, "unrelated_confounded={}", c.unrelated_confounded)?;
            writeln!(out, "unrelated_unconfounded={}", c.unrelated_unconfounded)?;
            writeln!(out, "related={}", c.related())?;
            writeln!(out, "unrelated={}", c.unrelated())?;
            writeln!(out, "confounded={}", c.confounded())?;
            writeln!(out, "unconfounded={}", c.unconfounded())?;
            writeln!(out, "total={}", c.total())?;
        }
        Command::Experiment { config } => {
            let cfg = ExperimentConfig::load(existing(&config)?).map_err(|e| match e {
                Error::Config(msg) => Failure::Usage(msg),
                other => Failure::Data(other),
            })?;
            existing(&cfg.network)?;
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let cells = run_grid(&cfg)?;
            for path in emit_tables(&cells, &cfg.output_dir)? {
                writeln!(out, "{}", path.display())?;
            }
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
