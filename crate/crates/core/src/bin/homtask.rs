//! Command-line front end: `run`, `validate` and `synth`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use homtask::config::{ExperimentConfig, Overrides, TraceLevel};
use homtask::experiment::{cmd_run, cmd_synth, cmd_validate, Manifest};
use homtask::learning::CrossTaskActivation;
use homtask::synth::SynthSpec;
use homtask::{Error, Result};

#[derive(Parser)]
#[command(name = "homtask", version, about = "Multitask Hopfield networks for node classification on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cross-validated experiment and write scores, metrics, parameters and a manifest.
    Run {
        #[command(flatten)]
        input: ConfigArgs,
        /// Replay the configuration recorded in a manifest (inputs must be unchanged).
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
    },
    /// Parse and cross-check the inputs, then print a summary.
    Validate {
        #[command(flatten)]
        input: ConfigArgs,
    },
    /// Write a synthetic planted-partition dataset.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Crosstask {
    Own,
    Source,
}

#[derive(Clone, Copy, ValueEnum)]
enum Trace {
    None,
    Dynamics,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_folds: Option<usize>,
    /// Comma-separated α grid.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Comma-separated β grid.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Comma-separated τ grid.
    #[arg(long, value_delimiter = ',')]
    tau: Option<Vec<f64>>,
    /// Comma-separated cardinality bin edges; pass `--single-group` for one group.
    #[arg(long, value_delimiter = ',')]
    bin_edges: Option<Vec<usize>>,
    #[arg(long, conflicts_with = "bin_edges")]
    single_group: bool,
    #[arg(long, value_enum)]
    crosstask_activation: Option<Crosstask>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long, value_enum)]
    trace: Option<Trace>,
    /// Exit with status 3 when the dynamics do not reach a fixed point.
    #[arg(long)]
    nonconvergence_fatal: bool,
}

impl ConfigArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            graph_path: self.graph.clone(),
            labels_path: self.labels.clone(),
            output_dir: self.output_dir.clone(),
            seed: self.seed,
            k_folds: self.k_folds,
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            tau: self.tau.clone(),
            bin_edges: if self.single_group { Some(Vec::new()) } else { self.bin_edges.clone() },
            crosstask_activation: self.crosstask_activation.map(|c| match c {
                Crosstask::Own => CrossTaskActivation::Own,
                Crosstask::Source => CrossTaskActivation::Source,
            }),
            max_sweeps: self.max_sweeps,
            trace: self.trace.map(|t| match t {
                Trace::None => TraceLevel::None,
                Trace::Dynamics => TraceLevel::Dynamics,
            }),
            nonconvergence_fatal: self.nonconvergence_fatal,
        }
    }

    fn resolve(&self, base: Option<ExperimentConfig>) -> Result<ExperimentConfig> {
        let mut cfg = match (base, &self.config) {
            (Some(cfg), _) => cfg,
            (None, Some(path)) => ExperimentConfig::load(path)?,
            (None, None) => {
                let graph = self.graph.clone().ok_or_else(|| Error::config("graph_path", "pass --config or --graph"))?;
                let labels = self.labels.clone().ok_or_else(|| Error::config("labels_path", "pass --config or --labels"))?;
                let mut cfg = ExperimentConfig::new(graph, labels, 0);
                cfg.seed = None;
                cfg
            }
        };
        self.overrides().apply(&mut cfg);
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for graph.tsv, labels.tsv and config.toml.
    #[arg(long)]
    out: PathBuf,
    /// TOML file with generator settings; flags override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated cluster sizes; cluster 0 holds the positives.
    #[arg(long, value_delimiter = ',')]
    clusters: Option<Vec<usize>>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    #[arg(long)]
    tasks: Option<usize>,
    #[arg(long)]
    positive_rate: Option<f64>,
    #[arg(long)]
    overlap: Option<f64>,
    #[arg(long)]
    purity: Option<f64>,
    #[arg(long)]
    labeled_fraction: Option<f64>,
}

impl SynthArgs {
    fn spec(&self) -> Result<SynthSpec> {
        let mut spec = match &self.spec {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
                toml::from_str(&text).map_err(|e| Error::config("spec", e.message().to_string()))?
            }
            None => SynthSpec::default(),
        };
        if self.spec.is_none() && self.seed.is_none() {
            return Err(Error::config("seed", "pass --seed or a spec file"));
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    spec.$target = v;
                }
            )*};
        }
        set!(seed => seed, clusters => cluster_sizes, p_in => p_in, p_out => p_out, tasks => tasks,
             positive_rate => positive_rate, overlap => overlap, purity => purity, labeled_fraction => labeled_fraction);
        Ok(spec)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { input, manifest } => {
            let base = manifest.map(|p| Manifest::load(&p)?.replay_config()).transpose()?;
            let cfg = input.resolve(base)?;
            let art = cmd_run(&cfg)?;
            for w in &art.warnings {
                eprintln!("warning: {w}");
            }
            let r = &art.result.report;
            let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6}"));
            println!("macro AUC {}  macro AUPR {}", fmt(r.macro_auc), fmt(r.macro_aupr));
            for p in [&art.scores, &art.metrics, &art.params, &art.manifest].into_iter().chain(&art.traces) {
                println!("wrote {}", p.display());
            }
        }
        Command::Validate { input } => {
            let cfg = input.resolve(None)?;
            print!("{}", cmd_validate(&cfg)?);
        }
        Command::Synth(args) => {
            let files = cmd_synth(&args.spec()?, &args.out)?;
            for p in [&files.graph, &files.labels, &files.config] {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
