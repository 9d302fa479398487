//! Command-line front end. Exit codes: 0 success, 2 configuration error,
//! 3 runtime error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::connectivity::EdgeRule;
use crate::density::Dataset;
use crate::error::{Error, Result};
use crate::harness::{cluster_dataset, run, ExperimentConfig, ExperimentReport, Mode};
use crate::kernels::{KernelSpec, NormKind, Profile};
use crate::schedule::{adaptive_select, bandwidth_grid, BandwidthGrid, ParameterSet, ScheduleConfig, TauMode};
use crate::splitter::ClusterOutput;
use crate::synthetic::InstanceSpec;

#[derive(Debug, Parser)]
#[command(name = "kdesplit", version, about = "First split level of a density cluster tree")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the splitter on a CSV dataset, or a cluster experiment from a config.
    Cluster(RunArgs),
    /// Adaptive bandwidth selection on a CSV dataset or from a config.
    Adaptive(RunArgs),
    /// Draw a sample from a synthetic instance and print it as CSV.
    Synth(SynthArgs),
    /// Rate experiment from a config.
    Rates(ExperimentArgs),
    /// Sup-norm concentration experiment from a config.
    Uncertainty(ExperimentArgs),
    /// Level-set inclusion experiment from a config.
    Sandwich(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleArg {
    Standard,
    Geometric,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Result JSON destination (stdout by default).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-run CSV destination.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV, one point per row.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long)]
    pub cu: Option<f64>,
    #[arg(long)]
    pub varsigma: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub cthick: Option<f64>,
    /// Use `τ = σ^γ ln ln ln n` instead of the fixed-mode τ.
    #[arg(long)]
    pub adaptive: bool,
    /// Kernel profile (e.g. rectangular, gaussian).
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Comma-separated bandwidth set for adaptive selection.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthAction {
    Sample,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Optional action word (`sample` is the only one).
    #[arg(value_enum)]
    pub action: Option<SynthAction>,
    #[arg(long)]
    pub instance: String,
    /// Instance parameters as a JSON object.
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                3
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Cluster(args) => run_args(args, Mode::Cluster),
        Command::Adaptive(args) => run_args(args, Mode::Adaptive),
        Command::Synth(args) => synth(args),
        Command::Rates(args) => experiment(args, Mode::Rates),
        Command::Uncertainty(args) => experiment(args, Mode::Uncertainty),
        Command::Sandwich(args) => experiment(args, Mode::Sandwich),
    }
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn write_report(report: &ExperimentReport, out: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    let out = out.map(Path::to_path_buf).or_else(|| report.config.output.clone());
    emit(&report.to_json()?, out.as_deref())?;
    let csv = csv
        .map(Path::to_path_buf)
        .or_else(|| out.as_ref().map(|p| p.with_extension("csv")));
    if let Some(p) = csv {
        report.write_csv(fs::File::create(p)?)?;
    }
    Ok(())
}

fn experiment(args: ExperimentArgs, mode: Mode) -> Result<()> {
    let mut cfg = read_config(&args.config)?;
    if cfg.mode != mode {
        return Err(Error::Config(format!(
            "config mode {:?} does not match the subcommand {:?}",
            cfg.mode, mode
        )));
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    let report = run(&cfg)?;
    write_report(&report, args.out.as_deref(), args.csv.as_deref())
}

fn parse_kernel(args: &RunArgs, base: KernelSpec) -> Result<KernelSpec> {
    let mut spec = base;
    if let Some(k) = &args.kernel {
        spec.profile = serde_json::from_value::<Profile>(serde_json::Value::String(k.clone()))
            .map_err(|_| Error::Config(format!("unknown kernel profile `{k}`")))?;
    }
    if let Some(n) = &args.norm {
        spec.norm = serde_json::from_value::<NormKind>(serde_json::Value::String(n.clone()))
            .map_err(|_| Error::Config(format!("unknown norm `{n}`")))?;
    }
    Ok(spec)
}

fn apply_overrides(args: &RunArgs, schedule: &mut ScheduleConfig) {
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut schedule.c_u, args.cu);
    set(&mut schedule.varsigma, args.varsigma);
    set(&mut schedule.gamma, args.gamma);
    set(&mut schedule.c_thick, args.cthick);
    schedule.sigma = args.sigma.or(schedule.sigma);
    schedule.epsilon = args.eps.or(schedule.epsilon);
    schedule.tau = args.tau.or(schedule.tau);
    schedule.rho0 = args.rho0.or(schedule.rho0);
    if args.adaptive {
        schedule.tau_mode = TauMode::Adaptive;
    }
    match args.rule {
        Some(RuleArg::Standard) => schedule.edge_rule = EdgeRule::Standard,
        Some(RuleArg::Geometric) => schedule.edge_rule = EdgeRule::Geometric,
        None => {}
    }
}

#[derive(Serialize)]
struct DatasetResult<'a> {
    n: usize,
    dim: usize,
    kernel: KernelSpec,
    params: &'a ParameterSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<&'a BandwidthGrid>,
    split: bool,
    rho_out: f64,
    components: &'a [Vec<usize>],
    trace: &'a [(f64, usize)],
}

fn labels_csv(n: usize, output: &ClusterOutput, path: &Path) -> Result<()> {
    let mut label = vec![None; n];
    if output.split {
        for (k, comp) in output.components.iter().enumerate() {
            for &i in comp {
                label[i] = Some(k);
            }
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "component"])?;
    for (i, l) in label.iter().enumerate() {
        w.write_record([i.to_string(), l.map_or(String::new(), |k| k.to_string())])?;
    }
    w.flush()?;
    Ok(())
}

fn run_args(args: RunArgs, mode: Mode) -> Result<()> {
    let config = args.config.as_deref().map(read_config).transpose()?;
    let Some(data_path) = &args.data else {
        // Experiment from the config.
        let mut cfg = config.ok_or_else(|| Error::Config("either --data or --config is required".into()))?;
        if cfg.mode != mode {
            return Err(Error::Config(format!(
                "config mode {:?} does not match the subcommand {:?}",
                cfg.mode, mode
            )));
        }
        apply_overrides(&args, &mut cfg.schedule);
        cfg.kernel = parse_kernel(&args, cfg.kernel)?;
        cfg.delta = args.delta.or(cfg.delta);
        if let Some(d) = &args.deltas {
            cfg.adaptive.deltas = d.clone();
        }
        if let Some(s) = args.seed {
            cfg.master_seed = s;
        }
        let report = run(&cfg)?;
        return write_report(&report, args.out.as_deref(), args.csv.as_deref());
    };
    let data = Dataset::load_csv(data_path)?;
    let base_kernel = config.as_ref().map_or(
        KernelSpec {
            profile: Profile::Rectangular,
            norm: NormKind::Euclidean,
        },
        |c| c.kernel,
    );
    let kernel = parse_kernel(&args, base_kernel)?.build(data.dim())?;
    let mut schedule = config.as_ref().map(|c| c.schedule.clone()).unwrap_or_default();
    apply_overrides(&args, &mut schedule);
    let spec = KernelSpec {
        profile: kernel.profile,
        norm: kernel.norm,
    };
    let (params, output, grid) = match mode {
        Mode::Adaptive => {
            let grid = match args.deltas.clone().or_else(|| config.as_ref().map(|c| c.adaptive.deltas.clone()).filter(|d| !d.is_empty())) {
                Some(d) => BandwidthGrid::from_list(d, data.len())?,
                None => bandwidth_grid(data.len(), data.dim())?,
            };
            let result = adaptive_select(&data, &kernel, &grid, &schedule)?;
            (result.selected_params, result.selected, Some(grid))
        }
        _ => {
            let delta = args
                .delta
                .or_else(|| config.as_ref().and_then(|c| c.delta))
                .ok_or_else(|| Error::Config("missing field `delta` (pass --delta)".into()))?;
            let params = ParameterSet::from_schedule(delta, data.len(), 1, &kernel, &schedule)?;
            let output = cluster_dataset(&data, &kernel, &params, schedule.edge_rule)?;
            (params, output, None)
        }
    };
    let result = DatasetResult {
        n: data.len(),
        dim: data.dim(),
        kernel: spec,
        params: &params,
        grid: grid.as_ref(),
        split: output.split,
        rho_out: output.rho_out,
        components: &output.components,
        trace: &output.trace,
    };
    emit(&serde_json::to_string_pretty(&result)?, args.out.as_deref())?;
    if let Some(p) = &args.csv {
        labels_csv(data.len(), &output, p)?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let _ = args.action;
    let mut value = match &args.params {
        Some(p) => serde_json::from_str::<serde_json::Value>(p).map_err(|e| Error::Config(format!("--params: {e}")))?,
        None => serde_json::json!({}),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Config("--params must be a JSON object".into()))?;
    obj.insert("name".into(), serde_json::Value::String(args.instance.clone()));
    let spec: InstanceSpec =
        serde_json::from_value(value).map_err(|e| Error::Config(format!("instance `{}`: {e}", args.instance)))?;
    let data = spec.build()?.sample(args.n, args.seed)?;
    match &args.out {
        Some(p) => data.write_csv(fs::File::create(p)?)?,
        None => data.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}
