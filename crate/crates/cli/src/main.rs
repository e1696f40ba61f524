use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use orbmem::config::{OutputFormat, Preset, RunConfig};
use orbmem::format::{fmt_full, fmt_table};
use orbmem::scenario::{downlink_probability_map, gain_map, linspace, long_csv, table_one};
use orbmem::spindyn::{simulate_protocol, write_kymograph_csv, RadialGrid};
use orbmem::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "orbmem", version, about = "Satellite entanglement-distribution link, memory and key-rate models")]
struct Cli {
    /// Key-value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for written artifacts (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Table format for `scenario`.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Override one configuration key; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dual versus buffered downlink comparison table.
    Scenario(ScenarioArgs),
    /// Downlink efficiency over slant range and pointing jitter.
    Linkmap(LinkmapArgs),
    /// Spin-exchange memory simulation with kymographs.
    Memory(MemoryArgs),
    /// Key-rate gain over buffered-link elevation and memory efficiency.
    Gainmap(GainmapArgs),
    /// Print the effective configuration.
    Config,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long)]
    eta_mem: Option<f64>,
    /// Exit with status 3 when the memory cannot hold the buffer time.
    #[arg(long)]
    require_feasible: bool,
}

#[derive(Args, Debug)]
struct LinkmapArgs {
    /// Slant range lower bound, km.
    #[arg(long, default_value_t = 500.0)]
    range_min: f64,
    #[arg(long, default_value_t = 2500.0)]
    range_max: f64,
    #[arg(long, default_value_t = 21)]
    range_steps: usize,
    /// Rms pointing jitter lower bound, µrad.
    #[arg(long, default_value_t = 0.0)]
    jitter_min: f64,
    #[arg(long, default_value_t = 5.0)]
    jitter_max: f64,
    #[arg(long, default_value_t = 11)]
    jitter_steps: usize,
}

#[derive(Args, Debug)]
struct MemoryArgs {
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Radial grid points.
    #[arg(long)]
    grid: Option<usize>,
    /// Storage time between the two exchange windows, s.
    #[arg(long)]
    dark_interval: Option<f64>,
    /// Time samples per kymograph.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct GainmapArgs {
    /// Buffered-link elevation lower bound, degrees.
    #[arg(long, default_value_t = 20.0)]
    elevation_min: f64,
    #[arg(long, default_value_t = 90.0)]
    elevation_max: f64,
    #[arg(long, default_value_t = 15)]
    elevation_steps: usize,
    #[arg(long, default_value_t = 0.02)]
    eta_mem_min: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_mem_max: f64,
    #[arg(long, default_value_t = 50)]
    eta_mem_steps: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    PaperLiteral,
    Rescaled,
    Lossless,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Markdown => OutputFormat::Markdown,
            FormatArg::Text => OutputFormat::Text,
        }
    }
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::PaperLiteral => Preset::PaperLiteral,
            PresetArg::Rescaled => Preset::Rescaled,
            PresetArg::Lossless => Preset::Lossless,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Run(String),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Run(_) => EXIT_SOLVER,
            Failure::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::StepSizeUnderflow { .. } | Error::TooManySteps { .. } => Failure::Run(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => {
                    Failure::Config(format!("config file not found: {}", path.display()))
                }
                _ => Failure::Config(format!("cannot read config file {}: {e}", path.display())),
            })?;
            RunConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(f) = cli.format {
        cfg.format = f.into();
    }
    Ok(cfg)
}

fn write_artifact(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Run(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_scenario(mut cfg: RunConfig, args: &ScenarioArgs) -> Outcome {
    if let Some(m) = args.eta_mem {
        cfg.set("stages.memory", &fmt_full(m))?;
    }
    cfg.scenario.validate()?;
    let result = table_one(&cfg.scenario)?;
    let (name, body) = match cfg.format {
        OutputFormat::Markdown => ("table_one.md", result.to_markdown()),
        OutputFormat::Text => ("table_one.txt", result.to_text()),
        OutputFormat::Csv => ("table_one.csv", result.to_csv()),
    };
    write_artifact(&cfg.output_dir, name, body.as_bytes())?;
    print!("{body}");
    if args.require_feasible && !result.feasible {
        return Err(Failure::Infeasible(format!(
            "memory lifetime {} s does not cover buffer time {} s",
            fmt_table(cfg.scenario.qkd.memory_lifetime),
            fmt_table(result.t_buffer)
        )));
    }
    Ok(())
}

fn cmd_linkmap(cfg: RunConfig, args: &LinkmapArgs) -> Outcome {
    let ranges = linspace(args.range_min, args.range_max, args.range_steps)?;
    let jitter_urad = linspace(args.jitter_min, args.jitter_max, args.jitter_steps)?;
    let jitter: Vec<f64> = jitter_urad.iter().map(|j| j * 1e-6).collect();
    let grid = downlink_probability_map(&ranges, &jitter, &cfg.scenario)?;
    let csv = long_csv(["slant_range_km", "jitter_urad", "eta"], &ranges, &jitter_urad, &grid.values);
    let path = write_artifact(&cfg.output_dir, "linkmap.csv", csv.as_bytes())?;
    println!("wrote {} ({} cells)", path.display(), grid.values.len());
    Ok(())
}

fn cmd_gainmap(cfg: RunConfig, args: &GainmapArgs) -> Outcome {
    let elev_deg = linspace(args.elevation_min, args.elevation_max, args.elevation_steps)?;
    let elev: Vec<f64> = elev_deg.iter().map(|d| d.to_radians()).collect();
    let mems = linspace(args.eta_mem_min, args.eta_mem_max, args.eta_mem_steps)?;
    let grid = gain_map(&elev, &mems, &cfg.scenario)?;
    let csv = long_csv(["elevation_deg", "eta_mem", "gain"], &elev_deg, &mems, &grid.values);
    let path = write_artifact(&cfg.output_dir, "gainmap.csv", csv.as_bytes())?;
    println!("wrote {} ({} cells)", path.display(), grid.values.len());
    Ok(())
}

fn cmd_memory(mut cfg: RunConfig, args: &MemoryArgs) -> Outcome {
    if let Some(p) = args.preset {
        cfg.apply_preset(p.into());
    }
    if let Some(n) = args.grid {
        cfg.memory.grid_points = n;
    }
    if let Some(t) = args.dark_interval {
        cfg.set("memory.dark_interval_s", &fmt_full(t))?;
    }
    if let Some(n) = args.samples {
        cfg.memory.samples = n;
    }
    cfg.validate()?;
    let grid = RadialGrid::new(cfg.ensemble.cell_radius, cfg.memory.grid_points)?;
    let schedule = cfg.schedule();
    let outcome = simulate_protocol(&cfg.ensemble, &schedule, &grid, &cfg.solver).map_err(|e| {
        let f = Failure::from(e);
        match f {
            Failure::Run(msg) => Failure::Run(format!(
                "{msg}\nparameters: grid_points = {}, exchange_window = {} s, dark_interval = {} s, rtol = {}, atol = {}\n{}",
                cfg.memory.grid_points,
                fmt_table(schedule.exchange_window),
                fmt_table(schedule.dark_interval),
                fmt_table(cfg.solver.relative_tolerance),
                fmt_table(cfg.solver.absolute_tolerance),
                ensemble_echo(&cfg)
            )),
            other => other,
        }
    })?;

    let mut kymo = Vec::new();
    write_kymograph_csv(&outcome.kymograph_s, &outcome.kymograph_k, &mut kymo)
        .map_err(|e| Failure::Run(e.to_string()))?;
    write_artifact(&cfg.output_dir, "kymograph.csv", &kymo)?;

    let summary = format!(
        "eta_mem = {}\nspin_retrieval = {}\noptical_mapping = {}\nread_time_s = {}\ngrid_points = {}\naccepted_steps = {}\nrejected_steps = {}\n",
        fmt_full(outcome.eta_mem),
        fmt_full(outcome.spin_retrieval),
        fmt_full(outcome.optical_mapping),
        fmt_full(outcome.read_time),
        cfg.memory.grid_points,
        outcome.stats.accepted,
        outcome.stats.rejected,
    );
    write_artifact(&cfg.output_dir, "memory_summary.txt", summary.as_bytes())?;
    println!("eta_mem = {:.6}", outcome.eta_mem);
    Ok(())
}

fn ensemble_echo(cfg: &RunConfig) -> String {
    cfg.emit()
        .lines()
        .filter(|l| l.starts_with("ensemble."))
        .collect::<Vec<_>>()
        .join("\n")
}

fn run(cli: Cli) -> Outcome {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Scenario(a) => cmd_scenario(cfg, a),
        Command::Linkmap(a) => cmd_linkmap(cfg, a),
        Command::Memory(a) => cmd_memory(cfg, a),
        Command::Gainmap(a) => cmd_gainmap(cfg, a),
        Command::Config => {
            print!("{}", cfg.emit());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Config(m) => format!("config error: {m}"),
                Failure::Run(m) => format!("run failed: {m}"),
                Failure::Infeasible(m) => format!("infeasible: {m}"),
            };
            eprintln!("orbmem: {msg}");
            ExitCode::from(f.code())
        }
    }
}
