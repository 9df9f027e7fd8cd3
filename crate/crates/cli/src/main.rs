//! `prpwifi`: simulate redundant Wi-Fi links and analyze their logs.
//!
//! Exit status is 0 on success, 1 when an analysis or validation fails and
//! 2 on usage or configuration errors.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use prpwifi_core::codec::{decode_log, encode_log};
use prpwifi_core::config::load_config;
use prpwifi_core::da::{DaMode, DaParams, FailedCopyPolicy, LostCopyAttempts, DEFAULT_MAX_VIRTUAL_DEFERRAL};
use prpwifi_core::metrics::{compute_report, render_summary, write_sweep_csv, MetricsReport};
use prpwifi_core::sim::{apply_real_deferral, generate_run, DeferralSpec, SimConfig};
use prpwifi_core::{ChannelId, DurationNs, MetricsError, RunLog, SignedDurationNs};

#[derive(Parser)]
#[command(name = "prpwifi", version, about = "Redundant Wi-Fi link simulator and duplication-avoidance analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a run log.
    Simulate(SimulateArgs),
    /// Compute the metrics report of a log under one DA mode.
    Analyze(AnalyzeArgs),
    /// Evaluate a log over a grid of T_LRE or T_D values.
    Sweep(SweepArgs),
    /// Compare virtual against real deferral on simulated runs.
    ValidateDeferral(ValidateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Interferers on channel B.
    #[arg(long)]
    interferers: Option<u32>,
    #[arg(long)]
    packets: Option<u64>,
    /// Real deferral of B behind A, e.g. `100us` or `-50us`.
    #[arg(long, allow_hyphen_values = true)]
    td: Option<SignedDurationNs>,
    /// Record only what an adapter reports (no per-attempt traces).
    #[arg(long)]
    adapter_view: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Pow,
    Rda,
    Tdd,
}

impl From<ModeArg> for DaMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Pow => DaMode::Pow,
            ModeArg::Rda => DaMode::Rda,
            ModeArg::Tdd => DaMode::Tdd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    PessimisticZero,
    Oracle,
}

#[derive(Args)]
struct DaArgs {
    #[arg(long, default_value = "0")]
    tlre: DurationNs,
    #[arg(long, value_enum, default_value = "pessimistic-zero")]
    policy: PolicyArg,
    /// Attempts charged per lost copy: `measured-max` or a number.
    #[arg(long, default_value = "measured-max", value_parser = parse_lost_attempts)]
    lost_attempts: LostCopyAttempts,
    /// Allow virtual deferrals beyond the stationarity limit.
    #[arg(long)]
    force: bool,
}

impl DaArgs {
    fn params(&self, mode: DaMode, tlre: DurationNs, td: SignedDurationNs) -> DaParams {
        DaParams {
            mode,
            t_lre: tlre,
            td,
            failed_copy_policy: match self.policy {
                PolicyArg::PessimisticZero => FailedCopyPolicy::PessimisticZero,
                PolicyArg::Oracle => FailedCopyPolicy::Oracle,
            },
            lost_copy_attempts: self.lost_attempts,
            max_virtual_deferral: DEFAULT_MAX_VIRTUAL_DEFERRAL,
            force: self.force,
        }
    }
}

fn parse_lost_attempts(s: &str) -> Result<LostCopyAttempts, String> {
    match s {
        "measured-max" => Ok(LostCopyAttempts::MeasuredMax),
        n => n
            .parse()
            .map(LostCopyAttempts::Fixed)
            .map_err(|_| format!("expected `measured-max` or an attempt count, got `{n}`")),
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    td: SignedDurationNs,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    da: DaArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    Tlre,
    Td,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Inclusive range `START..STOP`, e.g. `0..1000us` or `-300us..300us`.
    #[arg(long, allow_hyphen_values = true)]
    range: String,
    #[arg(long)]
    step: DurationNs,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full reports as a JSON array.
    #[arg(long)]
    reports: Option<PathBuf>,
    #[command(flatten)]
    da: DaArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated deferrals, e.g. `-100us,-50us,50us,100us`.
    #[arg(
        long,
        allow_hyphen_values = true,
        value_delimiter = ',',
        default_value = "-250us,-100us,-50us,50us,100us,250us"
    )]
    td_list: Vec<SignedDurationNs>,
    /// Absolute bound on the e_bar difference and relative bound on the
    /// mean-latency difference.
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
    /// Comma-separated seeds; five seeds from the configured one by default.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    packets: Option<u64>,
    #[arg(long)]
    interferers: Option<u32>,
    #[arg(long, default_value = "0")]
    tlre: DurationNs,
    /// Allow deferrals beyond the stationarity limit.
    #[arg(long)]
    force: bool,
}

/// Error with its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn failed(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

type CmdResult = Result<(), Failure>;

/// Writes through a temporary file in the destination directory so that a
/// failed run never leaves a partial artifact.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write {}", path.display()))?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn write_or_stdout(path: Option<&Path>, fill: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
    match path {
        Some(p) => write_atomic(p, fill),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn base_config(path: Option<&Path>) -> Result<SimConfig, Failure> {
    match path {
        Some(p) => load_config(p).map_err(|e| usage(anyhow!(e))),
        None => Ok(SimConfig::duplex(10_000, 0, 0)),
    }
}

fn set_interferers_b(config: &mut SimConfig, n: u32) -> Result<(), Failure> {
    let b = config
        .channels
        .get_mut(ChannelId::B.index())
        .ok_or_else(|| usage(anyhow!("--interferers needs a channel B")))?;
    b.interference.interferer_count = n;
    Ok(())
}

fn read_log(path: &Path) -> Result<RunLog, Failure> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display())).map_err(usage)?;
    decode_log(BufReader::new(file)).with_context(|| format!("cannot decode {}", path.display())).map_err(failed)
}

fn simulate(args: SimulateArgs) -> CmdResult {
    let mut config = base_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.packets {
        config.packets = n;
    }
    if let Some(n) = args.interferers {
        set_interferers_b(&mut config, n)?;
    }
    if let Some(td) = args.td {
        config.deferral = Some(DeferralSpec { primary: ChannelId::A, td });
    }
    if args.adapter_view {
        config.emit_full_trace = false;
    }
    let started = Instant::now();
    let run = generate_run(&config).map_err(|e| usage(anyhow!(e)))?;
    write_atomic(&args.out, |w| Ok(encode_log(&run, w)?)).map_err(failed)?;
    let losses: Vec<String> = (0..run.meta.channel_count())
        .map(|k| {
            let lost = run.packets.iter().filter(|p| p.copies[k].loss).count();
            format!("{}={lost}", ChannelId(k as u8))
        })
        .collect();
    println!(
        "N={} lost {} wall={:.3}s -> {}",
        run.packets.len(),
        losses.join(" "),
        started.elapsed().as_secs_f64(),
        args.out.display()
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> CmdResult {
    let run = read_log(&args.log)?;
    let params = args.da.params(args.mode.into(), args.da.tlre, args.td);
    let report = compute_report(&run, &params).map_err(|e| failed(anyhow!(e)))?;
    write_or_stdout(args.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })
    .map_err(failed)?;
    if args.out.is_some() {
        print!("{}", render_summary(&report));
    }
    Ok(())
}

/// Parses `START..STOP` into signed durations.
fn parse_range(s: &str) -> anyhow::Result<(SignedDurationNs, SignedDurationNs)> {
    let (a, b) = s.split_once("..").ok_or_else(|| anyhow!("range `{s}` must look like START..STOP"))?;
    let start: SignedDurationNs = a.parse()?;
    let stop: SignedDurationNs = b.parse()?;
    if stop < start {
        bail!("range `{s}` ends before it starts");
    }
    Ok((start, stop))
}

fn grid_points(
    start: SignedDurationNs,
    stop: SignedDurationNs,
    step: DurationNs,
) -> anyhow::Result<Vec<SignedDurationNs>> {
    if step == DurationNs::ZERO {
        bail!("step must be positive");
    }
    let step = step.signed();
    let mut out = Vec::new();
    let mut v = start;
    while v <= stop {
        out.push(v);
        v = v + step;
    }
    Ok(out)
}

fn sweep(args: SweepArgs) -> CmdResult {
    let (start, stop) = parse_range(&args.range).map_err(usage)?;
    let points = grid_points(start, stop, args.step).map_err(usage)?;
    let grid: Vec<DaParams> = match args.param {
        SweepParam::Tlre => {
            if start < SignedDurationNs::ZERO {
                return Err(usage(anyhow!("T_LRE cannot be negative")));
            }
            points.iter().map(|v| args.da.params(DaMode::Rda, v.abs(), SignedDurationNs::ZERO)).collect()
        }
        SweepParam::Td => points.iter().map(|&td| args.da.params(DaMode::Tdd, args.da.tlre, td)).collect(),
    };
    let run = read_log(&args.log)?;
    let reports: Vec<MetricsReport> = grid
        .par_iter()
        .enumerate()
        .map(|(index, da)| {
            compute_report(&run, da).map_err(|e| match e {
                MetricsError::Da(source) => MetricsError::Point { index, source },
                other => other,
            })
        })
        .collect::<Result<_, _>>()
        .map_err(|e| failed(anyhow!(e)))?;
    write_or_stdout(args.out.as_deref(), |w| Ok(write_sweep_csv(&reports, w)?)).map_err(failed)?;
    if let Some(path) = &args.reports {
        write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &reports)?;
            writeln!(w)?;
            Ok(())
        })
        .map_err(failed)?;
    }
    Ok(())
}

struct Comparison {
    td: SignedDurationNs,
    e_virtual: f64,
    e_real: f64,
    d_virtual: f64,
    d_real: f64,
}

impl Comparison {
    fn delta_e(&self) -> f64 {
        (self.e_virtual - self.e_real).abs()
    }

    fn latency_rel(&self) -> f64 {
        if self.d_real == 0.0 {
            if self.d_virtual == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.d_virtual - self.d_real).abs() / self.d_real
        }
    }
}

fn mean_latency_ns(r: &MetricsReport) -> f64 {
    r.link.latency.map_or(0.0, |s| s.mean.0 as f64)
}

fn validate_deferral(args: ValidateArgs) -> CmdResult {
    let mut config = base_config(args.config.as_deref())?;
    if let Some(n) = args.packets {
        config.packets = n;
    }
    if let Some(n) = args.interferers {
        set_interferers_b(&mut config, n)?;
    }
    config.deferral = None;
    config.emit_full_trace = false;
    if config.channels.len() != 2 {
        return Err(usage(anyhow!("deferral validation needs a duplex configuration")));
    }
    if args.tolerance.is_nan() || args.tolerance < 0.0 {
        return Err(usage(anyhow!("tolerance must be non-negative")));
    }
    if let Some(td) = args.td_list.iter().find(|td| td.abs() > DEFAULT_MAX_VIRTUAL_DEFERRAL) {
        if !args.force {
            return Err(usage(anyhow!(
                "T_D {td} exceeds the stationarity limit {DEFAULT_MAX_VIRTUAL_DEFERRAL}; pass --force to run it anyway"
            )));
        }
    }
    let seeds = if args.seeds.is_empty() { (0..5).map(|k| config.seed + k).collect() } else { args.seeds.clone() };

    let configs: Vec<SimConfig> = seeds.iter().map(|&seed| SimConfig { seed, ..config.clone() }).collect();
    let bases: Vec<RunLog> =
        configs.par_iter().map(generate_run).collect::<Result<_, _>>().map_err(|e| usage(anyhow!(e)))?;

    let jobs: Vec<(usize, usize)> =
        (0..args.td_list.len()).flat_map(|t| (0..seeds.len()).map(move |s| (t, s))).collect();
    let samples: Vec<(usize, f64, f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(t, s)| -> anyhow::Result<_> {
            let td = args.td_list[t];
            let mut da = DaParams::tdd(args.tlre, td);
            da.force = args.force;
            let virt = compute_report(&bases[s], &da)?;
            let real_cfg =
                SimConfig { deferral: Some(DeferralSpec { primary: ChannelId::A, td }), ..configs[s].clone() };
            let real = compute_report(&apply_real_deferral(&real_cfg)?, &da)?;
            Ok((t, virt.link.e_bar.to_f64(), real.link.e_bar.to_f64(), mean_latency_ns(&virt), mean_latency_ns(&real)))
        })
        .collect::<anyhow::Result<_>>()
        .map_err(usage)?;

    let n = seeds.len() as f64;
    let rows: Vec<Comparison> = args
        .td_list
        .iter()
        .enumerate()
        .map(|(t, &td)| {
            let mut c = Comparison { td, e_virtual: 0.0, e_real: 0.0, d_virtual: 0.0, d_real: 0.0 };
            for s in samples.iter().filter(|s| s.0 == t) {
                c.e_virtual += s.1 / n;
                c.e_real += s.2 / n;
                c.d_virtual += s.3 / n;
                c.d_real += s.4 / n;
            }
            c
        })
        .collect();

    println!(
        "{:>10} {:>10} {:>10} {:>9} {:>12} {:>12} {:>9}  result",
        "T_D", "e_virtual", "e_real", "|de|", "d_virt_us", "d_real_us", "rel_dd"
    );
    let mut violations = 0;
    for c in &rows {
        let ok = c.delta_e() <= args.tolerance && c.latency_rel() <= args.tolerance;
        violations += usize::from(!ok);
        println!(
            "{:>10} {:>10.4} {:>10.4} {:>9.4} {:>12.1} {:>12.1} {:>9.4}  {}",
            c.td.to_string(),
            c.e_virtual,
            c.e_real,
            c.delta_e(),
            c.d_virtual / 1e3,
            c.d_real / 1e3,
            c.latency_rel(),
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("{} seeds, {} packets each, tolerance {}", seeds.len(), config.packets, args.tolerance);
    if violations > 0 {
        return Err(failed(anyhow!("{violations} deferral value(s) outside tolerance")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
        Command::ValidateDeferral(a) => validate_deferral(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
