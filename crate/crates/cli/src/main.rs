//! `sclimits` command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sclimits::analytics::{GapTable, LimitReceiver};
use sclimits::equalizer::{FeedbackMode, ReceiverKind, ReceiverSpec};
use sclimits::modem::Modulation;
use sclimits::selftest::{run_selftest, Fault};
use sclimits::simulator::{
    curves, gap_at_ber, gaps_to_csv, measure_post_snr, mfb_finite_channel_curve, read_sweep_csv,
    run_sweep_with_progress, MfbCurve, PostSnrStudy, SweepConfig,
};

#[derive(Parser)]
#[command(name = "sclimits", version, about = "Equalizer limits and BER sweeps for DFT-precoded OFDM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print limiting post-SNR gaps to the matched-filter bound.
    Limits(LimitsArgs),
    /// Measure the ensemble post-SNR of one receiver.
    PostSnr(PostSnrArgs),
    /// Run a Monte Carlo BER sweep.
    BerSweep(SweepArgs),
    /// Extract SNR gaps to the MFB at a target BER from sweep output.
    Gap(GapArgs),
    /// Run the built-in invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct LimitsArgs {
    /// Antenna counts.
    #[arg(long = "nr", value_delimiter = ',', default_values_t = [1usize, 2])]
    n_r: Vec<usize>,
    /// Restrict to one receiver (conv-zf-le, conv-zf-dfe, wl-zf-le, wl-zf-dfe).
    #[arg(long)]
    receiver: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct PostSnrArgs {
    /// Receiver name, e.g. zf-dfe or wl-mmse-le.
    #[arg(long)]
    receiver: String,
    #[arg(long = "nr", default_value_t = 1)]
    n_r: usize,
    #[arg(long, default_value_t = 30.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 5000)]
    realizations: u64,
    #[arg(long, default_value_t = 20)]
    fbf_len: usize,
    #[arg(long, default_value_t = 20)]
    v: usize,
    #[arg(long, default_value_t = 512)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "SCLIMITS_THREADS", default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set snr_grid_db=0:2:14. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads; overrides parallel_width.
    #[arg(long, env = "SCLIMITS_THREADS")]
    threads: Option<usize>,
    /// Also write a gnuplot script plotting the CSV output.
    #[arg(long, value_name = "PATH", requires = "output")]
    gnuplot_script: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MfbSource {
    /// `mfb` rows in the input when present, otherwise `finite`.
    Auto,
    /// BPSK MFB of the limiting channel.
    Limit,
    /// BPSK MFB averaged over finite-memory channel draws.
    Finite,
}

#[derive(Args)]
struct GapArgs {
    /// Sweep CSV produced by ber-sweep.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    target_ber: f64,
    #[arg(long = "nr", default_value_t = 1)]
    n_r: usize,
    #[arg(long, value_enum, default_value = "auto")]
    mfb: MfbSource,
    /// Channel taps for the finite-channel reference.
    #[arg(long, default_value_t = 20)]
    v: usize,
    #[arg(long, default_value_t = 512)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_limits(args: LimitsArgs) -> Result<ExitCode> {
    if args.n_r.contains(&0) {
        bail!(sclimits::Error::InvalidArgument("n_r must be at least 1".into()));
    }
    let receivers = match &args.receiver {
        Some(name) => vec![name.parse::<LimitReceiver>()?],
        None => LimitReceiver::EQUALIZERS.to_vec(),
    };
    let table = GapTable::new(&receivers, &args.n_r)?;
    if args.receiver.is_some() {
        if let Some(row) = table.rows.iter().find(|r| r.gap_db.is_none()) {
            bail!(sclimits::Error::Domain(format!("{} has no finite limit for N_r={}", row.receiver, row.n_r)));
        }
    }
    let text = match args.format {
        Format::Csv => table.to_csv()?,
        Format::Json => serde_json::to_string_pretty(&table)? + "\n",
    };
    write_out(None, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_post_snr(args: PostSnrArgs) -> Result<ExitCode> {
    let kind: ReceiverKind = args.receiver.parse()?;
    let spec = ReceiverSpec::new(kind, args.fbf_len, FeedbackMode::Genie);
    let study = PostSnrStudy {
        receiver: spec,
        constellation: Modulation::Bpsk,
        n_r: args.n_r,
        v: args.v,
        m: args.m,
        snr_db: args.snr_db,
        realizations: args.realizations,
        master_seed: args.seed,
        parallel_width: args.threads,
    };
    let report = measure_post_snr(&study)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn load_config(args: &SweepArgs) -> Result<SweepConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<SweepConfig>(&text).map_err(|e| {
                let msg = e.to_string();
                let hint = if msg.contains("unknown field") {
                    format!("; valid keys: {}", sclimits::simulator::CONFIG_KEYS.join(", "))
                } else {
                    String::new()
                };
                sclimits::Error::InvalidArgument(format!("{}: {msg}{hint}", p.display()))
            })?
        }
        None => SweepConfig::default(),
    };
    if let Some(t) = args.threads {
        cfg.parallel_width = t;
    }
    for item in &args.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| sclimits::Error::InvalidArgument(format!("override {item:?} is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn gnuplot_script(csv_path: &Path, receivers: &[String]) -> String {
    let file = csv_path.display();
    let mut s = String::from(
        "set datafile separator ','\nset logscale y\nset grid\nset xlabel 'SNR (dB)'\nset ylabel 'BER'\nset key bottom left\nplot \\\n",
    );
    let lines: Vec<String> = receivers
        .iter()
        .map(|r| format!("  '{file}' skip 1 using 2:(strcol(1) eq '{r}' ? $5 : 1/0) with linespoints title '{r}'"))
        .collect();
    s.push_str(&lines.join(", \\\n"));
    s.push('\n');
    s
}

fn cmd_ber_sweep(args: SweepArgs) -> Result<ExitCode> {
    let cfg = load_config(&args)?;
    let result = run_sweep_with_progress(&cfg, |row| {
        let flag = if row.capped { " (capped)" } else { "" };
        eprintln!("{} {} dB: ber {:.3e} ({} errors, {} blocks){flag}", row.receiver, row.snr_db, row.ber, row.errors, row.blocks);
    })?;
    let text = match args.format {
        Format::Csv => result.to_csv()?,
        Format::Json => result.to_json()? + "\n",
    };
    write_out(args.output.as_deref(), &text)?;
    if let (Some(script), Some(out)) = (&args.gnuplot_script, &args.output) {
        let labels: Vec<String> = cfg.parsed_receivers()?.iter().map(|r| r.label()).collect();
        fs::write(script, gnuplot_script(out, &labels)).with_context(|| format!("writing {}", script.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gap(args: GapArgs) -> Result<ExitCode> {
    let file = fs::File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let rows = read_sweep_csv(file)?;
    let all = curves(&rows);
    let sampled = all.iter().find(|(n, _)| n == "mfb").map(|(_, p)| MfbCurve::Sampled(p.clone()));
    let finite = || -> Result<MfbCurve> {
        let cfg = SweepConfig { n_r: args.n_r, v: args.v, m: args.m, master_seed: args.seed, ..SweepConfig::default() };
        cfg.validate()?;
        Ok(mfb_finite_channel_curve(&cfg, 200_000)?)
    };
    let mfb = match args.mfb {
        MfbSource::Auto => match sampled {
            Some(c) => c,
            None => finite()?,
        },
        MfbSource::Limit => MfbCurve::Analytic { n_r: args.n_r },
        MfbSource::Finite => finite()?,
    };
    let mut gaps = Vec::new();
    let mut failures = Vec::new();
    for (name, pts) in all.iter().filter(|(n, _)| n != "mfb") {
        match gap_at_ber(name, pts, &mfb, args.target_ber) {
            Ok(g) => gaps.push(g),
            Err(e) => failures.push(e),
        }
    }
    write_out(args.output.as_deref(), &gaps_to_csv(&gaps)?)?;
    if let Some(first) = failures.into_iter().next() {
        return Err(first.into());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(args: SelftestArgs) -> Result<ExitCode> {
    let fault = args.inject_fault.as_deref().map(str::parse::<Fault>).transpose()?;
    let reports = run_selftest(fault);
    match args.format {
        Format::Csv => {
            for r in &reports {
                println!("{r}");
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&reports)?),
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        eprintln!("{} suites passed", reports.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed suites: {}", failed.join(", "));
        Ok(ExitCode::from(1))
    }
}

/// 2 for bad input, 3 when the data cannot answer the question asked.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<sclimits::Error>() {
            return match e.root() {
                sclimits::Error::InsufficientRange { .. } => 3,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Limits(a) => cmd_limits(a),
        Command::PostSnr(a) => cmd_post_snr(a),
        Command::BerSweep(a) => cmd_ber_sweep(a),
        Command::Gap(a) => cmd_gap(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
