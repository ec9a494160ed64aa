use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tokcast::frame::load_frames;
use tokcast::metrics::{fmt_db, psnr};
use tokcast::sim::{self, sweep_csv, SweepAxis};
use tokcast::tokenizer::{detokenize_like, tokenize_with_stats, TokenizerConfig};
use tokcast::{Result, SimConfig};

#[derive(Parser, Debug)]
#[command(name = "tokcast", version, about = "Token-domain progressive video transmission simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tokenize frames and print one line of codes per frame.
    Tokenize(TokenizeArgs),
    /// Run one end-to-end simulation.
    Run(SimArgs),
    /// Run one simulation per SNR value.
    SweepSnr(SweepArgs),
    /// Run one simulation per target CBR value.
    SweepCbr(SweepArgs),
}

#[derive(Args, Debug)]
struct TokenizeArgs {
    /// netpbm file, directory of netpbm files, or raw stream
    #[arg(long)]
    input: PathBuf,
    /// Sidecar for raw input (defaults to `<input>.desc`)
    #[arg(long)]
    descriptor: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    block_size: usize,
    #[arg(long, default_value_t = 16)]
    coeffs_per_block: usize,
    #[arg(long, default_value_t = 12)]
    bits_per_token: u32,
    /// Write tokens here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump tokenize -> detokenize reconstructions into this directory
    #[arg(long)]
    recon_dir: Option<PathBuf>,
}

/// Flags mirroring the config file keys; flags win over the file.
#[derive(Args, Debug, Default)]
struct SimArgs {
    /// Flat key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    descriptor: Option<PathBuf>,
    /// Synthetic input instead of a file: moving, static or noise
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
    /// Number of frames T
    #[arg(long)]
    frames: Option<usize>,
    /// Key-frame stride S
    #[arg(long)]
    stride: Option<usize>,
    /// GOP size N
    #[arg(long)]
    gop: Option<usize>,
    /// Target channel bandwidth ratio R
    #[arg(long)]
    cbr: Option<f64>,
    /// Es/N0 in dB
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// ACM table file (snr_db code_rate modulation)
    #[arg(long)]
    acm: Option<PathBuf>,
    #[arg(long)]
    bler: Option<f64>,
    /// per-frame or gop
    #[arg(long)]
    planning: Option<String>,
    /// ideal, repetition or bypass
    #[arg(long)]
    fec: Option<String>,
    /// copy-nearest or hold-last
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    coeffs_per_block: Option<usize>,
    #[arg(long)]
    bits_per_token: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-frame CSV output
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Dump decoded frames as PGM/PPM into this directory
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated sweep values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    values: Vec<f64>,
    /// Summary CSV, one row per value (stdout if omitted)
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    sim: SimArgs,
}

impl SimArgs {
    fn into_config(self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::from_file(p)?,
            None => SimConfig::default(),
        };
        let path = |p: Option<PathBuf>| p.map(|p| p.display().to_string());
        let pairs: [(&str, Option<String>); 22] = [
            ("input", path(self.input)),
            ("descriptor", path(self.descriptor)),
            ("synthetic", self.synthetic),
            ("width", self.width.map(|v| v.to_string())),
            ("height", self.height.map(|v| v.to_string())),
            ("channels", self.channels.map(|v| v.to_string())),
            ("frames", self.frames.map(|v| v.to_string())),
            ("stride", self.stride.map(|v| v.to_string())),
            ("gop", self.gop.map(|v| v.to_string())),
            ("cbr", self.cbr.map(|v| v.to_string())),
            ("snr_db", self.snr_db.map(|v| v.to_string())),
            ("acm", path(self.acm)),
            ("bler", self.bler.map(|v| v.to_string())),
            ("planning", self.planning),
            ("fec", self.fec),
            ("boundary", self.boundary),
            ("block_size", self.block_size.map(|v| v.to_string())),
            ("coeffs_per_block", self.coeffs_per_block.map(|v| v.to_string())),
            ("bits_per_token", self.bits_per_token.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("csv", path(self.csv)),
            ("dump", path(self.dump)),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        Ok(cfg)
    }
}

fn tokenize_cmd(args: TokenizeArgs) -> Result<()> {
    let cfg = TokenizerConfig::with_geometry(args.block_size, args.coeffs_per_block, args.bits_per_token);
    let frames = load_frames(&args.input, args.descriptor.as_deref())?;
    if let Some(dir) = &args.recon_dir {
        fs::create_dir_all(dir)?;
    }
    let mut out = String::new();
    for (i, f) in frames.iter().enumerate() {
        let t = tokenize_with_stats(f, &cfg)?;
        let recon = detokenize_like(&t.tokens, f, &cfg)?;
        eprintln!(
            "frame {}: L={} saturated={} psnr={} dB",
            i + 1,
            t.tokens.len(),
            t.saturated,
            fmt_db(psnr(f, &recon)?)
        );
        if let Some(dir) = &args.recon_dir {
            let ext = if f.channels == 1 { "pgm" } else { "ppm" };
            recon.write_pnm(dir.join(format!("recon_{:05}.{ext}", i + 1)))?;
        }
        let line: Vec<String> = t.tokens.0.iter().map(|c| c.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    match args.out {
        Some(p) => fs::write(p, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn run_cmd(args: SimArgs) -> Result<()> {
    let cfg = args.into_config()?;
    let report = sim::run(&cfg)?;
    if cfg.csv_out.is_none() {
        print!("{}", report.to_csv());
    }
    eprintln!(
        "mcs {} | k_t={} symbols | B_t={} bits | cbr={:.4e} (target {:.4e}) | mean psnr {} dB | fallbacks {} | untransmitted {} | desyncs {}",
        report.mcs,
        report.symbols_per_key_frame,
        report.budget_bits,
        report.cbr,
        report.target_cbr,
        fmt_db(report.mean_psnr()),
        report.frame_fallbacks,
        report.untransmitted,
        report.desyncs,
    );
    Ok(())
}

fn sweep_cmd(args: SweepArgs, axis: SweepAxis) -> Result<()> {
    let cfg = args.sim.into_config()?;
    let reports = sim::sweep(&cfg, axis, &args.values)?;
    for (v, r) in args.values.iter().zip(&reports) {
        eprintln!(
            "{}={v}: mcs {} | B_t={} | mean psnr {} dB | fallbacks {}",
            axis.name(),
            r.mcs,
            r.budget_bits,
            fmt_db(r.mean_psnr()),
            r.frame_fallbacks
        );
    }
    let csv = sweep_csv(axis, &args.values, &reports);
    match args.summary {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tokenize(a) => tokenize_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::SweepSnr(a) => sweep_cmd(a, SweepAxis::Snr),
        Command::SweepCbr(a) => sweep_cmd(a, SweepAxis::Cbr),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
