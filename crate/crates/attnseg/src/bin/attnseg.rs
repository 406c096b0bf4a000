use std::path::PathBuf;
use std::process::ExitCode;

use attnseg::batch::{read_dump_list, run_batch, BatchOptions};
use attnseg::dump_io::load_dump;
use attnseg::eval_io::{evaluate_dirs, read_class_map, REPORT_FILE};
use attnseg::fixture::write_fixture;
use attnseg::generate::generate_from_dir;
use attnseg::inspect::inspect;
use attnseg::tensor_io::write_json;
use attnseg::{exit, Error, Result};
use attnseg_core::config::parse_schedule;
use attnseg_core::eval::Pooling;
use attnseg_core::synth::{SynthMode, SynthParams};
use attnseg_core::{PipelineConfig, ScaleLevel, Strategy};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "attnseg", version, about = "Segmentation masks from diffusion attention dumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Produce mask.png and soft.atnb for one dump.
    Generate {
        dump: PathBuf,
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Process every dump listed in a text file (one directory per line).
    Batch {
        list: PathBuf,
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Exit non-zero if any dump fails.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// mIoU of predicted masks against ground truth.
    Eval {
        pred: PathBuf,
        gt: PathBuf,
        /// JSON object mapping mask paths to class labels.
        class_map: PathBuf,
        /// Average per-image IoUs instead of pooling pixel counts.
        #[arg(long)]
        per_image: bool,
        /// Report path [default: <PRED>/eval.json]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heatmaps of the class CA channel and SA slices at every scale.
    Inspect {
        dump: PathBuf,
        out: PathBuf,
        /// Query position `i,j` on the finest scale; repeatable.
        #[arg(long, value_parser = parse_coord)]
        at: Vec<(usize, usize)>,
        /// Output image side in pixels.
        #[arg(long, default_value_t = 256)]
        size: usize,
    },
    /// Write a synthetic dump and its ground-truth mask.
    Synth {
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Preset::Disk)]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        noise: Option<f64>,
        /// Comma-separated scales to generate.
        #[arg(long, value_parser = parse_scales)]
        scales: Option<ScaleList>,
        /// Store raw per-layer, per-timestep maps.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 2)]
        timesteps: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Disk,
    Rectangle,
    TwoBlobs,
    SparseConcentrated,
    BackgroundLeak,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Caa,
    #[value(name = "ca_sa")]
    CaSa,
    Seediff,
}

#[derive(Args)]
struct PipelineArgs {
    /// Seed threshold in (0, 1].
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit)]
    alpha: f32,
    /// Binarization threshold in (0, 1].
    #[arg(long, default_value_t = 0.3, value_parser = parse_unit)]
    beta: f32,
    #[arg(long, value_enum, default_value_t = StrategyArg::Seediff)]
    strategy: StrategyArg,
    /// Comma-separated, strictly increasing scales.
    #[arg(long, default_value = "16,32,64", value_parser = parse_scales)]
    schedule: ScaleList,
    /// Skip background-mask refinement.
    #[arg(long)]
    no_background: bool,
    /// Background seed threshold [default: alpha]
    #[arg(long, value_parser = parse_unit)]
    background_alpha: Option<f32>,
    /// Seed every scale from its own CA map and average the expansions.
    #[arg(long)]
    reseed_from_ca: bool,
    /// Write intermediate masks and seeds under trace/.
    #[arg(long)]
    trace: bool,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let strategy = match self.strategy {
            StrategyArg::Caa => Strategy::Caa,
            StrategyArg::CaSa => Strategy::CaSa,
            StrategyArg::Seediff => Strategy::Seeded,
        };
        let config = PipelineConfig {
            alpha: self.alpha,
            beta: self.beta,
            strategy,
            background: !self.no_background,
            background_alpha: self.background_alpha,
            reseed_from_ca: self.reseed_from_ca,
            ..PipelineConfig::default()
        }
        .with_schedule(self.schedule.0.clone());
        config.validate().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(config)
    }
}

fn parse_unit(s: &str) -> std::result::Result<f32, String> {
    let v: f32 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1]"))
    }
}

/// Comma-separated scale sides, e.g. `16,32,64`.
#[derive(Clone)]
struct ScaleList(Vec<ScaleLevel>);

fn parse_scales(s: &str) -> std::result::Result<ScaleList, String> {
    parse_schedule(s).map(ScaleList).map_err(|e| e.to_string())
}

fn parse_coord(s: &str) -> std::result::Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or("expected i,j")?;
    let i = i.trim().parse().map_err(|e| format!("{e}"))?;
    let j = j.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((i, j))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { dump, out, pipeline } => {
            let config = pipeline.config()?;
            let g = generate_from_dir(&dump, &out, &config, pipeline.trace)?;
            println!(
                "{}: {} foreground pixels ({})",
                g.mask_path.display(),
                g.mask.binary.count_ones(),
                g.mask.class_label
            );
        }
        Command::Batch { list, out, jobs, strict, pipeline } => {
            let opts = BatchOptions { jobs, trace: pipeline.trace, config: pipeline.config()? };
            let dumps = read_dump_list(&list)?;
            let ds = run_batch(&dumps, &out, &opts)?;
            println!("{} masks written, {} failures", ds.entries.len(), ds.failures.len());
            for f in &ds.failures {
                eprintln!("failed: {}: {}", f.dump, f.error);
            }
            if strict && !ds.failures.is_empty() {
                return Err(Error::BatchFailures { failed: ds.failures.len(), total: dumps.len() });
            }
        }
        Command::Eval { pred, gt, class_map, per_image, out } => {
            let pooling = if per_image { Pooling::PerImage } else { Pooling::Dataset };
            let map = read_class_map(&class_map)?;
            let report = evaluate_dirs(&pred, &gt, &map, pooling)?;
            let out = out.unwrap_or_else(|| pred.join(REPORT_FILE));
            write_json(&report, &out)?;
            for (label, v) in &report.per_class {
                println!("{label}: {v:.4}");
            }
            println!("mIoU: {:.4}", report.miou);
        }
        Command::Inspect { dump, out, at, size } => {
            let d = load_dump(&dump)?;
            let index = inspect(&d, &out, &at, size)?;
            println!("{} heatmaps written to {}", index.heatmaps.len(), out.display());
        }
        Command::Synth { out, preset, seed, noise, scales, full, layers, timesteps } => {
            let mut p = match preset {
                Preset::Disk => SynthParams::disk(),
                Preset::Rectangle => SynthParams::rectangle(),
                Preset::TwoBlobs => SynthParams::two_blobs(),
                Preset::SparseConcentrated => SynthParams::sparse_concentrated(),
                Preset::BackgroundLeak => SynthParams::background_leak(),
            }
            .with_seed(seed);
            if let Some(n) = noise {
                p.noise = n;
            }
            if let Some(s) = scales {
                p.scales = s.0;
            }
            if full {
                p.mode = SynthMode::Full { layers, timesteps };
            }
            let f = write_fixture(&p, &out)?;
            println!("{}: {} ground-truth pixels", out.display(), f.truth.count_ones());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
