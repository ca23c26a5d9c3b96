use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use privspi_cli::experiment::{run_experiment, ExperimentSpec, Method};
use privspi_cli::imageio::{load_image, save_image};
use privspi_cli::settings::{resolve_config, Scale};
use privspi_cli::{CliError, CliResult, Failure};
use privspi_core::domain::format_boxes;
use privspi_core::metrics::DEFAULT_ALPHA;
use privspi_core::phantom::Phantom;
use privspi_core::{reconstruct_admm_tv, MeasurementBundle};

/// Worker threads for experiment cells and per-block solves.
const WORKERS_ENV: &str = "PRIVSPI_WORKERS";

#[derive(Parser)]
#[command(name = "privspi", version, about = "Privacy-aware adaptive single-pixel imaging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capture, attack and evaluate images under the selected methods.
    Run(RunArgs),
    /// Check that a bundle reproduces from its seed, events and source image.
    Replay {
        #[arg(long)]
        bundle: PathBuf,
        /// The scene the bundle was captured from (`input.png` of a run).
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Reconstruct an image from a bundle alone, as an attacker would.
    Attack {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use only the first N acquisitions (default: all).
        #[arg(long)]
        upto: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        strict: bool,
    },
    /// Print a bundle's header and feedback events as JSON.
    Inspect {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Write seeded piecewise-constant test scenes with `.boxes` files.
    Phantom {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 64)]
        side: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        channels: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Image file or directory; repeatable.
    #[arg(long = "image", required = true)]
    images: Vec<PathBuf>,
    /// Box file for a single image (default: `<image>.boxes`).
    #[arg(long)]
    boxes: Option<PathBuf>,
    /// TOML file whose keys override the scale preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    scale: Scale,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "original,defocus,ours-passthrough,ours-oracle"
    )]
    methods: Vec<Method>,
    /// Feedback bases to sweep, e.g. `1.5,2,4,8,16`.
    #[arg(long, value_delimiter = ',')]
    sweep_k: Vec<f64>,
    /// Sampling rate; several values sweep the rate.
    #[arg(long, value_delimiter = ',')]
    rate: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
    /// Exit with status 4 if any reconstruction hits the iteration cap.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| dispatch(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("privspi: {err}");
            err.exit_code()
        }
    }
}

fn configure_workers() -> CliResult<()> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::config(format!("{WORKERS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new(Failure::Other, e.to_string()))
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Run(args) => run(args),
        Command::Replay {
            bundle,
            image,
            tolerance,
        } => replay(&bundle, &image, tolerance),
        Command::Attack {
            bundle,
            out,
            upto,
            lambda,
            strict,
        } => attack(&bundle, &out, upto, lambda, strict),
        Command::Inspect { bundle } => inspect(&bundle),
        Command::Phantom {
            out,
            count,
            side,
            channels,
            seed,
        } => phantoms(&out, count, side, channels.into(), seed),
    }
}

fn run(args: RunArgs) -> CliResult<()> {
    let mut config = resolve_config(args.scale, args.config.as_deref())?;
    if let [rate] = args.rate[..] {
        config.rate = rate;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    let invocation = serde_json::json!({
        "argv": std::env::args().collect::<Vec<_>>(),
        "scale": args.scale,
        "config_file": args.config.as_ref().map(|p| p.display().to_string()),
    });
    let spec = ExperimentSpec {
        inputs: args.images,
        boxes: args.boxes,
        config,
        methods: args.methods,
        out: args.out,
        sweep_k: args.sweep_k,
        sweep_rate: if args.rate.len() > 1 { args.rate } else { Vec::new() },
        strict: args.strict,
        alpha: args.alpha,
        invocation,
    };
    let outcome = run_experiment(&spec)?;
    for cell in &outcome.cells {
        let nf = cell
            .capture
            .as_ref()
            .map(|c| format!("  N_f {}", c.n_f))
            .unwrap_or_default();
        println!(
            "{:<40} psnr_out {:>8} dB  mse_in {:.3e}{nf}",
            cell.dir,
            format!("{}", cell.eval.psnr_outside),
            cell.eval.mse_inside
        );
    }
    println!("wrote {}", spec.out.join("manifest.json").display());
    if spec.strict && !outcome.non_converged.is_empty() {
        return Err(CliError::new(
            Failure::NonConvergence,
            format!("reconstruction did not converge in: {}", outcome.non_converged.join(", ")),
        ));
    }
    Ok(())
}

fn read_bundle(path: &Path) -> CliResult<MeasurementBundle> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    MeasurementBundle::from_bytes(&bytes).map_err(|e| CliError::from(e).context(path.display()))
}

fn replay(bundle_path: &Path, image_path: &Path, tolerance: f64) -> CliResult<()> {
    let bundle = read_bundle(bundle_path)?;
    let image = load_image(image_path, bundle.channels())?;
    let report = bundle.replay(&image)?;
    println!(
        "{}",
        serde_json::json!({
            "acquisitions": report.acquisitions,
            "records": report.records,
            "max_abs_error": report.max_abs_error,
            "schedule_matches": report.schedule_matches,
        })
    );
    if report.schedule_matches && report.max_abs_error <= tolerance {
        Ok(())
    } else {
        Err(CliError::new(
            Failure::Other,
            format!(
                "bundle does not replay: max error {:.3e}, schedule matches: {}",
                report.max_abs_error, report.schedule_matches
            ),
        ))
    }
}

fn attack(bundle_path: &Path, out: &Path, upto: Option<usize>, lambda: Option<f64>, strict: bool) -> CliResult<()> {
    let bundle = read_bundle(bundle_path)?;
    let mut params = bundle.config().admm_params();
    if let Some(lambda) = lambda {
        params.lambda = lambda;
    }
    let result = reconstruct_admm_tv(&bundle, upto.unwrap_or(bundle.acquisitions()), &params)?;
    save_image(&result.image, out)?;
    println!(
        "{} iterations, converged: {}, data residual {:.3e}",
        result.iterations, result.converged, result.data_residual
    );
    if strict && !result.converged {
        return Err(CliError::new(Failure::NonConvergence, "reconstruction did not converge"));
    }
    Ok(())
}

fn inspect(bundle_path: &Path) -> CliResult<()> {
    let bundle = read_bundle(bundle_path)?;
    let events: Vec<_> = bundle
        .events()
        .iter()
        .map(|e| {
            serde_json::json!({
                "acquisition": e.acquisition,
                "zero_weight_pixels": e.weight.iter().filter(|w| **w == 0.0).count(),
                "mean_weight": e.weight.iter().sum::<f64>() / e.weight.len() as f64,
            })
        })
        .collect();
    let summary = serde_json::json!({
        "config": bundle.config(),
        "acquisitions": bundle.acquisitions(),
        "blocks": bundle.num_blocks(),
        "channels": bundle.channels(),
        "records": bundle.records().len(),
        "events": events,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

fn phantoms(out: &Path, count: u64, side: usize, channels: usize, seed: u64) -> CliResult<()> {
    if channels == 2 {
        return Err(CliError::config("channels must be 1 or 3"));
    }
    if side < 16 {
        return Err(CliError::config("phantoms need a side of at least 16"));
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    for k in 0..count {
        let ph = Phantom::generate(side, channels, seed + k);
        let path = out.join(format!("phantom_{:03}.png", seed + k));
        save_image(&ph.image, &path)?;
        let boxes = path.with_extension("boxes");
        std::fs::write(&boxes, format_boxes(&ph.boxes)).map_err(|e| CliError::io(&boxes, e))?;
        println!("{}", path.display());
    }
    Ok(())
}
