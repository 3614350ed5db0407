//! `pcstruct`: phase congruency maps, edge panels, structural and depth
//! losses, and evaluation metrics from the command line.

mod commands;
mod config;
mod error;
mod fixtures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcstruct::kvconfig::fmt_real;
use pcstruct::KvConfig;

use commands::{Direction, MetricKind};
use config::Params;
use error::{CliError, CliResult};
use output::OutDir;

const AFTER_HELP: &str = "\
Settings are layered: built-in defaults, then --config, then flags. The
resolved settings are printed to stderr and saved as run.cfg in the output
directory; passing that file back with --config repeats the run.

Environment:
  PCSTRUCT_THREADS  worker threads for the parallel core (default: all cores).
                    Outputs do not depend on it.

Exit codes: 0 success, 1 usage or argument error, 2 I/O or parse error,
3 numeric error (degenerate or out-of-domain data).";

#[derive(Parser)]
#[command(name = "pcstruct", version, about, after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Settings file of `key = value` lines (as written to run.cfg).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Number of filter scales.
    #[arg(long, global = true)]
    scales: Option<usize>,
    /// Number of filter orientations.
    #[arg(long, global = true)]
    orients: Option<usize>,
    /// Wavelength of the finest filter, in pixels.
    #[arg(long, global = true)]
    min_wavelength: Option<f64>,
    /// Wavelength ratio between successive scales.
    #[arg(long, global = true)]
    mult: Option<f64>,
    /// Radial bandwidth of the log-Gabor filters.
    #[arg(long, global = true)]
    sigma_on_f: Option<f64>,
    /// Orientation spacing over angular sigma.
    #[arg(long, global = true)]
    d_theta_sigma: Option<f64>,
    /// Phase congruency denominator offset.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Phase congruency similarity stabilizer.
    #[arg(long, global = true)]
    t1: Option<f64>,
    /// Gradient similarity stabilizer (gradients on a 0-255 scale).
    #[arg(long, global = true)]
    t2: Option<f64>,
    /// Adversarial loss weight.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Cycle and extended-cycle loss weight.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Depth identity and phase congruency loss weight.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Normal consistency loss weight.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// First epoch at which the phase congruency term counts.
    #[arg(long, global = true)]
    pc_start_epoch: Option<u64>,
    /// Pixel step used as the z component of surface normals.
    #[arg(long, global = true)]
    step_scale: Option<f64>,
    /// Random seed (used by `fixture`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fit a least-squares scale to each depth prediction before scoring.
    #[arg(long, global = true)]
    align_scale: bool,
    /// Canny smoothing sigma.
    #[arg(long, global = true)]
    canny_sigma: Option<f64>,
    /// Canny low hysteresis threshold (fraction of the peak).
    #[arg(long, global = true)]
    canny_low: Option<f64>,
    /// Canny high hysteresis threshold (fraction of the peak).
    #[arg(long, global = true)]
    canny_high: Option<f64>,
    /// Subtract a Rayleigh noise floor (mean + K sigma) from the local energy.
    #[arg(long, global = true, value_name = "K")]
    noise_k: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Phase congruency map of an image, with summary statistics.
    PcMap {
        image: PathBuf,
        /// Also write one local-energy map per orientation.
        #[arg(long)]
        energies: bool,
        /// Bit depth of the written maps.
        #[arg(long, value_parser = ["8", "16"])]
        bits: Option<String>,
    },
    /// Y channel, phase congruency and five classical edge maps.
    EdgeCompare { image: PathBuf },
    /// Phase congruency loss and FSIM between a generated and a real image.
    PcLoss { gen: PathBuf, real: PathBuf },
    /// Normal consistency loss between two depth maps.
    NormalLoss {
        sim: PathBuf,
        rec: PathBuf,
        /// Write the gradient with respect to the second map as CSV.
        #[arg(long, value_name = "PATH")]
        grad_out: Option<PathBuf>,
    },
    /// Convert between 16-bit depth codes and inverse depth.
    DepthInvert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Direction::Invert)]
        direction: Direction,
    },
    /// Depth values along a line, plus quantization statistics of the map.
    Profile {
        depth: PathBuf,
        /// `row:R` or `seg:x0,y0,x1,y1`.
        #[arg(long)]
        line: String,
    },
    /// Score every prediction/ground-truth pair listed in a manifest.
    Metrics {
        manifest: PathBuf,
        #[arg(long, value_enum)]
        kind: MetricKind,
    },
    /// Weighted training objective for rows of loss components.
    TotalLoss {
        components: PathBuf,
        #[arg(long)]
        epoch: u64,
    },
    /// Write the synthetic test inputs.
    Fixture,
}

impl Global {
    fn overrides(&self) -> KvConfig {
        let mut kv = KvConfig::new();
        let mut real = |key: &str, v: Option<f64>| {
            if let Some(v) = v {
                kv.set(key, fmt_real(v));
            }
        };
        real("min_wavelength", self.min_wavelength);
        real("mult", self.mult);
        real("sigma_on_f", self.sigma_on_f);
        real("d_theta_sigma", self.d_theta_sigma);
        real("epsilon", self.epsilon);
        real("t1", self.t1);
        real("t2", self.t2);
        real("alpha", self.alpha);
        real("beta", self.beta);
        real("gamma", self.gamma);
        real("lambda", self.lambda);
        real("step_scale", self.step_scale);
        real("canny_sigma", self.canny_sigma);
        real("canny_low", self.canny_low);
        real("canny_high", self.canny_high);
        real("noise_k", self.noise_k);
        if let Some(v) = self.scales {
            kv.set("scales", v);
        }
        if let Some(v) = self.orients {
            kv.set("orientations", v);
        }
        if let Some(v) = self.pc_start_epoch {
            kv.set("pc_start_epoch", v);
        }
        if let Some(v) = self.seed {
            kv.set("seed", v);
        }
        if self.align_scale {
            kv.set("align_scale", true);
        }
        kv
    }
}

fn path_text(p: &std::path::Path) -> String {
    p.display().to_string()
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PcMap { .. } => "pc-map",
            Command::EdgeCompare { .. } => "edge-compare",
            Command::PcLoss { .. } => "pc-loss",
            Command::NormalLoss { .. } => "normal-loss",
            Command::DepthInvert { .. } => "depth-invert",
            Command::Profile { .. } => "profile",
            Command::Metrics { .. } => "metrics",
            Command::TotalLoss { .. } => "total-loss",
            Command::Fixture => "fixture",
        }
    }

    /// The invocation itself, recorded under `run.*` in the echo.
    fn describe(&self) -> Vec<(&'static str, String)> {
        let mut d = vec![("command", self.name().to_string())];
        match self {
            Command::PcMap { image, energies, .. } => {
                d.push(("image", path_text(image)));
                d.push(("energies", energies.to_string()));
            }
            Command::EdgeCompare { image } => d.push(("image", path_text(image))),
            Command::PcLoss { gen, real } => {
                d.push(("gen", path_text(gen)));
                d.push(("real", path_text(real)));
            }
            Command::NormalLoss { sim, rec, grad_out } => {
                d.push(("sim", path_text(sim)));
                d.push(("rec", path_text(rec)));
                d.push(("grad_out", grad_out.as_deref().map_or("none".into(), path_text)));
            }
            Command::DepthInvert { input, output, direction } => {
                d.push(("input", path_text(input)));
                d.push(("output", path_text(output)));
                d.push(("direction", format!("{direction:?}").to_lowercase()));
            }
            Command::Profile { depth, line } => {
                d.push(("depth", path_text(depth)));
                d.push(("line", line.clone()));
            }
            Command::Metrics { manifest, kind } => {
                d.push(("manifest", path_text(manifest)));
                d.push(("kind", format!("{kind:?}").to_lowercase()));
            }
            Command::TotalLoss { components, epoch } => {
                d.push(("components", path_text(components)));
                d.push(("epoch", epoch.to_string()));
            }
            Command::Fixture => {}
        }
        d
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(text) = std::env::var("PCSTRUCT_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("PCSTRUCT_THREADS must be a positive integer, got {text:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot size thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> CliResult<String> {
    configure_threads()?;
    let mut overrides = cli.global.overrides();
    if let Command::PcMap { bits: Some(b), .. } = &cli.command {
        overrides.set("pc_bits", b);
    }
    let params = Params::resolve(cli.global.config.as_deref(), &overrides)?;
    let echo = config::render(&params, &cli.command.describe());
    eprint!("{echo}");
    let out = OutDir::create(&cli.global.out)?;
    out.write_text("run.cfg", &echo)?;

    match &cli.command {
        Command::PcMap { image, energies, .. } => commands::pc_map(&params, &out, image, *energies),
        Command::EdgeCompare { image } => commands::edge_compare(&params, &out, image),
        Command::PcLoss { gen, real } => commands::pc_loss(&params, &out, gen, real),
        Command::NormalLoss { sim, rec, grad_out } => {
            commands::normal_loss_cmd(&params, &out, sim, rec, grad_out.as_deref())
        }
        Command::DepthInvert { input, output, direction } => commands::depth_invert(input, output, *direction),
        Command::Profile { depth, line } => commands::profile(&out, depth, line),
        Command::Metrics { manifest, kind } => commands::metrics(&params, &out, manifest, *kind),
        Command::TotalLoss { components, epoch } => commands::total_loss_cmd(&params, &out, components, *epoch),
        Command::Fixture => commands::fixture(&params, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pcstruct: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
