use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use sbca::assp::{self, PainterConfig, PainterError};
use sbca::cyclic::{plan_scales, run_cycles, CyclicError, PipelineConfig, RendererKind};
use sbca::decomposer::DecomposeError;
use sbca::detailcomplete::{CompleteError, Completer, CompleterKind};
use sbca::imagecore::{self, Image, ImageError};
use sbca::mlpnet::MlpError;
use sbca::strokeengine::{composite_stroke, rasterize_silhouette, Stroke, StrokeError};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_REMOTE: u8 = 3;

#[derive(Parser)]
#[command(name = "sbca", version, about = "Stroke-based cyclic image amplifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RendererArg {
    Analytic,
    Implicit,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompleterArg {
    Identity,
    Unsharp,
    Remote,
}

#[derive(Subcommand)]
enum Command {
    /// Upscale a PNG by an arbitrary factor.
    Upscale {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scale: f64,
        /// Explicit per-cycle factors, e.g. 4,3,1.5
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<f64>>,
        #[arg(long, default_value_t = 4.0)]
        smax: f64,
        #[arg(long, value_enum, default_value = "analytic")]
        renderer: RendererArg,
        /// Painter model for the implicit renderer.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "identity")]
        completer: CompleterArg,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value_t = 30.0)]
        timeout_secs: f64,
        #[arg(long, default_value_t = 2.0)]
        unsharp_radius: f64,
        #[arg(long, default_value_t = 1.0)]
        unsharp_amount: f64,
        #[arg(long)]
        context: Option<String>,
        #[arg(long, default_value_t = 20)]
        strokes_per_patch: usize,
        #[arg(long, default_value_t = 16)]
        patch_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-cycle JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Paint onto black canvases instead of mean-color ones.
        #[arg(long)]
        blank_canvas: bool,
        /// Keep the painted image when the remote completer fails.
        #[arg(long)]
        completer_fallback: bool,
    },
    /// Train the implicit stroke painter.
    TrainAssp {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print PSNR and SSIM between two PNGs.
    Eval {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Render a single stroke to a PNG.
    RenderStroke {
        /// x0,y0,x1,y1,x2,y2,w0,w1,r,g,b
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        params: Vec<f64>,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "analytic")]
        renderer: RendererArg,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn image_code(e: &ImageError) -> u8 {
    match e {
        ImageError::NotFound(_)
        | ImageError::Io { .. }
        | ImageError::MalformedPng(_)
        | ImageError::UnsupportedBitDepth(_)
        | ImageError::UnsupportedColorType(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn mlp_code(e: &MlpError) -> u8 {
    match e {
        MlpError::Io(_) | MlpError::BadMagic | MlpError::Truncated(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn painter_code(e: &PainterError) -> u8 {
    match e {
        PainterError::Model(m) => mlp_code(m),
        PainterError::Stroke(StrokeError::Image(i)) => image_code(i),
        _ => EXIT_USAGE,
    }
}

impl From<ImageError> for Failure {
    fn from(e: ImageError) -> Self {
        Self {
            code: image_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<PainterError> for Failure {
    fn from(e: PainterError) -> Self {
        Self {
            code: painter_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<StrokeError> for Failure {
    fn from(e: StrokeError) -> Self {
        PainterError::from(e).into()
    }
}

impl From<CyclicError> for Failure {
    fn from(e: CyclicError) -> Self {
        let code = match &e {
            CyclicError::Complete(c) if c.is_remote() => EXIT_REMOTE,
            CyclicError::Image(i) | CyclicError::Decompose(DecomposeError::Image(i)) => image_code(i),
            CyclicError::Painter(p) => painter_code(p),
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn load_model(path: Option<&PathBuf>) -> Result<Option<Arc<sbca::mlpnet::MlpModel>>, Failure> {
    match path {
        Some(p) => Ok(Some(Arc::new(assp::load_painter(p).map_err(|e| Failure {
            code: painter_code(&e),
            message: format!("{}: {e}", p.display()),
        })?))),
        None => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Upscale {
            input,
            out,
            scale,
            factors,
            smax,
            renderer,
            model,
            completer,
            endpoint,
            timeout_secs,
            unsharp_radius,
            unsharp_amount,
            context,
            strokes_per_patch,
            patch_size,
            seed,
            report,
            blank_canvas,
            completer_fallback,
        } => {
            let kind = match completer {
                CompleterArg::Identity => CompleterKind::Identity,
                CompleterArg::Unsharp => CompleterKind::Unsharp {
                    radius: unsharp_radius,
                    amount: unsharp_amount,
                },
                CompleterArg::Remote => {
                    let endpoint = endpoint.ok_or_else(|| Failure::usage("--completer remote needs --endpoint"))?;
                    if !(timeout_secs.is_finite() && timeout_secs > 0.0) {
                        return Err(Failure::usage("--timeout-secs must be positive"));
                    }
                    CompleterKind::Remote {
                        endpoint,
                        timeout: Duration::from_secs_f64(timeout_secs),
                    }
                }
            };
            kind.validate().map_err(|e: CompleteError| Failure::usage(e.to_string()))?;
            let renderer = match renderer {
                RendererArg::Analytic => RendererKind::Analytic,
                RendererArg::Implicit => RendererKind::Implicit,
            };
            if renderer == RendererKind::Implicit && model.is_none() {
                return Err(Failure::usage("--renderer implicit needs --model"));
            }
            let cfg = PipelineConfig {
                strokes_per_patch,
                patch_size,
                renderer,
                model: load_model(model.as_ref())?,
                completer: Completer {
                    kind,
                    fallback: completer_fallback,
                },
                seed,
                blank_canvas,
                context,
                ..PipelineConfig::default()
            };
            let plan = plan_scales(scale, smax, factors.as_deref())?;
            let image = imagecore::load_png(&input)?;
            let (result, cycle_report) = run_cycles(&image, &plan, &cfg)?;
            imagecore::save_png(&result, &out)?;
            if let Some(path) = report {
                std::fs::write(&path, cycle_report.to_json()).map_err(|e| Failure {
                    code: EXIT_IO,
                    message: format!("{}: {e}", path.display()),
                })?;
            }
            let (h, w) = result.dims();
            eprintln!("wrote {} ({h}x{w})", out.display());
            Ok(())
        }
        Command::TrainAssp { out, steps, seed } => {
            let mut config = PainterConfig {
                seed,
                ..PainterConfig::default()
            };
            if let Some(n) = steps {
                config.steps = n;
            }
            let every = (config.steps / 20).max(1);
            let outcome = assp::train_painter_with(&config, |step, loss| {
                if step % every == 0 || step + 1 == config.steps {
                    eprintln!("step {:>6}  loss {loss:.5}", step + 1);
                }
            })?;
            assp::save_painter(&outcome.model, &out)?;
            eprintln!("saved {}", out.display());
            Ok(())
        }
        Command::Eval { a, b } => {
            let ia = imagecore::load_png(&a)?;
            let ib = imagecore::load_png(&b)?;
            let p = imagecore::psnr(&ia, &ib, 1.0)?;
            let s = imagecore::ssim(&ia, &ib)?;
            if p.is_infinite() {
                println!("PSNR=inf");
            } else {
                println!("PSNR={p:.6}");
            }
            println!("SSIM={s:.6}");
            Ok(())
        }
        Command::RenderStroke {
            params,
            height,
            width,
            out,
            renderer,
            model,
        } => {
            let p: [f64; 11] = params
                .try_into()
                .map_err(|_| Failure::usage("--params needs exactly 11 values"))?;
            let stroke = Stroke::from_params(p);
            let silhouette = match renderer {
                RendererArg::Analytic => rasterize_silhouette(&stroke.shape, height, width)?,
                RendererArg::Implicit => {
                    let m = load_model(model.as_ref())?.ok_or_else(|| Failure::usage("--renderer implicit needs --model"))?;
                    assp::render_stroke(&m, &stroke, height, width)?.0
                }
            };
            let image = composite_stroke(&Image::black(height, width), &silhouette, stroke.color)?;
            imagecore::save_png(&image, &out)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
