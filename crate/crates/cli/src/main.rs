use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ctxplace_core::arrangement::{find_embeddings, rearrange_on_update};
use ctxplace_core::content::{derive_matching_graph, parse_content_graph, validate_content_graph, ContentGraph, Severity};
use ctxplace_core::eval::{eval_obbs, AnnotatedObject, GroundTruthAnnotation, DEFAULT_IOU_THRESHOLDS};
use ctxplace_core::pipeline::{run_pipeline, ExportOptions, Mode, PipelineConfig};
use ctxplace_core::scene_graph::{export_graph, parse_structured, ExportFormat, SceneGraph};
use ctxplace_core::stream::{write_frames, StreamReader};
use ctxplace_core::synth::{self, SampleOptions};

#[derive(Parser)]
#[command(name = "ctxplace", version, about = "Scene graphs and context-aware content placement from labeled point streams")]
struct Cli {
    /// JSON config file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct LoopArgs {
    /// Frames between graph rebuilds.
    #[arg(long)]
    rebuild_every: Option<u64>,
    #[arg(long)]
    limit_embeddings: Option<usize>,
    /// Directory for one DOT file per graph rebuild.
    #[arg(long, value_name = "DIR")]
    export_dot: Option<PathBuf>,
    /// Write the final instance boxes in annotation format.
    #[arg(long, value_name = "FILE")]
    export_obbs: Option<PathBuf>,
    /// Integrate and process strictly one after the other.
    #[arg(long)]
    seq: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Structured,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Dot => ExportFormat::Dot,
            Format::Structured => ExportFormat::Structured,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthScene {
    ContextA,
    ContextAViolated,
    ContextB,
    LateChair,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a stream against a content graph and print the event log.
    Run {
        stream: PathBuf,
        content: PathBuf,
        #[command(flatten)]
        loop_args: LoopArgs,
        /// Event log destination (default stdout).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Replay a stream and export the final scene graph.
    BuildGraph {
        stream: PathBuf,
        #[command(flatten)]
        loop_args: LoopArgs,
        #[arg(long, value_enum, default_value = "structured")]
        format: Format,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Match a content graph against a structured scene graph.
    Match {
        graph: PathBuf,
        content: PathBuf,
        #[arg(long)]
        limit_embeddings: Option<usize>,
    },
    /// Score predicted boxes against ground truth annotations.
    Eval { predicted: PathBuf, truth: PathBuf },
    /// Convert a structured scene graph to another format.
    Export {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic fixture stream.
    #[command(hide = true)]
    Synth {
        #[arg(value_enum)]
        scene: SynthScene,
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>, args: &LoopArgs) -> Result<PipelineConfig, String> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::from_json(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(n) = args.rebuild_every {
        cfg.rebuild_every = n;
    }
    if let Some(n) = args.limit_embeddings {
        cfg.limit_embeddings = n;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn load_content(path: &Path, cfg: &PipelineConfig) -> Result<ContentGraph, String> {
    let g = parse_content_graph(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut fatal = false;
    for d in validate_content_graph(&g, &cfg.abstraction()) {
        eprintln!("{}: {:?}: {}: {}", path.display(), d.severity, d.node, d.message);
        fatal |= d.severity == Severity::Error;
    }
    if fatal {
        return Err(format!("{}: content graph failed validation", path.display()));
    }
    Ok(g)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, String> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| format!("{}: {e}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_all(path: Option<&Path>, text: &str) -> Result<(), String> {
    let mut w = output(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| format!("{}: {e}", path.map_or("stdout".into(), |p| p.display().to_string())))
}

fn replay(
    stream: &Path,
    content: Option<&ContentGraph>,
    cfg: &PipelineConfig,
    args: &LoopArgs,
    log: impl Write,
) -> Result<Option<SceneGraph>, String> {
    let file = File::open(stream).map_err(|e| format!("{}: {e}", stream.display()))?;
    let exports = ExportOptions {
        dot_dir: args.export_dot.clone(),
        obbs_path: args.export_obbs.clone(),
        scene_name: stream
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let mode = if args.seq { Mode::Sequential } else { Mode::Pipelined };
    let out = run_pipeline(StreamReader::new(BufReader::new(file)), content, cfg, &exports, mode, log)
        .map_err(|e| format!("{}: {e}", stream.display()))?;
    log::info!("{} frames, {} rebuilds", out.frames, out.rebuilds);
    Ok(out.graph)
}

fn load_graph(path: &Path) -> Result<SceneGraph, String> {
    parse_structured(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_annotation(path: &Path) -> Result<GroundTruthAnnotation, String> {
    let ann: GroundTruthAnnotation =
        serde_json::from_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    ann.validate().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(ann)
}

fn execute(cli: Cli) -> Result<(), String> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Run {
            stream,
            content,
            loop_args,
            out,
        } => {
            let cfg = load_config(config, &loop_args)?;
            let content = load_content(&content, &cfg)?;
            let log = output(out.as_deref())?;
            replay(&stream, Some(&content), &cfg, &loop_args, log)?;
        }
        Command::BuildGraph {
            stream,
            loop_args,
            format,
            out,
        } => {
            let cfg = load_config(config, &loop_args)?;
            let graph = replay(&stream, None, &cfg, &loop_args, io::sink())?.unwrap_or_default();
            write_all(out.as_deref(), &export_graph(&graph, format.into()))?;
        }
        Command::Match {
            graph,
            content,
            limit_embeddings,
        } => {
            let cfg = load_config(
                config,
                &LoopArgs {
                    limit_embeddings,
                    ..Default::default()
                },
            )?;
            let g = load_graph(&graph)?;
            let content = load_content(&content, &cfg)?;
            let q = derive_matching_graph(&content).map_err(|e| e.to_string())?;
            let embeddings = find_embeddings(&g, &q, cfg.limit_embeddings);
            let placements = rearrange_on_update(None, &g, &content, &cfg.arrangement())
                .map(|a| a.placements)
                .unwrap_or_default();
            let doc = serde_json::json!({ "embeddings": embeddings, "placements": placements });
            write_all(None, &format!("{}\n", serde_json::to_string_pretty(&doc).expect("json")))?;
        }
        Command::Eval { predicted, truth } => {
            let predicted: Vec<AnnotatedObject> = load_annotation(&predicted)?.objects;
            let truth = load_annotation(&truth)?;
            let report = eval_obbs(&predicted, &truth, &DEFAULT_IOU_THRESHOLDS);
            write_all(None, &format!("{}\n", serde_json::to_string_pretty(&report).expect("json")))?;
        }
        Command::Export { graph, format, out } => {
            let g = load_graph(&graph)?;
            write_all(out.as_deref(), &export_graph(&g, format.into()))?;
        }
        Command::Synth { scene, out, seed } => {
            let scene = match scene {
                SynthScene::ContextA => synth::context_a_scene(),
                SynthScene::ContextAViolated => synth::context_a_violated_scene(),
                SynthScene::ContextB => synth::context_b_scene(),
                SynthScene::LateChair => synth::late_chair_scene(),
            };
            let frames = scene.stream(seed, &SampleOptions::default());
            let w = output(Some(&out))?;
            write_frames(w, &frames).map_err(|e| format!("{}: {e}", out.display()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
