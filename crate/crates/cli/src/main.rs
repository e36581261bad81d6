//! `vem-sf`: run experiments and export meshes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vemsf::experiment::{run_experiment, write_report, ExperimentConfig, ExperimentKind, ReportFormat};
use vemsf::mesh::{generate_mesh, write_mesh_json, MeshFamily, MeshParams};
use vemsf::par::configure_threads;
use vemsf::{Method, VemError};

#[derive(Parser, Debug)]
#[command(name = "vem-sf", version, about = "Stabilization-free virtual element experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write CSV/JSON reports.
    Run(RunArgs),
    /// Generate a mesh and write it as JSON.
    Mesh(MeshArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON config with the same keys as these flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    /// Comma-separated list of SFNCVEM, SFCVEM, NCVEM, CVEM.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<Method>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    mesh: Option<MeshFamily>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "VEMSF_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    quad_exactness: Option<usize>,
    #[arg(long)]
    zero_threshold: Option<f64>,
    /// Refuse runs whose estimated DoF count exceeds this.
    #[arg(long)]
    max_dofs: Option<usize>,
    /// Subdivisions per side on the coarsest level.
    #[arg(long)]
    base_divisions: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "csv,json")]
    format: Vec<String>,
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[arg(long)]
    family: MeshFamily,
    /// Subdivisions per side.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long)]
    hx: Option<f64>,
    #[arg(long)]
    hy: Option<f64>,
    /// Hexagon index for hexagon-Hi.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_format(s: &str) -> Result<ReportFormat, VemError> {
    match s.to_ascii_lowercase().as_str() {
        "csv" => Ok(ReportFormat::Csv),
        "json" => Ok(ReportFormat::Json),
        _ => Err(VemError::Unsupported(format!("unknown report format `{s}`"))),
    }
}

fn config_from(args: &RunArgs) -> Result<ExperimentConfig, VemError> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.experiment {
        cfg.experiment = v;
    }
    if let Some(v) = &args.method {
        cfg.method = v.clone();
    }
    if let Some(v) = &args.k {
        cfg.k = v.clone();
    }
    if let Some(v) = args.mesh {
        cfg.mesh = v;
    }
    if let Some(v) = args.levels {
        cfg.levels = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    if args.quad_exactness.is_some() {
        cfg.quad_exactness = args.quad_exactness;
    }
    if let Some(v) = args.zero_threshold {
        cfg.zero_threshold = v;
    }
    if let Some(v) = args.max_dofs {
        cfg.max_dofs = v;
    }
    if let Some(v) = args.base_divisions {
        cfg.base_divisions = v;
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), VemError> {
    let cfg = config_from(&args)?;
    cfg.validate()?;
    let formats = args.format.iter().map(|s| parse_format(s)).collect::<Result<Vec<_>, _>>()?;
    if let Some(n) = cfg.threads {
        if !configure_threads(n) && n > 1 {
            eprintln!("warning: could not size the thread pool to {n}");
        }
    }
    let report = run_experiment(&cfg)?;
    for path in write_report(&report, &cfg.out, &formats)? {
        println!("wrote {}", path.display());
    }
    for fit in &report.fits {
        let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
        println!(
            "{} k={}: fitted order l2 {}, grad {}",
            fit.method,
            fit.k,
            show(fit.order_l2),
            show(fit.order_grad)
        );
    }
    for note in &report.notes {
        println!("{note}");
    }
    Ok(())
}

fn mesh(args: MeshArgs) -> Result<(), VemError> {
    let mut params = MeshParams::divisions(args.n);
    if let Some(hx) = args.hx {
        params.hx = hx;
    }
    if let Some(hy) = args.hy {
        params.hy = hy;
    }
    params.index = args.index;
    let m = generate_mesh(args.family, params)?;
    write_mesh_json(&m, &args.out)?;
    println!(
        "wrote {} ({} cells, {} vertices, {} edges)",
        args.out.display(),
        m.num_cells(),
        m.num_vertices(),
        m.num_edges()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Mesh(args) => mesh(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                VemError::Refused(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
