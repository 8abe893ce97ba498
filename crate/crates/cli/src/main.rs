use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use piecewise_gsp::config::PipelineConfig;
use piecewise_gsp::experiment::{graph_csv, simulate};
use piecewise_gsp::pipeline::{
    cluster, evaluate_pipeline, extract, fit, forecast_csv, load_inputs, predict_graph, read_json, sidecar_path,
    write_atomic, write_json, AcArtifact, ClusterArtifact, Inputs, ModelArtifact,
};
use piecewise_gsp::{Error, Result};

/// Piecewise stationary modeling of graph processes.
#[derive(Parser)]
#[command(name = "pgsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Data {
    /// Edge list CSV with `src,dst,weight` header.
    #[arg(long)]
    graph: PathBuf,
    /// Series CSV, one `label,v0,v1,...` row per vertex.
    #[arg(long)]
    series: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Nested-subgraph stationarity experiment on an Erdős–Rényi graph.
    /// `--out` is a directory receiving gamma.csv, eigenvalues.csv,
    /// graph.csv and report.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        #[arg(long, default_value_t = 0.06)]
        prob: f64,
        /// Maximum number of one-hop expansions.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Extracts active components to a JSON file.
    Extract {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: Data,
    },
    /// Clusters active components; also writes `<out>.gamma_hist.csv` and `<out>.merges.csv`.
    Cluster {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        acs: PathBuf,
    },
    /// Fits per-cluster forecasting models on the training split.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        clusters: PathBuf,
    },
    /// Forecasts past the end of the series; writes a series CSV.
    Predict {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        models: PathBuf,
        /// Steps ahead; defaults to the largest configured horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Scores JCM-AR, JCM-TAR and persistence on the test split; also writes `<out>.metrics.csv`.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        clusters: PathBuf,
    },
}

/// Io errors from the library do not carry the path, so missing inputs are
/// reported here.
fn require(path: &Path) -> Result<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::InvalidParameter(format!("cannot read input file {}", path.display())))
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::from_path(require(path)?)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load(data: &Data, cfg: &PipelineConfig) -> Result<Inputs> {
    let inputs = load_inputs(require(&data.graph)?, require(&data.series)?, cfg.directed)?;
    if inputs.imputed > 0 {
        eprintln!("imputed {} missing samples", inputs.imputed);
    }
    Ok(inputs)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { common, nodes, prob, depth } => {
            let cfg = load_config(&common)?;
            let (g, report) = simulate(nodes, prob, cfg.seed, depth)?;
            let dir = &common.out;
            std::fs::create_dir_all(dir)?;
            write_atomic(&dir.join("gamma.csv"), report.gamma_csv().as_bytes())?;
            write_atomic(&dir.join("eigenvalues.csv"), report.eigenvalue_csv().as_bytes())?;
            write_atomic(&dir.join("graph.csv"), graph_csv(&g).as_bytes())?;
            write_json(&dir.join("report.json"), &report)?;
            let min = report.steps.iter().map(|s| s.gamma_stationary).fold(f64::INFINITY, f64::min);
            eprintln!("{} expansion rows, start vertex {}, min stationary gamma {min:.4}", report.steps.len(), report.start_vertex);
            if !report.superstationary_psd {
                eprintln!("note: 0.5A + 2I is not positive semidefinite for this graph (min adjacency eigenvalue {:.4})", report.min_adjacency_eigenvalue);
            }
        }
        Command::Extract { common, data } => {
            let cfg = load_config(&common)?;
            let inputs = load(&data, &cfg)?;
            let acs = extract(&inputs.graph, &inputs.series, &cfg)?;
            write_json(&common.out, &acs)?;
            eprintln!("{} active components kept, {} filtered below size {}", acs.components.len(), acs.filtered, cfg.min_ac_size);
        }
        Command::Cluster { common, data, acs } => {
            let cfg = load_config(&common)?;
            let inputs = load(&data, &cfg)?;
            let acs: AcArtifact = read_json(require(&acs)?)?;
            let out = cluster(&inputs.graph, &inputs.series, &acs, &cfg)?;
            write_json(&common.out, &out.artifact)?;
            write_atomic(&sidecar_path(&common.out, "gamma_hist"), out.gamma_histogram.as_bytes())?;
            write_atomic(&sidecar_path(&common.out, "merges"), out.merge_log.as_bytes())?;
            eprintln!(
                "{} clusters from {} components ({} merges accepted, {} rejected), {} vertices unassigned",
                out.artifact.clusters.len(),
                out.artifact.input_components,
                out.artifact.merges_accepted,
                out.artifact.merges_rejected,
                out.artifact.unassigned.len()
            );
        }
        Command::Fit { common, data, clusters } => {
            let cfg = load_config(&common)?;
            let inputs = load(&data, &cfg)?;
            let clusters: ClusterArtifact = read_json(require(&clusters)?)?;
            let models = fit(&inputs.graph, &inputs.series, &clusters, &cfg)?;
            write_json(&common.out, &models)?;
            eprintln!("fitted {} {} cluster models on {} samples", models.clusters.len(), models.model.name(), models.train_end);
        }
        Command::Predict { common, data, models, horizon } => {
            let cfg = load_config(&common)?;
            let inputs = load(&data, &cfg)?;
            let models: ModelArtifact = read_json(require(&models)?)?;
            let horizon = horizon.unwrap_or_else(|| cfg.max_horizon());
            let forecast = predict_graph(&inputs.graph, &inputs.series, &models, horizon)?;
            write_atomic(&common.out, &forecast_csv(&inputs.graph, &forecast)?)?;
            eprintln!("wrote {horizon}-step forecast for {} vertices", forecast.vertices());
        }
        Command::Evaluate { common, data, clusters } => {
            let cfg = load_config(&common)?;
            let inputs = load(&data, &cfg)?;
            let clusters: ClusterArtifact = read_json(require(&clusters)?)?;
            let report = evaluate_pipeline(&inputs.graph, &inputs.series, &clusters, &cfg)?;
            write_json(&common.out, &report)?;
            write_atomic(&sidecar_path(&common.out, "metrics"), report.to_csv().as_bytes())?;
            for r in &report.rows {
                eprintln!("{:<12} h={:<3} MAE {:.4}  RMSE {:.4}  MAPE {:.3}%", r.model, r.horizon, r.mae, r.rmse, r.mape);
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_validation() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
