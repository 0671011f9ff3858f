//! Command-line front end. Exit codes: 0 success, 1 usage or configuration
//! error, 2 data error, 3 numeric-check failure.

mod manifest;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgAction, Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ihgnn_core::fixtures;
use ihgnn_core::graph::{
    dataset_homophily, dataset_stats, homophily_histogram, one_hot_features, Dataset, Population,
};
use ihgnn_core::harness::{
    ablation_suite, cross_validate, layer_sweep, make_folds, write_cv_results_csv,
    write_summary_csv, SummaryRow,
};
use ihgnn_core::model::{BatchItem, IhgnnConfig, IhgnnModel, Variant};
use ihgnn_core::nn::grad_check;
use ihgnn_core::{tud, wl, Error as CoreError};

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "ihgnn",
    version,
    about = "Graph classification toolkit: homophily analytics, 1-WL testing, gradient checks, and cross-validated training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Root directory holding TUDataset folders (or the files directly)
    #[arg(long, env = "IHGNN_DATASET_DIR")]
    dataset_dir: PathBuf,
    /// Dataset name: folder name and file prefix
    #[arg(long)]
    dataset: String,
}

#[derive(Args)]
struct ModelArgs {
    /// Number of layers K
    #[arg(long, default_value_t = 3)]
    layers: usize,
    /// Batch size
    #[arg(long, default_value_t = 32)]
    batch: usize,
    /// Training epochs per fold
    #[arg(long, default_value_t = 350)]
    epochs: usize,
    /// Classifier dropout rate
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    /// Model variant: full, no_integration, no_separation, no_intermediate,
    /// sum_readout
    #[arg(long, default_value = "full")]
    variant: String,
    /// Seed for folds, initialization, shuffling, and dropout
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Base learning rate (halved every 50 epochs)
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Stratify folds by class
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    stratified: bool,
    /// Value-ordered reductions: logits become bit-identical under node
    /// permutations, at some cost
    #[arg(long, default_value_t = false)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset statistics and both homophily summaries as one CSV row
    Stats {
        #[command(flatten)]
        data: DataArgs,
        /// Also write the CSV to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram of per-node homophily ratios as CSV plus an SVG bar chart
    Homophily {
        #[command(flatten)]
        data: DataArgs,
        /// Number of histogram bins
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Output directory for homophily.csv and homophily.svg
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Ten-fold cross-validation of one configuration
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Output directory for cv_results.csv, summary.csv, manifest.txt
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Cross-validate the full design and every ablation variant
    Ablate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// One cross-validation per layer count
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Layer counts to sweep, comma separated
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        layer_values: Vec<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// 1-WL isomorphism test; compares the bundled six-node pair unless a
    /// dataset and two graph indices are given
    WlTest {
        /// Refinement round budget
        #[arg(long, default_value_t = 20)]
        max_rounds: usize,
        #[arg(long, env = "IHGNN_DATASET_DIR", requires = "dataset")]
        dataset_dir: Option<PathBuf>,
        #[arg(long, requires = "graphs")]
        dataset: Option<String>,
        /// Two graph indices, comma separated
        #[arg(long, value_delimiter = ',')]
        graphs: Option<Vec<usize>>,
    },
    /// Finite-difference check of the full model gradients; exits 3 when
    /// the max relative error exceeds the tolerance
    Gradcheck {
        /// Nodes of the random test graph
        #[arg(long, default_value_t = 5)]
        nodes: usize,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Maximum admissible relative error
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value = "full")]
        variant: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Failure {
        Failure { code: 3, message: message.into() }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Failure {
        Failure {
            code: if e.is_data_error() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure { code: 2, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Stats { data, out } => cmd_stats(&data, out.as_deref()),
        Command::Homophily { data, bins, out } => cmd_homophily(&data, bins, &out),
        Command::Train { data, model, out } => cmd_train(&data, &model, &out),
        Command::Ablate { data, model, out } => cmd_ablate(&data, &model, &out),
        Command::Sweep { data, model, layer_values, out } => {
            cmd_sweep(&data, &model, &layer_values, &out)
        }
        Command::WlTest { max_rounds, dataset_dir, dataset, graphs } => {
            cmd_wl_test(max_rounds, dataset_dir, dataset, graphs)
        }
        Command::Gradcheck { nodes, layers, seed, tol, variant } => {
            cmd_gradcheck(nodes, layers, seed, tol, &variant)
        }
    }
}

/// Accepts either `<dir>/<name>/<name>_A.txt` or `<dir>/<name>_A.txt`.
fn load(data: &DataArgs) -> Result<Dataset, Failure> {
    let nested = data.dataset_dir.join(&data.dataset);
    let dir = if nested
        .join(format!("{}_A.txt", data.dataset))
        .exists()
    {
        nested
    } else {
        data.dataset_dir.clone()
    };
    let d = tud::load_dataset(&dir, &data.dataset)?;
    for warning in tud::validate(&d) {
        log::warn!("{}: {warning}", data.dataset);
    }
    Ok(d)
}

fn stats_csv(d: &Dataset) -> Result<String, Failure> {
    let s = dataset_stats(d)?;
    let by_node = dataset_homophily(d, Population::PerNode)?;
    let by_graph = dataset_homophily(d, Population::PerGraph)?;
    let mut out = String::from(
        "dataset,size,num_classes,avg_nodes,avg_edges,num_node_labels,\
         beta_per_node_mean,beta_per_node_std,beta_per_graph_mean,beta_per_graph_std\n",
    );
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        d.name(),
        s.size,
        s.num_classes,
        s.avg_nodes,
        s.avg_edges,
        s.num_node_labels,
        by_node.mean,
        by_node.std,
        by_graph.mean,
        by_graph.std,
    ));
    Ok(out)
}

fn cmd_stats(data: &DataArgs, out: Option<&Path>) -> Result<(), Failure> {
    let d = load(data)?;
    let csv = stats_csv(&d)?;
    print!("{csv}");
    if let Some(path) = out {
        fs::write(path, &csv)?;
    }
    Ok(())
}

fn cmd_homophily(data: &DataArgs, bins: usize, out: &Path) -> Result<(), Failure> {
    let d = load(data)?;
    let hist = homophily_histogram(&d, bins)?;
    fs::create_dir_all(out)?;
    let mut csv = String::from("bin_lo,bin_hi,count\n");
    for bin in &hist {
        csv.push_str(&format!("{},{},{}\n", bin.lo, bin.hi, bin.count));
    }
    let csv_path = out.join("homophily.csv");
    fs::write(&csv_path, &csv)?;
    let svg_path = out.join("homophily.svg");
    fs::write(&svg_path, svg::histogram_svg(d.name(), &hist))?;
    println!(
        "wrote {} and {} ({} nodes)",
        csv_path.display(),
        svg_path.display(),
        hist.iter().map(|b| b.count).sum::<usize>()
    );
    Ok(())
}

fn build_config(d: &Dataset, model: &ModelArgs) -> Result<IhgnnConfig, Failure> {
    let variant: Variant = model
        .variant
        .parse()
        .map_err(|e: CoreError| Failure::usage(e.to_string()))?;
    let config = IhgnnConfig {
        num_layers: model.layers,
        batch_size: model.batch,
        epochs: model.epochs,
        dropout: model.dropout,
        variant,
        seed: model.seed,
        learning_rate: model.lr,
        deterministic_reduction: model.deterministic,
        ..IhgnnConfig::for_dataset(d)
    };
    config.validate()?;
    Ok(config)
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn cmd_train(data: &DataArgs, model: &ModelArgs, out: &Path) -> Result<(), Failure> {
    let d = load(data)?;
    let config = build_config(&d, model)?;
    let mut manifest = RunManifest::begin(config.seed);
    manifest.dataset = Some(d.name().to_string());
    manifest.dataset_dir = Some(data.dataset_dir.clone());
    manifest.config_kv = config.to_kv();

    let plan = make_folds(&d, config.seed, model.stratified)?;
    let cv = cross_validate::<f64>(&d, &plan, &config)?;

    fs::create_dir_all(out)?;
    let mut grid = fs::File::create(out.join("cv_results.csv"))?;
    write_cv_results_csv(&mut grid, &cv)?;
    let rows = vec![SummaryRow::from_cv(config.variant.as_str(), &cv, config.seed)];
    let mut summary = fs::File::create(out.join("summary.csv"))?;
    write_summary_csv(&mut summary, &rows)?;
    manifest.write(&out.join("manifest.txt"))?;

    println!(
        "{}: {} ± {} (epoch {} of {}, seed {})",
        d.name(),
        pct(cv.mean_accuracy),
        pct(cv.std_accuracy),
        cv.selected_epoch,
        config.epochs,
        config.seed
    );
    Ok(())
}

fn cmd_ablate(data: &DataArgs, model: &ModelArgs, out: &Path) -> Result<(), Failure> {
    let d = load(data)?;
    let config = build_config(&d, model)?;
    let mut manifest = RunManifest::begin(config.seed);
    manifest.dataset = Some(d.name().to_string());
    manifest.dataset_dir = Some(data.dataset_dir.clone());
    manifest.config_kv = config.to_kv();

    let plan = make_folds(&d, config.seed, model.stratified)?;
    let results = ablation_suite::<f64>(&d, &plan, &config)?;

    fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for (variant, cv) in &results {
        let mut grid = fs::File::create(out.join(format!("cv_results_{variant}.csv")))?;
        write_cv_results_csv(&mut grid, cv)?;
        rows.push(SummaryRow::from_cv(variant.as_str(), cv, config.seed));
    }
    let mut summary = fs::File::create(out.join("summary.csv"))?;
    write_summary_csv(&mut summary, &rows)?;
    manifest.write(&out.join("manifest.txt"))?;

    println!("{}: ablation over {} epochs, seed {}", d.name(), config.epochs, config.seed);
    for (variant, cv) in &results {
        println!(
            "  {:<16} {} ± {} (epoch {})",
            variant.to_string(),
            pct(cv.mean_accuracy),
            pct(cv.std_accuracy),
            cv.selected_epoch
        );
    }
    Ok(())
}

fn cmd_sweep(
    data: &DataArgs,
    model: &ModelArgs,
    layer_values: &[usize],
    out: &Path,
) -> Result<(), Failure> {
    let d = load(data)?;
    let config = build_config(&d, model)?;
    let mut manifest = RunManifest::begin(config.seed);
    manifest.dataset = Some(d.name().to_string());
    manifest.dataset_dir = Some(data.dataset_dir.clone());
    manifest.config_kv = config.to_kv();

    let plan = make_folds(&d, config.seed, model.stratified)?;
    let results = layer_sweep::<f64>(&d, &plan, &config, layer_values)?;

    fs::create_dir_all(out)?;
    let mut csv = String::from("num_layers,mean_accuracy,std_accuracy,selected_epoch,seed\n");
    for (k, cv) in &results {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            k, cv.mean_accuracy, cv.std_accuracy, cv.selected_epoch, config.seed
        ));
    }
    fs::write(out.join("sweep.csv"), &csv)?;
    manifest.write(&out.join("manifest.txt"))?;

    println!("{}: layer sweep, seed {}", d.name(), config.seed);
    for (k, cv) in &results {
        println!("  K={k}: {} ± {}", pct(cv.mean_accuracy), pct(cv.std_accuracy));
    }
    Ok(())
}

fn cmd_wl_test(
    max_rounds: usize,
    dataset_dir: Option<PathBuf>,
    dataset: Option<String>,
    graphs: Option<Vec<usize>>,
) -> Result<(), Failure> {
    let (g1, g2) = match (&dataset_dir, &dataset, &graphs) {
        (Some(dir), Some(name), Some(indices)) => {
            if indices.len() != 2 {
                return Err(Failure::usage("--graphs needs exactly two indices"));
            }
            let d = load(&DataArgs { dataset_dir: dir.clone(), dataset: name.clone() })?;
            for &i in indices {
                if i >= d.len() {
                    return Err(Failure::usage(format!(
                        "graph index {i} out of range for {} graphs",
                        d.len()
                    )));
                }
            }
            (d.graph(indices[0]).clone(), d.graph(indices[1]).clone())
        }
        (None, None, None) => fixtures::fig2_pair(),
        _ => return Err(Failure::usage("--dataset-dir, --dataset, and --graphs go together")),
    };
    let outcome = wl::wl_test(&g1, &g2, max_rounds);
    let verdict = match outcome.verdict {
        wl::WlVerdict::NonIsomorphic => "NonIsomorphic",
        wl::WlVerdict::PossiblyIsomorphic => "PossiblyIsomorphic",
    };
    println!("{verdict} round={}", outcome.decided_round);
    println!("round,graph,colors");
    for (round, m1, m2) in &outcome.rounds {
        println!("{round},1,{}", join_colors(m1));
        println!("{round},2,{}", join_colors(m2));
    }
    Ok(())
}

fn join_colors(colors: &[usize]) -> String {
    colors
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn cmd_gradcheck(
    nodes: usize,
    layers: usize,
    seed: u64,
    tol: f64,
    variant: &str,
) -> Result<(), Failure> {
    if nodes == 0 {
        return Err(Failure::usage("--nodes must be positive"));
    }
    let variant: Variant = variant
        .parse()
        .map_err(|e: CoreError| Failure::usage(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = fixtures::random_graph(nodes, 0.5, 3, &mut rng);
    let d = Dataset::from_graphs("gradcheck", vec![g], vec![0]).unwrap();
    let features = one_hot_features::<f64>(&d);
    let config = IhgnnConfig {
        num_layers: layers,
        dropout: 0.0,
        variant,
        seed,
        ..IhgnnConfig::for_dataset(&d)
    };
    config.validate()?;
    let mut model = IhgnnModel::<f64>::init(&config, &mut rng)?;
    let items = [BatchItem { graph: d.graph(0), features: &features[0], label: 0 }];
    let (_, grads) = model.loss_and_gradients(&items, &config, &mut rng)?;
    let analytic: Vec<Vec<f64>> = grads.slots().iter().map(|s| s.to_vec()).collect();
    let report = grad_check(
        &mut model,
        |m| m.batch_loss(&items, &config).unwrap(),
        &analytic,
        1e-5,
        16,
    );
    println!(
        "max_rel_error={:.3e} checked={} tol={tol:.1e}",
        report.max_rel_error, report.checked
    );
    if report.max_rel_error > tol {
        return Err(Failure::numeric(format!(
            "gradient check failed: max relative error {:.3e} exceeds {tol:.1e} (slot {}, index {})",
            report.max_rel_error, report.worst_slot, report.worst_index
        )));
    }
    Ok(())
}
