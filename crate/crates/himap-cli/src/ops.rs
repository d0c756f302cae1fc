use crate::manifest::DatasetManifest;
use crate::report::{json_value, timed, Report};
use clap::{Args, ValueEnum};
use himap::barycenter::barycenter;
use himap::frechet::{GlobalFrechet, LocalFrechet};
use himap::io::{load_cloud_csv, load_tree, save_cloud_csv, save_grid_csv, save_tree};
use himap::ot::{sinkhorn_cost, w2_exact_1d, w2_exact_assignment, SinkhornParams};
use himap::quantile::himap_distance;
use himap::tree::MassTree;
use himap::{Error, PointCloud, Result};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input point-cloud CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Tree depth; defaults to floor(log2 n) clamped to the supported range.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Output tree JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_fit(args: FitArgs) -> Result<()> {
    let cloud = load_cloud_csv(&args.input)?;
    let (tree, fit_s) = timed(|| MassTree::fit(&cloud, args.depth));
    let tree = tree?;
    save_tree(&args.out, &tree)?;
    Report::new(
        "fit",
        json!({ "in": args.input, "depth": args.depth, "out": args.out }),
    )
    .timing("fit", fit_s)
    .field("n", json!(tree.len()))
    .field("dim", json!(tree.dim()))
    .field("depth_used", json!(tree.depth()))
    .emit(None)
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Fitted tree JSON.
    #[arg(long)]
    pub tree: PathBuf,
    /// Grid resolution; defaults to 2^depth.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output quantile-grid CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional pushforward cloud CSV (the grid values as points).
    #[arg(long)]
    pub cloud_out: Option<PathBuf>,
}

pub fn run_eval(args: EvalArgs) -> Result<()> {
    let tree = load_tree(&args.tree)?;
    let g = args.grid.unwrap_or_else(|| tree.default_grid());
    let (grid, eval_s) = timed(|| tree.sample_grid(g));
    let grid = grid?;
    save_grid_csv(&args.out, &grid)?;
    if let Some(cloud_out) = &args.cloud_out {
        save_cloud_csv(cloud_out, &grid.to_cloud())?;
    }
    Report::new(
        "eval",
        json!({ "tree": args.tree, "grid": g, "out": args.out }),
    )
    .timing("evaluate", eval_s)
    .field("dim", json!(grid.dim()))
    .emit(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    /// Grid metric between mass-aligned quantile maps.
    Himap,
    /// Exact transport distance by optimal assignment.
    W2Exact,
    /// Exact one-dimensional transport distance via sorted samples.
    #[value(name = "w2-1d")]
    W21d,
    /// Entropy-regularized transport cost (reports the cost, not its root).
    Sinkhorn,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long, value_enum)]
    pub metric: Metric,
    /// First input: cloud CSV, or tree JSON for the himap metric.
    #[arg(long)]
    pub a: PathBuf,
    /// Second input, same conventions.
    #[arg(long)]
    pub b: PathBuf,
    /// Order of the grid metric.
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    /// Common grid resolution for the himap metric.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Tree depth when fitting clouds on the fly.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Regularization for the sinkhorn metric; defaults to scale-relative.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Iteration cap for the sinkhorn metric.
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    /// Optional file copy of the JSON result.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_tree_or_fit(path: &Path, depth: Option<usize>) -> Result<MassTree> {
    if path.extension().is_some_and(|e| e == "json") {
        load_tree(path)
    } else {
        MassTree::fit(&load_cloud_csv(path)?, depth)
    }
}

fn load_cloud_only(path: &Path) -> Result<PointCloud> {
    if path.extension().is_some_and(|e| e == "json") {
        return Err(Error::Domain(format!(
            "{} looks like a tree file; this metric takes point-cloud CSVs",
            path.display()
        )));
    }
    load_cloud_csv(path)
}

pub fn run_distance(args: DistanceArgs) -> Result<()> {
    let metric_name = match args.metric {
        Metric::Himap => "himap",
        Metric::W2Exact => "w2-exact",
        Metric::W21d => "w2-1d",
        Metric::Sinkhorn => "sinkhorn",
    };
    let mut report = Report::new(
        "distance",
        json!({
            "metric": metric_name,
            "a": args.a,
            "b": args.b,
            "r": args.r,
            "grid": args.grid,
            "depth": args.depth,
            "epsilon": args.epsilon,
            "max_iterations": args.max_iterations,
        }),
    );
    let (value, runtime_s) = match args.metric {
        Metric::Himap => {
            let a = load_tree_or_fit(&args.a, args.depth)?;
            let b = load_tree_or_fit(&args.b, args.depth)?;
            let (value, secs) = timed(|| himap_distance(&a, &b, args.r, args.grid));
            (value?, secs)
        }
        Metric::W2Exact => {
            let a = load_cloud_only(&args.a)?;
            let b = load_cloud_only(&args.b)?;
            let (value, secs) = timed(|| w2_exact_assignment(&a, &b));
            (value?, secs)
        }
        Metric::W21d => {
            let a = load_cloud_only(&args.a)?;
            let b = load_cloud_only(&args.b)?;
            let (value, secs) = timed(|| w2_exact_1d(&a, &b));
            (value?, secs)
        }
        Metric::Sinkhorn => {
            let a = load_cloud_only(&args.a)?;
            let b = load_cloud_only(&args.b)?;
            let params = SinkhornParams {
                epsilon: args.epsilon,
                max_iterations: args.max_iterations,
                ..Default::default()
            };
            let (output, secs) = timed(|| sinkhorn_cost(&a, &b, params));
            let output = output?;
            report = report
                .field("epsilon_used", json!(output.epsilon))
                .field("marginal_error", json!(output.marginal_error));
            (output.cost, secs)
        }
    };
    report
        .timing("distance", runtime_s)
        .field("metric", json!(metric_name))
        .field("value", json!(value))
        .field("runtime_s", json!(runtime_s))
        .emit(args.out.as_deref())
}

#[derive(Debug, Args)]
pub struct BarycenterArgs {
    /// JSON array of tree-file paths, relative to the list file.
    #[arg(long)]
    pub inputs: PathBuf,
    /// JSON array of weights, one per input.
    #[arg(long)]
    pub weights: PathBuf,
    /// Common grid resolution; defaults to 2^max depth.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output barycenter cloud CSV (grid values as points).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional quantile-grid CSV of the same barycenter.
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
}

pub fn run_barycenter(args: BarycenterArgs) -> Result<()> {
    let list_text = std::fs::read_to_string(&args.inputs)?;
    let rel_paths: Vec<String> = serde_json::from_str(&list_text)
        .map_err(|e| Error::Parse(format!("bad input list {}: {e}", args.inputs.display())))?;
    if rel_paths.is_empty() {
        return Err(Error::Data("input list is empty".into()));
    }
    let weights_text = std::fs::read_to_string(&args.weights)?;
    let weights: Vec<f64> = serde_json::from_str(&weights_text)
        .map_err(|e| Error::Parse(format!("bad weights {}: {e}", args.weights.display())))?;
    let trees: Vec<MassTree> = rel_paths
        .iter()
        .map(|rel| load_tree(DatasetManifest::resolve(&args.inputs, rel)))
        .collect::<Result<_>>()?;
    let (grid, bary_s) = timed(|| barycenter(&trees, &weights, args.grid));
    let grid = grid?;
    save_cloud_csv(&args.out, &grid.to_cloud())?;
    if let Some(grid_out) = &args.grid_out {
        save_grid_csv(grid_out, &grid)?;
    }
    Report::new(
        "barycenter",
        json!({
            "inputs": args.inputs,
            "weights": weights,
            "grid": grid.grid(),
            "out": args.out,
        }),
    )
    .timing("barycenter", bary_s)
    .field("count", json!(trees.len()))
    .field("dim", json!(grid.dim()))
    .emit(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Global,
    Local,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Dataset manifest with covariates and response cloud paths.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: Scheme,
    /// Kernel bandwidth for the local scheme: a number, or "auto" for
    /// leave-one-out selection.
    #[arg(long, default_value = "auto")]
    pub bandwidth: String,
    /// CSV of query covariates (cloud CSV with the covariate dimension).
    #[arg(long)]
    pub eval_x: PathBuf,
    /// Output results JSON; prediction CSVs are written beside it.
    #[arg(long)]
    pub out: PathBuf,
    /// Tree depth for response fitting.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Common grid resolution for predictions.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Also compute leave-one-out diagnostics.
    #[arg(long, default_value_t = false)]
    pub loo: bool,
}

pub fn run_regress(args: RegressArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&args.data)?;
    if manifest.covariates.is_empty() || manifest.responses.is_empty() {
        return Err(Error::Data(format!(
            "manifest {} has no covariates or responses",
            args.data.display()
        )));
    }
    if manifest.covariates.len() != manifest.responses.len() {
        return Err(Error::Data(format!(
            "manifest has {} covariates but {} responses",
            manifest.covariates.len(),
            manifest.responses.len()
        )));
    }
    let covariates = PointCloud::from_rows(&manifest.covariates)?;
    let clouds: Vec<PointCloud> = manifest
        .responses
        .iter()
        .map(|rel| load_cloud_csv(DatasetManifest::resolve(&args.data, rel)))
        .collect::<Result<_>>()?;
    let (trees, fit_trees_s) = timed(|| {
        clouds
            .iter()
            .map(|c| MassTree::fit(c, args.depth))
            .collect::<Result<Vec<_>>>()
    });
    let trees = trees?;
    let queries = load_cloud_csv(&args.eval_x)?;
    let bandwidth = match args.bandwidth.as_str() {
        "auto" => None,
        other => Some(other.parse::<f64>().map_err(|_| {
            Error::Config(format!("bandwidth must be a number or \"auto\", got {other:?}"))
        })?),
    };

    let out_dir = args.out.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    std::fs::create_dir_all(&out_dir)?;
    let mut report = Report::new(
        "regress",
        json!({
            "data": args.data,
            "scheme": match args.scheme { Scheme::Global => "global", Scheme::Local => "local" },
            "bandwidth": args.bandwidth,
            "eval_x": args.eval_x,
            "depth": args.depth,
            "grid": args.grid,
            "out": args.out,
        }),
    )
    .seed(manifest.seed)
    .timing("fit_trees", fit_trees_s);

    let mut evaluations = Vec::with_capacity(queries.len());
    match args.scheme {
        Scheme::Global => {
            let (model, fit_model_s) = timed(|| GlobalFrechet::fit(&covariates, &trees, args.grid));
            let model = model?;
            let (preds, predict_s) = timed(|| {
                queries
                    .iter()
                    .map(|x| model.predict(x))
                    .collect::<Result<Vec<_>>>()
            });
            let preds = preds?;
            for (k, (x, grid)) in queries.iter().zip(&preds).enumerate() {
                let name = format!("pred_{k:03}.csv");
                save_grid_csv(out_dir.join(&name), grid)?;
                evaluations.push(json!({ "x": x, "prediction_csv": name }));
            }
            report = report
                .timing("fit_model", fit_model_s)
                .timing("predict", predict_s)
                .field("condition", json!(model.condition()));
            if args.loo {
                let (loo, loo_s) = timed(|| model.leave_one_out());
                let loo = loo?;
                report = report.timing("leave_one_out", loo_s).field(
                    "leave_one_out",
                    json!({
                        "mean_squared_error": loo.mean_squared_error,
                        "per_point": loo.per_point,
                    }),
                );
            }
        }
        Scheme::Local => {
            if covariates.dim() != 1 {
                return Err(Error::Domain(
                    "the local scheme takes scalar covariates".into(),
                ));
            }
            let (model, fit_model_s) =
                timed(|| LocalFrechet::fit(&covariates, &trees, bandwidth, args.grid));
            let model = model?;
            let (preds, predict_s) = timed(|| {
                queries
                    .iter()
                    .map(|x| model.predict(x[0]))
                    .collect::<Result<Vec<_>>>()
            });
            let preds = preds?;
            for (k, (x, grid)) in queries.iter().zip(&preds).enumerate() {
                let name = format!("pred_{k:03}.csv");
                save_grid_csv(out_dir.join(&name), grid)?;
                evaluations.push(json!({ "x": x, "prediction_csv": name }));
            }
            report = report
                .timing("fit_model", fit_model_s)
                .timing("predict", predict_s)
                .field("bandwidth_used", json!(model.bandwidth()));
            if args.loo {
                let (loo, loo_s) = timed(|| model.leave_one_out());
                let loo = loo?;
                report = report.timing("leave_one_out", loo_s).field(
                    "leave_one_out",
                    json!({
                        "mean_squared_error": loo.mean_squared_error,
                        "per_point": loo.per_point,
                    }),
                );
            }
        }
    }
    report
        .field("evaluations", json_value(&evaluations))
        .emit(Some(&args.out))
}
