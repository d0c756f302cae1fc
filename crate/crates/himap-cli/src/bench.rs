use crate::report::{json_value, load_config, timed, Report};
use clap::{Args, Subcommand};
use himap::barycenter::barycenter;
use himap::datagen::{self, ScalabilityDesign};
use himap::frechet::{GlobalFrechet, LocalFrechet};
use himap::io::save_cloud_csv;
use himap::ot::w2_exact_assignment;
use himap::quantile::QuantileGrid;
use himap::tree::MassTree;
use himap::{Error, PointCloud, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(subcommand)]
    pub kind: BenchKind,
}

#[derive(Debug, Subcommand)]
pub enum BenchKind {
    /// Uniform-weight barycenter of nested-ellipse clouds, with an exact
    /// transport cost proxy on subsamples.
    Ellipses {
        /// JSON config; defaults documented in the README.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Interpolation sweep between the two ring clouds.
    Interp {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Global regression fit/predict/leave-one-out timing run.
    RegressGlobal {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit/predict timing sweep over dataset sizes.
    RegressScale {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(args: BenchArgs) -> Result<()> {
    match args.kind {
        BenchKind::Ellipses { config, out } => ellipses(config.as_deref(), &out),
        BenchKind::Interp { config, out } => interp(config.as_deref(), &out),
        BenchKind::RegressGlobal { config, out } => regress_global(config.as_deref(), &out),
        BenchKind::RegressScale { config, out } => regress_scale(config.as_deref(), &out),
    }
}

fn subsample(cloud: &PointCloud, k: usize, rng: &mut impl Rng) -> PointCloud {
    if cloud.len() <= k {
        return cloud.clone();
    }
    let picks = rand::seq::index::sample(rng, cloud.len(), k);
    let mut data = Vec::with_capacity(k * cloud.dim());
    for ix in picks.iter() {
        data.extend_from_slice(cloud.point(ix));
    }
    PointCloud::from_flat(data, cloud.dim()).unwrap()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EllipsesConfig {
    seed: u64,
    count: usize,
    points: usize,
    depth: Option<usize>,
    grid: Option<usize>,
    /// Points kept per cloud for the exact-transport proxy.
    subsample: usize,
    /// "emd" for the exact assignment proxy, "none" to skip it.
    proxy: String,
}

impl Default for EllipsesConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            count: 30,
            points: 1000,
            depth: None,
            grid: None,
            subsample: 512,
            proxy: "emd".into(),
        }
    }
}

fn ellipses(config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg: EllipsesConfig = load_config(config)?;
    if cfg.proxy != "emd" && cfg.proxy != "none" {
        return Err(Error::Config(format!(
            "proxy must be \"emd\" or \"none\", got {:?}",
            cfg.proxy
        )));
    }
    let clouds = datagen::gen_nested_ellipses(cfg.seed, cfg.count, cfg.points);
    let (trees, fit_trees_s) = timed(|| {
        clouds
            .par_iter()
            .map(|c| MassTree::fit(c, cfg.depth))
            .collect::<Result<Vec<_>>>()
    });
    let trees = trees?;
    let weights = vec![1.0 / cfg.count as f64; cfg.count];
    let (result, barycenter_s) = timed(|| barycenter(&trees, &weights, cfg.grid));
    let result = result?;
    let bary_cloud = result.to_cloud();
    let out_dir = out.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    std::fs::create_dir_all(&out_dir)?;
    let bary_csv = "ellipses_barycenter.csv";
    save_cloud_csv(out_dir.join(bary_csv), &bary_cloud)?;
    let mut report = Report::new("bench-ellipses", json_value(&cfg))
        .seed(cfg.seed)
        .timing("fit_trees", fit_trees_s)
        .timing("barycenter", barycenter_s)
        .field("barycenter_csv", json!(bary_csv))
        .field("barycenter_grid", json!(result.grid()))
        .field("dim", json!(result.dim()));
    if cfg.proxy == "emd" {
        let (costs, proxy_s) = timed(|| {
            clouds
                .par_iter()
                .enumerate()
                .map(|(k, cloud)| {
                    let mut rng = datagen::substream(cfg.seed, 5000 + k as u64);
                    let size = cfg.subsample.min(cloud.len()).min(bary_cloud.len());
                    let a = subsample(&bary_cloud, size, &mut rng);
                    let b = subsample(cloud, size, &mut rng);
                    w2_exact_assignment(&a, &b).map(|w| w * w)
                })
                .collect::<Result<Vec<f64>>>()
        });
        let costs = costs?;
        let average = costs.iter().sum::<f64>() / costs.len() as f64;
        report = report
            .timing("proxy", proxy_s)
            .field("average_ot_cost", json!(average))
            .field("per_input_ot_cost", json_value(&costs));
    }
    report.emit(Some(out))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct InterpConfig {
    seed: u64,
    depth: Option<usize>,
    grid: Option<usize>,
    weights: Vec<[f64; 2]>,
}

impl Default for InterpConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            depth: None,
            grid: None,
            weights: vec![
                [1.0, 0.0],
                [0.75, 0.25],
                [0.5, 0.5],
                [0.25, 0.75],
                [0.0, 1.0],
            ],
        }
    }
}

fn interp(config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg: InterpConfig = load_config(config)?;
    if cfg.weights.is_empty() {
        return Err(Error::Config("weight sweep is empty".into()));
    }
    let pair = datagen::gen_ring_pair(cfg.seed);
    let (left, fit_left_s) = timed(|| MassTree::fit(&pair.left, cfg.depth));
    let (right, fit_right_s) = timed(|| MassTree::fit(&pair.right, cfg.depth));
    let trees = [left?, right?];
    let out_dir = out.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    std::fs::create_dir_all(&out_dir)?;
    let mut sweeps = Vec::with_capacity(cfg.weights.len());
    let mut barycenter_total_s = 0.0;
    for (k, w) in cfg.weights.iter().enumerate() {
        let (grid, secs) = timed(|| barycenter(&trees, w, cfg.grid));
        let grid = grid?;
        barycenter_total_s += secs;
        let name = format!("interp_{k:03}.csv");
        save_cloud_csv(out_dir.join(&name), &grid.to_cloud())?;
        sweeps.push(json!({
            "weights": w,
            "cloud_csv": name,
            "barycenter_s": secs,
        }));
    }
    Report::new("bench-interp", json_value(&cfg))
        .seed(cfg.seed)
        .timing("fit_left", fit_left_s)
        .timing("fit_right", fit_right_s)
        .timing("barycenter_total", barycenter_total_s)
        .field("sweeps", json_value(&sweeps))
        .emit(Some(out))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RegressGlobalConfig {
    seed: u64,
    p: usize,
    m: usize,
    n: usize,
    depth: Option<usize>,
    grid: Option<usize>,
    queries: usize,
}

impl Default for RegressGlobalConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            p: 2,
            m: 50,
            n: 1000,
            depth: None,
            grid: None,
            queries: 1000,
        }
    }
}

fn regress_global(config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg: RegressGlobalConfig = load_config(config)?;
    let data = datagen::gen_scalability(cfg.seed, ScalabilityDesign::Global, cfg.p, cfg.m, cfg.n);
    let covariates =
        PointCloud::from_rows(&data.xs.iter().map(|&x| vec![x]).collect::<Vec<_>>())?;
    let (trees, fit_trees_s) = timed(|| {
        data.responses
            .par_iter()
            .map(|c| MassTree::fit(c, cfg.depth))
            .collect::<Result<Vec<_>>>()
    });
    let trees = trees?;
    let (model, fit_model_s) = timed(|| GlobalFrechet::fit(&covariates, &trees, cfg.grid));
    let model = model?;
    let lo = data.xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut rng = datagen::substream(cfg.seed, 9000);
    let queries: Vec<f64> = (0..cfg.queries).map(|_| rng.gen_range(lo..hi)).collect();
    let mut max_weight_dev = 0.0f64;
    for &x in &queries {
        let w = model.weights(&[x])?;
        max_weight_dev = max_weight_dev.max((w.iter().sum::<f64>() - 1.0).abs());
    }
    let (preds, predict_s) = timed(|| {
        queries
            .iter()
            .map(|&x| model.predict(&[x]))
            .collect::<Result<Vec<QuantileGrid>>>()
    });
    let preds = preds?;
    let (loo, loo_s) = timed(|| model.leave_one_out());
    let loo = loo?;
    Report::new("bench-regress-global", json_value(&cfg))
        .seed(cfg.seed)
        .timing("fit_trees", fit_trees_s)
        .timing("fit_model", fit_model_s)
        .timing("predict", predict_s)
        .timing("leave_one_out", loo_s)
        .field("predictions", json!(preds.len()))
        .field("grid", json!(model.grid()))
        .field("condition", json!(model.condition()))
        .field("max_weight_sum_deviation", json!(max_weight_dev))
        .field("loo_mean_squared_error", json!(loo.mean_squared_error))
        .emit(Some(out))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RegressScaleConfig {
    seed: u64,
    design: String,
    p: usize,
    n: usize,
    m_values: Vec<usize>,
    depth: Option<usize>,
    grid: Option<usize>,
}

impl Default for RegressScaleConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            design: "global".into(),
            p: 2,
            n: 1000,
            m_values: vec![50, 100, 200],
            depth: None,
            grid: None,
        }
    }
}

fn regress_scale(config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg: RegressScaleConfig = load_config(config)?;
    let design = match cfg.design.as_str() {
        "global" => ScalabilityDesign::Global,
        "local" => ScalabilityDesign::Local,
        other => {
            return Err(Error::Config(format!(
                "design must be \"global\" or \"local\", got {other:?}"
            )))
        }
    };
    if cfg.m_values.is_empty() {
        return Err(Error::Config("m_values is empty".into()));
    }
    let mut rows = Vec::with_capacity(cfg.m_values.len());
    for &m in &cfg.m_values {
        let data = datagen::gen_scalability(cfg.seed, design, cfg.p, m, cfg.n);
        let covariates =
            PointCloud::from_rows(&data.xs.iter().map(|&x| vec![x]).collect::<Vec<_>>())?;
        let (trees, fit_trees_s) = timed(|| {
            data.responses
                .par_iter()
                .map(|c| MassTree::fit(c, cfg.depth))
                .collect::<Result<Vec<_>>>()
        });
        let trees = trees?;
        match design {
            ScalabilityDesign::Global => {
                let (model, fit_model_s) =
                    timed(|| GlobalFrechet::fit(&covariates, &trees, cfg.grid));
                let model = model?;
                let (preds, predict_s) = timed(|| {
                    data.xs
                        .iter()
                        .map(|&x| model.predict(&[x]))
                        .collect::<Result<Vec<_>>>()
                });
                preds?;
                rows.push(json!({
                    "m": m,
                    "fit_trees_s": fit_trees_s,
                    "fit_model_s": fit_model_s,
                    "predict_s": predict_s,
                }));
            }
            ScalabilityDesign::Local => {
                let (model, fit_model_s) =
                    timed(|| LocalFrechet::fit(&covariates, &trees, None, cfg.grid));
                let model = model?;
                let (preds, predict_s) = timed(|| {
                    data.xs
                        .iter()
                        .map(|&x| model.predict(x))
                        .collect::<Result<Vec<_>>>()
                });
                preds?;
                rows.push(json!({
                    "m": m,
                    "fit_trees_s": fit_trees_s,
                    "fit_model_s": fit_model_s,
                    "predict_s": predict_s,
                    "bandwidth_used": model.bandwidth(),
                }));
            }
        }
    }
    Report::new("bench-regress-scale", json_value(&cfg))
        .seed(cfg.seed)
        .field("rows", json_value(&rows))
        .emit(Some(out))
}
