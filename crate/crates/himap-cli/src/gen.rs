use crate::manifest::DatasetManifest;
use crate::report::{json_value, timed, Report};
use clap::{Args, Subcommand, ValueEnum};
use himap::datagen;
use himap::io::save_cloud_csv;
use himap::{PointCloud, Result};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Two ring-of-clusters clouds (one with an extra central cluster).
    Ring {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// A family of nested-ellipse boundary clouds.
    Ellipses {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        count: usize,
        /// Points per cloud.
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
    /// Bivariate distribution-on-scalar regression data with held-out truth.
    Regression {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Points per observed response distribution.
        #[arg(long, default_value_t = 10000)]
        n: usize,
        /// Points per held-out reference cloud.
        #[arg(long, default_value_t = 256)]
        truth_points: usize,
    },
    /// Synthetic distribution-on-scalar data for scaling runs.
    Scalability {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Design::Global)]
        design: Design,
        /// Response dimension.
        #[arg(long, default_value_t = 2)]
        p: usize,
        /// Number of distributions.
        #[arg(long, default_value_t = 50)]
        m: usize,
        /// Points per distribution.
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Design {
    Global,
    Local,
}

impl From<Design> for datagen::ScalabilityDesign {
    fn from(d: Design) -> Self {
        match d {
            Design::Global => datagen::ScalabilityDesign::Global,
            Design::Local => datagen::ScalabilityDesign::Local,
        }
    }
}

fn write_clouds(dir: &Path, stem: &str, clouds: &[PointCloud]) -> Result<Vec<String>> {
    let mut names = Vec::with_capacity(clouds.len());
    for (k, cloud) in clouds.iter().enumerate() {
        let name = format!("{stem}_{k:03}.csv");
        save_cloud_csv(dir.join(&name), cloud)?;
        names.push(name);
    }
    Ok(names)
}

pub fn run(args: GenArgs) -> Result<()> {
    match args.kind {
        GenKind::Ring { seed, out } => {
            std::fs::create_dir_all(&out)?;
            let (pair, gen_s) = timed(|| datagen::gen_ring_pair(seed));
            save_cloud_csv(out.join("left.csv"), &pair.left)?;
            save_cloud_csv(out.join("right.csv"), &pair.right)?;
            let config = json!({});
            let mut manifest = DatasetManifest::new("ring", seed, config.clone());
            manifest.files = vec!["left.csv".into(), "right.csv".into()];
            let manifest_path = out.join("manifest.json");
            manifest.save(&manifest_path)?;
            Report::new("gen-ring", config)
                .seed(seed)
                .timing("generate", gen_s)
                .field("manifest", json_value(&manifest_path))
                .emit(None)
        }
        GenKind::Ellipses {
            seed,
            out,
            count,
            points,
        } => {
            std::fs::create_dir_all(&out)?;
            let (clouds, gen_s) = timed(|| datagen::gen_nested_ellipses(seed, count, points));
            let files = write_clouds(&out, "ellipse", &clouds)?;
            let config = json!({ "count": count, "points": points });
            let mut manifest = DatasetManifest::new("ellipses", seed, config.clone());
            manifest.files = files;
            let manifest_path = out.join("manifest.json");
            manifest.save(&manifest_path)?;
            Report::new("gen-ellipses", config)
                .seed(seed)
                .timing("generate", gen_s)
                .field("manifest", json_value(&manifest_path))
                .emit(None)
        }
        GenKind::Regression {
            seed,
            out,
            n,
            truth_points,
        } => {
            std::fs::create_dir_all(&out)?;
            let (data, gen_s) = timed(|| datagen::gen_bivariate_regression(seed, n, truth_points));
            let responses = write_clouds(&out, "response", &data.observed)?;
            let truth = write_clouds(&out, "truth", &data.truth)?;
            let config = json!({ "n": n, "truth_points": truth_points });
            let mut manifest = DatasetManifest::new("regression-bivariate", seed, config.clone());
            manifest.covariates = data.observed_xs.iter().map(|&x| vec![x]).collect();
            manifest.responses = responses;
            manifest.held_out_covariates = data.held_out_xs.iter().map(|&x| vec![x]).collect();
            manifest.truth = truth;
            let manifest_path = out.join("manifest.json");
            manifest.save(&manifest_path)?;
            Report::new("gen-regression", config)
                .seed(seed)
                .timing("generate", gen_s)
                .field("manifest", json_value(&manifest_path))
                .emit(None)
        }
        GenKind::Scalability {
            seed,
            out,
            design,
            p,
            m,
            n,
        } => {
            std::fs::create_dir_all(&out)?;
            let (data, gen_s) = timed(|| datagen::gen_scalability(seed, design.into(), p, m, n));
            let responses = write_clouds(&out, "response", &data.responses)?;
            let config = json!({
                "design": format!("{design:?}").to_lowercase(),
                "p": p,
                "m": m,
                "n": n
            });
            let mut manifest = DatasetManifest::new("scalability", seed, config.clone());
            manifest.covariates = data.xs.iter().map(|&x| vec![x]).collect();
            manifest.responses = responses;
            let manifest_path = out.join("manifest.json");
            manifest.save(&manifest_path)?;
            Report::new("gen-scalability", config)
                .seed(seed)
                .timing("generate", gen_s)
                .field("manifest", json_value(&manifest_path))
                .emit(None)
        }
    }
}
