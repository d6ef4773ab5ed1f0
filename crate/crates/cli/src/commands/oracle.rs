use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use degen_icp_core::degeneracy::{accumulate, direction_stats, PlaneFeature};
use degen_icp_core::geometry::{Vec3, Vec6};
use degen_icp_core::simulation::{
    generate_scene, random_feature_set, random_unit_directions, NoiseSpec, NormalNoiseModel,
};
use serde_json::json;

use super::{array, jsonl};
use crate::config::{CommonArgs, SceneArgs};
use crate::inputs::ensure_out_dir;
use crate::io::write_text;
use crate::parallel::{quadratic_stats, thread_pool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureSet {
    /// Random points, normals and offsets.
    Random,
    /// One feature at the origin with normal e_z, probed along t_x.
    Single,
    /// Noise-free samples of the scene given by --kind.
    Scene,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, value_enum, default_value_t = FeatureSet::Random)]
    pub set: FeatureSet,
    /// Features in the random set.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Random unit directions to probe.
    #[arg(long, default_value_t = 10)]
    pub directions: usize,
    /// Tangent std of the normal noise.
    #[arg(long, default_value_t = 0.01)]
    pub sigma_n: f64,
    /// Allowed deviation of the mean, in Monte Carlo standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub mean_se: f64,
    /// Allowed relative error of the variance.
    #[arg(long, default_value_t = 0.10)]
    pub var_rel: f64,
}

/// Analytic versus Monte Carlo moments of `uᵀĤu`; fails when any direction
/// is outside tolerance. Writes `oracle.jsonl`.
pub fn run(args: &OracleArgs) -> Result<()> {
    let cfg = args.common.resolve(Some(&args.scene))?;
    let sigma_p = cfg.sensor.sigma_p;
    let (truth, dirs): (Vec<PlaneFeature>, Vec<Vec6>) = match args.set {
        FeatureSet::Random => (
            random_feature_set(cfg.seed, args.count, 2.0),
            random_unit_directions(cfg.seed.wrapping_add(1), args.directions),
        ),
        FeatureSet::Single => (
            vec![PlaneFeature::on_plane(Vec3::zeros(), Vec3::z())],
            vec![Vec6::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0)],
        ),
        FeatureSet::Scene => {
            let scene = cfg.scene.as_ref().context("--set scene needs --kind")?;
            let sample = generate_scene(&scene.spec(cfg.seed)).map_err(anyhow::Error::new)?;
            (
                sample.features(),
                random_unit_directions(cfg.seed.wrapping_add(1), args.directions),
            )
        }
    };
    if args.trials < 2 {
        bail!("--trials must be at least 2");
    }
    let noise = NoiseSpec::new(sigma_p, args.sigma_n, cfg.seed.wrapping_add(2))
        .with_model(NormalNoiseModel::SmallAngle);
    let pool = thread_pool()?;
    let mc = quadratic_stats(&pool, &truth, &noise, &dirs, args.trials);
    let noisy: Vec<_> = truth.iter().map(|f| f.with_isotropic_noise(sigma_p, args.sigma_n)).collect();
    let bundle = accumulate(&noisy).map_err(anyhow::Error::new)?;

    println!(
        "{:>3} {:>14} {:>14} {:>8} {:>12} {:>12} {:>8}",
        "u", "mean", "mc_mean", "z", "variance", "mc_variance", "rel"
    );
    let mut records = Vec::new();
    let mut failures = 0;
    for (k, (u, s)) in dirs.iter().zip(&mc).enumerate() {
        let (mu, var) = direction_stats(&bundle, u).map_err(anyhow::Error::new)?;
        let mean = u.dot(&(bundle.hessian * u)) + mu;
        let se = (s.variance() / args.trials as f64).sqrt();
        let z = if se > 0.0 { (s.mean() - mean) / se } else { 0.0 };
        let rel = if s.variance() > 0.0 {
            (s.variance() - var).abs() / s.variance()
        } else if var == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let pass = z.abs() <= args.mean_se && rel <= args.var_rel;
        failures += usize::from(!pass);
        println!(
            "{k:>3} {mean:>14.6e} {:>14.6e} {z:>8.3} {var:>12.4e} {:>12.4e} {rel:>8.4}{}",
            s.mean(),
            s.variance(),
            if pass { "" } else { "  FAIL" }
        );
        records.push(json!({
            "direction_index": k,
            "direction": array(u.iter()),
            "mean": mean,
            "mc_mean": s.mean(),
            "mean_z": z,
            "variance": var,
            "mc_variance": s.variance(),
            "variance_rel_error": if rel.is_finite() { json!(rel) } else { json!("inf") },
            "pass": pass,
        }));
    }
    ensure_out_dir(&cfg.out)?;
    write_text(&cfg.out.join("oracle.jsonl"), &jsonl(&records))?;
    if failures > 0 {
        bail!("{failures} of {} directions outside tolerance", dirs.len());
    }
    Ok(())
}
