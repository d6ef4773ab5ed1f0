use anyhow::{ensure, Context, Result};
use clap::Args;
use degen_icp_core::degeneracy::accumulate;
use degen_icp_core::geometry::{exp_so3, Pose, Vec3};
use degen_icp_core::registration::{
    build_features, icp, ridge_solve, solve_update, IcpConfig, PlaneMap, SolverMethod, Termination,
};
use serde_json::json;

use super::{array, jsonl};
use crate::config::{CommonArgs, SceneArgs};
use crate::inputs::{ensure_out_dir, initial_pose, load_clouds, InputArgs};
use crate::io::{format_matrix6, format_pose, write_text};

/// Ridge added to the standard solve in comparison mode.
const COMPARE_RIDGE: f64 = 1e-9;

#[derive(Debug, Clone, Args)]
pub struct RegisterArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Initial translation `x,y,z` when no --init file is given.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init_translation: Option<Vec<f64>>,
    /// Initial yaw in degrees when no --init file is given.
    #[arg(long, allow_hyphen_values = true)]
    pub init_yaw_deg: Option<f64>,
    /// Also compare one standard (ridge) and one probabilistic update at the
    /// initial pose along the least observable direction.
    #[arg(long)]
    pub compare: bool,
}

/// Writes `pose.txt`, `information.txt`, `iterations.jsonl` and
/// `status.json` (plus `compare.json` with --compare).
pub fn run(args: &RegisterArgs) -> Result<()> {
    let cfg = args.inputs.apply(args.common.resolve(Some(&args.scene))?)?;
    let clouds = load_clouds(&cfg)?;
    let init = if cfg.init.is_some() {
        initial_pose(&cfg)?
    } else {
        let t = args.init_translation.as_deref().unwrap_or(&[0.0, 0.0, 0.0]);
        ensure!(t.len() == 3, "--init-translation needs three values x,y,z");
        let yaw = args.init_yaw_deg.unwrap_or(0.0).to_radians();
        Pose::new(exp_so3(&Vec3::new(0.0, 0.0, yaw)), Vec3::new(t[0], t[1], t[2]))
    };
    let config = cfg.icp_config();
    ensure_out_dir(&cfg.out)?;
    if args.compare {
        compare(&clouds.source, &clouds.target, &init, &config, cfg.method.s, &cfg.out)?;
    }
    let result = icp(&clouds.source, &clouds.target, &init, &config)
        .map_err(anyhow::Error::new)
        .context("registration failed")?;

    let records: Vec<_> = result
        .iterations
        .iter()
        .map(|it| {
            json!({
                "iteration": it.index,
                "accepted": it.stats.accepted,
                "too_far": it.stats.too_far,
                "fit_failed": it.stats.fit_failed,
                "outliers": it.stats.outliers,
                "twist": array(it.twist.to_vector().iter()),
                "eigenvalues": array(it.eigenvalues.iter()),
                "probabilities": array(it.probabilities.iter()),
                "pose": array(it.pose.to_matrix4().transpose().iter()),
            })
        })
        .collect();
    write_text(&cfg.out.join("iterations.jsonl"), &jsonl(&records))?;
    write_text(&cfg.out.join("pose.txt"), &format_pose(&result.pose))?;
    write_text(&cfg.out.join("information.txt"), &format_matrix6(&result.information))?;
    let status = json!({
        "converged": result.converged,
        "termination": match result.termination {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
        },
        "iterations": result.iterations.len(),
        "method": cfg.method.name,
    });
    write_text(&cfg.out.join("status.json"), &(serde_json::to_string_pretty(&status)? + "\n"))?;
    let p = &result.pose;
    println!(
        "{} after {} iterations: translation [{:.6} {:.6} {:.6}] m, rotation {:.6} deg",
        if result.converged { "converged" } else { "stopped" },
        result.iterations.len(),
        p.translation.x,
        p.translation.y,
        p.translation.z,
        p.rotation_angle().to_degrees()
    );
    Ok(())
}

fn compare(
    source: &[Vec3],
    target: &[Vec3],
    init: &Pose,
    config: &IcpConfig,
    s: f64,
    out: &std::path::Path,
) -> Result<()> {
    let map = PlaneMap::new(target);
    let (features, _) = build_features(source, &map, init, config);
    let bundle = accumulate(&features).map_err(anyhow::Error::new)?;
    let standard = ridge_solve(&bundle, COMPARE_RIDGE).map_err(anyhow::Error::new)?.to_vector();
    let prob = solve_update(&bundle, SolverMethod::Probabilistic { s }, config.sigma_r)
        .map_err(anyhow::Error::new)?;
    let weakest = (0..6)
        .min_by(|&a, &b| prob.probabilities[a].total_cmp(&prob.probabilities[b]))
        .unwrap_or(5);
    let u = prob.eigen.vectors.column(weakest).into_owned();
    let (cs, cp) = (u.dot(&standard), u.dot(&prob.twist.to_vector()));
    let ratio = if cp == 0.0 { f64::INFINITY } else { cs.abs() / cp.abs() };
    let report = json!({
        "direction": array(u.iter()),
        "probability": prob.probabilities[weakest],
        "standard_component": cs,
        "probabilistic_component": cp,
        // Infinite when the probabilistic component is exactly zero.
        "attenuation_ratio": if ratio.is_finite() { json!(ratio) } else { json!("inf") },
    });
    write_text(&out.join("compare.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    println!(
        "weakest direction p = {:.3e}: standard {cs:+.3e}, probabilistic {cp:+.3e}, attenuation ratio {ratio:.3e}",
        prob.probabilities[weakest]
    );
    Ok(())
}
