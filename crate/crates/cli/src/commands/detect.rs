use anyhow::Result;
use clap::Args;
use degen_icp_core::registration::{detect, PlaneMap};
use serde_json::json;

use super::{array, jsonl};
use crate::config::{CommonArgs, SceneArgs};
use crate::inputs::{ensure_out_dir, initial_pose, load_clouds, InputArgs};
use crate::io::write_text;

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub inputs: InputArgs,
}

/// Prints a per-direction table and writes `detect.jsonl`.
pub fn run(args: &DetectArgs) -> Result<()> {
    let cfg = args.inputs.apply(args.common.resolve(Some(&args.scene))?)?;
    let clouds = load_clouds(&cfg)?;
    let pose = initial_pose(&cfg)?;
    let icp = cfg.icp_config();
    let map = PlaneMap::new(&clouds.target);
    let d = detect(&clouds.source, &map, &pose, &icp).map_err(anyhow::Error::new)?;

    println!("{:>3} {:>14} {:>12} {:>12} {:>10}  direction", "k", "eigenvalue", "noise_mean", "noise_std", "p");
    let mut records = Vec::new();
    for (k, r) in d.analysis.reports.iter().enumerate() {
        println!(
            "{:>3} {:>14.6e} {:>12.4e} {:>12.4e} {:>10.6}  [{}]",
            k,
            r.signal,
            r.noise_mean,
            r.noise_std,
            r.probability,
            r.direction.iter().map(|v| format!("{v:+.3}")).collect::<Vec<_>>().join(" ")
        );
        records.push(json!({
            "record": "direction",
            "index": k,
            "eigenvalue": d.analysis.eigen.values[k],
            "signal": r.signal,
            "noise_mean": r.noise_mean,
            "noise_std": r.noise_std,
            "probability": r.probability,
            "snr_target": r.snr_target,
            "direction": array(r.direction.iter()),
        }));
    }
    records.push(json!({
        "record": "summary",
        "accepted": d.stats.accepted,
        "too_far": d.stats.too_far,
        "fit_failed": d.stats.fit_failed,
        "outliers": d.stats.outliers,
        "degenerate": d.analysis.reports.iter().filter(|r| r.probability < 0.01).count(),
    }));
    ensure_out_dir(&cfg.out)?;
    write_text(&cfg.out.join("detect.jsonl"), &jsonl(&records))
}
