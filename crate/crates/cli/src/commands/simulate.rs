use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use degen_icp_core::simulation::{apply_noise, generate_scene, NoiseSpec};
use serde_json::json;

use super::array;
use crate::config::{CommonArgs, SceneArgs};
use crate::inputs::ensure_out_dir;
use crate::io::{write_cloud, write_text, Cloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Ply,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Tangent std of the normal noise in the noisy cloud.
    #[arg(long, default_value_t = 0.01)]
    pub sigma_n: f64,
    #[arg(long, value_enum, default_value_t = Format::Ply)]
    pub format: Format,
}

/// Writes `clean.*`, `noisy.*` and `manifest.json` to the output directory.
pub fn run(args: &SimulateArgs) -> Result<()> {
    let cfg = args.common.resolve(Some(&args.scene))?;
    let scene = cfg.scene.clone().context("simulate needs a scene (--kind)")?;
    let sample = generate_scene(&scene.spec(cfg.seed)).map_err(anyhow::Error::new)?;
    let noise = NoiseSpec::new(cfg.sensor.sigma_p, args.sigma_n, cfg.seed.wrapping_add(1));
    let noisy = apply_noise(&sample, &noise).map_err(anyhow::Error::new)?;

    ensure_out_dir(&cfg.out)?;
    let ext = match args.format {
        Format::Ply => "ply",
        Format::Csv => "csv",
    };
    let clean_name = format!("clean.{ext}");
    let noisy_name = format!("noisy.{ext}");
    write_cloud(
        &cfg.out.join(&clean_name),
        &Cloud::with_normals(sample.points.clone(), sample.normals()),
    )?;
    write_cloud(
        &cfg.out.join(&noisy_name),
        &Cloud::with_normals(
            noisy.iter().map(|f| f.point).collect(),
            noisy.iter().map(|f| f.normal).collect(),
        ),
    )?;
    let manifest = json!({
        "version": 1,
        "scene": scene,
        "seed": cfg.seed,
        "point_count": sample.len(),
        "noise": { "sigma_p": noise.sigma_p, "sigma_n": noise.sigma_n, "seed": noise.seed, "model": "rotation" },
        "null_basis": sample.null_basis.iter().map(|u| array(u.iter())).collect::<Vec<_>>(),
        "sensor_origin": array(sample.sensor_origin.iter()),
        "clean": clean_name,
        "noisy": noisy_name,
    });
    write_text(
        &cfg.out.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    println!(
        "{} points, {} null directions -> {}",
        sample.len(),
        sample.null_basis.len(),
        cfg.out.display()
    );
    Ok(())
}
