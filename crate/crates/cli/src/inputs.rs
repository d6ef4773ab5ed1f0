//! Source/target resolution shared by the commands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use degen_icp_core::geometry::{Pose, Vec3};
use degen_icp_core::simulation::{generate_scene, jitter_points};

use crate::config::RunConfig;
use crate::io::read_cloud;

/// Cloud and pose files; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// Source cloud, sensor frame (.ply or .csv).
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Target cloud, world frame (.ply or .csv).
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Initial pose of the source in the target frame (16 numbers).
    #[arg(long)]
    pub init: Option<PathBuf>,
}

impl InputArgs {
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        for (src, dst) in [
            (&self.source, &mut cfg.source),
            (&self.target, &mut cfg.target),
            (&self.init, &mut cfg.init),
        ] {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub struct Clouds {
    pub source: Vec<Vec3>,
    pub target: Vec<Vec3>,
}

/// Clouds from `source`/`target` files, or two independent samples of the
/// configured scene with `sigma_p` point noise (seeds `seed` and
/// `seed + 1` for geometry, `seed + 2` and `seed + 3` for noise).
pub fn load_clouds(cfg: &RunConfig) -> Result<Clouds> {
    match (&cfg.source, &cfg.target, &cfg.scene) {
        (Some(s), Some(t), _) => Ok(Clouds {
            source: read_cloud(s)?.points,
            target: read_cloud(t)?.points,
        }),
        (None, None, Some(scene)) => {
            let seed = cfg.seed;
            let a = generate_scene(&scene.spec(seed)).map_err(anyhow::Error::new)?;
            let b = generate_scene(&scene.spec(seed.wrapping_add(1))).map_err(anyhow::Error::new)?;
            let sigma = cfg.sensor.sigma_p;
            Ok(Clouds {
                source: jitter_points(&a.points, sigma, seed.wrapping_add(2)),
                target: jitter_points(&b.points, sigma, seed.wrapping_add(3)),
            })
        }
        (Some(_), None, _) | (None, Some(_), _) => bail!("--source and --target must be given together"),
        (None, None, None) => bail!("no input: give --source/--target or a scene (--kind)"),
    }
}

pub fn initial_pose(cfg: &RunConfig) -> Result<Pose> {
    match &cfg.init {
        Some(path) => crate::io::read_pose(path),
        None => Ok(Pose::identity()),
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
