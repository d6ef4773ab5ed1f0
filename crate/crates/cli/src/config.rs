//! Versioned JSON run configuration and command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use degen_icp_core::registration::{IcpConfig, RobustCost, SolverMethod};
use degen_icp_core::simulation::{SceneKind, SceneSpec};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Standard,
    Probabilistic,
    EigenTruncate,
    SolutionRemap,
    CondNumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RobustName {
    L2,
    GemanMcclure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SceneName {
    Plane,
    Corridor,
    Cylinder,
    CylinderFloor,
    Room,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub name: MethodName,
    pub s: f64,
    pub lambda_min: f64,
    pub kappa_max: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            name: MethodName::Probabilistic,
            s: 10.0,
            lambda_min: 100.0,
            kappa_max: 100.0,
        }
    }
}

impl MethodConfig {
    pub fn solver(&self) -> SolverMethod {
        match self.name {
            MethodName::Standard => SolverMethod::Standard,
            MethodName::Probabilistic => SolverMethod::Probabilistic { s: self.s },
            MethodName::EigenTruncate => SolverMethod::EigenTruncate { lambda_min: self.lambda_min },
            MethodName::SolutionRemap => SolverMethod::SolutionRemap { lambda_min: self.lambda_min },
            MethodName::CondNumber => SolverMethod::ConditionNumber { kappa_max: self.kappa_max },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub sigma_p: f64,
    pub sigma_i: f64,
    pub sigma_n_max: f64,
    pub sigma_r: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        let d = IcpConfig::default();
        Self {
            sigma_p: d.sigma_p,
            sigma_i: d.sigma_i,
            sigma_n_max: d.sigma_n_max,
            sigma_r: d.sigma_r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcpControls {
    pub k: usize,
    pub max_iterations: usize,
    pub tol_rot: f64,
    pub tol_trans: f64,
    pub max_correspondence_distance: f64,
    pub robust: RobustName,
    /// Kernel scale; `3·sigma_p` when absent.
    pub robust_scale: Option<f64>,
    pub residual_weight: f64,
}

impl Default for IcpControls {
    fn default() -> Self {
        let d = IcpConfig::default();
        Self {
            k: d.k,
            max_iterations: d.max_iterations,
            tol_rot: d.tol_rot,
            tol_trans: d.tol_trans,
            max_correspondence_distance: d.max_correspondence_distance,
            robust: RobustName::GemanMcclure,
            robust_scale: None,
            residual_weight: d.residual_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub kind: SceneName,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub size: Option<f64>,
    #[serde(default)]
    pub length: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub height: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub edge_margin: f64,
}

fn default_points() -> usize {
    2000
}

impl SceneConfig {
    pub fn new(kind: SceneName) -> Self {
        Self {
            kind,
            points: default_points(),
            size: None,
            length: None,
            width: None,
            height: None,
            radius: None,
            edge_margin: 0.0,
        }
    }

    /// Scene geometry with per-kind default dimensions.
    pub fn kind(&self) -> SceneKind {
        let or = |v: Option<f64>, d: f64| v.unwrap_or(d);
        match self.kind {
            SceneName::Plane => SceneKind::InfinitePlane {
                size: or(self.size, 10.0),
                height: or(self.height, 1.0),
            },
            SceneName::Corridor => SceneKind::Corridor {
                length: or(self.length, 10.0),
                width: or(self.width, 3.0),
                height: or(self.height, 2.5),
            },
            SceneName::Cylinder => SceneKind::Cylinder {
                radius: or(self.radius, 8.0),
                height: or(self.height, 16.0),
            },
            SceneName::CylinderFloor => SceneKind::CylinderWithFloor {
                radius: or(self.radius, 8.0),
                height: or(self.height, 16.0),
            },
            SceneName::Room => SceneKind::Room {
                length: or(self.length, 4.0),
                width: or(self.width, 3.0),
                height: or(self.height, 2.5),
            },
        }
    }

    pub fn spec(&self, seed: u64) -> SceneSpec {
        SceneSpec::new(self.kind(), self.points, seed).with_edge_margin(self.edge_margin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub method: MethodConfig,
    pub sensor: SensorConfig,
    pub icp: IcpControls,
    pub scene: Option<SceneConfig>,
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub init: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            method: MethodConfig::default(),
            sensor: SensorConfig::default(),
            icp: IcpControls::default(),
            scene: None,
            source: None,
            target: None,
            init: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("invalid config document")?;
        ensure!(
            cfg.version == CONFIG_VERSION,
            "unsupported config version {} (expected {CONFIG_VERSION})",
            cfg.version
        );
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("loading {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn icp_config(&self) -> IcpConfig {
        let scale = self.icp.robust_scale.unwrap_or(3.0 * self.sensor.sigma_p);
        IcpConfig {
            method: self.method.solver(),
            sigma_p: self.sensor.sigma_p,
            sigma_i: self.sensor.sigma_i,
            sigma_n_max: self.sensor.sigma_n_max,
            sigma_r: self.sensor.sigma_r,
            k: self.icp.k,
            max_iterations: self.icp.max_iterations,
            tol_rot: self.icp.tol_rot,
            tol_trans: self.icp.tol_trans,
            max_correspondence_distance: self.icp.max_correspondence_distance,
            robust: match self.icp.robust {
                RobustName::L2 => RobustCost::l2(),
                // A zero point noise gives a zero default scale; fall back
                // to plain least squares in that case.
                RobustName::GemanMcclure if scale > 0.0 => RobustCost::geman_mcclure(scale),
                RobustName::GemanMcclure => RobustCost::l2(),
            },
            residual_weight: self.icp.residual_weight,
        }
    }

    /// Range checks and file existence.
    pub fn validate(&self) -> Result<()> {
        self.icp_config()
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))?;
        for path in [&self.source, &self.target, &self.init].into_iter().flatten() {
            ensure!(path.exists(), "{} does not exist", path.display());
        }
        if let Some(scene) = &self.scene {
            ensure!(scene.points >= 6, "scene.points must be at least 6");
        }
        Ok(())
    }
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodName>,
    /// Signal-to-noise target of the probabilistic method.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub sigma_p: Option<f64>,
    #[arg(long)]
    pub sigma_i: Option<f64>,
    #[arg(long)]
    pub sigma_n_max: Option<f64>,
    #[arg(long)]
    pub sigma_r: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Synthetic scene selection.
#[derive(Debug, Clone, Default, Args)]
pub struct SceneArgs {
    #[arg(long, value_enum)]
    pub kind: Option<SceneName>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub size: Option<f64>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub edge_margin: Option<f64>,
}

impl CommonArgs {
    pub fn resolve(&self, scene: Option<&SceneArgs>) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(self.seed => cfg.seed);
        set!(self.method => cfg.method.name);
        set!(self.s => cfg.method.s);
        set!(self.lambda_min => cfg.method.lambda_min);
        set!(self.kappa_max => cfg.method.kappa_max);
        set!(self.sigma_p => cfg.sensor.sigma_p);
        set!(self.sigma_i => cfg.sensor.sigma_i);
        set!(self.sigma_n_max => cfg.sensor.sigma_n_max);
        set!(self.sigma_r => cfg.sensor.sigma_r);
        set!(self.out.clone() => cfg.out);
        if let Some(args) = scene {
            if let Some(kind) = args.kind {
                match &mut cfg.scene {
                    Some(s) if s.kind == kind => {}
                    slot => *slot = Some(SceneConfig::new(kind)),
                }
            }
            if let Some(s) = &mut cfg.scene {
                set!(args.points => s.points);
                set!(args.edge_margin => s.edge_margin);
                for (src, dst) in [
                    (args.size, &mut s.size),
                    (args.length, &mut s.length),
                    (args.width, &mut s.width),
                    (args.height, &mut s.height),
                    (args.radius, &mut s.radius),
                ] {
                    if src.is_some() {
                        *dst = src;
                    }
                }
            } else if args.points.is_some() || args.edge_margin.is_some() {
                bail!("scene options need --kind or a scene in the config file");
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
