use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use degen_icp_core::degeneracy::{accumulate, analyze};
use degen_icp_core::simulation::generate_scene;

use crate::config::{CommonArgs, SceneArgs};
use crate::inputs::ensure_out_dir;
use crate::io::write_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Parameter {
    S,
    SigmaN,
    SigmaP,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, value_enum)]
    pub param: Parameter,
    /// Comma-separated values; may be empty.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub values: String,
    /// Tangent std of the normal noise when not swept.
    #[arg(long, default_value_t = 0.01)]
    pub sigma_n: f64,
}

pub const HEADER: &str = "value,direction,eigenvalue,probability";

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().with_context(|| format!("bad sweep value {v:?}")))
        .collect()
}

/// Probability of every eigen direction of the noise-free scene Hessian
/// for each value; writes `sweep.csv`. Probabilities must not increase
/// with `s`; for the noise parameters monotonicity is only reported.
pub fn run(args: &SweepArgs) -> Result<()> {
    let cfg = args.common.resolve(Some(&args.scene))?;
    let values = parse_values(&args.values)?;
    let mut csv = String::from(HEADER);
    csv.push('\n');
    let mut table: Vec<(f64, [f64; 6])> = Vec::new();
    if !values.is_empty() {
        let scene = cfg.scene.as_ref().context("sweep needs a scene (--kind)")?;
        let truth = generate_scene(&scene.spec(cfg.seed)).map_err(anyhow::Error::new)?.features();
        for &value in &values {
            let (mut s, mut sp, mut sn) = (cfg.method.s, cfg.sensor.sigma_p, args.sigma_n);
            match args.param {
                Parameter::S => s = value,
                Parameter::SigmaN => sn = value,
                Parameter::SigmaP => sp = value,
            }
            let features: Vec<_> = truth.iter().map(|f| f.with_isotropic_noise(sp, sn)).collect();
            let bundle = accumulate(&features).map_err(anyhow::Error::new)?;
            let a = analyze(&bundle, s).map_err(anyhow::Error::new)?;
            let mut row = [0.0; 6];
            for (k, r) in a.reports.iter().enumerate() {
                let _ = writeln!(csv, "{value:?},{k},{:?},{:?}", a.eigen.values[k], r.probability);
                row[k] = r.probability;
            }
            table.push((value, row));
        }
    }
    ensure_out_dir(&cfg.out)?;
    write_text(&cfg.out.join("sweep.csv"), &csv)?;

    table.sort_by(|a, b| a.0.total_cmp(&b.0));
    let violations: Vec<usize> = (0..6)
        .filter(|&k| table.windows(2).any(|w| w[1].1[k] > w[0].1[k]))
        .collect();
    println!(
        "{} values; probabilities nonincreasing in every direction: {}",
        values.len(),
        if violations.is_empty() { "yes".to_string() } else { format!("no (directions {violations:?})") }
    );
    if args.param == Parameter::S && !violations.is_empty() {
        bail!("probability increased with s in directions {violations:?}");
    }
    Ok(())
}
