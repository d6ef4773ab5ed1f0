//! Synthetic scenes with known degenerate directions, noise injection and
//! Monte Carlo oracles.
//!
//! All randomness comes from ChaCha8 seeded with the user seed. Trial `i`
//! of a Monte Carlo run uses stream `i + 1` of that generator, so trials can
//! be evaluated in any order (or in parallel) with identical results.
//! [`apply_noise`] uses stream 0.
//!
//! Scene conventions: the sensor sits at the origin, all normals point
//! into the scene interior (toward the sensor side of each surface) and
//! twists are ordered `[δr; δt]`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::degeneracy::{accumulate, feature_covariance, PlaneFeature, DEFAULT_SNR};
use crate::geometry::{exp_so3, skew, twist_adjoint, Mat3, Mat6, Pose, Vec3, Vec6};
use crate::kdtree::KdTree;
use crate::linalg::sym_eigen6;
use crate::registration::{ridge_solve, solve_update, SolverMethod};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneKind {
    /// Square patch of side `size` at `z = −height`.
    InfinitePlane { size: f64, height: f64 },
    /// Floor and two walls along x: walls at `y = ±width/2`, floor at
    /// `z = −height/2`, open at both ends.
    Corridor { length: f64, width: f64, height: f64 },
    /// Wall of a vertical cylinder centred on the z axis,
    /// `z ∈ [−height/2, height/2]`.
    Cylinder { radius: f64, height: f64 },
    /// [`SceneKind::Cylinder`] plus a floor disk at `z = −height/2`.
    CylinderWithFloor { radius: f64, height: f64 },
    /// Closed box centred on the origin.
    Room { length: f64, width: f64, height: f64 },
}

impl SceneKind {
    fn dimensions(&self) -> Vec<f64> {
        match *self {
            SceneKind::InfinitePlane { size, height } => alloc::vec![size, height],
            SceneKind::Cylinder { radius, height } | SceneKind::CylinderWithFloor { radius, height } => {
                alloc::vec![radius, height]
            }
            SceneKind::Corridor { length, width, height } | SceneKind::Room { length, width, height } => {
                alloc::vec![length, width, height]
            }
        }
    }

    /// Basis of the noise-free Hessian's null space.
    pub fn null_basis(&self) -> Vec<Vec6> {
        let e = |i: usize| Vec6::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
        match self {
            SceneKind::InfinitePlane { .. } => alloc::vec![e(2), e(3), e(4)],
            SceneKind::Corridor { .. } => alloc::vec![e(3)],
            SceneKind::Cylinder { .. } => alloc::vec![e(2), e(5)],
            SceneKind::CylinderWithFloor { .. } => alloc::vec![e(2)],
            SceneKind::Room { .. } => Vec::new(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SceneKind::InfinitePlane { .. } => "plane",
            SceneKind::Corridor { .. } => "corridor",
            SceneKind::Cylinder { .. } => "cylinder",
            SceneKind::CylinderWithFloor { .. } => "cylinder-floor",
            SceneKind::Room { .. } => "room",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub point_count: usize,
    pub seed: u64,
    /// Distance kept free of samples along face borders, meters. Keeps
    /// nearest-neighbor patches on a single face.
    pub edge_margin: f64,
}

impl SceneSpec {
    pub fn new(kind: SceneKind, point_count: usize, seed: u64) -> Self {
        Self {
            kind,
            point_count,
            seed,
            edge_margin: 0.0,
        }
    }

    pub fn with_edge_margin(mut self, margin: f64) -> Self {
        self.edge_margin = margin;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSample {
    pub points: Vec<Vec3>,
    /// Exact supporting plane of each point.
    pub true_planes: Vec<Plane>,
    pub null_basis: Vec<Vec6>,
    pub sensor_origin: Vec3,
}

impl SceneSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn normals(&self) -> Vec<Vec3> {
        self.true_planes.iter().map(|p| p.normal).collect()
    }

    /// Noise-free features with unit weight and zero covariance.
    pub fn features(&self) -> Vec<PlaneFeature> {
        self.points
            .iter()
            .zip(&self.true_planes)
            .map(|(p, pl)| PlaneFeature::new(*p, pl.normal, pl.offset))
            .collect()
    }

    pub fn hessian(&self) -> Result<Mat6> {
        Ok(accumulate(&self.features())?.hessian)
    }
}

/// Axis-aligned rectangle `{c + a·s + b·t}` with `s ∈ [−ha, ha]`,
/// `t ∈ [−hb, hb]` and normal `n`.
struct Rect {
    center: Vec3,
    a: Vec3,
    b: Vec3,
    ha: f64,
    hb: f64,
    normal: Vec3,
}

enum Surface {
    Rect(Rect),
    CylinderWall { radius: f64, half_height: f64 },
    Disk { z: f64, radius: f64 },
}

impl Surface {
    fn area(&self) -> f64 {
        match self {
            Surface::Rect(r) => 4.0 * r.ha * r.hb,
            Surface::CylinderWall { radius, half_height } => 4.0 * PI * radius * half_height,
            Surface::Disk { radius, .. } => PI * radius * radius,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, margin: f64) -> (Vec3, Vec3) {
        match self {
            Surface::Rect(r) => {
                let s = uniform(rng, r.ha - margin);
                let t = uniform(rng, r.hb - margin);
                (r.center + r.a * s + r.b * t, r.normal)
            }
            Surface::CylinderWall { radius, half_height } => {
                let theta = rng.random_range(0.0..2.0 * PI);
                let z = uniform(rng, half_height - margin);
                let (s, c) = theta.sin_cos();
                (Vec3::new(radius * c, radius * s, z), Vec3::new(-c, -s, 0.0))
            }
            Surface::Disk { z, radius } => {
                let r = (radius - margin) * rng.random::<f64>().sqrt();
                let theta = rng.random_range(0.0..2.0 * PI);
                let (s, c) = theta.sin_cos();
                (Vec3::new(r * c, r * s, *z), Vec3::z())
            }
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, half: f64) -> f64 {
    rng.random_range(-half..=half)
}

fn rect(center: Vec3, a: Vec3, b: Vec3, ha: f64, hb: f64, normal: Vec3) -> Surface {
    Surface::Rect(Rect {
        center,
        a,
        b,
        ha,
        hb,
        normal,
    })
}

fn surfaces(kind: &SceneKind) -> Vec<Surface> {
    let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
    match *kind {
        SceneKind::InfinitePlane { size, height } => {
            alloc::vec![rect(-z * height, x, y, size / 2.0, size / 2.0, z)]
        }
        SceneKind::Corridor { length, width, height } => {
            let (hl, hw, hh) = (length / 2.0, width / 2.0, height / 2.0);
            alloc::vec![
                rect(-z * hh, x, y, hl, hw, z),
                rect(y * hw, x, z, hl, hh, -y),
                rect(-y * hw, x, z, hl, hh, y),
            ]
        }
        SceneKind::Cylinder { radius, height } => alloc::vec![Surface::CylinderWall {
            radius,
            half_height: height / 2.0
        }],
        SceneKind::CylinderWithFloor { radius, height } => alloc::vec![
            Surface::CylinderWall {
                radius,
                half_height: height / 2.0
            },
            Surface::Disk {
                z: -height / 2.0,
                radius
            },
        ],
        SceneKind::Room { length, width, height } => {
            let (hl, hw, hh) = (length / 2.0, width / 2.0, height / 2.0);
            alloc::vec![
                rect(-z * hh, x, y, hl, hw, z),
                rect(z * hh, x, y, hl, hw, -z),
                rect(y * hw, x, z, hl, hh, -y),
                rect(-y * hw, x, z, hl, hh, y),
                rect(x * hl, y, z, hw, hh, -x),
                rect(-x * hl, y, z, hw, hh, x),
            ]
        }
    }
}

/// Uniform samples over the scene surfaces with exact planes.
pub fn generate_scene(spec: &SceneSpec) -> Result<SceneSample> {
    let dims = spec.kind.dimensions();
    if dims.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidDimensions("scene dimensions must be positive"));
    }
    if spec.point_count < 6 {
        return Err(Error::InvalidDimensions("point_count must be at least 6"));
    }
    let margin = spec.edge_margin;
    let min_half = match spec.kind {
        SceneKind::InfinitePlane { size, .. } => size / 2.0,
        SceneKind::Cylinder { radius, height } | SceneKind::CylinderWithFloor { radius, height } => {
            radius.min(height / 2.0)
        }
        SceneKind::Corridor { length, width, height } | SceneKind::Room { length, width, height } => {
            length.min(width).min(height) / 2.0
        }
    };
    if !(margin >= 0.0 && margin < min_half) {
        return Err(Error::InvalidDimensions("edge margin must be smaller than every half extent"));
    }
    let faces = surfaces(&spec.kind);
    let areas: Vec<f64> = faces.iter().map(Surface::area).collect();
    let total: f64 = areas.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(spec.point_count);
    let mut true_planes = Vec::with_capacity(spec.point_count);
    for _ in 0..spec.point_count {
        let mut pick = rng.random::<f64>() * total;
        let mut face = faces.len() - 1;
        for (i, a) in areas.iter().enumerate() {
            if pick < *a {
                face = i;
                break;
            }
            pick -= a;
        }
        let (p, n) = faces[face].sample(&mut rng, margin);
        points.push(p);
        true_planes.push(Plane {
            normal: n,
            offset: n.dot(&p),
        });
    }
    Ok(SceneSample {
        points,
        true_planes,
        null_basis: spec.kind.null_basis(),
        sensor_origin: Vec3::zeros(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalNoiseModel {
    /// `n̂ = n + [n]×·η`; not unit length.
    SmallAngle,
    /// `n̂ = Exp(η)ᵀ·n`; unit length.
    #[default]
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma_p: f64,
    pub sigma_n: f64,
    pub seed: u64,
    pub model: NormalNoiseModel,
}

impl NoiseSpec {
    pub fn new(sigma_p: f64, sigma_n: f64, seed: u64) -> Self {
        Self {
            sigma_p,
            sigma_n,
            seed,
            model: NormalNoiseModel::default(),
        }
    }

    pub fn with_model(mut self, model: NormalNoiseModel) -> Self {
        self.model = model;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.sigma_p >= 0.0 && self.sigma_n >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter("noise levels must be non-negative"))
        }
    }
}

/// Generator for trial `trial` (stream `trial + 1`).
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_add(1));
    rng
}

fn normal3(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::from_fn(|_, _| rng.sample(StandardNormal))
}

/// Orthonormal pair spanning the plane orthogonal to unit `n`.
fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let t1 = n.cross(&helper).normalize();
    (t1, n.cross(&t1))
}

fn perturb_normal(n: &Vec3, sigma_n: f64, model: NormalNoiseModel, rng: &mut ChaCha8Rng) -> Vec3 {
    let (t1, t2) = tangent_basis(n);
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let eta = (t1 * a + t2 * b) * sigma_n;
    match model {
        NormalNoiseModel::SmallAngle => n + n.cross(&eta),
        NormalNoiseModel::Rotation => exp_so3(&eta).transpose() * n,
    }
}

/// Noisy copies `(p̂, n̂)` of every feature drawn from `rng`.
fn draw<'a>(
    features: &'a [PlaneFeature],
    noise: &'a NoiseSpec,
    rng: &'a mut ChaCha8Rng,
) -> impl Iterator<Item = (&'a PlaneFeature, Vec3, Vec3)> + 'a {
    features.iter().map(move |f| {
        let p = f.point + normal3(rng) * noise.sigma_p;
        let n = perturb_normal(&f.normal, noise.sigma_n, noise.model, rng);
        (f, p, n)
    })
}

/// Noisy features of `sample`. Each noisy plane passes through the true
/// point; covariances are `σp²·I` and `σn²·(I − n̂·n̂ᵀ)`.
pub fn apply_noise(sample: &SceneSample, noise: &NoiseSpec) -> Result<Vec<PlaneFeature>> {
    noise.validate()?;
    if noise.sigma_p == 0.0 && noise.sigma_n == 0.0 {
        return Ok(sample.features());
    }
    let truth = sample.features();
    let mut rng = trial_rng(noise.seed, u64::MAX);
    Ok(draw(&truth, noise, &mut rng)
        .map(|(f, p, n)| {
            PlaneFeature::new(p, n, n.dot(&f.point)).with_isotropic_noise(noise.sigma_p, noise.sigma_n)
        })
        .collect())
}

/// Copies of `points` with isotropic Gaussian noise of std `sigma`.
pub fn jitter_points(points: &[Vec3], sigma: f64, seed: u64) -> Vec<Vec3> {
    let mut rng = trial_rng(seed, u64::MAX - 1);
    points.iter().map(|p| p + normal3(&mut rng) * sigma).collect()
}

/// `Ĥ` of one Monte Carlo trial over noise-free `features`.
pub fn trial_hessian(features: &[PlaneFeature], noise: &NoiseSpec, trial: u64) -> Mat6 {
    let mut rng = trial_rng(noise.seed, trial);
    let mut h = Mat6::zeros();
    for (f, p, n) in draw(features, noise, &mut rng) {
        let mut v = Vec6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&(p.cross(&n) * f.weight));
        v.fixed_rows_mut::<3>(3).copy_from(&(n * f.weight));
        h.syger(1.0, &v, &v, 1.0);
    }
    h.fill_upper_triangle_with_lower_triangle();
    h
}

/// Running mean and unbiased variance (Welford).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

/// Running mean of matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixMean {
    count: u64,
    mean: Mat6,
}

impl Default for MatrixMean {
    fn default() -> Self {
        Self {
            count: 0,
            mean: Mat6::zeros(),
        }
    }
}

impl MatrixMean {
    pub fn push(&mut self, x: &Mat6) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Mat6 {
        self.mean
    }
}

/// Sample mean and unbiased variance of `uᵀ·Ĥ·u` over `trials` draws.
pub fn mc_hessian_stats(
    features: &[PlaneFeature],
    noise: &NoiseSpec,
    u: &Vec6,
    trials: u64,
) -> Result<(f64, f64)> {
    let stats = mc_quadratic_stats(features, noise, core::slice::from_ref(u), trials)?;
    Ok((stats[0].mean(), stats[0].variance()))
}

/// [`mc_hessian_stats`] for several directions sharing the same trials.
pub fn mc_quadratic_stats(
    features: &[PlaneFeature],
    noise: &NoiseSpec,
    directions: &[Vec6],
    trials: u64,
) -> Result<Vec<RunningStats>> {
    noise.validate()?;
    if features.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let mut stats = alloc::vec![RunningStats::default(); directions.len()];
    for trial in 0..trials {
        let h = trial_hessian(features, noise, trial);
        for (s, u) in stats.iter_mut().zip(directions) {
            s.push(u.dot(&(h * u)));
        }
    }
    Ok(stats)
}

/// Monte Carlo mean of `Ĥ`.
pub fn mc_mean_hessian(features: &[PlaneFeature], noise: &NoiseSpec, trials: u64) -> Result<Mat6> {
    noise.validate()?;
    if features.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let mut mean = MatrixMean::default();
    for trial in 0..trials {
        mean.push(&trial_hessian(features, noise, trial));
    }
    Ok(mean.mean())
}

/// Noise-free features with points in `[−extent, extent]³`, random unit
/// normals and offsets within `±0.1·extent` of the point.
pub fn random_feature_set(seed: u64, count: usize, extent: f64) -> Vec<PlaneFeature> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = Vec3::from_fn(|_, _| uniform(&mut rng, extent));
            let n = random_unit3(&mut rng);
            let d = n.dot(&p) + uniform(&mut rng, 0.1 * extent);
            PlaneFeature::new(p, n, d)
        })
        .collect()
}

fn random_unit3(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = normal3(rng);
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

pub fn random_unit_directions(seed: u64, count: usize) -> Vec<Vec6> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v = Vec6::from_fn(|_, _| rng.sample(StandardNormal));
            let norm = v.norm();
            if norm > 1e-6 {
                break v / norm;
            }
        })
        .collect()
}

/// `F = w·[[p]×; I]`, so that `v = F·n`.
fn f_matrix(p: &Vec3, w: f64) -> nalgebra::Matrix6x3<f64> {
    let mut f = nalgebra::Matrix6x3::zeros();
    f.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(p));
    f.fixed_view_mut::<3, 3>(3, 0).copy_from(&Mat3::identity());
    f * w
}

/// `H_N = Σ σn²·Fᵢ·(I − nᵢ·nᵢᵀ)·Fᵢᵀ`.
pub fn spurious_information(features: &[PlaneFeature], sigma_n: f64) -> Mat6 {
    let mut h = Mat6::zeros();
    for f in features {
        let fm = f_matrix(&f.point, f.weight);
        let tangent = Mat3::identity() - f.normal * f.normal.transpose();
        h += fm * tangent * fm.transpose() * (sigma_n * sigma_n);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpuriousConfig {
    pub sigma_n: f64,
    /// Trials for the expectation check.
    pub trials: u64,
    /// Trials for the paired solver comparison.
    pub solve_trials: u64,
    pub seed: u64,
    pub s: f64,
    /// Translation applied to every point before solving.
    pub perturbation: Vec3,
    pub model: NormalNoiseModel,
    pub ridge: f64,
}

impl Default for SpuriousConfig {
    fn default() -> Self {
        Self {
            sigma_n: 0.01,
            trials: 10_000,
            solve_trials: 200,
            seed: 0,
            s: DEFAULT_SNR,
            perturbation: Vec3::new(0.05, 0.05, 0.05),
            model: NormalNoiseModel::SmallAngle,
            ridge: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousReport {
    /// Noise-free Hessian at the perturbed points.
    pub hessian: Mat6,
    pub spurious: Mat6,
    pub mean_hessian: Mat6,
    /// `‖mean(Ĥ) − (H + H_N)‖_F`.
    pub expectation_error: f64,
    /// `expectation_error / ‖H_N‖_F`, zero when `H_N = 0`.
    pub relative_error: f64,
    /// Bias direction `x_N`.
    pub x_n: Vec6,
    /// Orthonormal null directions of `H` at the perturbed points.
    pub null_directions: Vec<Vec6>,
    /// Mean `|uᵀ·x̂|` of the ridge-regularized standard solve, per null
    /// direction.
    pub standard_null: Vec<f64>,
    /// Same for the probabilistic update.
    pub probabilistic_null: Vec<f64>,
    /// Mean norm of the standard update's projection onto the null space.
    pub standard_null_norm: f64,
    pub probabilistic_null_norm: f64,
}

/// Demonstrates the bias that normal noise injects along null directions.
///
/// Points `pᵢ` are the scene samples shifted by the configured
/// perturbation. The on-plane point `qᵢ` of the right-hand side is the
/// sample nearest the foot of the perpendicular from `pᵢ`, projected onto
/// plane `i`. Point noise is zero.
pub fn spurious_info_demo(sample: &SceneSample, config: &SpuriousConfig) -> Result<SpuriousReport> {
    if sample.null_basis.is_empty() {
        return Err(Error::RequiresDegenerateScene);
    }
    if !(config.sigma_n >= 0.0) || !(config.ridge > 0.0) {
        return Err(Error::InvalidParameter("sigma_n must be non-negative and ridge positive"));
    }
    let delta = config.perturbation;
    let shifted: Vec<PlaneFeature> = sample
        .points
        .iter()
        .zip(&sample.true_planes)
        .map(|(q, pl)| PlaneFeature::new(q + delta, pl.normal, pl.offset))
        .collect();
    let tree = KdTree::build(&sample.points);
    let anchors: Vec<Vec3> = shifted
        .iter()
        .map(|f| {
            let foot = f.point - f.normal * f.residual();
            let g = tree.point(tree.knn(&foot, 1)[0].index);
            g - f.normal * (f.normal.dot(g) - f.offset)
        })
        .collect();
    let hessian = accumulate(&shifted)?.hessian;
    let spurious = spurious_information(&shifted, config.sigma_n);
    let noise = NoiseSpec {
        sigma_p: 0.0,
        sigma_n: config.sigma_n,
        seed: config.seed,
        model: config.model,
    };
    let mean_hessian = mc_mean_hessian(&shifted, &noise, config.trials)?;
    let expectation_error = (mean_hessian - hessian - spurious).norm();
    let hn = spurious.norm();
    let relative_error = if hn > 0.0 { expectation_error / hn } else { 0.0 };

    let mut bias_rhs = Vec6::zeros();
    for (f, q) in shifted.iter().zip(&anchors) {
        let fm = f_matrix(&f.point, f.weight);
        let tangent = Mat3::identity() - f.normal * f.normal.transpose();
        bias_rhs += fm * tangent * (f.point - q) * (f.weight * config.sigma_n * config.sigma_n);
    }
    let hn_eig = sym_eigen6(&spurious);
    let floor = 1e-12 * hn_eig.values[0].max(0.0);
    let x_n = hn_eig.reconstruct_with(|_, l| if l > floor { 1.0 / l } else { 0.0 }) * bias_rhs;

    let ad = twist_adjoint(&Pose::from_translation(delta));
    let mut null_directions: Vec<Vec6> = Vec::with_capacity(sample.null_basis.len());
    for u in &sample.null_basis {
        let mut v = ad * u;
        for w in &null_directions {
            v -= w * w.dot(&v);
        }
        null_directions.push(v.normalize());
    }
    let mut standard = alloc::vec![0.0; null_directions.len()];
    let mut probabilistic = alloc::vec![0.0; null_directions.len()];
    let (mut standard_norm, mut probabilistic_norm) = (0.0, 0.0);
    let solve_noise = NoiseSpec {
        seed: config.seed ^ 0x5eed_5eed_5eed_5eed,
        ..noise
    };
    let method = SolverMethod::Probabilistic { s: config.s };
    for trial in 0..config.solve_trials {
        let mut rng = trial_rng(solve_noise.seed, trial);
        let noisy: Vec<PlaneFeature> = draw(&shifted, &solve_noise, &mut rng)
            .zip(&anchors)
            .map(|((f, p, n), q)| {
                PlaneFeature::new(p, n, n.dot(q))
                    .with_weight(f.weight)
                    .with_isotropic_noise(0.0, config.sigma_n)
            })
            .collect();
        let bundle = accumulate(&noisy)?;
        let xs = ridge_solve(&bundle, config.ridge)?.to_vector();
        let xp = solve_update(&bundle, method, 1.0)?.twist.to_vector();
        let (mut ss, mut sp) = (0.0, 0.0);
        for (k, u) in null_directions.iter().enumerate() {
            let (cs, cp) = (u.dot(&xs), u.dot(&xp));
            standard[k] += cs.abs();
            probabilistic[k] += cp.abs();
            ss += cs * cs;
            sp += cp * cp;
        }
        standard_norm += ss.sqrt();
        probabilistic_norm += sp.sqrt();
    }
    let n = config.solve_trials.max(1) as f64;
    Ok(SpuriousReport {
        hessian,
        spurious,
        mean_hessian,
        expectation_error,
        relative_error,
        x_n,
        null_directions,
        standard_null: standard.into_iter().map(|v| v / n).collect(),
        probabilistic_null: probabilistic.into_iter().map(|v| v / n).collect(),
        standard_null_norm: standard_norm / n,
        probabilistic_null_norm: probabilistic_norm / n,
    })
}

/// `Σᵢ` summed over features, i.e. the expected Hessian perturbation.
pub fn expected_perturbation(features: &[PlaneFeature]) -> Mat6 {
    features.iter().map(|f| feature_covariance(f).sigma).sum()
}
