//! Point-to-plane ICP with pluggable update rules.
//!
//! Every iteration associates each source point with a plane fitted to its
//! nearest target points, expresses the resulting features in the sensor
//! frame, builds the Gauss-Newton system and solves it with one of:
//!
//! * [`SolverMethod::Standard`]: `x = Ĥ⁻¹g`.
//! * [`SolverMethod::Probabilistic`]: `x = Û·P·Λ̂⁻¹·Ûᵀ·g`, with `P` the
//!   per-direction probabilities from [`crate::degeneracy::analyze`].
//! * [`SolverMethod::EigenTruncate`]: truncated pseudo-inverse keeping
//!   eigenvalues above a fixed threshold.
//! * [`SolverMethod::SolutionRemap`]: full solve, then projection onto the
//!   eigenvectors above the threshold.
//! * [`SolverMethod::ConditionNumber`]: truncation by eigenvalue ratio.

use alloc::vec::Vec;


use crate::degeneracy::{
    accumulate, analyze, Analysis, DirectionReport, HessianBundle, PlaneFeature, DEFAULT_SNR,
};
use crate::geometry::{
    exp_se3, frame_change_matrix, twist_adjoint, Mat3, Mat6, Pose, Twist, Vec3, Vec6,
};
use crate::kdtree::KdTree;
use crate::linalg::SymEigen6;
use crate::normals::{fit_plane, is_outlier, normal_covariance};
use crate::{Error, Result};

/// Smallest eigenvalue the standard solve accepts.
pub const SINGULAR_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobustKind {
    L2,
    GemanMcClure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustCost {
    pub kind: RobustKind,
    pub scale: f64,
}

impl RobustCost {
    pub fn l2() -> Self {
        Self {
            kind: RobustKind::L2,
            scale: 1.0,
        }
    }

    pub fn geman_mcclure(scale: f64) -> Self {
        Self {
            kind: RobustKind::GemanMcClure,
            scale,
        }
    }
}

/// `w_ρ = sqrt(ρ'(u)/u)`, evaluated on `u/scale`.
pub fn robust_weight(cost: &RobustCost, u: f64) -> f64 {
    match cost.kind {
        RobustKind::L2 => 1.0,
        RobustKind::GemanMcClure => {
            let r = u / cost.scale;
            1.0 / (1.0 + r * r)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverMethod {
    Standard,
    Probabilistic { s: f64 },
    EigenTruncate { lambda_min: f64 },
    SolutionRemap { lambda_min: f64 },
    ConditionNumber { kappa_max: f64 },
}

impl Default for SolverMethod {
    fn default() -> Self {
        SolverMethod::Probabilistic { s: DEFAULT_SNR }
    }
}

impl SolverMethod {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SolverMethod::Standard => true,
            SolverMethod::Probabilistic { s } => s > 0.0 && s.is_finite(),
            SolverMethod::EigenTruncate { lambda_min } | SolverMethod::SolutionRemap { lambda_min } => {
                lambda_min >= 0.0 && lambda_min.is_finite()
            }
            SolverMethod::ConditionNumber { kappa_max } => kappa_max >= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("solver threshold out of range"))
        }
    }

    /// Signal-to-noise target used for the direction reports.
    pub fn snr(&self) -> f64 {
        match *self {
            SolverMethod::Probabilistic { s } => s,
            _ => DEFAULT_SNR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateSolution {
    pub twist: Twist,
    /// Weight applied to each eigen direction (`P` for the probabilistic
    /// update, a 0/1 indicator for the threshold baselines).
    pub probabilities: Vec6,
    pub reports: [DirectionReport; 6],
    pub eigen: SymEigen6,
    pub information: Mat6,
}

pub fn linearize(features: &[PlaneFeature]) -> Result<HessianBundle> {
    accumulate(features)
}

/// `Û·P·Λ̂⁻¹·Ûᵀ·g`. Directions with non-positive eigenvalue or zero weight
/// contribute nothing.
pub fn attenuated_update(eigen: &SymEigen6, weights: &Vec6, rhs: &Vec6) -> Vec6 {
    let mut x = Vec6::zeros();
    for k in 0..6 {
        let (p, lambda) = (weights[k], eigen.values[k]);
        if p == 0.0 || !(lambda > 0.0) {
            continue;
        }
        let u = eigen.vectors.column(k);
        x += u * (p * u.dot(rhs) / lambda);
    }
    x
}

/// `(1/σr²)·Û·P·Λ̂·Ûᵀ`.
pub fn information_matrix(weights: &Vec6, eigen: &SymEigen6, sigma_r: f64) -> Mat6 {
    let inv = 1.0 / (sigma_r * sigma_r);
    let info = eigen.reconstruct_with(|k, l| inv * weights[k] * l.max(0.0));
    (info + info.transpose()) * 0.5
}

fn indicator(eigen: &SymEigen6, keep: impl Fn(f64) -> bool) -> Vec6 {
    Vec6::from_fn(|k, _| if keep(eigen.values[k]) { 1.0 } else { 0.0 })
}

pub fn solve_update(
    bundle: &HessianBundle,
    method: SolverMethod,
    sigma_r: f64,
) -> Result<UpdateSolution> {
    method.validate()?;
    if !(sigma_r > 0.0) {
        return Err(Error::InvalidParameter("sigma_r must be positive"));
    }
    let Analysis { eigen, reports } = analyze(bundle, method.snr())?;
    let g = &bundle.rhs;
    let (weights, x) = match method {
        SolverMethod::Standard => {
            let smallest = eigen.values[5];
            if !(smallest > SINGULAR_EIGENVALUE) {
                return Err(Error::SingularHessian(smallest));
            }
            let w = Vec6::repeat(1.0);
            (w, attenuated_update(&eigen, &w, g))
        }
        SolverMethod::Probabilistic { .. } => {
            let w = Vec6::from_fn(|k, _| reports[k].probability);
            (w, attenuated_update(&eigen, &w, g))
        }
        SolverMethod::EigenTruncate { lambda_min } => {
            let w = indicator(&eigen, |l| l > lambda_min);
            (w, attenuated_update(&eigen, &w, g))
        }
        SolverMethod::SolutionRemap { lambda_min } => {
            let w = indicator(&eigen, |l| l > lambda_min);
            let full = full_solve(&bundle.hessian, &eigen, g);
            let mut x = Vec6::zeros();
            for k in 0..6 {
                if w[k] == 1.0 {
                    let u = eigen.vectors.column(k);
                    x += u * u.dot(&full);
                }
            }
            (w, x)
        }
        SolverMethod::ConditionNumber { kappa_max } => {
            let largest = eigen.values[0];
            let w = indicator(&eigen, |l| l > 0.0 && largest / l <= kappa_max);
            (w, attenuated_update(&eigen, &w, g))
        }
    };
    Ok(UpdateSolution {
        twist: Twist::from_vector(&x),
        probabilities: weights,
        reports,
        eigen,
        information: information_matrix(&weights, &eigen, sigma_r),
    })
}

/// Direct solve of the full system; pseudo-inverse when Cholesky fails.
fn full_solve(h: &Mat6, eigen: &SymEigen6, g: &Vec6) -> Vec6 {
    match h.cholesky() {
        Some(c) => c.solve(g),
        None => {
            let floor = SINGULAR_EIGENVALUE * eigen.values[0].max(0.0);
            let w = indicator(eigen, |l| l > floor);
            attenuated_update(eigen, &w, g)
        }
    }
}

/// `(Ĥ + ridge·I)⁻¹·g`.
pub fn ridge_solve(bundle: &HessianBundle, ridge: f64) -> Result<Twist> {
    let h = bundle.hessian + Mat6::identity() * ridge;
    let c = h.cholesky().ok_or(Error::SingularHessian(ridge))?;
    Ok(Twist::from_vector(&c.solve(&bundle.rhs)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpConfig {
    pub method: SolverMethod,
    /// Point noise std, meters.
    pub sigma_p: f64,
    /// Range noise used in normal covariance estimation, meters.
    pub sigma_i: f64,
    /// Normals with worst-case std above this are rejected.
    pub sigma_n_max: f64,
    /// Point-to-plane residual std for the information matrix, meters.
    pub sigma_r: f64,
    /// Neighbors per plane fit.
    pub k: usize,
    pub max_iterations: usize,
    pub tol_rot: f64,
    pub tol_trans: f64,
    pub max_correspondence_distance: f64,
    pub robust: RobustCost,
    /// Residual weight `w_r` shared by all features.
    pub residual_weight: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        let sigma_p = 0.01;
        Self {
            method: SolverMethod::default(),
            sigma_p,
            sigma_i: 0.01,
            sigma_n_max: 0.10,
            sigma_r: 0.015,
            k: 5,
            max_iterations: 30,
            tol_rot: 1e-4,
            tol_trans: 1e-4,
            max_correspondence_distance: 1.0,
            robust: RobustCost::geman_mcclure(3.0 * sigma_p),
            residual_weight: 1.0,
        }
    }
}

impl IcpConfig {
    pub fn validate(&self) -> Result<()> {
        self.method.validate()?;
        let positive = [
            self.sigma_n_max,
            self.sigma_r,
            self.tol_rot,
            self.tol_trans,
            self.max_correspondence_distance,
            self.robust.scale,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("thresholds must be positive"));
        }
        if !(self.sigma_p >= 0.0) || !(self.sigma_i >= 0.0) || !(self.residual_weight >= 0.0) {
            return Err(Error::InvalidParameter("noise levels must be non-negative"));
        }
        if self.k < 3 {
            return Err(Error::InvalidParameter("k must be at least 3"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive"));
        }
        Ok(())
    }
}

/// Target cloud with its spatial index.
#[derive(Debug, Clone)]
pub struct PlaneMap {
    tree: KdTree,
}

impl PlaneMap {
    pub fn new(target: &[Vec3]) -> Self {
        Self {
            tree: KdTree::build(target),
        }
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorrespondenceStats {
    pub accepted: usize,
    pub too_far: usize,
    pub fit_failed: usize,
    pub outliers: usize,
}

/// Associates every source point (sensor frame) with a plane of the map at
/// `pose` and returns the features in the sensor frame.
pub fn build_features(
    source: &[Vec3],
    map: &PlaneMap,
    pose: &Pose,
    config: &IcpConfig,
) -> (Vec<PlaneFeature>, CorrespondenceStats) {
    let mut stats = CorrespondenceStats::default();
    let mut features = Vec::with_capacity(source.len());
    let rt = pose.rotation.transpose();
    let t = pose.translation;
    let max_d2 = config.max_correspondence_distance * config.max_correspondence_distance;
    let point_cov = Mat3::identity() * (config.sigma_p * config.sigma_p);
    let mut neighborhood = Vec::with_capacity(config.k);
    for p in source {
        let pw = pose.transform_point(p);
        let nbrs = map.tree.knn(&pw, config.k);
        if nbrs.is_empty() || nbrs[0].dist2 > max_d2 {
            stats.too_far += 1;
            continue;
        }
        neighborhood.clear();
        neighborhood.extend(nbrs.iter().map(|n| *map.tree.point(n.index)));
        let Ok(fit) = fit_plane(&neighborhood, Some(&t)) else {
            stats.fit_failed += 1;
            continue;
        };
        let Ok(nc) = normal_covariance(&fit, config.sigma_i, neighborhood.len()) else {
            stats.fit_failed += 1;
            continue;
        };
        if is_outlier(&nc, config.sigma_n_max) {
            stats.outliers += 1;
            continue;
        }
        let normal = rt * fit.normal;
        let offset = fit.offset() - fit.normal.dot(&t);
        let eta = nc.tangent_noise();
        let residual = normal.dot(p) - offset;
        let wr = config.residual_weight;
        let weight = wr * robust_weight(&config.robust, (wr * residual).abs());
        features.push(PlaneFeature {
            point: *p,
            normal,
            offset,
            weight,
            point_cov,
            normal_cov: rt * eta * pose.rotation,
        });
        stats.accepted += 1;
    }
    (features, stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub index: usize,
    pub stats: CorrespondenceStats,
    /// Update in the sensor frame.
    pub twist: Twist,
    pub probabilities: Vec6,
    pub reports: [DirectionReport; 6],
    pub eigenvalues: Vec6,
    /// Pose after applying the update.
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub pose: Pose,
    /// Information of the last update, world frame.
    pub information: Mat6,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub termination: Termination,
}

/// Registers `source` (sensor frame) against `target` (world frame)
/// starting from `init`.
pub fn icp(
    source: &[Vec3],
    target: &[Vec3],
    init: &Pose,
    config: &IcpConfig,
) -> Result<RegistrationResult> {
    config.validate()?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::NoCorrespondences);
    }
    let map = PlaneMap::new(target);
    let mut pose = *init;
    let mut information = Mat6::zeros();
    let mut iterations = Vec::new();
    let mut termination = Termination::MaxIterations;
    for index in 0..config.max_iterations {
        let (features, stats) = build_features(source, &map, &pose, config);
        if features.is_empty() {
            return Err(Error::NoCorrespondences);
        }
        let bundle = linearize(&features)?;
        let sol = solve_update(&bundle, config.method, config.sigma_r)?;
        let m = frame_change_matrix(&pose);
        information = m * sol.information * m.transpose();
        let world = Twist::from_vector(&(twist_adjoint(&pose) * sol.twist.to_vector()));
        pose = exp_se3(&world).compose(&pose);
        iterations.push(IterationRecord {
            index,
            stats,
            twist: sol.twist,
            probabilities: sol.probabilities,
            reports: sol.reports,
            eigenvalues: sol.eigen.values,
            pose,
        });
        log::debug!(
            "icp iteration {index}: {} features, |dr| {:.3e}, |dt| {:.3e}",
            stats.accepted,
            sol.twist.rot.norm(),
            sol.twist.trans.norm()
        );
        if sol.twist.rot.norm() < config.tol_rot && sol.twist.trans.norm() < config.tol_trans {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(RegistrationResult {
        pose,
        information: (information + information.transpose()) * 0.5,
        iterations,
        converged: termination == Termination::Converged,
        termination,
    })
}

/// Degeneracy report of one linearization of `source` against `map`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub analysis: Analysis,
    pub stats: CorrespondenceStats,
}

pub fn detect(source: &[Vec3], map: &PlaneMap, pose: &Pose, config: &IcpConfig) -> Result<Detection> {
    config.validate()?;
    let (features, stats) = build_features(source, map, pose, config);
    if features.is_empty() {
        return Err(Error::NoCorrespondences);
    }
    let bundle = linearize(&features)?;
    Ok(Detection {
        analysis: analyze(&bundle, config.method.snr())?,
        stats,
    })
}
