//! Noise propagation into the point-to-plane Hessian and per-direction
//! degeneracy probabilities.
//!
//! Each feature contributes `v̂ = w·[p̂×n̂; n̂]` to `Ĥ = Σ v̂·v̂ᵀ`. With
//! `p̂ = p + ε` and `n̂ = n + [n]×η`,
//!
//! ```text
//! v̂ = v + B·[ε; η] + w·[ε]×[n]×η,   B = w·[[−[n]×, [p]×[n]×], [0, [n]×]]
//! ```
//!
//! so `E[Ĥ] = H + Σ` with `Σ = Σᵢ B·diag(Σp, Ση)·Bᵀ`. Along a unit direction
//! `u` the noise `ξ_u` is modeled as Gaussian with mean `uᵀΣu` and variance
//! `Σᵢ 2(uᵀΣᵢu)² + 4(uᵀΣᵢu)(uᵀv̂ᵢ)²`, and the direction is trusted with
//! probability `P(â_u ≥ (s+1)·ξ_u)`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{skew, Mat3, Mat6, Pose, Vec3, Vec6};
use crate::linalg::{sym_eigen6, SymEigen6};
use crate::{Error, Result};

/// Signal-to-noise target; `s = 10` bounds the relative error at 10%.
pub const DEFAULT_SNR: f64 = 10.0;

/// Eigenvalues at or below this fraction of the largest one carry no signal.
pub const NULL_EIGENVALUE_RATIO: f64 = 1e-12;

const UNIT_TOLERANCE: f64 = 1e-9;

/// A point associated with a plane, expressed in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFeature {
    pub point: Vec3,
    pub normal: Vec3,
    pub offset: f64,
    /// Combined residual and robust weight `w = w_r·w_ρ`.
    pub weight: f64,
    pub point_cov: Mat3,
    /// Covariance of the tangent perturbation `η`.
    pub normal_cov: Mat3,
}

impl PlaneFeature {
    /// Unit weight and zero covariances.
    pub fn new(point: Vec3, normal: Vec3, offset: f64) -> Self {
        Self {
            point,
            normal,
            offset,
            weight: 1.0,
            point_cov: Mat3::zeros(),
            normal_cov: Mat3::zeros(),
        }
    }

    /// Feature whose point lies exactly on the plane.
    pub fn on_plane(point: Vec3, normal: Vec3) -> Self {
        Self::new(point, normal, normal.dot(&point))
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_covariances(mut self, point_cov: Mat3, normal_cov: Mat3) -> Self {
        self.point_cov = point_cov;
        self.normal_cov = normal_cov;
        self
    }

    /// `Σp = σp²·I` and `Ση = σn²·(I − n·nᵀ)`.
    pub fn with_isotropic_noise(self, sigma_p: f64, sigma_n: f64) -> Self {
        let n = self.normal;
        let tangent = Mat3::identity() - n * n.transpose() / n.norm_squared();
        self.with_covariances(
            Mat3::identity() * (sigma_p * sigma_p),
            tangent * (sigma_n * sigma_n),
        )
    }

    /// Signed point-to-plane distance `n·p − d`.
    pub fn residual(&self) -> f64 {
        self.normal.dot(&self.point) - self.offset
    }

    /// The same feature seen in the target frame of `pose`.
    pub fn transformed(&self, pose: &Pose) -> Self {
        let r = &pose.rotation;
        let normal = r * self.normal;
        Self {
            point: pose.transform_point(&self.point),
            normal,
            offset: self.offset + normal.dot(&pose.translation),
            weight: self.weight,
            point_cov: r * self.point_cov * r.transpose(),
            normal_cov: r * self.normal_cov * r.transpose(),
        }
    }
}

/// Mean and covariance of one feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureNoise {
    pub v: Vec6,
    pub sigma: Mat6,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianBundle {
    pub hessian: Mat6,
    /// `Σ Jᵢᵀ bᵢ`.
    pub rhs: Vec6,
    pub sigma_total: Mat6,
    pub features: Vec<FeatureNoise>,
}

impl HessianBundle {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Statistics of one direction of the noisy Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionReport {
    pub direction: Vec6,
    /// `â_u = uᵀĤu` (the eigenvalue for eigen directions).
    pub signal: f64,
    pub noise_mean: f64,
    pub noise_std: f64,
    pub probability: f64,
    pub snr_target: f64,
}

/// Eigendecomposition of `Ĥ` with one report per eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analysis {
    pub eigen: SymEigen6,
    pub reports: [DirectionReport; 6],
}

impl Analysis {
    pub fn probabilities(&self) -> Vec6 {
        Vec6::from_fn(|k, _| self.reports[k].probability)
    }
}

pub fn feature_vector(f: &PlaneFeature) -> Vec6 {
    let c = f.point.cross(&f.normal) * f.weight;
    let n = f.normal * f.weight;
    Vec6::new(c.x, c.y, c.z, n.x, n.y, n.z)
}

/// `B = w·[[−[n]×, [p]×[n]×], [0, [n]×]]`, the Jacobian of the feature vector
/// with respect to `[ε; η]`.
pub fn noise_jacobian(f: &PlaneFeature) -> Mat6 {
    let kn = skew(&f.normal);
    let kpn = skew(&f.point) * kn;
    let mut b = Mat6::zeros();
    b.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-kn));
    b.fixed_view_mut::<3, 3>(0, 3).copy_from(&kpn);
    b.fixed_view_mut::<3, 3>(3, 3).copy_from(&kn);
    b * f.weight
}

/// `Σᵢ = B·diag(Σp, Ση)·Bᵀ`, evaluated blockwise.
pub fn feature_covariance(f: &PlaneFeature) -> FeatureNoise {
    let kn = skew(&f.normal);
    let kpn = skew(&f.point) * kn;
    let w2 = f.weight * f.weight;
    let n_part = f.normal_cov * kn.transpose();
    let bottom_right = kn * n_part;
    let top_right = kpn * n_part;
    let top_left = kn * f.point_cov * kn.transpose() + kpn * f.normal_cov * kpn.transpose();
    let mut sigma = Mat6::zeros();
    sigma.fixed_view_mut::<3, 3>(0, 0).copy_from(&top_left);
    sigma.fixed_view_mut::<3, 3>(0, 3).copy_from(&top_right);
    sigma
        .fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&top_right.transpose());
    sigma.fixed_view_mut::<3, 3>(3, 3).copy_from(&bottom_right);
    sigma *= w2;
    FeatureNoise {
        v: feature_vector(f),
        sigma: (sigma + sigma.transpose()) * 0.5,
    }
}

/// Builds `Ĥ`, the right-hand side `Σ Jᵢᵀbᵢ` with `bᵢ = −w(n·p − d)`, and
/// the per-feature noise terms.
pub fn accumulate(features: &[PlaneFeature]) -> Result<HessianBundle> {
    if features.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let mut hessian = Mat6::zeros();
    let mut rhs = Vec6::zeros();
    let mut sigma_total = Mat6::zeros();
    let mut noise = Vec::with_capacity(features.len());
    for f in features {
        let fn_ = feature_covariance(f);
        let b = -f.weight * f.residual();
        hessian += fn_.v * fn_.v.transpose();
        rhs += fn_.v * b;
        sigma_total += fn_.sigma;
        noise.push(fn_);
    }
    Ok(HessianBundle {
        hessian,
        rhs,
        sigma_total,
        features: noise,
    })
}

fn check_unit(u: &Vec6) -> Result<()> {
    let n = u.norm();
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NotUnitLength(n));
    }
    Ok(())
}

/// `(μ̂_u, σ̂_u²)` for an arbitrary unit direction.
pub fn direction_stats(bundle: &HessianBundle, u: &Vec6) -> Result<(f64, f64)> {
    check_unit(u)?;
    let mut mu = 0.0;
    let mut var = 0.0;
    for f in &bundle.features {
        let q = u.dot(&(f.sigma * u)).max(0.0);
        let c = u.dot(&f.v);
        mu += q;
        var += 2.0 * q * q + 4.0 * q * c * c;
    }
    Ok((mu, var))
}

/// Standard normal CDF via `erfc`; absolute error well below 1e-7.
pub fn gaussian_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 9.0 {
        return 1.0;
    }
    (0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)).clamp(0.0, 1.0)
}

/// `P(â ≥ (s+1)·ξ)` for `ξ ~ N(μ, σ²)`. With `σ = 0` the direction is
/// trusted iff it carries any signal.
pub fn degeneracy_probability(signal: f64, mu: f64, sigma: f64, s: f64) -> f64 {
    if sigma > 0.0 {
        gaussian_cdf((signal / (s + 1.0) - mu) / sigma)
    } else if signal > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Eigendecomposes `Ĥ` and reports every eigen direction. One pass over the
/// features handles all six directions.
pub fn analyze(bundle: &HessianBundle, s: f64) -> Result<Analysis> {
    if bundle.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter("s must be positive"));
    }
    if bundle.len() < 6 {
        log::warn!(
            "degeneracy analysis on {} features; at least 6 are needed for a full-rank Hessian",
            bundle.len()
        );
    }
    let eigen = sym_eigen6(&bundle.hessian);
    let u = &eigen.vectors;
    let ut = u.transpose();
    let mut mu = [0.0f64; 6];
    let mut var = [0.0f64; 6];
    for f in &bundle.features {
        let su = f.sigma * u;
        let c = ut * f.v;
        for k in 0..6 {
            let q = u.column(k).dot(&su.column(k)).max(0.0);
            mu[k] += q;
            var[k] += 2.0 * q * q + 4.0 * q * c[k] * c[k];
        }
    }
    let largest = eigen.values[0].max(0.0);
    let reports = core::array::from_fn(|k| {
        let lambda = eigen.values[k];
        let signal = if lambda <= NULL_EIGENVALUE_RATIO * largest {
            0.0
        } else {
            lambda
        };
        let noise_std = var[k].sqrt();
        DirectionReport {
            direction: u.column(k).into_owned(),
            signal,
            noise_mean: mu[k],
            noise_std,
            probability: degeneracy_probability(signal, mu[k], noise_std, s),
            snr_target: s,
        }
    });
    Ok(Analysis { eigen, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_se3, frame_change_matrix, Twist};
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(i: usize) -> Vec6 {
        let mut v = Vec6::zeros();
        v[i] = 1.0;
        v
    }

    fn random_features(seed: u64, n: usize, sp: f64, sn: f64) -> Vec<PlaneFeature> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let p = Vec3::from_fn(|_, _| rng.random_range(-3.0..3.0));
                let n = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize();
                PlaneFeature::new(p, n, n.dot(&p) + rng.random_range(-0.1..0.1))
                    .with_weight(rng.random_range(0.5..1.5))
                    .with_isotropic_noise(sp, sn)
            })
            .collect()
    }

    #[test]
    fn feature_vector_examples() {
        let f = PlaneFeature::on_plane(Vec3::zeros(), Vec3::z());
        assert_eq!(feature_vector(&f), e(5));
        let g = PlaneFeature::on_plane(Vec3::x(), Vec3::z());
        assert_eq!(feature_vector(&g), Vec6::new(0.0, -1.0, 0.0, 0.0, 0.0, 1.0));
        let h = random_features(1, 1, 0.0, 0.0)[0];
        assert_eq!(
            feature_vector(&h.with_weight(2.0)),
            feature_vector(&h.with_weight(1.0)) * 2.0
        );
    }

    #[test]
    fn noise_jacobian_examples() {
        let f = PlaneFeature::on_plane(Vec3::zeros(), Vec3::z());
        let b = noise_jacobian(&f);
        let k = skew(&Vec3::z());
        assert_eq!(b.fixed_view::<3, 3>(0, 0).into_owned(), -k);
        assert_eq!(b.fixed_view::<3, 3>(0, 3).into_owned(), Mat3::zeros());
        assert_eq!(b.fixed_view::<3, 3>(3, 0).into_owned(), Mat3::zeros());
        assert_eq!(b.fixed_view::<3, 3>(3, 3).into_owned(), k);
        let g = random_features(2, 1, 0.0, 0.0)[0];
        assert_eq!(noise_jacobian(&g.with_weight(3.0)), noise_jacobian(&g.with_weight(1.0)) * 3.0);
    }

    #[test]
    fn noise_jacobian_matches_finite_differences() {
        // v̂(ε, η) = w·[(p+ε)×(n+n×η); n+n×η]
        for f in random_features(3, 20, 0.0, 0.0) {
            let vhat = |x: &Vec6| {
                let eps = Vec3::new(x[0], x[1], x[2]);
                let eta = Vec3::new(x[3], x[4], x[5]);
                let n = f.normal + f.normal.cross(&eta);
                let c = (f.point + eps).cross(&n) * f.weight;
                let n = n * f.weight;
                Vec6::new(c.x, c.y, c.z, n.x, n.y, n.z)
            };
            let h = 1e-6;
            let b = noise_jacobian(&f);
            for j in 0..6 {
                let d = (vhat(&(e(j) * h)) - vhat(&(e(j) * -h))) / (2.0 * h);
                assert!((d - b.column(j)).amax() < 1e-6);
            }
        }
    }

    #[test]
    fn feature_covariance_examples() {
        let f = PlaneFeature::on_plane(Vec3::zeros(), Vec3::z());
        assert_eq!(feature_covariance(&f).sigma, Mat6::zeros());
        let (sp, sn) = (0.01, 0.02);
        let g = f.with_covariances(Mat3::identity() * sp * sp, Mat3::identity() * sn * sn);
        let expected =
            Mat6::from_diagonal(&Vec6::new(sp * sp, sp * sp, 0.0, sn * sn, sn * sn, 0.0));
        assert!((feature_covariance(&g).sigma - expected).amax() < 1e-20);
    }

    #[test]
    fn blockwise_covariance_matches_dense_product() {
        for f in random_features(4, 30, 0.03, 0.02) {
            let b = noise_jacobian(&f);
            let mut d = Mat6::zeros();
            d.fixed_view_mut::<3, 3>(0, 0).copy_from(&f.point_cov);
            d.fixed_view_mut::<3, 3>(3, 3).copy_from(&f.normal_cov);
            let dense = b * d * b.transpose();
            let fast = feature_covariance(&f).sigma;
            assert!((dense - fast).amax() < 1e-15);
            assert_eq!(fast, fast.transpose());
            let eig = sym_eigen6(&fast);
            assert!(eig.values[5] > -1e-15);
        }
    }

    #[test]
    fn accumulate_examples() {
        assert_eq!(accumulate(&[]), Err(Error::EmptyFeatureSet));
        let f = PlaneFeature::on_plane(Vec3::zeros(), Vec3::z());
        let b = accumulate(&[f]).unwrap();
        assert_eq!(b.hessian, e(5) * e(5).transpose());
        assert_eq!(b.rhs, Vec6::zeros());
        let fs = random_features(5, 10, 0.01, 0.01);
        let once = accumulate(&fs).unwrap();
        let twice = accumulate(&[fs.clone(), fs].concat()).unwrap();
        // Summing each term twice is not the same rounding as doubling.
        assert!((twice.hessian - once.hessian * 2.0).amax() < 1e-12 * once.hessian.amax());
        let mut sum = Mat6::zeros();
        for f in &once.features {
            sum += f.v * f.v.transpose();
        }
        assert!((sum - once.hessian).norm() <= 1e-10 * once.hessian.norm());
    }

    #[test]
    fn accumulate_exact_duplicates_double() {
        let f = PlaneFeature::new(Vec3::new(0.5, 0.25, 1.0), Vec3::z(), 0.5);
        let one = accumulate(&[f]).unwrap();
        let two = accumulate(&[f, f]).unwrap();
        assert_eq!(two.hessian, one.hessian * 2.0);
        assert_eq!(two.rhs, one.rhs * 2.0);
    }

    #[test]
    fn frame_change_conjugates_hessian() {
        let fs = random_features(6, 40, 0.01, 0.01);
        let pose = exp_se3(&Twist::new(Vec3::new(0.4, -0.3, 1.2), Vec3::new(2.0, -1.0, 0.5)));
        let m = frame_change_matrix(&pose);
        let a = accumulate(&fs).unwrap();
        let moved: Vec<_> = fs.iter().map(|f| f.transformed(&pose)).collect();
        let b = accumulate(&moved).unwrap();
        let h = m * a.hessian * m.transpose();
        assert!((b.hessian - h).norm() <= 1e-9 * h.norm());
        let s = m * a.sigma_total * m.transpose();
        assert!((b.sigma_total - s).norm() <= 1e-9 * s.norm());
        // Residuals are frame invariant.
        for (f, g) in fs.iter().zip(&moved) {
            assert!((f.residual() - g.residual()).abs() < 1e-12);
        }
    }

    #[test]
    fn direction_stats_examples() {
        let bare = accumulate(&random_features(7, 10, 0.0, 0.0)).unwrap();
        assert_eq!(direction_stats(&bare, &e(2)).unwrap(), (0.0, 0.0));
        let sn = 0.01;
        let f = PlaneFeature::on_plane(Vec3::zeros(), Vec3::z())
            .with_covariances(Mat3::identity() * 1e-4, Mat3::identity() * sn * sn);
        let b = accumulate(&[f]).unwrap();
        assert_eq!(direction_stats(&b, &e(5)).unwrap(), (0.0, 0.0));
        let (mu, var) = direction_stats(&b, &e(3)).unwrap();
        assert!((mu - sn * sn).abs() < 1e-20);
        assert!((var - 2.0 * sn.powi(4)).abs() < 1e-24);
        assert_eq!(
            direction_stats(&b, &(e(3) * 2.0)),
            Err(Error::NotUnitLength(2.0))
        );
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(gaussian_cdf(0.0), 0.5);
        assert_eq!(gaussian_cdf(9.0), 1.0);
        assert_eq!(gaussian_cdf(f64::INFINITY), 1.0);
        assert_eq!(gaussian_cdf(f64::NEG_INFINITY), 0.0);
        assert!((gaussian_cdf(1.959964) - 0.975).abs() <= 1e-6);
    }

    #[test]
    fn cdf_matches_quadrature() {
        // Composite Simpson on the density from 0 to x.
        let simpson = |x: f64| {
            let n = 20_000;
            let h = x / n as f64;
            let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * core::f64::consts::PI).sqrt();
            let mut acc = pdf(0.0) + pdf(x);
            for i in 1..n {
                acc += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            0.5 + acc * h / 3.0
        };
        for i in -80..=80 {
            let x = i as f64 * 0.1;
            assert!((gaussian_cdf(x) - simpson(x)).abs() <= 1e-7, "x = {x}");
        }
        assert!((simpson(-3.0) - 0.0013498980316301).abs() < 1e-12);
    }

    #[test]
    fn probability_examples() {
        assert_eq!(degeneracy_probability(5.0, 0.0, 0.0, 10.0), 1.0);
        assert_eq!(degeneracy_probability(0.0, 0.0, 0.0, 10.0), 0.0);
        assert_eq!(degeneracy_probability(11.0, 1.0, 0.3, 10.0), 0.5);
        let p = degeneracy_probability(0.0, 3.0 * 0.2, 0.2, 10.0);
        assert!((p - 0.0013498980316301).abs() < 1e-7);
    }

    #[test]
    fn analyze_noise_free_room_like_set() {
        let planes = [
            Vec3::x(),
            -Vec3::x(),
            Vec3::y(),
            -Vec3::y(),
            Vec3::z(),
            -Vec3::z(),
        ];
        let mut fs = vec![];
        for (i, n) in planes.iter().enumerate() {
            for j in 0..5 {
                let t = Vec3::new(j as f64 * 0.3, (i + j) as f64 * 0.2 - 0.5, 0.7 - j as f64 * 0.25);
                let p = t - n * n.dot(&t) - n * 2.0;
                fs.push(PlaneFeature::on_plane(p, *n));
            }
        }
        let a = analyze(&accumulate(&fs).unwrap(), DEFAULT_SNR).unwrap();
        for r in &a.reports {
            assert_eq!(r.probability, 1.0);
            assert!(r.signal > 0.0);
        }
    }

    #[test]
    fn analyze_noise_free_corridor_null_direction() {
        let mut fs = vec![];
        for j in 0..20 {
            let x = j as f64 * 0.5 - 5.0;
            let z = (j % 5) as f64 * 0.3 - 0.6;
            fs.push(PlaneFeature::on_plane(Vec3::new(x, 1.0, z), -Vec3::y()));
            fs.push(PlaneFeature::on_plane(Vec3::new(x, -1.0, z), Vec3::y()));
            fs.push(PlaneFeature::on_plane(Vec3::new(x, z, -1.2), Vec3::z()));
        }
        let a = analyze(&accumulate(&fs).unwrap(), DEFAULT_SNR).unwrap();
        let last = &a.reports[5];
        assert_eq!(last.probability, 0.0);
        assert_eq!(last.signal, 0.0);
        assert!((last.direction.dot(&e(3)).abs() - 1.0).abs() < 1e-12);
        for r in &a.reports[..5] {
            assert_eq!(r.probability, 1.0);
        }
    }

    #[test]
    fn analyze_rejects_bad_input() {
        let empty = HessianBundle {
            hessian: Mat6::zeros(),
            rhs: Vec6::zeros(),
            sigma_total: Mat6::zeros(),
            features: vec![],
        };
        assert_eq!(analyze(&empty, 10.0), Err(Error::EmptyFeatureSet));
        let b = accumulate(&random_features(8, 10, 0.01, 0.01)).unwrap();
        assert!(matches!(analyze(&b, 0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn analyze_matches_direction_stats() {
        let b = accumulate(&random_features(9, 50, 0.02, 0.03)).unwrap();
        let a = analyze(&b, 10.0).unwrap();
        for r in &a.reports {
            let (mu, var) = direction_stats(&b, &r.direction).unwrap();
            assert!((mu - r.noise_mean).abs() <= 1e-12 * mu.max(1e-300));
            assert!((var.sqrt() - r.noise_std).abs() <= 1e-12 * r.noise_std);
            assert!(r.noise_mean >= 0.0 && r.noise_std >= 0.0 && r.signal >= 0.0);
            assert!((0.0..=1.0).contains(&r.probability));
        }
        let l = a.eigen.values;
        assert!(l[5] >= -1e-10 * l[0]);
    }

    proptest! {
        #[test]
        fn probability_monotone(
            mu in 0.0..5.0f64, sigma in 0.01..3.0f64,
            a in 0.0..100.0f64, b in 0.0..100.0f64,
            s1 in 0.5..50.0f64, s2 in 0.5..50.0f64,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(degeneracy_probability(lo, mu, sigma, 10.0)
                <= degeneracy_probability(hi, mu, sigma, 10.0));
            let (slo, shi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            prop_assert!(degeneracy_probability(a, mu, sigma, shi)
                <= degeneracy_probability(a, mu, sigma, slo));
        }

        #[test]
        fn weight_scaling_leaves_probabilities(seed in 0u64..1000, c in 0.1..10.0f64) {
            let fs = random_features(seed, 30, 0.01, 0.02);
            let scaled: Vec<_> = fs.iter().map(|f| f.with_weight(f.weight * c)).collect();
            let a = analyze(&accumulate(&fs).unwrap(), 10.0).unwrap();
            let b = analyze(&accumulate(&scaled).unwrap(), 10.0).unwrap();
            for k in 0..6 {
                let (ra, rb) = (&a.reports[k], &b.reports[k]);
                prop_assert!((rb.signal - c * c * ra.signal).abs() <= 1e-9 * rb.signal);
                prop_assert!((rb.noise_mean - c * c * ra.noise_mean).abs() <= 1e-9 * rb.noise_mean);
                prop_assert!((rb.noise_std - c * c * ra.noise_std).abs() <= 1e-9 * rb.noise_std);
                prop_assert!((ra.probability - rb.probability).abs() <= 1e-12);
            }
        }

        #[test]
        fn stats_are_additive(seed in 0u64..1000, split in 1usize..29) {
            let fs = random_features(seed, 30, 0.02, 0.01);
            let u = Vec6::from_fn(|i, _| (i as f64 + seed as f64).sin()).normalize();
            let all = direction_stats(&accumulate(&fs).unwrap(), &u).unwrap();
            let a = direction_stats(&accumulate(&fs[..split]).unwrap(), &u).unwrap();
            let b = direction_stats(&accumulate(&fs[split..]).unwrap(), &u).unwrap();
            prop_assert!((all.0 - (a.0 + b.0)).abs() <= 1e-14 * all.0);
            prop_assert!((all.1 - (a.1 + b.1)).abs() <= 1e-14 * all.1);
        }
    }
}
