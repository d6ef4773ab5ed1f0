//! Local plane fitting, normal covariance and normal outlier rejection.
//!
//! A normal is the eigenvector of the smallest eigenvalue of the empirical
//! neighborhood covariance `Ĉ` (normalized by `1/(N−1)`). Linearizing the
//! fit about its optimum gives the covariance of the normal estimate
//!
//! ```text
//! Σ̄ = R̂ · (σ²/N) · diag(1/λ2, 1/λ1, 0) · R̂ᵀ  =  [n̂]× (σ²/N) Ĉ⁻¹ [n̂]×ᵀ
//! ```
//!
//! whose largest eigenvalue `(σ²/N)/λ2` is used to reject normals.

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{skew, Mat3, Vec3};
use crate::linalg::{orient_leading_positive, sym_eigen3};
use crate::{Error, Result};

/// `λ2` below this fraction of `λ1` means the neighborhood is a line.
const COLLINEAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFit {
    pub normal: Vec3,
    pub centroid: Vec3,
    /// `(λ1, λ2, λ3)`, descending.
    pub eigenvalues: Vec3,
    /// `[e1, e2, n]`, right-handed.
    pub rotation: Mat3,
    pub n_points: usize,
}

impl PlaneFit {
    /// Plane offset `d = n·q̄`.
    pub fn offset(&self) -> f64 {
        self.normal.dot(&self.centroid)
    }

    /// The empirical covariance reassembled from its eigenstructure.
    pub fn covariance(&self) -> Mat3 {
        self.rotation * Mat3::from_diagonal(&self.eigenvalues) * self.rotation.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalCovariance {
    /// Covariance of the normal estimate, rank ≤ 2 and null along the normal.
    pub cov: Mat3,
    pub worst_case_std: f64,
    pub normal: Vec3,
}

impl NormalCovariance {
    /// Covariance of the tangent perturbation `η` in `n̂ = n + [n]×η`,
    /// restricted to the plane orthogonal to the normal. Satisfies
    /// `[n]×·Ση·[n]×ᵀ = cov`.
    pub fn tangent_noise(&self) -> Mat3 {
        let k = skew(&self.normal);
        k.transpose() * self.cov * k
    }
}

pub fn empirical_covariance(points: &[Vec3]) -> (Vec3, Mat3) {
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let mut c = Mat3::zeros();
    for p in points {
        let d = p - centroid;
        c += d * d.transpose();
    }
    (centroid, c / (n - 1.0))
}

/// Fits a plane to `neighbors`. With a `viewpoint` the normal points toward
/// it, otherwise its first non-zero component is positive.
pub fn fit_plane(neighbors: &[Vec3], viewpoint: Option<&Vec3>) -> Result<PlaneFit> {
    if neighbors.len() < 3 {
        return Err(Error::TooFewPoints(neighbors.len()));
    }
    let (centroid, c) = empirical_covariance(neighbors);
    let eig = sym_eigen3(&c);
    let l = eig.values;
    if !(l[0] > 0.0) || l[1] < COLLINEAR_RATIO * l[0] {
        return Err(Error::DegenerateNeighborhood);
    }
    let mut normal: Vec3 = eig.vectors.column(2).into_owned();
    match viewpoint {
        Some(v) if normal.dot(&(v - centroid)) < 0.0 => normal = -normal,
        Some(_) => {}
        None => orient_leading_positive(&mut normal),
    }
    let e1: Vec3 = eig.vectors.column(0).into_owned();
    let e2 = normal.cross(&e1);
    let rotation = Mat3::from_columns(&[e1, e2, normal]);
    Ok(PlaneFit {
        normal,
        centroid,
        eigenvalues: Vec3::new(l[0], l[1], l[2].max(0.0)),
        rotation,
        n_points: neighbors.len(),
    })
}

pub fn normal_covariance(fit: &PlaneFit, sigma_i: f64, n_points: usize) -> Result<NormalCovariance> {
    if n_points < 3 {
        return Err(Error::TooFewPoints(n_points));
    }
    if !(sigma_i >= 0.0) || !sigma_i.is_finite() {
        return Err(Error::InvalidParameter("sigma_i must be non-negative"));
    }
    let (l1, l2) = (fit.eigenvalues[0], fit.eigenvalues[1]);
    if !(l2 > 0.0) {
        return Err(Error::DegenerateNeighborhood);
    }
    let scale = sigma_i * sigma_i / n_points as f64;
    let diag = Vec3::new(scale / l2, scale / l1, 0.0);
    let cov = fit.rotation * Mat3::from_diagonal(&diag) * fit.rotation.transpose();
    Ok(NormalCovariance {
        cov: (cov + cov.transpose()) * 0.5,
        worst_case_std: (scale / l2).sqrt(),
        normal: fit.normal,
    })
}

/// Strict: a normal exactly at the threshold is kept.
pub fn is_outlier(nc: &NormalCovariance, sigma_n_max: f64) -> bool {
    nc.worst_case_std * nc.worst_case_std > sigma_n_max * sigma_n_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigen3;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noisy_patch(seed: u64, n: usize, sigma: f64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tilt = crate::geometry::exp_so3(&Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ));
        let sx = rng.random_range(0.2..1.0);
        let sy = rng.random_range(0.2..1.0);
        (0..n)
            .map(|_| {
                let local = Vec3::new(
                    rng.random_range(-sx..sx),
                    rng.random_range(-sy..sy),
                    0.0,
                ) + Vec3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                ) * sigma;
                tilt * local + Vec3::new(1.0, -2.0, 0.5)
            })
            .collect()
    }

    #[test]
    fn unit_square() {
        let pts = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let fit = fit_plane(&pts, Some(&Vec3::z())).unwrap();
        assert!((fit.normal - Vec3::z()).norm() < 1e-12);
        assert_eq!(fit.eigenvalues[2], 0.0);
        let down = fit_plane(&pts, Some(&-Vec3::z())).unwrap();
        assert!((down.normal + Vec3::z()).norm() < 1e-12);
        assert!((fit.rotation.determinant() - 1.0).abs() < 1e-12);
        assert!((fit.rotation.column(2) - fit.normal).norm() == 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(
            fit_plane(&[Vec3::zeros(), Vec3::x()], None),
            Err(Error::TooFewPoints(2))
        );
        let line = [Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        assert_eq!(fit_plane(&line, None), Err(Error::DegenerateNeighborhood));
        let same = [Vec3::x(); 4];
        assert_eq!(fit_plane(&same, None), Err(Error::DegenerateNeighborhood));
    }

    #[test]
    fn noisy_plane_normal_within_two_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec3> = (0..50)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    0.3 + 0.01 * rng.sample::<f64, _>(StandardNormal),
                )
            })
            .collect();
        let fit = fit_plane(&pts, Some(&Vec3::new(0.0, 0.0, 5.0))).unwrap();
        let angle = fit.normal.dot(&Vec3::z()).abs().acos().to_degrees();
        assert!(angle < 2.0, "angle {angle}");
        assert!(fit.normal.z > 0.0);
    }

    #[test]
    fn equal_eigenvalues_give_scaled_projector() {
        // Square corners have λ1 = λ2 = 1/3.
        let pts = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let fit = fit_plane(&pts, Some(&Vec3::z())).unwrap();
        let (sigma, n) = (0.02, 4);
        let nc = normal_covariance(&fit, sigma, n).unwrap();
        let c = 1.0 / 3.0;
        let expected = (Mat3::identity() - Vec3::z() * Vec3::z().transpose())
            * (sigma * sigma / (n as f64 * c));
        assert!((nc.cov - expected).amax() < 1e-15);
        assert!((nc.worst_case_std - (sigma * sigma / (n as f64 * c)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_sigma() {
        let pts = noisy_patch(3, 10, 0.01);
        let fit = fit_plane(&pts, None).unwrap();
        let nc = normal_covariance(&fit, 0.0, 10).unwrap();
        assert_eq!(nc.cov, Mat3::zeros());
        assert_eq!(nc.worst_case_std, 0.0);
        assert!(!is_outlier(&nc, 0.1));
    }

    #[test]
    fn outlier_boundary() {
        let mk = |s: f64| NormalCovariance {
            cov: Mat3::zeros(),
            worst_case_std: s,
            normal: Vec3::z(),
        };
        assert!(!is_outlier(&mk(0.0), 1e-9));
        assert!(is_outlier(&mk(0.2), 0.10));
        assert!(!is_outlier(&mk(0.10), 0.10));
    }

    #[test]
    fn covariance_properties_on_noisy_patches() {
        for seed in 0..50 {
            let pts = noisy_patch(seed, 12, 0.01);
            let fit = fit_plane(&pts, None).unwrap();
            assert!((fit.normal.norm() - 1.0).abs() < 1e-12);
            assert!((fit.rotation.transpose() * fit.rotation - Mat3::identity()).amax() < 1e-12);
            assert!((fit.rotation.determinant() - 1.0).abs() < 1e-12);
            let nc = normal_covariance(&fit, 0.01, 12).unwrap();
            let scale = nc.cov.amax();
            assert!((nc.cov * fit.normal).amax() <= 1e-10 * scale);
            let eig = sym_eigen3(&nc.cov);
            assert!(eig.values[2] >= -1e-12 * scale);
            let worst2 = nc.worst_case_std * nc.worst_case_std;
            assert!((eig.values[0] - worst2).abs() <= 1e-10 * worst2);

            let doubled = normal_covariance(&fit, 0.02, 12).unwrap();
            assert_eq!(doubled.cov, nc.cov * 4.0);
            let quad = normal_covariance(&fit, 0.01, 48).unwrap();
            assert_eq!(quad.cov * 4.0, nc.cov);

            // [n]×·Ση·[n]×ᵀ gives back the normal covariance.
            let k = skew(&nc.normal);
            let back = k * nc.tangent_noise() * k.transpose();
            assert!((back - nc.cov).amax() <= 1e-12 * scale);
        }
    }

    #[test]
    fn dual_form_matches() {
        for seed in 100..120 {
            let pts = noisy_patch(seed, 15, 0.01);
            let fit = fit_plane(&pts, None).unwrap();
            assert!(fit.eigenvalues[2] > 0.0);
            let nc = normal_covariance(&fit, 0.01, pts.len()).unwrap();
            let (_, c) = empirical_covariance(&pts);
            let k = skew(&fit.normal);
            let dual = k * c.try_inverse().unwrap() * k.transpose() * (0.01 * 0.01 / 15.0);
            assert!((dual - nc.cov).amax() <= 1e-10 * nc.cov.amax());
        }
    }
}
