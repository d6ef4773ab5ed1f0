//! Deterministic symmetric eigendecompositions.
//!
//! Eigenvalues are returned in descending order. Eigenvector signs are
//! normalized so that repeated runs produce identical reports.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};

/// Components with magnitude at or below this are treated as zero when
/// fixing the sign of an eigenvector.
const SIGN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen3 {
    pub values: Vector3<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen6 {
    pub values: Vector6<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix6<f64>,
}

impl SymEigen6 {
    /// Reassembles `U·diag(f(λ))·Uᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(usize, f64) -> f64) -> Matrix6<f64> {
        let mut out = Matrix6::zeros();
        for k in 0..6 {
            let u = self.vectors.column(k);
            out += (u * u.transpose()) * f(k, self.values[k]);
        }
        out
    }
}

fn descending_order<const D: usize>(values: &[f64; D]) -> [usize; D] {
    let mut order = [0usize; D];
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    // Stable sort keeps the solver's order for exact ties.
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Sign rule for 3-vectors: the first component that is not numerically
/// zero is positive.
pub fn orient_leading_positive(v: &mut Vector3<f64>) {
    if let Some(c) = v.iter().copied().find(|c| c.abs() > SIGN_EPS) {
        if c < 0.0 {
            *v = -*v;
        }
    }
}

/// Sign rule for 6-vectors: the component of largest magnitude is positive
/// (first such index on exact ties).
pub fn orient_largest_positive(v: &mut Vector6<f64>) {
    let mut best = 0;
    for i in 1..6 {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        *v = -*v;
    }
}

pub fn sym_eigen3(m: &Matrix3<f64>) -> SymEigen3 {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let raw: [f64; 3] = eig.eigenvalues.into();
    let order = descending_order(&raw);
    let mut values = Vector3::zeros();
    let mut vectors = Matrix3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = raw[src];
        let mut v: Vector3<f64> = eig.eigenvectors.column(src).into_owned();
        v /= v.norm();
        orient_leading_positive(&mut v);
        vectors.set_column(dst, &v);
    }
    SymEigen3 { values, vectors }
}

pub fn sym_eigen6(m: &Matrix6<f64>) -> SymEigen6 {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let raw: [f64; 6] = eig.eigenvalues.into();
    let order = descending_order(&raw);
    let mut values = Vector6::zeros();
    let mut vectors = Matrix6::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = raw[src];
        let mut v: Vector6<f64> = eig.eigenvectors.column(src).into_owned();
        v /= v.norm();
        orient_largest_positive(&mut v);
        vectors.set_column(dst, &v);
    }
    SymEigen6 { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen6_sorted_and_reconstructs() {
        let a = Matrix6::from_fn(|i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        let h = a * a.transpose();
        let e = sym_eigen6(&h);
        for k in 1..6 {
            assert!(e.values[k - 1] >= e.values[k]);
        }
        let back = e.reconstruct_with(|_, l| l);
        assert!((back - h).norm() <= 1e-12 * h.norm());
        let gram = e.vectors.transpose() * e.vectors;
        assert!((gram - Matrix6::identity()).norm() < 1e-12);
        for k in 0..6 {
            let v: Vector6<f64> = e.vectors.column(k).into_owned();
            let imax = v.iamax();
            assert!(v[imax] > 0.0);
        }
    }

    #[test]
    fn eigen3_diagonal_order_and_signs() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 3.0, 2.0));
        let e = sym_eigen3(&m);
        assert_eq!(e.values, Vector3::new(3.0, 2.0, 1.0));
        assert_eq!(e.vectors.column(0).into_owned(), Vector3::y());
        assert_eq!(e.vectors.column(1).into_owned(), Vector3::z());
        assert_eq!(e.vectors.column(2).into_owned(), Vector3::x());
    }

    #[test]
    fn deterministic_repeat() {
        let m = Matrix6::from_fn(|i, j| 1.0 / (1.0 + i as f64 + j as f64));
        assert_eq!(sym_eigen6(&m), sym_eigen6(&m));
    }
}
