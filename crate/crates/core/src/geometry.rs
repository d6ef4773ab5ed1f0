//! Rigid-body math: skew operators, the SE(3) exponential and the 6×6
//! frame-change matrices used to move features, Hessians and twists
//! between the sensor frame and the world frame.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};
#[allow(unused_imports)]
use num_traits::Float;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Mat6 = Matrix6<f64>;

/// Below this rotation angle the exponential uses its Taylor expansion.
const SMALL_ANGLE: f64 = 1e-9;

/// Rigid transform `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

/// Perturbation `[δr; δt]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub rot: Vec3,
    pub trans: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(Mat3::identity(), translation)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// `self ∘ other`, i.e. apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        c.acos()
    }

    /// Homogeneous 4×4 matrix.
    pub fn to_matrix4(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Reads the rotation and translation blocks; the bottom row is ignored.
    pub fn from_matrix4(m: &Matrix4<f64>) -> Pose {
        Pose {
            rotation: m.fixed_view::<3, 3>(0, 0).into_owned(),
            translation: m.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }

    /// Largest deviation of `RᵀR` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.rotation.transpose() * self.rotation - Mat3::identity();
        gram.amax().max((self.rotation.determinant() - 1.0).abs())
    }
}

impl Twist {
    pub fn new(rot: Vec3, trans: Vec3) -> Self {
        Self { rot, trans }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector(x: &Vec6) -> Self {
        Self {
            rot: x.fixed_rows::<3>(0).into_owned(),
            trans: x.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vec6 {
        Vec6::new(
            self.rot.x,
            self.rot.y,
            self.rot.z,
            self.trans.x,
            self.trans.y,
            self.trans.z,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.rot.iter().chain(self.trans.iter()).all(|c| c.is_finite())
    }
}

/// `[a]×`, so that `skew(a)·b = a × b`.
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

pub fn exp_so3(w: &Vec3) -> Mat3 {
    let (r, _) = exp_coefficients(w);
    r
}

/// Returns `(Exp(w), V(w))` where `V` is the left Jacobian that maps the
/// translational part of a twist to the translation of the group element.
fn exp_coefficients(w: &Vec3) -> (Mat3, Mat3) {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(w);
    let k2 = k * k;
    let id = Mat3::identity();
    if theta < SMALL_ANGLE {
        (id + k + k2 * 0.5, id + k * 0.5 + k2 * (1.0 / 6.0))
    } else {
        let (s, c) = theta.sin_cos();
        let a = s / theta;
        let b = (1.0 - c) / theta2;
        let d = (theta - s) / (theta2 * theta);
        (id + k * a + k2 * b, id + k * b + k2 * d)
    }
}

pub fn exp_se3(x: &Twist) -> Pose {
    let (r, v) = exp_coefficients(&x.rot);
    Pose::new(r, v * x.trans)
}

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn inverse(a: &Pose) -> Pose {
    a.inverse()
}

fn blocks(tl: &Mat3, tr: &Mat3, bl: &Mat3, br: &Mat3) -> Mat6 {
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(tl);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(tr);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(bl);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(br);
    m
}

/// `M = [[R, [t]×R], [0, R]]`.
///
/// Maps a feature vector `[p×n; n]` built in the source frame of `pose` to
/// the one built from the transformed point and normal. Hessians and
/// information matrices transform as `M·H·Mᵀ`.
pub fn frame_change_matrix(pose: &Pose) -> Mat6 {
    let r = &pose.rotation;
    blocks(r, &(skew(&pose.translation) * r), &Mat3::zeros(), r)
}

/// `Ad = [[R, 0], [[t]×R, R]] = M⁻ᵀ`.
///
/// Maps a twist `x` applied on the right of `pose` to the equivalent twist
/// applied on the left: `pose ∘ Exp(x) = Exp(Ad·x) ∘ pose`.
pub fn twist_adjoint(pose: &Pose) -> Mat6 {
    let r = &pose.rotation;
    blocks(r, &Mat3::zeros(), &(skew(&pose.translation) * r), r)
}
