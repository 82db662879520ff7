//! Position-orientation space M₃ = R³ × S², the roto-translation group SE(3),
//! its Lie algebra se(3), and the three actions that tie them together.
//!
//! Angular velocity tensors are stored as axis-angle rate vectors; [`hat`] and
//! [`vee`] convert to and from the 3×3 skew-symmetric form.

use nalgebra::{Matrix3, Vector3};

use crate::error::{M3Error, Result};

/// Ambient R³ vector.
pub type Vec3 = Vector3<f64>;

/// Tolerance on `‖n‖ − 1` after construction.
pub const UNIT_TOL: f64 = 1e-9;
/// Orientations shorter than this cannot be normalized.
pub const MIN_ORIENTATION_NORM: f64 = 1e-12;
/// Tolerance on the rotation invariants `‖RᵀR − I‖_F` and `|det R − 1|`.
pub const ROTATION_TOL: f64 = 1e-9;
/// Tolerance on `‖A + Aᵀ‖_F` accepted by [`vee`].
pub const SKEW_TOL: f64 = 1e-9;

const SO3_TAYLOR_THRESHOLD: f64 = 1e-8;
const SE3_TAYLOR_THRESHOLD: f64 = 1e-4;

fn ensure_finite(v: &Vec3, what: &'static str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(M3Error::NonFinite(what))
    }
}

/// A point `(x, n)` of M₃: a position and a unit orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionOrientation {
    x: Vec3,
    n: Vec3,
}

impl PositionOrientation {
    /// Builds a point, normalizing `n`.
    pub fn new(x: Vec3, n: Vec3) -> Result<Self> {
        ensure_finite(&x, "position")?;
        ensure_finite(&n, "orientation")?;
        let norm = n.norm();
        if norm < MIN_ORIENTATION_NORM {
            return Err(M3Error::DegenerateOrientation(norm));
        }
        Ok(Self { x, n: n / norm })
    }

    pub fn from_arrays(x: [f64; 3], n: [f64; 3]) -> Result<Self> {
        Self::new(Vec3::from(x), Vec3::from(n))
    }

    #[inline]
    pub fn x(&self) -> &Vec3 {
        &self.x
    }

    #[inline]
    pub fn n(&self) -> &Vec3 {
        &self.n
    }
}

/// A tangent vector `(ẋ, ṅ)` at a base point, with `ṅ ⊥ n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    base: PositionOrientation,
    xdot: Vec3,
    ndot: Vec3,
}

impl TangentVector {
    /// Builds a tangent vector, projecting `ndot` onto the plane orthogonal
    /// to the base orientation.
    pub fn new(base: PositionOrientation, xdot: Vec3, ndot: Vec3) -> Result<Self> {
        ensure_finite(&xdot, "xdot")?;
        ensure_finite(&ndot, "ndot")?;
        let n = base.n;
        let mut ndot = ndot - n * n.dot(&ndot);
        // A second pass removes the rounding left by the first one.
        ndot -= n * n.dot(&ndot);
        let residual = ndot.dot(&n).abs();
        debug_assert!(residual <= UNIT_TOL, "tangent residual {residual}");
        Ok(Self { base, xdot, ndot })
    }

    pub fn zero(base: PositionOrientation) -> Self {
        Self {
            base,
            xdot: Vec3::zeros(),
            ndot: Vec3::zeros(),
        }
    }

    #[inline]
    pub fn base(&self) -> &PositionOrientation {
        &self.base
    }

    #[inline]
    pub fn xdot(&self) -> &Vec3 {
        &self.xdot
    }

    #[inline]
    pub fn ndot(&self) -> &Vec3 {
        &self.ndot
    }

    /// Componentwise sum; the base point of `self` is kept.
    pub fn add(&self, other: &Self) -> Self {
        Self {
            base: self.base,
            xdot: self.xdot + other.xdot,
            ndot: self.ndot + other.ndot,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            base: self.base,
            xdot: self.xdot - other.xdot,
            ndot: self.ndot - other.ndot,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            base: self.base,
            xdot: self.xdot * s,
            ndot: self.ndot * s,
        }
    }
}

/// A roto-translation `(t, R)`, acting as `x ↦ t + R x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotoTranslation {
    t: Vec3,
    r: Matrix3<f64>,
}

impl RotoTranslation {
    /// Builds a group element, checking that `r` is a proper rotation.
    pub fn new(t: Vec3, r: Matrix3<f64>) -> Result<Self> {
        ensure_finite(&t, "translation")?;
        if !r.iter().all(|c| c.is_finite()) {
            return Err(M3Error::NonFinite("rotation"));
        }
        let orth = (r.transpose() * r - Matrix3::identity()).norm();
        let det = r.determinant();
        if orth > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(M3Error::InvalidRotation { orth, det });
        }
        Ok(Self { t, r })
    }

    /// The identity element `(0, I)`.
    pub fn identity() -> Self {
        Self {
            t: Vec3::zeros(),
            r: Matrix3::identity(),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self {
            t,
            r: Matrix3::identity(),
        }
    }

    /// Rotation about the origin by the axis-angle vector `omega`.
    pub fn from_rotation_vector(omega: &Vec3) -> Self {
        Self {
            t: Vec3::zeros(),
            r: exp_so3(omega),
        }
    }

    /// Internal constructor for products of valid elements.
    pub(crate) fn from_parts(t: Vec3, r: Matrix3<f64>) -> Self {
        Self { t, r }
    }

    #[inline]
    pub fn translation(&self) -> &Vec3 {
        &self.t
    }

    #[inline]
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.r
    }

    /// Applies `x ↦ t + R x` to a bare position.
    #[inline]
    pub fn transform_point(&self, x: &Vec3) -> Vec3 {
        self.t + self.r * x
    }
}

/// A generator `(v, ω)` of se(3), with `ω` stored as an axis-angle rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub v: Vec3,
    pub omega: Vec3,
}

impl Twist {
    pub fn new(v: Vec3, omega: Vec3) -> Self {
        Self { v, omega }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            v: self.v * s,
            omega: self.omega * s,
        }
    }

    /// `‖ω‖`, the angular velocity of the generator.
    #[inline]
    pub fn angular_velocity(&self) -> f64 {
        self.omega.norm()
    }
}

/// The skew matrix of `w`, so that `hat(w) * u == w.cross(u)`.
pub fn hat(w: &Vec3) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -w.z, w.y, //
        w.z, 0.0, -w.x, //
        -w.y, w.x, 0.0,
    )
}

/// Inverse of [`hat`]. Rejects matrices that are not skew-symmetric.
pub fn vee(a: &Matrix3<f64>) -> Result<Vec3> {
    let asym = (a + a.transpose()).norm();
    if asym.is_nan() || asym > SKEW_TOL {
        return Err(M3Error::NotSkew(asym));
    }
    Ok(Vec3::new(a[(2, 1)], a[(0, 2)], a[(1, 0)]))
}

pub fn angular_velocity(m: &Twist) -> f64 {
    m.angular_velocity()
}

/// `g2 · g1 = (t₂ + R₂ t₁, R₂ R₁)`.
pub fn compose(g2: &RotoTranslation, g1: &RotoTranslation) -> RotoTranslation {
    RotoTranslation::from_parts(g2.t + g2.r * g1.t, g2.r * g1.r)
}

pub fn inverse(g: &RotoTranslation) -> RotoTranslation {
    let rt = g.r.transpose();
    RotoTranslation::from_parts(-(rt * g.t), rt)
}

/// Rodrigues' formula `I + sin θ K + (1 − cos θ) K²`.
pub fn exp_so3(omega: &Vec3) -> Matrix3<f64> {
    let theta = omega.norm();
    let w = hat(omega);
    if theta < SO3_TAYLOR_THRESHOLD {
        return Matrix3::identity() + w + w * w * 0.5;
    }
    let k = w / theta;
    Matrix3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos())
}

/// The left Jacobian `V(ω)` that maps the translation velocity of a twist to
/// the translation of its exponential.
pub fn se3_left_jacobian(omega: &Vec3) -> Matrix3<f64> {
    let theta = omega.norm();
    let w = hat(omega);
    let w2 = w * w;
    if theta < SE3_TAYLOR_THRESHOLD {
        return Matrix3::identity() + w * 0.5 + w2 / 6.0;
    }
    let t2 = theta * theta;
    let half_sin = (0.5 * theta).sin();
    // 1 − cos θ = 2 sin²(θ/2) avoids cancellation for small θ.
    let a = 2.0 * half_sin * half_sin / t2;
    Matrix3::identity() + w * a + w2 * ((theta - theta.sin()) / (t2 * theta))
}

pub fn exp_se3(m: &Twist) -> RotoTranslation {
    let r = exp_so3(&m.omega);
    let t = se3_left_jacobian(&m.omega) * m.v;
    RotoTranslation::from_parts(t, r)
}

/// `(t, R) · (x, n) = (t + R x, R n)`.
pub fn act_point(g: &RotoTranslation, p: &PositionOrientation) -> PositionOrientation {
    let n = g.r * p.n;
    PositionOrientation {
        x: g.t + g.r * p.x,
        n: n / n.norm(),
    }
}

/// Pushforward: `(ẋ, ṅ) ↦ (R ẋ, R ṅ)` at the moved base point.
pub fn act_tangent(g: &RotoTranslation, tv: &TangentVector) -> TangentVector {
    TangentVector {
        base: act_point(g, &tv.base),
        xdot: g.r * tv.xdot,
        ndot: g.r * tv.ndot,
    }
}

/// `(v, ω) · (x, n) = (v + ω × x, ω × n)`, a tangent vector at `p`.
pub fn act_algebra(m: &Twist, p: &PositionOrientation) -> TangentVector {
    TangentVector {
        base: *p,
        xdot: m.v + m.omega.cross(&p.x),
        ndot: m.omega.cross(&p.n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn e1() -> Vec3 {
        Vec3::x()
    }

    fn rz(angle: f64) -> Matrix3<f64> {
        exp_so3(&Vec3::new(0.0, 0.0, angle))
    }

    #[test]
    fn hat_examples() {
        assert_eq!(hat(&Vec3::zeros()), Matrix3::zeros());
        let k = hat(&Vec3::z());
        assert_eq!(k[(0, 1)], -1.0);
        assert_eq!(k[(1, 0)], 1.0);
        assert_eq!(k[(0, 2)], 0.0);
        assert_eq!(k[(2, 0)], 0.0);
        assert_eq!(k[(1, 2)], 0.0);
        assert_eq!(k[(2, 1)], 0.0);
        let w = Vec3::new(1.0, 2.0, 3.0);
        let u = Vec3::new(4.0, 5.0, 6.0);
        assert_eq!(hat(&w) * u, Vec3::new(-3.0, 6.0, -3.0));
        assert_eq!(w.cross(&u), Vec3::new(-3.0, 6.0, -3.0));
    }

    #[test]
    fn vee_inverts_hat() {
        for w in [Vec3::new(1.0, 2.0, 3.0), Vec3::zeros(), Vec3::new(0.0, 0.0, PI)] {
            assert_eq!(vee(&hat(&w)).unwrap(), w);
        }
        let mut a = hat(&Vec3::new(1.0, 2.0, 3.0));
        a[(0, 1)] += 0.1;
        assert!(matches!(vee(&a), Err(M3Error::NotSkew(_))));
        assert!(vee(&Matrix3::identity()).is_err());
    }

    #[test]
    fn angular_velocity_examples() {
        assert_eq!(Twist::new(Vec3::zeros(), Vec3::new(0.0, 0.0, FRAC_PI_2)).angular_velocity(), FRAC_PI_2);
        assert_eq!(angular_velocity(&Twist::zero()), 0.0);
        assert_eq!(Twist::new(Vec3::zeros(), Vec3::new(3.0, 4.0, 0.0)).angular_velocity(), 5.0);
    }

    #[test]
    fn compose_two_quarter_turns() {
        let g2 = RotoTranslation::new(Vec3::new(0.0, 1.0, 0.0), rz(FRAC_PI_2)).unwrap();
        let g1 = RotoTranslation::new(Vec3::new(1.0, 0.0, 0.0), rz(FRAC_PI_2)).unwrap();
        let g = compose(&g2, &g1);
        assert!((g.translation() - Vec3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
        assert!((g.rotation() - rz(PI)).norm() < 1e-12);
        let id = RotoTranslation::identity();
        assert_eq!(compose(&id, &g1), g1);
        let back = compose(&g1, &inverse(&g1));
        assert!((back.translation()).norm() < 1e-12);
        assert!((back.rotation() - Matrix3::identity()).norm() < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        let id = RotoTranslation::identity();
        assert_eq!(inverse(&id), id);
        let t = Vec3::new(1.0, -2.0, 3.5);
        let g = RotoTranslation::from_translation(t);
        assert_eq!(*inverse(&g).translation(), -t);
    }

    #[test]
    fn identity_is_zero_translation_identity_rotation() {
        let id = RotoTranslation::identity();
        assert_eq!(*id.translation(), Vec3::zeros());
        assert_eq!(*id.rotation(), Matrix3::identity());
    }

    #[test]
    fn rotation_validation() {
        assert!(RotoTranslation::new(Vec3::zeros(), Matrix3::identity() * 2.0).is_err());
        let reflect = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            RotoTranslation::new(Vec3::zeros(), reflect),
            Err(M3Error::InvalidRotation { .. })
        ));
        assert!(RotoTranslation::new(Vec3::new(f64::NAN, 0.0, 0.0), Matrix3::identity()).is_err());
    }

    #[test]
    fn exp_so3_examples() {
        assert_eq!(exp_so3(&Vec3::zeros()), Matrix3::identity());
        let r = exp_so3(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        assert!((r * e1() - Vec3::y()).norm() < 1e-12);
        let full = exp_so3(&Vec3::new(0.0, 0.0, 2.0 * PI));
        assert!((full - Matrix3::identity()).norm() < 1e-9);
    }

    #[test]
    fn exp_se3_examples() {
        assert_eq!(exp_se3(&Twist::zero()), RotoTranslation::identity());
        let v = Vec3::new(0.3, -1.0, 2.0);
        let g = exp_se3(&Twist::new(v, Vec3::zeros()));
        assert_eq!(*g.translation(), v);
        assert_eq!(*g.rotation(), Matrix3::identity());
    }

    #[test]
    fn closed_forms_match_series_near_thresholds() {
        let axis = Vec3::new(1.0, 2.0, -0.5).normalize();
        let omega = axis * (SE3_TAYLOR_THRESHOLD * 1.000_001);
        let w = hat(&omega);
        let series = Matrix3::identity() + w * 0.5 + w * w / 6.0;
        let diff = (se3_left_jacobian(&omega) - series).norm();
        assert!(diff < 1e-13, "{diff:e}");

        let omega = axis * (SO3_TAYLOR_THRESHOLD * 1.000_001);
        let w = hat(&omega);
        let series = Matrix3::identity() + w + w * w * 0.5;
        assert!((exp_so3(&omega) - series).norm() < 1e-15);
    }

    #[test]
    fn act_point_examples() {
        let p = PositionOrientation::from_arrays([0.5, 1.0, -2.0], [0.0, 3.0, 4.0]).unwrap();
        assert_eq!(act_point(&RotoTranslation::identity(), &p), p);

        let d = Vec3::new(1.0, 2.0, 3.0);
        let origin = PositionOrientation::new(Vec3::zeros(), e1()).unwrap();
        let moved = act_point(&RotoTranslation::from_translation(d), &origin);
        assert_eq!(*moved.x(), d);
        assert_eq!(*moved.n(), e1());

        let q = PositionOrientation::new(e1(), e1()).unwrap();
        let g = RotoTranslation::new(Vec3::zeros(), rz(FRAC_PI_2)).unwrap();
        let out = act_point(&g, &q);
        assert!((out.x() - Vec3::y()).norm() < 1e-12);
        assert!((out.n() - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn act_tangent_examples() {
        let p = PositionOrientation::new(Vec3::new(1.0, 1.0, 0.0), Vec3::z()).unwrap();
        let tv = TangentVector::new(p, e1(), Vec3::y()).unwrap();
        assert_eq!(act_tangent(&RotoTranslation::identity(), &tv), tv);

        let shifted = act_tangent(&RotoTranslation::from_translation(Vec3::new(0.0, 0.0, 5.0)), &tv);
        assert_eq!(shifted.xdot(), tv.xdot());
        assert_eq!(shifted.ndot(), tv.ndot());
        assert_eq!(*shifted.base().x(), Vec3::new(1.0, 1.0, 5.0));

        let g = RotoTranslation::new(Vec3::zeros(), rz(FRAC_PI_2)).unwrap();
        let rotated = act_tangent(&g, &tv);
        assert!((rotated.xdot() - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn act_algebra_examples() {
        let p = PositionOrientation::new(Vec3::zeros(), e1()).unwrap();
        let z = act_algebra(&Twist::zero(), &p);
        assert_eq!(*z.xdot(), Vec3::zeros());
        assert_eq!(*z.ndot(), Vec3::zeros());

        let tv = act_algebra(&Twist::new(Vec3::zeros(), Vec3::new(0.0, 0.0, FRAC_PI_2)), &p);
        assert_eq!(*tv.xdot(), Vec3::zeros());
        assert!((tv.ndot() - Vec3::new(0.0, FRAC_PI_2, 0.0)).norm() < 1e-15);

        let q = PositionOrientation::from_arrays([2.0, -1.0, 0.5], [0.0, 1.0, 1.0]).unwrap();
        let tv = act_algebra(&Twist::new(e1(), Vec3::zeros()), &q);
        assert_eq!(*tv.xdot(), e1());
        assert_eq!(*tv.ndot(), Vec3::zeros());
    }

    #[test]
    fn position_orientation_validation() {
        let p = PositionOrientation::from_arrays([0.0; 3], [0.0, 3.0, 4.0]).unwrap();
        assert!((p.n().norm() - 1.0).abs() <= UNIT_TOL);
        assert!(matches!(
            PositionOrientation::from_arrays([0.0; 3], [0.0, 0.0, 1e-13]),
            Err(M3Error::DegenerateOrientation(_))
        ));
        assert!(PositionOrientation::from_arrays([f64::INFINITY, 0.0, 0.0], [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn tangent_projects_ndot() {
        let p = PositionOrientation::from_arrays([0.0; 3], [1.0, 1.0, 0.0]).unwrap();
        let tv = TangentVector::new(p, Vec3::zeros(), Vec3::new(1.0, 0.0, 2.0)).unwrap();
        assert!(tv.ndot().dot(p.n()).abs() <= 1e-15);
        assert!((tv.ndot() - Vec3::new(0.5, -0.5, 2.0)).norm() < 1e-15);
    }
}
