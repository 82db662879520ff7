//! Minimal-angular-velocity (mav) constructions between two
//! position-orientations.
//!
//! The planar roto-translation from `p1` to `p2` rotates only in the plane
//! `N = span{n1, n2}`, by `θ = ∠(n1, n2)`. Written as a screw displacement
//! about the center `c = x_m + ½ cot(θ/2) ℓ × x_∥` its generator with the
//! smallest angular velocity is
//!
//! ```text
//! M = (−θ ℓ × c + x_⊥, θ ℓ)
//! ```
//!
//! where `ℓ` is the unit normal of `N`. The translation part is evaluated as
//! `−θ ℓ × x_m + f(θ) x_∥ + x_⊥` with `f(θ) = (θ/2) cot(θ/2)`, which stays
//! bounded as `θ → 0` and reduces to `M = (x2 − x1, 0)` there.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix3;

use crate::error::{M3Error, Result};
use crate::group::{
    act_algebra, act_point, exp_se3, exp_so3, hat, PositionOrientation, RotoTranslation, Twist,
    Vec3,
};
use crate::metric::{adapted_frame, MetricParams};

/// Below this angle the screw center is not finite enough to be useful.
pub const SCREW_MIN_ANGLE: f64 = 1e-7;
/// Angles above `π − ANTIPODAL_BAND` are flagged as non-unique.
pub const ANTIPODAL_BAND: f64 = 1e-6;
/// `‖n1 × n2‖` below which the rotation plane is taken from the adapted frame.
pub const AXIS_EPS: f64 = 1e-14;
const COT_SERIES_THRESHOLD: f64 = 1e-4;

/// Intermediate quantities of the planar construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarDecomposition {
    /// Rotation angle in `[0, π]`.
    pub theta: f64,
    /// Unit normal `ℓ` of the rotation plane; `L = hat(ℓ)`.
    pub axis: Vec3,
    pub x_par: Vec3,
    pub x_perp: Vec3,
    pub x_m: Vec3,
    /// Set when the orientations are (nearly) antipodal and the plane is a
    /// conventional choice.
    pub non_unique: bool,
}

impl PlanarDecomposition {
    /// The unit-radian rotation generator `L` in the plane.
    pub fn generator_matrix(&self) -> Matrix3<f64> {
        hat(&self.axis)
    }

    /// `ω = θ ℓ`.
    pub fn omega(&self) -> Vec3 {
        self.axis * self.theta
    }
}

pub fn planar_decomposition(p1: &PositionOrientation, p2: &PositionOrientation) -> PlanarDecomposition {
    let (n1, n2) = (p1.n(), p2.n());
    let cross = n1.cross(n2);
    let sin = cross.norm();
    let theta = sin.atan2(n1.dot(n2));
    let axis = if sin > AXIS_EPS {
        // Remove the rounding component along n1 so that exp(θℓ) n1 lands on n2.
        let a = cross - n1 * n1.dot(&cross);
        a.normalize()
    } else {
        // Parallel or antipodal: the plane spanned by n1 and the frame's e2.
        *adapted_frame(p1, None)
            .expect("default seed is never degenerate")
            .e3()
    };
    let xvec = p2.x() - p1.x();
    let x_perp = axis * axis.dot(&xvec);
    let x_par = xvec - x_perp;
    PlanarDecomposition {
        theta,
        axis,
        x_par,
        x_perp,
        x_m: (p1.x() + p2.x()) * 0.5,
        non_unique: theta > PI - ANTIPODAL_BAND,
    }
}

/// The roto-translation `x ↦ R (x − x1) + x2` with `R = exp(θ L)`.
pub fn planar_rototranslation(p1: &PositionOrientation, p2: &PositionOrientation) -> RotoTranslation {
    let d = planar_decomposition(p1, p2);
    let r = exp_so3(&d.omega());
    RotoTranslation::new(p2.x() - r * p1.x(), r).expect("exp_so3 yields a rotation")
}

/// Rotation about an axis through `c` followed by a translation along it:
/// `x ↦ c + R (x − c) + t_perp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewDisplacement {
    pub c: Vec3,
    pub omega: Vec3,
    pub t_perp: Vec3,
}

impl ScrewDisplacement {
    pub fn rotation(&self) -> Matrix3<f64> {
        exp_so3(&self.omega)
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.c + self.rotation() * (x - self.c) + self.t_perp
    }

    pub fn to_rototranslation(&self) -> RotoTranslation {
        let r = self.rotation();
        RotoTranslation::new(self.c - r * self.c + self.t_perp, r).expect("exp_so3 yields a rotation")
    }

    /// Generator `x ↦ ω (x − c) + t_perp`.
    pub fn generator(&self) -> Twist {
        self.generator_with_turns(0)
    }

    /// Generator of the same displacement whose rotation angle is advanced
    /// by `turns` full revolutions about the same axis.
    pub fn generator_with_turns(&self, turns: i32) -> Twist {
        let theta = self.omega.norm();
        let omega = if theta > 0.0 {
            self.omega * ((theta + TAU * turns as f64) / theta)
        } else {
            self.omega
        };
        Twist::new(self.t_perp - omega.cross(&self.c), omega)
    }
}

pub fn screw_decompose(p1: &PositionOrientation, p2: &PositionOrientation) -> Result<ScrewDisplacement> {
    let d = planar_decomposition(p1, p2);
    if d.theta < SCREW_MIN_ANGLE {
        return Err(M3Error::PureTranslation(d.theta));
    }
    let cot_half = 1.0 / (d.theta * 0.5).tan();
    Ok(ScrewDisplacement {
        c: d.x_m + d.axis.cross(&d.x_par) * (0.5 * cot_half),
        omega: d.omega(),
        t_perp: d.x_perp,
    })
}

/// `(θ/2) cot(θ/2)`.
fn half_cot_factor(theta: f64) -> f64 {
    if theta < COT_SERIES_THRESHOLD {
        let t2 = theta * theta;
        1.0 - t2 / 12.0 - t2 * t2 / 720.0
    } else {
        let h = theta * 0.5;
        h / h.tan()
    }
}

/// The mav generator and the flags of its construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MavGenerator {
    pub twist: Twist,
    pub theta: f64,
    pub non_unique: bool,
}

pub fn mav(p1: &PositionOrientation, p2: &PositionOrientation) -> MavGenerator {
    let d = planar_decomposition(p1, p2);
    let omega = d.omega();
    let v = d.x_par * half_cot_factor(d.theta) + d.x_perp - omega.cross(&d.x_m);
    MavGenerator {
        twist: Twist::new(v, omega),
        theta: d.theta,
        non_unique: d.non_unique,
    }
}

/// The generator `M(p1, p2)` with `exp(M) · p1 = p2`.
pub fn mav_generator(p1: &PositionOrientation, p2: &PositionOrientation) -> Twist {
    mav(p1, p2).twist
}

/// Point at time `t` on the curve `η(t) = exp(t M) · p1`.
pub fn mav_curve(p1: &PositionOrientation, p2: &PositionOrientation, t: f64) -> PositionOrientation {
    debug_assert!((0.0..=1.0).contains(&t), "curve parameter {t} outside [0, 1]");
    curve_point(&mav_generator(p1, p2), p1, t)
}

/// `exp(t m) · p`, for any real `t`.
pub fn curve_point(m: &Twist, p: &PositionOrientation, t: f64) -> PositionOrientation {
    act_point(&exp_se3(&m.scaled(t)), p)
}

/// `sign(q) √|q|`.
#[inline]
pub fn signed_sqrt(q: f64) -> f64 {
    q.signum() * q.abs().sqrt()
}

/// Squared mav norm `‖M · p1‖²` (may be negative for unconstrained weights).
pub fn mav_norm_sq(w: &MetricParams, p1: &PositionOrientation, p2: &PositionOrientation) -> f64 {
    w.norm_sq(&act_algebra(&mav_generator(p1, p2), p1))
}

/// The mav distance `‖M(p1, p2) · p1‖` under `w`, signed for unconstrained
/// weights with a negative squared norm.
pub fn mav_distance(w: &MetricParams, p1: &PositionOrientation, p2: &PositionOrientation) -> f64 {
    let q = mav_norm_sq(w, p1, p2);
    if q == 0.0 {
        0.0
    } else {
        signed_sqrt(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn po(x: [f64; 3], n: [f64; 3]) -> PositionOrientation {
        PositionOrientation::from_arrays(x, n).unwrap()
    }

    fn screw_pair() -> (PositionOrientation, PositionOrientation) {
        (po([0.0; 3], [1.0, 0.0, 0.0]), po([0.0, 2.0, 0.0], [0.0, 1.0, 0.0]))
    }

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn planar_rototranslation_examples() {
        let p = po([1.0, 2.0, 3.0], [0.2, -0.3, 0.9]);
        let s = planar_rototranslation(&p, &p);
        assert!(s.translation().norm() < 1e-15);
        assert!((s.rotation() - Matrix3::identity()).norm() < 1e-15);

        let (p1, p2) = screw_pair();
        let s = planar_rototranslation(&p1, &p2);
        assert!((s.rotation() - exp_so3(&Vec3::new(0.0, 0.0, FRAC_PI_2))).norm() < 1e-12);
        assert!(close(s.translation(), &Vec3::new(0.0, 2.0, 0.0), 1e-12));
        let q = act_point(&s, &p1);
        assert!(close(q.x(), p2.x(), 1e-10) && close(q.n(), p2.n(), 1e-10));

        let s = planar_rototranslation(&p1, &po([0.0; 3], [0.0, 1.0, 0.0]));
        assert!(s.translation().norm() < 1e-15);
    }

    #[test]
    fn decomposition_invariants() {
        let p1 = po([0.3, -1.0, 2.0], [0.1, 0.7, -0.2]);
        let p2 = po([-1.5, 0.4, 0.0], [0.9, -0.1, 0.4]);
        let d = planar_decomposition(&p1, &p2);
        let (n1, n2) = (p1.n(), p2.n());
        let lhs = d.generator_matrix() * d.theta.sin();
        let rhs = n2 * n1.transpose() - n1 * n2.transpose();
        assert!((lhs - rhs).norm() < 1e-9);
        assert!(close(&(d.x_par + d.x_perp), &(p2.x() - p1.x()), 1e-15));
        assert!(d.x_perp.dot(n1).abs() < 1e-9 && d.x_perp.dot(n2).abs() < 1e-9);
        assert!(!d.non_unique);
    }

    #[test]
    fn screw_decompose_examples() {
        let (p1, p2) = screw_pair();
        let s = screw_decompose(&p1, &p2).unwrap();
        assert!(close(&s.c, &Vec3::new(-1.0, 1.0, 0.0), 1e-12));
        assert!(s.t_perp.norm() < 1e-15);
        assert!(close(&s.apply(p1.x()), p2.x(), 1e-12));

        let s = screw_decompose(&p1, &po([0.0; 3], [0.0, 1.0, 0.0])).unwrap();
        assert_eq!(s.c, Vec3::zeros());

        let p2 = po([0.0, 0.0, 5.0], [0.0, 1.0, 0.0]);
        let s = screw_decompose(&p1, &p2).unwrap();
        assert!(close(&s.t_perp, &Vec3::new(0.0, 0.0, 5.0), 1e-15));
        assert!(close(&s.c, &Vec3::new(0.0, 0.0, 2.5), 1e-15));
        let planar = planar_rototranslation(&p1, &p2);
        for probe in [Vec3::zeros(), Vec3::x(), Vec3::new(1.0, -2.0, 3.0), Vec3::new(-4.0, 0.5, 0.25)] {
            assert!(close(&s.apply(&probe), &planar.transform_point(&probe), 1e-9));
        }
        // t_perp is fixed by the rotation.
        let r = s.rotation();
        assert!(s.omega.dot(&(r * s.t_perp - s.t_perp)).abs() < 1e-12);
        assert!((hat(&s.omega) * s.t_perp).norm() <= 1e-9 * s.omega.norm() * s.t_perp.norm());
    }

    #[test]
    fn screw_decompose_rejects_pure_translation() {
        let p1 = po([0.0; 3], [1.0, 0.0, 0.0]);
        let p2 = po([3.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!(matches!(screw_decompose(&p1, &p2), Err(M3Error::PureTranslation(_))));
    }

    #[test]
    fn mav_generator_examples() {
        let p = po([1.0, 2.0, 3.0], [0.2, -0.3, 0.9]);
        assert_eq!(mav_generator(&p, &p), Twist::zero());

        let p1 = po([0.0; 3], [1.0, 0.0, 0.0]);
        let m = mav_generator(&p1, &po([3.0, 0.0, 0.0], [1.0, 0.0, 0.0]));
        assert_eq!(m, Twist::new(Vec3::new(3.0, 0.0, 0.0), Vec3::zeros()));

        let (p1, p2) = screw_pair();
        let m = mav_generator(&p1, &p2);
        assert!(close(&m.v, &Vec3::new(FRAC_PI_2, FRAC_PI_2, 0.0), 1e-12));
        assert!(close(&m.omega, &Vec3::new(0.0, 0.0, FRAC_PI_2), 1e-12));
        let q = act_point(&exp_se3(&m), &p1);
        assert!(close(q.x(), p2.x(), 1e-10) && close(q.n(), p2.n(), 1e-10));
    }

    #[test]
    fn mav_generator_matches_screw_generator() {
        let p1 = po([0.3, -1.0, 2.0], [0.1, 0.7, -0.2]);
        let p2 = po([-1.5, 0.4, 0.0], [0.9, -0.1, 0.4]);
        let a = mav_generator(&p1, &p2);
        let b = screw_decompose(&p1, &p2).unwrap().generator();
        assert!(close(&a.v, &b.v, 1e-12) && close(&a.omega, &b.omega, 1e-15));
    }

    #[test]
    fn small_angle_path_is_continuous() {
        let p1 = po([0.5, 0.0, -1.0], [0.0, 0.0, 1.0]);
        for eps in [1e-3, 1e-5, 1e-7, 1e-9, 1e-12] {
            let p2 = po([1.0, 2.0, 0.0], [eps, 0.0, 1.0]);
            let m = mav_generator(&p1, &p2);
            let q = act_point(&exp_se3(&m), &p1);
            assert!(close(q.x(), p2.x(), 1e-10), "eps {eps}");
            assert!(close(q.n(), p2.n(), 1e-12), "eps {eps}");
        }
    }

    #[test]
    fn antipodal_is_total_and_flagged() {
        let p1 = po([0.0; 3], [1.0, 0.0, 0.0]);
        let p2 = po([1.0, 1.0, 1.0], [-1.0, 0.0, 0.0]);
        let g = mav(&p1, &p2);
        assert!(g.non_unique);
        assert!((g.theta - PI).abs() < 1e-15);
        // Plane spanned by n1 and the default e2 = y, so the axis is z.
        assert!(close(&g.twist.omega, &Vec3::new(0.0, 0.0, PI), 1e-15));
        let q = act_point(&exp_se3(&g.twist), &p1);
        assert!(close(q.x(), p2.x(), 1e-10) && close(q.n(), p2.n(), 1e-10));
        assert!(planar_decomposition(&p1, &p2).non_unique);
    }

    #[test]
    fn mav_curve_examples() {
        let p1 = po([0.0; 3], [1.0, 0.0, 0.0]);
        let p2 = po([0.0; 3], [0.0, 1.0, 0.0]);
        assert_eq!(mav_curve(&p1, &p2, 0.0), p1);
        let end = mav_curve(&p1, &p2, 1.0);
        assert!(close(end.n(), p2.n(), 1e-10));
        let mid = mav_curve(&p1, &p2, 0.5);
        let slerp = (p1.n() + p2.n()).normalize();
        assert!(close(mid.n(), &slerp, 1e-12));
        assert!(mid.x().norm() < 1e-15);
    }

    #[test]
    fn mav_distance_examples() {
        let p1 = po([0.0; 3], [1.0, 0.0, 0.0]);
        let w = MetricParams::strict([4.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((mav_distance(&w, &p1, &po([3.0, 0.0, 0.0], [1.0, 0.0, 0.0])) - 6.0).abs() < 1e-15);

        let w = MetricParams::strict([2.0, 0.5, 3.0, 0.2, -0.4]).unwrap();
        let d = mav_distance(&w, &p1, &po([0.0; 3], [0.0, 1.0, 0.0]));
        assert!((d - FRAC_PI_2 * 3.0_f64.sqrt()).abs() < 1e-12);

        let (p1, p2) = screw_pair();
        let w = MetricParams::strict([1.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        let d = mav_distance(&w, &p1, &p2);
        assert!((d - FRAC_PI_2 * 3.0_f64.sqrt()).abs() < 1e-12);
        assert!((d - 2.72070).abs() < 1e-5);
    }

    #[test]
    fn negative_square_gives_negative_distance() {
        let p1 = po([0.0; 3], [1.0, 0.0, 0.0]);
        let p2 = po([2.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let w = MetricParams::unconstrained([-1.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(mav_distance(&w, &p1, &p2), -2.0);
    }

    #[test]
    fn zero_law() {
        let p = po([1.0, -2.0, 0.3], [0.5, 0.5, -0.1]);
        let w = MetricParams::unconstrained([1.0, -3.0, 2.0, 0.4, 7.0]).unwrap();
        assert_eq!(mav_distance(&w, &p, &p), 0.0);
    }

    #[test]
    fn turns_preserve_the_displacement() {
        let p1 = po([0.3, -1.0, 2.0], [0.1, 0.7, -0.2]);
        let p2 = po([-1.5, 0.4, 0.0], [0.9, -0.1, 0.4]);
        let s = screw_decompose(&p1, &p2).unwrap();
        let theta = s.omega.norm();
        for k in [-2, -1, 1, 2] {
            let m = s.generator_with_turns(k);
            assert!((m.angular_velocity() - (theta + TAU * k as f64).abs()).abs() < 1e-12);
            let q = act_point(&exp_se3(&m), &p1);
            assert!(close(q.x(), p2.x(), 1e-9) && close(q.n(), p2.n(), 1e-9));
        }
    }
}
