//! The five-parameter family of SE(3)-invariant Riemannian metrics on M₃.
//!
//! At a point `p = (x, n)` with tangent `(ẋ, ṅ)` the squared norm is
//!
//! ```text
//! w1 |ẋ·n|² + w2 ‖ẋ×n‖² + w3 ‖ṅ‖² + 2 w4 ẋ·ṅ + 2 w5 ẋ·(ṅ×n)
//! ```
//!
//! and the metric is positive definite iff `w1, w2, w3 > 0` and
//! `w2 w3 > w4² + w5²`. Setting `w5 = 0` gives the E(3)-invariant subfamily.
//!
//! Besides evaluating the family, this module re-derives it: in an adapted
//! frame `f1..f5` at `p` the invariance under the stabilizer of `p` is a
//! linear system on symmetric 5×5 matrices whose solution space is spanned by
//! the five pattern matrices returned by [`pattern_basis`].

use nalgebra::{DMatrix, SMatrix, SymmetricEigen};

use crate::error::{M3Error, Result};
use crate::group::{act_tangent, exp_so3, PositionOrientation, RotoTranslation, TangentVector, Vec3};

pub type Matrix5 = SMatrix<f64, 5, 5>;

/// Base points closer than this are treated as equal by [`MetricParams::inner`].
pub const BASE_MATCH_TOL: f64 = 1e-12;
/// Minimum angle between a frame seed and the orientation.
pub const SEED_MIN_ANGLE: f64 = 1e-6;

/// Weights `w1..w5` of an invariant metric.
///
/// In strict mode the weights are checked against the positivity constraints;
/// unconstrained mode accepts any finite weights, in which case the squared
/// "norm" may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    w: [f64; 5],
    strict: bool,
}

impl MetricParams {
    pub fn new(w: [f64; 5], strict: bool) -> Result<Self> {
        if !w.iter().all(|c| c.is_finite()) {
            return Err(M3Error::NonFinite("metric weight"));
        }
        if strict && !is_positive(&w) {
            return Err(M3Error::NotPositive(w));
        }
        Ok(Self { w, strict })
    }

    /// Positive-definite weights; fails if the constraints are violated.
    pub fn strict(w: [f64; 5]) -> Result<Self> {
        Self::new(w, true)
    }

    pub fn unconstrained(w: [f64; 5]) -> Result<Self> {
        Self::new(w, false)
    }

    #[inline]
    pub fn weights(&self) -> [f64; 5] {
        self.w
    }

    #[inline]
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn is_positive(&self) -> bool {
        is_positive(&self.w)
    }

    /// The five basis terms of the squared norm, so that
    /// `norm_sq = Σ wᵢ · termsᵢ`.
    pub fn terms(tv: &TangentVector) -> [f64; 5] {
        let n = tv.base().n();
        let xd = tv.xdot();
        let nd = tv.ndot();
        let along = xd.dot(n);
        [
            along * along,
            xd.cross(n).norm_squared(),
            nd.norm_squared(),
            2.0 * xd.dot(nd),
            2.0 * xd.dot(&nd.cross(n)),
        ]
    }

    pub fn norm_sq(&self, tv: &TangentVector) -> f64 {
        let t = Self::terms(tv);
        self.w.iter().zip(t.iter()).map(|(w, t)| w * t).sum()
    }

    /// Inner product via polarization.
    pub fn inner(&self, a: &TangentVector, b: &TangentVector) -> Result<f64> {
        let offset = (a.base().x() - b.base().x()).norm() + (a.base().n() - b.base().n()).norm();
        if offset.is_nan() || offset > BASE_MATCH_TOL {
            return Err(M3Error::BaseMismatch(offset));
        }
        Ok((self.norm_sq(&a.add(b)) - self.norm_sq(&a.sub(b))) / 4.0)
    }

    /// Gram matrix `hᵢⱼ = ⟨fᵢ, fⱼ⟩` in the given frame.
    pub fn metric_matrix(&self, frame: &AdaptedFrame) -> Matrix5 {
        let f = frame.tangent_basis();
        Matrix5::from_fn(|i, j| {
            self.inner(&f[i], &f[j])
                .expect("frame tangents share a base point")
        })
    }

    /// Copy with `w5 = 0`.
    pub fn restrict_e3(&self) -> Self {
        let mut w = self.w;
        w[4] = 0.0;
        Self { w, strict: self.strict }
    }
}

/// Sylvester-style positivity test: `w1, w2, w3 > 0` and `w2 w3 > w4² + w5²`.
pub fn is_positive(w: &[f64; 5]) -> bool {
    w[0] > 0.0 && w[1] > 0.0 && w[2] > 0.0 && w[1] * w[2] > w[3] * w[3] + w[4] * w[4]
}

/// Weights from unconstrained parameters that always satisfy the
/// semi-positivity constraints: `wᵢ = aᵢ²` for i ≤ 3 and
/// `(w4, w5) = (a4, a5) · 2 a2 a3 / (1 + a4² + a5²)`.
pub fn reparam(a: [f64; 5]) -> Result<MetricParams> {
    let delta = 2.0 * a[1] * a[2] / (1.0 + a[3] * a[3] + a[4] * a[4]);
    MetricParams::unconstrained([a[0] * a[0], a[1] * a[1], a[2] * a[2], a[3] * delta, a[4] * delta])
}

pub fn restrict_e3(w: &MetricParams) -> MetricParams {
    w.restrict_e3()
}

/// Orthonormal frame `e1 = n, e2, e3` at a point, and the tangent basis
/// `f1 = (e1,0), f2 = (e2,0), f3 = (e3,0), f4 = (0,e2), f5 = (0,e3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptedFrame {
    base: PositionOrientation,
    e: [Vec3; 3],
}

impl AdaptedFrame {
    #[inline]
    pub fn base(&self) -> &PositionOrientation {
        &self.base
    }

    #[inline]
    pub fn e1(&self) -> &Vec3 {
        &self.e[0]
    }

    #[inline]
    pub fn e2(&self) -> &Vec3 {
        &self.e[1]
    }

    #[inline]
    pub fn e3(&self) -> &Vec3 {
        &self.e[2]
    }

    pub fn tangent_basis(&self) -> [TangentVector; 5] {
        let z = Vec3::zeros();
        let [e1, e2, e3] = self.e;
        let tv = |xd: Vec3, nd: Vec3| {
            TangentVector::new(self.base, xd, nd).expect("finite frame vectors")
        };
        [tv(e1, z), tv(e2, z), tv(e3, z), tv(z, e2), tv(z, e3)]
    }

    /// Components `c` of a tangent vector at the frame's base point, with
    /// `tv = Σ cᵢ fᵢ`.
    pub fn components(&self, tv: &TangentVector) -> SMatrix<f64, 5, 1> {
        let [e1, e2, e3] = &self.e;
        SMatrix::<f64, 5, 1>::new(
            tv.xdot().dot(e1),
            tv.xdot().dot(e2),
            tv.xdot().dot(e3),
            tv.ndot().dot(e2),
            tv.ndot().dot(e3),
        )
    }
}

/// Builds the adapted frame at `p`.
///
/// `e2` is the Gram–Schmidt projection of `seed` (default: the standard axis
/// least aligned with `n`, lowest index on ties) and `e3 = n × e2`.
pub fn adapted_frame(p: &PositionOrientation, seed: Option<Vec3>) -> Result<AdaptedFrame> {
    let n = *p.n();
    let seed = match seed {
        Some(s) => {
            if !s.iter().all(|c| c.is_finite()) {
                return Err(M3Error::NonFinite("frame seed"));
            }
            let angle = s.cross(&n).norm().atan2(s.dot(&n).abs());
            if angle.is_nan() || angle <= SEED_MIN_ANGLE {
                return Err(M3Error::DegenerateSeed(angle));
            }
            s
        }
        None => {
            let mut axis = 0;
            for k in 1..3 {
                if n[k].abs() < n[axis].abs() {
                    axis = k;
                }
            }
            let mut s = Vec3::zeros();
            s[axis] = 1.0;
            s
        }
    };
    let mut e2 = seed - n * n.dot(&seed);
    e2 -= n * n.dot(&e2);
    let e2 = e2.normalize();
    let e3 = n.cross(&e2);
    Ok(AdaptedFrame { base: *p, e: [n, e2, e3] })
}

/// The invariant component matrix for the given weights, written directly.
pub fn pattern_matrix(w: &[f64; 5]) -> Matrix5 {
    let [w1, w2, w3, w4, w5] = *w;
    #[rustfmt::skip]
    let m = Matrix5::new(
        w1,  0.0, 0.0, 0.0, 0.0,
        0.0, w2,  0.0, w4,  w5,
        0.0, 0.0, w2,  -w5, w4,
        0.0, w4,  -w5, w3,  0.0,
        0.0, w5,  w4,  0.0, w3,
    );
    m
}

/// `pattern_matrix` of each unit weight vector.
pub fn pattern_basis() -> [Matrix5; 5] {
    std::array::from_fn(|k| {
        let mut w = [0.0; 5];
        w[k] = 1.0;
        pattern_matrix(&w)
    })
}

/// Coefficients of the Frobenius projection of `h` onto the pattern span,
/// and the residual norm `‖h − projection‖_F`.
pub fn pattern_projection(h: &Matrix5) -> ([f64; 5], f64) {
    let basis = pattern_basis();
    let mut coeffs = [0.0; 5];
    let mut proj = Matrix5::zeros();
    for (c, b) in coeffs.iter_mut().zip(basis.iter()) {
        *c = h.dot(b) / b.norm_squared();
        proj += b * *c;
    }
    (coeffs, (h - proj).norm())
}

/// The stabilizer quarter-turn at `p` (rotation by π/2 about `n` through
/// `x`, so `e2 ↦ e3`, `e3 ↦ −e2`) as a 5×5 matrix in the adapted frame.
pub fn stabilizer_matrix(frame: &AdaptedFrame) -> Matrix5 {
    let p = frame.base();
    let r = exp_so3(&(p.n() * std::f64::consts::FRAC_PI_2));
    let g = RotoTranslation::new(p.x() - r * p.x(), r).expect("exp_so3 yields a rotation");
    let f = frame.tangent_basis();
    let mut m = Matrix5::zeros();
    for (j, fj) in f.iter().enumerate() {
        m.set_column(j, &frame.components(&act_tangent(&g, fj)));
    }
    m
}

const SYM_INDEX: [(usize, usize); 15] = [
    (0, 0), (0, 1), (0, 2), (0, 3), (0, 4),
    (1, 1), (1, 2), (1, 3), (1, 4),
    (2, 2), (2, 3), (2, 4),
    (3, 3), (3, 4),
    (4, 4),
];

fn sym_unit(k: usize) -> Matrix5 {
    let (i, j) = SYM_INDEX[k];
    let mut m = Matrix5::zeros();
    m[(i, j)] = 1.0;
    m[(j, i)] = 1.0;
    m
}

/// Basis of `{H symmetric : Gᵀ H G = H}` where `G` is the stabilizer
/// quarter-turn at `p` in its default adapted frame.
pub fn stabilizer_invariant_basis(p: &PositionOrientation) -> Vec<Matrix5> {
    let frame = adapted_frame(p, None).expect("default seed is never degenerate");
    invariant_basis_for(&stabilizer_matrix(&frame))
}

/// Null space of `H ↦ Gᵀ H G − H` restricted to symmetric `H`.
pub fn invariant_basis_for(g: &Matrix5) -> Vec<Matrix5> {
    let mut a = DMatrix::<f64>::zeros(25, 15);
    for k in 0..15 {
        let e = sym_unit(k);
        let r = g.transpose() * e * g - e;
        for (row, v) in r.iter().enumerate() {
            a[(row, k)] = *v;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let tol = 1e-10 * svd.singular_values.max().max(1.0);
    let mut out = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol {
            let row = v_t.row(k);
            let mut h = Matrix5::zeros();
            for (idx, c) in row.iter().enumerate() {
                h += sym_unit(idx) * *c;
            }
            out.push(h);
        }
    }
    out
}

/// Smallest eigenvalue of a symmetric 5×5 matrix.
pub fn min_eigenvalue(m: &Matrix5) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.min()
}

/// Determinants of the leading 1×1 … 5×5 submatrices.
pub fn leading_minors(m: &Matrix5) -> [f64; 5] {
    std::array::from_fn(|k| {
        let n = k + 1;
        DMatrix::from_fn(n, n, |i, j| m[(i, j)]).determinant()
    })
}

/// Closed forms of [`leading_minors`] for the pattern matrix:
/// `w1, w1w2, w1w2², w1w2(w2w3−w4²−w5²), w1(w2w3−w4²−w5²)²`.
pub fn leading_minors_closed_form(w: &[f64; 5]) -> [f64; 5] {
    let [w1, w2, w3, w4, w5] = *w;
    let s = w2 * w3 - w4 * w4 - w5 * w5;
    [w1, w1 * w2, w1 * w2 * w2, w1 * w2 * s, w1 * s * s]
}
