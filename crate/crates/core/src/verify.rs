//! Numerical certification of the analytic properties of the metric family
//! and the mav construction.
//!
//! Every suite is a pure function of `(seed, trials)`. Trial `i` draws from
//! its own ChaCha stream `i` of `seed`, so sharding trials across threads
//! never changes a report.

use std::fmt;

use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::features::{bekkers_invariants, distance_gradient};
use crate::group::{
    act_algebra, act_point, act_tangent, exp_se3, PositionOrientation, TangentVector, Vec3,
};
use crate::mav::{curve_point, mav, mav_distance, planar_decomposition, screw_decompose};
use crate::metric::{
    adapted_frame, is_positive, leading_minors, leading_minors_closed_form, min_eigenvalue,
    pattern_basis, pattern_projection, stabilizer_matrix, invariant_basis_for, MetricParams,
};

/// Relative tolerance of the invariance checks.
pub const INVARIANCE_TOL: f64 = 1e-9;
/// Absolute tolerance on `exp(M) · p1 = p2`.
pub const ENDPOINT_TOL: f64 = 1e-10;
/// Endpoint tolerance for generators with extra full turns (angles up to 5π).
pub const TURNS_ENDPOINT_TOL: f64 = 1e-9;
pub const PLANARITY_TOL: f64 = 1e-9;
/// Relative tolerance of quadrature length against the mav distance.
pub const LENGTH_TOL: f64 = 1e-7;
pub const LENGTH_STEPS: usize = 1024;
pub const PATTERN_TOL: f64 = 1e-10;
pub const EIGEN_TOL: f64 = 1e-10;
pub const MINOR_TOL: f64 = 1e-9;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const GRADIENT_STEP: f64 = 1e-6;
/// Configurations with `|q|` at or below this are redrawn in the gradient suite.
pub const GRADIENT_MIN_Q: f64 = 1e-4;
/// Central-difference step used for the curve speed.
pub const SPEED_STEP: f64 = 1e-6;

/// Outcome of one verification suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub trials: usize,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub failures: usize,
    pub seed: u64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// `name trials max_abs_err max_rel_err failures seed`
impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {:.6e} {:.6e} {} {}",
            self.name, self.trials, self.max_abs_err, self.max_rel_err, self.failures, self.seed
        )
    }
}

/// Running maxima of one or more trials.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    max_abs: f64,
    max_rel: f64,
    failures: usize,
}

impl Tally {
    /// Records `|a − b|` with relative error `|a − b| / (1 + |b|)`.
    fn compare(&mut self, a: f64, b: f64, tol: f64) {
        let abs = (a - b).abs();
        self.record(abs, abs / (1.0 + b.abs()), tol);
    }

    /// Records an error pair; fails when `rel > tol` or either is NaN.
    fn record(&mut self, abs: f64, rel: f64, tol: f64) {
        if abs.is_nan() || rel.is_nan() {
            self.max_abs = f64::INFINITY;
            self.max_rel = f64::INFINITY;
            self.failures += 1;
            return;
        }
        self.max_abs = self.max_abs.max(abs);
        self.max_rel = self.max_rel.max(rel);
        if rel > tol {
            self.failures += 1;
        }
    }

    fn fail(&mut self) {
        self.failures += 1;
    }

    fn merge(self, other: Self) -> Self {
        Self {
            max_abs: self.max_abs.max(other.max_abs),
            max_rel: self.max_rel.max(other.max_rel),
            failures: self.failures + other.failures,
        }
    }
}

fn run_trials<F>(name: &str, seed: u64, trials: usize, trial: F) -> SuiteReport
where
    F: Fn(&mut ChaCha8Rng) -> Tally + Sync,
{
    let tally = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut t = trial(&mut sampling::rng_for(seed, i as u64));
            t.failures = t.failures.min(1);
            t
        })
        .reduce(Tally::default, Tally::merge);
    SuiteReport {
        name: name.to_string(),
        trials,
        max_abs_err: tally.max_abs,
        max_rel_err: tally.max_rel,
        failures: tally.failures,
        seed,
    }
}

/// Seeded random inputs shared by the suites and the test-suites.
pub mod sampling {
    use super::*;
    use rand_distr::{Distribution, UnitSphere};

    pub const POSITION_HALF_WIDTH: f64 = 5.0;

    pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
        Vec3::from(UnitSphere.sample(rng))
    }

    pub fn vector_in_box<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> Vec3 {
        Vec3::from_fn(|_, _| rng.random_range(-half_width..half_width))
    }

    pub fn point<R: Rng + ?Sized>(rng: &mut R) -> PositionOrientation {
        PositionOrientation::new(vector_in_box(rng, POSITION_HALF_WIDTH), unit_vector(rng))
            .expect("unit orientation")
    }

    /// A pair outside the antipodal band.
    pub fn pair<R: Rng + ?Sized>(rng: &mut R) -> (PositionOrientation, PositionOrientation) {
        loop {
            let p1 = point(rng);
            let p2 = point(rng);
            if !planar_decomposition(&p1, &p2).non_unique {
                return (p1, p2);
            }
        }
    }

    /// Positive-definite weights with `w4² + w5² ≤ 0.81 w2 w3`.
    pub fn strict_weights<R: Rng + ?Sized>(rng: &mut R) -> MetricParams {
        let w1 = rng.random_range(0.2..3.0);
        let w2 = rng.random_range(0.2..3.0);
        let w3 = rng.random_range(0.2..3.0);
        let radius = rng.random_range(0.0..0.9) * f64::sqrt(w2 * w3);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        MetricParams::strict([w1, w2, w3, radius * angle.cos(), radius * angle.sin()])
            .expect("sampled inside the positive cone")
    }

    pub fn box_weights<R: Rng + ?Sized>(rng: &mut R) -> [f64; 5] {
        std::array::from_fn(|_| rng.random_range(-2.0..2.0))
    }

    pub fn rototranslation<R: Rng + ?Sized>(rng: &mut R) -> crate::group::RotoTranslation {
        let axis = unit_vector(rng);
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let rot = crate::group::RotoTranslation::from_rotation_vector(&(axis * angle));
        crate::group::compose(
            &crate::group::RotoTranslation::from_translation(vector_in_box(rng, 10.0)),
            &rot,
        )
    }

    pub fn tangent<R: Rng + ?Sized>(rng: &mut R, base: PositionOrientation) -> TangentVector {
        TangentVector::new(base, vector_in_box(rng, 2.0), vector_in_box(rng, 2.0))
            .expect("finite tangent")
    }
}

/// `max(‖Δx‖, ‖Δn‖)` between two points.
pub fn point_residual(a: &PositionOrientation, b: &PositionOrientation) -> f64 {
    (a.x() - b.x()).norm().max((a.n() - b.n()).norm())
}

fn curve_speed(w: &MetricParams, m: &crate::group::Twist, p1: &PositionOrientation, t: f64) -> f64 {
    let h = SPEED_STEP;
    let ahead = curve_point(m, p1, t + h);
    let behind = curve_point(m, p1, t - h);
    let base = curve_point(m, p1, t);
    let tv = TangentVector::new(
        base,
        (ahead.x() - behind.x()) / (2.0 * h),
        (ahead.n() - behind.n()) / (2.0 * h),
    )
    .expect("finite differences of a finite curve");
    w.norm_sq(&tv).max(0.0).sqrt()
}

/// Composite Simpson estimate of `∫₀¹ ‖η̇(t)‖ dt` over `n_steps` panels,
/// with the speed taken from central differences of the mav curve.
pub fn curve_length_quadrature(
    w: &MetricParams,
    p1: &PositionOrientation,
    p2: &PositionOrientation,
    n_steps: usize,
) -> f64 {
    let n_steps = n_steps.max(1);
    let m = mav(p1, p2).twist;
    let h = 1.0 / n_steps as f64;
    let mut total = 0.0;
    let mut left = curve_speed(w, &m, p1, 0.0);
    for k in 0..n_steps {
        let a = k as f64 * h;
        let mid = curve_speed(w, &m, p1, a + 0.5 * h);
        let right = curve_speed(w, &m, p1, a + h);
        total += h / 6.0 * (left + 4.0 * mid + right);
        left = right;
    }
    total
}

// Additive recurrence constants 1/φ^k, with φ the real root of x⁶ = x + 1.
fn r5_alphas() -> [f64; 5] {
    let mut phi = 1.5_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / 6.0);
    }
    std::array::from_fn(|k| phi.powi(-(k as i32 + 1)))
}

/// The first `samples` waypoints of the seeded low-discrepancy sequence in
/// the sampling box around `p1` and `p2`. Prefixes are nested.
pub fn sample_waypoints(
    p1: &PositionOrientation,
    p2: &PositionOrientation,
    samples: usize,
    seed: u64,
) -> Vec<PositionOrientation> {
    let pad = 0.5 * (p2.x() - p1.x()).norm() + 1.0;
    let lo = p1.x().inf(p2.x()).add_scalar(-pad);
    let hi = p1.x().sup(p2.x()).add_scalar(pad);
    let alphas = r5_alphas();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 5] = std::array::from_fn(|_| rng.random::<f64>());
    (0..samples)
        .map(|i| {
            let u: [f64; 5] = std::array::from_fn(|k| (shift[k] + (i as f64 + 1.0) * alphas[k]).fract());
            let x = Vec3::new(
                lo.x + u[0] * (hi.x - lo.x),
                lo.y + u[1] * (hi.y - lo.y),
                lo.z + u[2] * (hi.z - lo.z),
            );
            let z = 1.0 - 2.0 * u[3];
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = std::f64::consts::TAU * u[4];
            PositionOrientation::new(x, Vec3::new(r * phi.cos(), r * phi.sin(), z))
                .expect("unit orientation")
        })
        .collect()
}

/// Shortest path from `p1` to `p2` in the complete directed graph on
/// `{p1, p2} ∪ waypoints`, edges weighted by the mav distance.
pub fn shortest_mav_path(
    w: &MetricParams,
    p1: &PositionOrientation,
    p2: &PositionOrientation,
    waypoints: &[PositionOrientation],
) -> f64 {
    debug_assert!(w.is_positive(), "graph bound needs a positive-definite metric");
    let nodes: Vec<PositionOrientation> = [*p1, *p2].into_iter().chain(waypoints.iter().copied()).collect();
    let mut graph = DiGraph::<(), f64>::with_capacity(nodes.len(), nodes.len() * nodes.len());
    let ids: Vec<NodeIndex> = nodes.iter().map(|_| graph.add_node(())).collect();
    for (i, a) in nodes.iter().enumerate() {
        for (j, b) in nodes.iter().enumerate() {
            if i != j {
                graph.add_edge(ids[i], ids[j], mav_distance(w, a, b).max(0.0));
            }
        }
    }
    let dist = dijkstra(&graph, ids[0], Some(ids[1]), |e| *e.weight());
    dist[&ids[1]]
}

/// Upper bound on the Riemannian distance from piecewise mav paths through
/// `samples` seeded waypoints. Never exceeds the direct mav distance.
pub fn graph_geodesic_upper_bound(
    w: &MetricParams,
    p1: &PositionOrientation,
    p2: &PositionOrientation,
    samples: usize,
    seed: u64,
) -> f64 {
    graph_geodesic_upper_bound_via(w, p1, p2, &[], samples, seed)
}

/// [`graph_geodesic_upper_bound`] with extra caller-supplied waypoints.
pub fn graph_geodesic_upper_bound_via(
    w: &MetricParams,
    p1: &PositionOrientation,
    p2: &PositionOrientation,
    extra: &[PositionOrientation],
    samples: usize,
    seed: u64,
) -> f64 {
    let mut waypoints = extra.to_vec();
    waypoints.extend(sample_waypoints(p1, p2, samples, seed));
    shortest_mav_path(w, p1, p2, &waypoints)
}

/// Invariance of the squared norm, the mav distance and the triple
/// invariants under random roto-translations, plus orthogonality of the
/// algebra action.
pub fn run_invariance_suite(seed: u64, trials: usize) -> SuiteReport {
    run_trials("invariance", seed, trials, |rng| {
        let mut t = Tally::default();
        let w = sampling::strict_weights(rng);
        let (p1, p2) = sampling::pair(rng);
        let g = sampling::rototranslation(rng);
        let tv = sampling::tangent(rng, p1);
        let (q1, q2) = (act_point(&g, &p1), act_point(&g, &p2));

        t.compare(w.norm_sq(&act_tangent(&g, &tv)), w.norm_sq(&tv), INVARIANCE_TOL);
        t.compare(mav_distance(&w, &q1, &q2), mav_distance(&w, &p1, &p2), INVARIANCE_TOL);
        let (a, b) = (bekkers_invariants(&q1, &q2), bekkers_invariants(&p1, &p2));
        t.compare(a.i1, b.i1, INVARIANCE_TOL);
        t.compare(a.i2, b.i2, INVARIANCE_TOL);
        t.compare(a.i3, b.i3, INVARIANCE_TOL);

        let m = crate::group::Twist::new(sampling::vector_in_box(rng, 3.0), sampling::vector_in_box(rng, 3.0));
        let ortho = act_algebra(&m, &p1).ndot().dot(p1.n()).abs();
        t.record(ortho, ortho, 1e-12);
        t
    })
}

/// The exponential identity `exp(M) · p1 = p2` for the mav generator.
pub fn run_endpoint_suite(seed: u64, trials: usize) -> SuiteReport {
    run_trials("endpoint", seed, trials, |rng| {
        let mut t = Tally::default();
        let (p1, p2) = sampling::pair(rng);
        let r = point_residual(&act_point(&exp_se3(&mav(&p1, &p2).twist), &p1), &p2);
        t.record(r, r, ENDPOINT_TOL);
        t
    })
}

/// Minimality of the mav generator among generators of the same screw with
/// extra turns `k = ±1, ±2`, together with the endpoint and planarity
/// properties of the mav generator itself.
pub fn run_minimality_suite(seed: u64, trials: usize) -> SuiteReport {
    run_trials("minimality", seed, trials, |rng| {
        let mut t = Tally::default();
        let (p1, p2) = sampling::pair(rng);
        let g = mav(&p1, &p2);
        let r = point_residual(&act_point(&exp_se3(&g.twist), &p1), &p2);
        t.record(r, r, ENDPOINT_TOL);

        if g.theta > 1e-6 {
            let axis = g.twist.omega / g.theta;
            let planar = axis.dot(p1.n()).abs().max(axis.dot(p2.n()).abs());
            t.record(planar, planar, PLANARITY_TOL);
        }

        let Ok(screw) = screw_decompose(&p1, &p2) else {
            // No finite screw center; only k = 0 exists in this branch.
            return t;
        };
        let base = g.twist.angular_velocity();
        for k in [-2, -1, 1, 2] {
            let alt = screw.generator_with_turns(k);
            let r = point_residual(&act_point(&exp_se3(&alt), &p1), &p2);
            t.record(r, r, TURNS_ENDPOINT_TOL);
            if alt.angular_velocity().is_nan() || alt.angular_velocity() <= base {
                t.fail();
            }
        }
        t
    })
}

/// Outcome of the classification check.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub report: SuiteReport,
    pub min_dimension: usize,
    pub max_dimension: usize,
}

/// Solves the stabilizer-invariance system at random base points and checks
/// that the solution space is five-dimensional and equals the pattern span.
pub fn run_classification_check(seed: u64, trials: usize) -> ClassificationReport {
    let dims: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let p = sampling::point(&mut sampling::rng_for(seed, i as u64));
            let frame = adapted_frame(&p, None).expect("default seed");
            invariant_basis_for(&stabilizer_matrix(&frame)).len()
        })
        .collect();
    let report = run_trials("classification", seed, trials, |rng| {
        let mut t = Tally::default();
        let p = sampling::point(rng);
        let frame = adapted_frame(&p, None).expect("default seed");
        let g = stabilizer_matrix(&frame);
        let basis = invariant_basis_for(&g);
        if basis.len() != 5 {
            t.fail();
        }
        for b in &basis {
            let (_, residual) = pattern_projection(b);
            t.record(residual, residual / b.norm(), PATTERN_TOL);
        }
        for pattern in pattern_basis() {
            let r = (g.transpose() * pattern * g - pattern).norm();
            t.record(r, r / pattern.norm(), PATTERN_TOL);
        }
        t
    });
    ClassificationReport {
        report,
        min_dimension: dims.iter().copied().min().unwrap_or(0),
        max_dimension: dims.iter().copied().max().unwrap_or(0),
    }
}

/// `is_positive` against the smallest eigenvalue of the component matrix for
/// weights in `[−2, 2]⁵`, and leading minors against their closed forms.
pub fn run_positivity_suite(seed: u64, trials: usize) -> SuiteReport {
    run_trials("positivity", seed, trials, |rng| {
        let mut t = Tally::default();
        let p = sampling::point(rng);
        let frame = adapted_frame(&p, None).expect("default seed");

        let w = sampling::box_weights(rng);
        let lambda = min_eigenvalue(&MetricParams::unconstrained(w).expect("finite").metric_matrix(&frame));
        if lambda.abs() > EIGEN_TOL && is_positive(&w) != (lambda > 0.0) {
            t.fail();
        }

        let strict = sampling::strict_weights(rng);
        let minors = leading_minors(&strict.metric_matrix(&frame));
        let closed = leading_minors_closed_form(&strict.weights());
        for (a, b) in minors.iter().zip(closed.iter()) {
            let abs = (a - b).abs();
            t.record(abs, abs / b.abs(), MINOR_TOL);
        }
        t
    })
}

/// Simpson length of the mav curve against the mav distance.
pub fn run_length_suite(seed: u64, trials: usize) -> SuiteReport {
    run_trials("length", seed, trials, |rng| {
        let mut t = Tally::default();
        let w = sampling::strict_weights(rng);
        let (p1, p2) = sampling::pair(rng);
        let mu = mav_distance(&w, &p1, &p2);
        let len = curve_length_quadrature(&w, &p1, &p2, LENGTH_STEPS);
        let abs = (len - mu).abs();
        t.record(abs, abs / mu.abs(), LENGTH_TOL);
        t
    })
}

/// Analytic weight gradient of the signed mav distance against central
/// differences, for unconstrained weights in `[−2, 2]⁵`. The error is the
/// max-norm of the difference relative to the max-norm of the gradient.
pub fn run_gradient_suite(seed: u64, trials: usize) -> SuiteReport {
    run_trials("gradient", seed, trials, |rng| {
        let mut t = Tally::default();
        let (w, p1, p2) = loop {
            let w = MetricParams::unconstrained(sampling::box_weights(rng)).expect("finite");
            let (p1, p2) = sampling::pair(rng);
            if crate::mav::mav_norm_sq(&w, &p1, &p2).abs() > GRADIENT_MIN_Q {
                break (w, p1, p2);
            }
        };
        let analytic = distance_gradient(&w, &p1, &p2);
        let h = GRADIENT_STEP;
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (i, a) in analytic.iter().enumerate() {
            let shifted = |s: f64| {
                let mut v = w.weights();
                v[i] += s;
                MetricParams::unconstrained(v).expect("finite")
            };
            let fd = (mav_distance(&shifted(h), &p1, &p2) - mav_distance(&shifted(-h), &p1, &p2)) / (2.0 * h);
            diff = diff.max((a - fd).abs());
            scale = scale.max(a.abs());
        }
        t.record(diff, diff / scale, GRADIENT_TOL);
        t
    })
}
