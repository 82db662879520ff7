//! Pairwise SE(3) invariants for equivariant learning on point clouds of
//! position-orientations: the three classic scalar invariants and the
//! trainable mav distance, with gradients in the metric weights.

use rayon::prelude::*;

use crate::group::{act_algebra, PositionOrientation};
use crate::mav::{mav_distance, mav_generator};
use crate::metric::MetricParams;

/// Longitudinal offset, lateral offset and orientation angle from `p1` to `p2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantTriple {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

pub fn bekkers_invariants(p1: &PositionOrientation, p2: &PositionOrientation) -> InvariantTriple {
    let d = p2.x() - p1.x();
    let n1 = p1.n();
    let i1 = d.dot(n1);
    let i2 = (d - n1 * i1).norm();
    let i3 = n1.cross(p2.n()).norm().atan2(n1.dot(p2.n()));
    InvariantTriple { i1, i2, i3 }
}

/// `∂q/∂wᵢ` for the squared mav distance `q = Σ wᵢ termᵢ`: the five metric
/// terms evaluated at the mav tangent `M(p1, p2) · p1`.
pub fn grad_weights(p1: &PositionOrientation, p2: &PositionOrientation) -> [f64; 5] {
    MetricParams::terms(&act_algebra(&mav_generator(p1, p2), p1))
}

/// `∂μ/∂wᵢ` for the signed mav distance `μ = sign(q) √|q|`, which is
/// `(∂q/∂wᵢ) / (2 √|q|)` on either side of zero. Infinite at `q = 0`.
pub fn distance_gradient(w: &MetricParams, p1: &PositionOrientation, p2: &PositionOrientation) -> [f64; 5] {
    let terms = grad_weights(p1, p2);
    let q: f64 = w.weights().iter().zip(terms.iter()).map(|(a, b)| a * b).sum();
    let scale = 0.5 / q.abs().sqrt();
    terms.map(|t| t * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Mav,
    Triple,
    Both,
}

impl FeatureKind {
    /// Values stored per cell.
    pub fn width(self) -> usize {
        match self {
            FeatureKind::Mav => 1,
            FeatureKind::Triple => 3,
            FeatureKind::Both => 4,
        }
    }

    pub fn column_names(self) -> &'static [&'static str] {
        match self {
            FeatureKind::Mav => &["mu"],
            FeatureKind::Triple => &["i1", "i2", "i3"],
            FeatureKind::Both => &["mu", "i1", "i2", "i3"],
        }
    }
}

/// Dense `n × n × k` feature array, row index `p1`, column index `p2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_points: usize,
    kind: FeatureKind,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.kind.width()
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let k = self.width();
        let start = (i * self.n_points + j) * k;
        &self.values[start..start + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn fill_cell(out: &mut [f64], w: &MetricParams, kind: FeatureKind, p1: &PositionOrientation, p2: &PositionOrientation) {
    let triple = |out: &mut [f64]| {
        let t = bekkers_invariants(p1, p2);
        out.copy_from_slice(&[t.i1, t.i2, t.i3]);
    };
    match kind {
        FeatureKind::Mav => out[0] = mav_distance(w, p1, p2),
        FeatureKind::Triple => triple(out),
        FeatureKind::Both => {
            out[0] = mav_distance(w, p1, p2);
            triple(&mut out[1..]);
        }
    }
}

/// All ordered pairs, evaluated row by row on the current rayon pool. Each
/// cell is a pure function of its pair, so the result does not depend on how
/// rows are scheduled.
pub fn pairwise_features(points: &[PositionOrientation], w: &MetricParams, kind: FeatureKind) -> FeatureMatrix {
    let n = points.len();
    let k = kind.width();
    let mut values = vec![0.0; n * n * k];
    if n > 0 {
        values.par_chunks_mut(n * k).enumerate().for_each(|(i, row)| {
            for (j, cell) in row.chunks_mut(k).enumerate() {
                fill_cell(cell, w, kind, &points[i], &points[j]);
            }
        });
    }
    FeatureMatrix { n_points: n, kind, values }
}

/// Single-threaded reference for [`pairwise_features`].
pub fn pairwise_features_serial(points: &[PositionOrientation], w: &MetricParams, kind: FeatureKind) -> FeatureMatrix {
    let n = points.len();
    let k = kind.width();
    let mut values = vec![0.0; n * n * k];
    for i in 0..n {
        for j in 0..n {
            let start = (i * n + j) * k;
            fill_cell(&mut values[start..start + k], w, kind, &points[i], &points[j]);
        }
    }
    FeatureMatrix { n_points: n, kind, values }
}
