//! Orthonormal Legendre bases on edges.

use crate::mesh::Point2;

use super::quadrature::{rule, Domain};

/// `ψ_j(t) = √(2j+1) P_j(2t − 1)` for `j = 0..=n` on `t ∈ [0, 1]`.
///
/// The family is orthonormal for the averaged inner product
/// `(1/|F|) ∫_F u v` and `ψ_0 ≡ 1`.
pub fn legendre(n: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    legendre_into(n, t, &mut out);
    out
}

pub fn legendre_into(n: usize, t: f64, out: &mut [f64]) {
    let x = 2.0 * t - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    out[0] = 1.0;
    if n >= 1 {
        out[1] = 3f64.sqrt() * x;
    }
    for j in 1..n {
        let p2 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p0) / (j + 1) as f64;
        out[j + 1] = ((2 * j + 3) as f64).sqrt() * p2;
        p0 = p1;
        p1 = p2;
    }
}

/// `ψ_j(1 − t) = (−1)^j ψ_j(t)`: sign pattern for reversing an edge.
pub fn reversal_sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Values of `ψ_j` at `t = 0` and `t = 1`.
pub fn endpoint_values(j: usize) -> (f64, f64) {
    let s = ((2 * j + 1) as f64).sqrt();
    (s * reversal_sign(j), s)
}

/// Scaled moments `(1/|F|) ∫_F f ψ_i` for `i = 0..=r` on the segment `a → b`.
pub fn edge_moments(f: impl Fn(Point2) -> f64, a: Point2, b: Point2, r: usize, exactness: usize) -> Vec<f64> {
    let q = rule(Domain::Segment, exactness.max(2 * r + 2));
    let mut out = vec![0.0; r + 1];
    let mut psi = vec![0.0; r + 1];
    for (pt, w) in q.points.iter().zip(&q.weights) {
        let t = pt[0];
        let v = f(a.lerp(b, t));
        legendre_into(r, t, &mut psi);
        for i in 0..=r {
            out[i] += w * v * psi[i];
        }
    }
    out
}
