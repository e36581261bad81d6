//! Gauss–Legendre segment rules and collapsed (Duffy) Gauss rules on triangles.

use std::sync::OnceLock;

use crate::error::{Result, VemError};

/// Highest polynomial exactness a rule can be requested for.
pub const MAX_EXACTNESS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// Reference segment `[0, 1]`.
    Segment,
    /// Reference triangle `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}`.
    Triangle,
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub domain: Domain,
    /// Points on the reference domain; segment rules use only the first coordinate.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn build_segment(exactness: usize) -> QuadratureRule {
    let n = exactness / 2 + 1;
    let (x, w) = gauss_legendre(n);
    QuadratureRule {
        domain: Domain::Segment,
        points: x.iter().map(|&t| [0.5 * (t + 1.0), 0.0]).collect(),
        weights: w.iter().map(|&v| 0.5 * v).collect(),
        exactness,
    }
}

fn build_triangle(exactness: usize) -> QuadratureRule {
    // ξ = u, η = (1 - u) v with Jacobian (1 - u): degree p + 1 in u, p in v.
    let nu = (exactness + 1) / 2 + 1;
    let nv = exactness / 2 + 1;
    let (xu, wu) = gauss_legendre(nu);
    let (xv, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (a, &ta) in xu.iter().enumerate() {
        let u = 0.5 * (ta + 1.0);
        for (b, &tb) in xv.iter().enumerate() {
            let v = 0.5 * (tb + 1.0);
            points.push([u, (1.0 - u) * v]);
            weights.push(0.25 * wu[a] * wv[b] * (1.0 - u));
        }
    }
    QuadratureRule {
        domain: Domain::Triangle,
        points,
        weights,
        exactness,
    }
}

fn table(domain: Domain) -> &'static [QuadratureRule] {
    static SEG: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    static TRI: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    match domain {
        Domain::Segment => SEG.get_or_init(|| (0..=MAX_EXACTNESS).map(build_segment).collect()),
        Domain::Triangle => TRI.get_or_init(|| (0..=MAX_EXACTNESS).map(build_triangle).collect()),
    }
}

/// Rule on the reference domain exact for polynomials up to `exactness`.
pub fn quadrature_rule(domain: Domain, exactness: usize) -> Result<&'static QuadratureRule> {
    if exactness > MAX_EXACTNESS {
        return Err(VemError::Unsupported(format!(
            "quadrature exactness {exactness} exceeds {MAX_EXACTNESS}"
        )));
    }
    Ok(&table(domain)[exactness])
}

/// Same as [`quadrature_rule`] with the exactness clamped into range.
pub(crate) fn rule(domain: Domain, exactness: usize) -> &'static QuadratureRule {
    &table(domain)[exactness.min(MAX_EXACTNESS)]
}
