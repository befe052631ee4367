//! One-dimensional quadrature rules on a closed interval.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Uniform composite trapezoid on `n` nodes including both ends.
    Trapezoid,
    /// `panels` equal panels, each with `n / panels` Gauss–Legendre nodes.
    GaussLegendre { panels: usize },
}

/// Nodes and weights of a rule on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Nodes {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Nodes {
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.w.len());
        self.w.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

pub fn trapezoid(a: f64, b: f64, n: usize) -> Result<Nodes> {
    if n < 2 || !(b > a) {
        return Err(Error::InvalidQuadrature(format!("trapezoid needs n >= 2 and b > a (n = {n}, [{a}, {b}])")));
    }
    let h = (b - a) / (n - 1) as f64;
    let x = (0..n).map(|i| a + h * i as f64).collect();
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    Ok(Nodes { x, w })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `Pₙ`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(Pₙ(z), Pₙ'(z))`.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

pub fn gauss_legendre_panels(a: f64, b: f64, n: usize, panels: usize) -> Result<Nodes> {
    if panels == 0 || !n.is_multiple_of(panels) || !(b > a) {
        return Err(Error::InvalidQuadrature(format!(
            "Gauss-Legendre needs panels > 0 dividing n (n = {n}, panels = {panels}) and b > a"
        )));
    }
    let per = n / panels;
    let (ux, uw) = gauss_legendre_unit(per);
    let h = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (xi, wi) in ux.iter().zip(&uw) {
            x.push(mid + 0.5 * h * xi);
            w.push(0.5 * h * wi);
        }
    }
    Ok(Nodes { x, w })
}

pub fn nodes(rule: Rule, a: f64, b: f64, n: usize) -> Result<Nodes> {
    match rule {
        Rule::Trapezoid => trapezoid(a, b, n),
        Rule::GaussLegendre { panels } => gauss_legendre_panels(a, b, n, panels),
    }
}

/// Trapezoid integral of samples `f` on an ascending, possibly non-uniform grid.
pub fn trapezoid_samples(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(xs, fs)| 0.5 * (xs[1] - xs[0]) * (fs[0] + fs[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre_unit(8);
        for deg in 0..16 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let expect = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert!((got - expect).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn gaussian_integrals() {
        let f = |x: f64| (-x * x).exp();
        let exact = std::f64::consts::PI.sqrt();
        for rule in [Rule::Trapezoid, Rule::GaussLegendre { panels: 8 }] {
            let q = nodes(rule, -10.0, 10.0, 128).unwrap();
            let v: Vec<f64> = q.x.iter().map(|&x| f(x)).collect();
            assert!((q.integrate(&v) - exact).abs() < 1e-12, "{rule:?}");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(trapezoid(0.0, 1.0, 1).is_err());
        assert!(gauss_legendre_panels(0.0, 1.0, 10, 3).is_err());
    }
}
