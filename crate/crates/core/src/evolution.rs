//! The eight-packet wavefunction and the total density of the three-particle system.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::model::{CatSpec, NormalModeBasis};
use crate::propagator::{theta, Propagator, TimeSlice, PAIRS};

/// Exponent clip for `exp`; larger real parts are flagged as saturated.
pub const EXP_CLIP: f64 = 700.0;

/// `DISPLACED[k][i]`: whether particle `i` starts displaced by `dᵢ` in packet `k`.
///
/// Packets 1..3 displace a single particle, 4..6 two, 7 all three.
pub const DISPLACED: [[bool; 3]; 8] = [
    [false, false, false],
    [true, false, false],
    [false, true, false],
    [false, false, true],
    [true, true, false],
    [true, false, true],
    [false, true, true],
    [true, true, true],
];

/// The 28 unordered packet pairs `(k, l)`, `k < l`, in lexicographic order.
pub const PACKET_PAIRS: [(usize, usize); 28] = {
    let mut out = [(0, 0); 28];
    let mut n = 0;
    let mut k = 0;
    while k < 8 {
        let mut l = k + 1;
        while l < 8 {
            out[n] = (k, l);
            n += 1;
            l += 1;
        }
        k += 1;
    }
    out
};

/// `(d₁⁽ᵏ⁾, d₂⁽ᵏ⁾, d₃⁽ᵏ⁾)`.
pub fn packet_offsets_for(k: usize, cats: &[CatSpec; 3]) -> [f64; 3] {
    std::array::from_fn(|i| if DISPLACED[k][i] { cats[i].d } else { 0.0 })
}

/// The offset table for one set of cats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketOffsets {
    pub table: [[f64; 3]; 8],
}

impl PacketOffsets {
    pub fn new(cats: &[CatSpec; 3]) -> Self {
        Self {
            table: std::array::from_fn(|k| packet_offsets_for(k, cats)),
        }
    }

    pub fn packet_offsets(&self, k: usize) -> [f64; 3] {
        self.table[k]
    }
}

/// Product initial state `Πᵢ [e^{−xᵢ²/4σᵢ²} + e^{−(xᵢ−dᵢ)²/4σᵢ²}]`.
pub fn initial_amplitude(cats: &[CatSpec; 3], x: [f64; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let s = 4.0 * cats[i].sigma * cats[i].sigma;
            (-x[i] * x[i] / s).exp() + (-(x[i] - cats[i].d).powi(2) / s).exp()
        })
        .product()
}

/// `Θ⁽ᵏ⁾(X)` at one time as an explicit quadratic polynomial.
///
/// The quadratic part is shared by all eight packets; only the linear and
/// constant parts depend on `k`, and the linear part is additive over the
/// displaced particles.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaField {
    pub t: f64,
    /// Coefficients of `x_d²`.
    pub q_diag: [C64; 3],
    /// Coefficients of `x_d x_f`, indexed like [`PAIRS`].
    pub q_off: [C64; 3],
    pub lin: [[C64; 3]; 8],
    pub constant: [C64; 8],
    pub phi_half: f64,
    /// `½ ln(π³/|Δ|)`.
    pub log_prefactor: f64,
}

impl ThetaField {
    pub fn new(slice: &TimeSlice) -> Self {
        let (r, c) = (&slice.real, &slice.complex);
        let h = c.hbar;
        let inv = 1.0 / (16.0 * c.delta);
        let i_h = C64::new(0.0, 1.0 / h);
        let q_diag = std::array::from_fn(|d| -(c.la_dd[d] + c.mu_dd[d]) / (h * h) * inv + i_h * r.a[d]);
        let q_off = std::array::from_fn(|n| {
            let (d, f) = PAIRS[n];
            -(c.la_df[n] + c.mu_df[n]) / (h * h) * inv + i_h * r.b[d][f]
        });
        let lin = std::array::from_fn(|k| {
            std::array::from_fn(|d| C64::new(0.0, -1.0 / h) * (c.la_d[k][d] + c.mu_d[k][d]) * inv)
        });
        let constant = std::array::from_fn(|k| (c.la_0[k] + c.mu_0[k]) * inv + c.re_d_brev(k));
        let log_prefactor = 0.5 * (std::f64::consts::PI.powi(3) / c.delta.norm()).ln();
        Self {
            t: r.t,
            q_diag,
            q_off,
            lin,
            constant,
            phi_half: 0.5 * c.phi,
            log_prefactor,
        }
    }

    pub fn quadratic(&self, x: [f64; 3]) -> C64 {
        let mut q = C64::new(0.0, 0.0);
        for d in 0..3 {
            q += self.q_diag[d] * (x[d] * x[d]);
        }
        for (n, &(d, f)) in PAIRS.iter().enumerate() {
            q += self.q_off[n] * (x[d] * x[f]);
        }
        q
    }

    pub fn theta(&self, x: [f64; 3], k: usize) -> C64 {
        let l = &self.lin[k];
        self.quadratic(x) + l[0] * x[0] + l[1] * x[1] + l[2] * x[2] + self.constant[k]
    }

    /// Shape amplitudes `exp(Θ⁽ᵏ⁾ − i Im Q(X))` for all packets.
    ///
    /// The dropped phase is common to every packet, so any density built from
    /// these amplitudes is exact. Returns the number of clipped exponents.
    pub fn shape_amplitudes(&self, x: [f64; 3], out: &mut [C64; 8]) -> usize {
        let mut base = 0.0;
        for d in 0..3 {
            base += self.q_diag[d].re * x[d] * x[d];
        }
        for (n, &(d, f)) in PAIRS.iter().enumerate() {
            base += self.q_off[n].re * x[d] * x[f];
        }
        let mut clipped = 0;
        for k in 0..8 {
            let l = &self.lin[k];
            let e = l[0] * x[0] + l[1] * x[1] + l[2] * x[2] + self.constant[k];
            let mut re = base + e.re;
            if re > EXP_CLIP {
                re = EXP_CLIP;
                clipped += 1;
            }
            out[k] = C64::from_polar(re.exp(), e.im);
        }
        clipped
    }
}

/// Total density at one point, split into definitive and interference terms.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEval {
    pub x: [f64; 3],
    pub t: f64,
    /// `exp(2 Re Θ⁽ᵏ⁾)`.
    pub definitive: [f64; 8],
    /// `2 exp(Re Θ⁽ᵏ⁾ + Re Θ⁽ˡ⁾) cos(Im Θ⁽ᵏ⁾ − Im Θ⁽ˡ⁾)`, ordered like [`PACKET_PAIRS`].
    pub interference: [f64; 28],
    pub total: f64,
    pub saturated: bool,
}

/// Wavefunction evaluation over one coefficient cache.
#[derive(Debug, Clone)]
pub struct Evolution {
    propagator: Arc<Propagator>,
}

impl Evolution {
    pub fn new(basis: NormalModeBasis) -> Self {
        Self {
            propagator: Arc::new(Propagator::new(basis)),
        }
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn basis(&self) -> &NormalModeBasis {
        self.propagator.basis()
    }

    pub fn cats(&self) -> &[CatSpec; 3] {
        self.propagator.cats()
    }

    pub fn slice(&self, t: f64) -> Result<Arc<TimeSlice>> {
        self.propagator.slice(t)
    }

    pub fn field(&self, t: f64) -> Result<ThetaField> {
        Ok(ThetaField::new(&*self.slice(t)?))
    }

    /// Unnormalised `ψ⁽ᵏ⁾(X, t)`.
    pub fn psi_k(&self, x: [f64; 3], t: f64, k: usize) -> Result<C64> {
        let s = self.slice(t)?;
        let e = theta(&s.complex, &s.real, x, k);
        let modulus = (std::f64::consts::PI.powi(3) / s.complex.delta.norm()).sqrt() * e.re_theta.exp();
        Ok(C64::from_polar(modulus, e.im_theta + e.phi_half))
    }

    /// `Σₖ ψ⁽ᵏ⁾(X, t)`.
    pub fn psi(&self, x: [f64; 3], t: f64) -> Result<C64> {
        (0..8).map(|k| self.psi_k(x, t, k)).sum()
    }

    /// Shape density `|Σₖψ⁽ᵏ⁾|² |Δ|/π³` with its 8 + 28 term split.
    pub fn rho_total(&self, x: [f64; 3], t: f64) -> Result<DensityEval> {
        let s = self.slice(t)?;
        let mut re = [0.0; 8];
        let mut im = [0.0; 8];
        let mut saturated = false;
        for k in 0..8 {
            let e = theta(&s.complex, &s.real, x, k);
            re[k] = e.re_theta;
            if re[k] > EXP_CLIP {
                re[k] = EXP_CLIP;
                saturated = true;
            }
            im[k] = e.im_theta;
        }
        let definitive: [f64; 8] = std::array::from_fn(|k| (2.0 * re[k]).exp());
        let interference: [f64; 28] = std::array::from_fn(|n| {
            let (k, l) = PACKET_PAIRS[n];
            2.0 * (re[k] + re[l]).exp() * (im[k] - im[l]).cos()
        });
        let total = definitive.iter().sum::<f64>() + interference.iter().sum::<f64>();
        Ok(DensityEval {
            x,
            t,
            definitive,
            interference,
            total,
            saturated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normal_basis, ModelParams};

    fn evo() -> Evolution {
        Evolution::new(normal_basis(&ModelParams::paper()).unwrap())
    }

    #[test]
    fn offset_table_rows() {
        let cats = ModelParams::paper().cats;
        let t = PacketOffsets::new(&cats);
        assert_eq!(t.packet_offsets(0), [0.0, 0.0, 0.0]);
        assert_eq!(t.packet_offsets(5), [-5.0, 0.0, 7.5]);
        assert_eq!(t.packet_offsets(7), [-5.0, 6.0, 7.5]);
    }

    #[test]
    fn pair_table() {
        assert_eq!(PACKET_PAIRS[0], (0, 1));
        assert_eq!(PACKET_PAIRS[27], (6, 7));
    }

    #[test]
    fn psi_modulus_and_ratio() {
        let e = evo();
        let x = [0.5, -1.0, 2.0];
        let s = e.slice(2.2).unwrap();
        for k in 0..8 {
            let th = theta(&s.complex, &s.real, x, k);
            let psi = e.psi_k(x, 2.2, k).unwrap();
            let expect = (std::f64::consts::PI.powi(3) / s.complex.delta.norm()).sqrt() * th.re_theta.exp();
            assert!((psi.norm() - expect).abs() <= 1e-12 * expect);
        }
        let (a, b) = (e.psi_k(x, 2.2, 3).unwrap(), e.psi_k(x, 2.2, 6).unwrap());
        let ta = theta(&s.complex, &s.real, x, 3);
        let tb = theta(&s.complex, &s.real, x, 6);
        assert!(((a.norm() / b.norm()) / (ta.re_theta - tb.re_theta).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn field_matches_printed_theta() {
        let e = evo();
        let s = e.slice(3.005).unwrap();
        let f = ThetaField::new(&s);
        let x = [-2.0, 3.0, 4.0];
        for k in 0..8 {
            let a = theta(&s.complex, &s.real, x, k);
            let b = f.theta(x, k);
            assert!((a.re_theta - b.re).abs() < 1e-9 * a.re_theta.abs().max(1.0));
            assert!((a.im_theta - b.im).abs() < 1e-9 * a.im_theta.abs().max(1.0));
        }
        for d in 0..3 {
            let sum = f.lin[1][d] + f.lin[2][d];
            assert!((sum - f.lin[4][d]).norm() < 1e-12 * sum.norm().max(1e-300));
        }
    }

    #[test]
    fn partition_matches_coherent_sum() {
        let e = evo();
        let x = [-1.0, 2.5, 3.0];
        let d = e.rho_total(x, 1.3).unwrap();
        let s = e.slice(1.3).unwrap();
        let coherent = e.psi(x, 1.3).unwrap().norm_sqr() * s.complex.delta.norm() / std::f64::consts::PI.powi(3);
        assert!((d.total - coherent).abs() <= 1e-12 * coherent);
        for (n, &(k, l)) in PACKET_PAIRS.iter().enumerate() {
            assert!(d.interference[n].abs() <= d.definitive[k] + d.definitive[l]);
        }
    }

    #[test]
    fn shape_amplitudes_give_same_density() {
        let e = evo();
        let f = e.field(4.4).unwrap();
        let x = [1.0, 0.0, 5.0];
        let mut a = [C64::new(0.0, 0.0); 8];
        assert_eq!(f.shape_amplitudes(x, &mut a), 0);
        let shape: C64 = a.iter().sum();
        let d = e.rho_total(x, 4.4).unwrap();
        assert!((shape.norm_sqr() - d.total).abs() < 1e-10 * d.total);
    }
}
