//! Number-basis coefficients of the single-mode input states.
//!
//! Magnitudes are assembled in log space from a log-factorial table and
//! exponentiated once, with the phase applied separately, so photon numbers
//! up to [`MAX_PHOTONS`] never overflow intermediate factorials.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex probability amplitude.
pub type ComplexAmp = Complex64;

/// Largest photon number accepted anywhere in a configuration.
pub const MAX_PHOTONS: usize = 64;

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(MAX_PHOTONS + 1);
        let mut acc = 0.0;
        t.push(acc);
        for k in 1..=MAX_PHOTONS {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    });
    match table.get(n) {
        Some(v) => *v,
        None => table[MAX_PHOTONS] + (MAX_PHOTONS + 1..=n).map(|k| (k as f64).ln()).sum::<f64>(),
    }
}

/// `√(n!)`, exponentiated from the log table.
pub fn sqrt_factorial(n: usize) -> f64 {
    (0.5 * ln_factorial(n)).exp()
}

/// Wraps an angle into `[0, 2π)`. The reduction itself is exact (`fmod`).
pub fn normalize_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Squeezing `ξ = s·e^{iφ}` of the vacuum fed into mode `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParam {
    s: f64,
    phi: f64,
}

impl SqueezeParam {
    pub fn new(s: f64, phi: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Config(format!("squeeze magnitude must be finite and >= 0, got {s}")));
        }
        if !phi.is_finite() {
            return Err(Error::Config(format!("squeeze phase must be finite, got {phi}")));
        }
        Ok(Self {
            s,
            phi: normalize_phase(phi),
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Phase, normalized to `[0, 2π)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `−½·e^{iφ}·tanh s`, the ratio between successive even coefficients
    /// up to the factorial weights.
    pub fn pair_amplitude(&self) -> ComplexAmp {
        Complex64::from_polar(-0.5 * self.s.tanh(), self.phi)
    }
}

/// Amplitude and phase of a coherent input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentParam {
    magnitude: f64,
    phase: f64,
}

impl CoherentParam {
    pub fn new(magnitude: f64, phase: f64) -> Result<Self> {
        if !magnitude.is_finite() || magnitude < 0.0 {
            return Err(Error::Config(format!(
                "coherent magnitude must be finite and >= 0, got {magnitude}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::Config(format!("coherent phase must be finite, got {phase}")));
        }
        Ok(Self { magnitude, phase })
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn amplitude(&self) -> ComplexAmp {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// Coefficients indexed by photon number `0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    entries: Vec<ComplexAmp>,
}

impl CoefficientVector {
    pub fn new(entries: Vec<ComplexAmp>) -> Self {
        debug_assert!(!entries.is_empty());
        debug_assert!(entries.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        Self { entries }
    }

    pub fn n_max(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn entries(&self) -> &[ComplexAmp] {
        &self.entries
    }

    pub fn get(&self, n: usize) -> ComplexAmp {
        self.entries[n]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Number-basis coefficient `C_n(ξ)` of the squeezed vacuum.
///
/// Zero for odd `n`; for even `n`,
/// `√(n!) / (√(cosh s)·(n/2)!) · (−½·e^{iφ}·tanh s)^{n/2}`.
pub fn squeezed_coeff(p: &SqueezeParam, n: usize) -> ComplexAmp {
    if n % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    let half = n / 2;
    let lead = -0.5 * p.s.cosh().ln();
    if half == 0 {
        return Complex64::new(lead.exp(), 0.0);
    }
    let ratio = 0.5 * p.s.tanh();
    if ratio == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let log_mag = 0.5 * ln_factorial(n) - ln_factorial(half) + lead + half as f64 * ratio.ln();
    // (−e^{iφ})^{n/2} = e^{i·(n/2)·(φ+π)}
    let phase = half as f64 * (p.phi + PI);
    Complex64::from_polar(log_mag.exp(), phase)
}

/// `e^{−|α|²/2}·αⁿ/√(n!)`, the textbook coherent-state coefficient.
pub fn coherent_coeff(alpha: ComplexAmp, n: usize) -> ComplexAmp {
    let r = alpha.norm();
    let damping = -0.5 * r * r;
    if n == 0 {
        return Complex64::new(damping.exp(), 0.0);
    }
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let log_mag = damping + n as f64 * r.ln() - 0.5 * ln_factorial(n);
    Complex64::from_polar(log_mag.exp(), n as f64 * alpha.arg())
}

/// Damping convention used for the real coherent coefficients `co(α, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `e^{−|α|²}·αⁿ/√(n!)`, the convention of the published reference rows.
    Paper,
    /// `e^{−|α|²/2}·αⁿ/√(n!)`, a normalized coherent state.
    Standard,
}

impl Normalization {
    fn damping(self, alpha: f64) -> f64 {
        match self {
            Normalization::Paper => -alpha * alpha,
            Normalization::Standard => -0.5 * alpha * alpha,
        }
    }
}

/// Real coherent coefficient `co(α, n)` under the given convention.
///
/// The magnitude is built from `|α|` and the sign applied afterwards, so
/// `co(−α, n) = (−1)ⁿ·co(α, n)` holds bit-for-bit.
pub fn co(norm: Normalization, alpha: f64, n: usize) -> f64 {
    let damping = norm.damping(alpha);
    if n == 0 {
        return damping.exp();
    }
    if alpha == 0.0 {
        return 0.0;
    }
    let mag = (damping + n as f64 * alpha.abs().ln() - 0.5 * ln_factorial(n)).exp();
    if alpha < 0.0 && n % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// `co(α, n) = e^{−|α|²}·αⁿ/√(n!)` with the literal damping used for Er.
pub fn paper_co(alpha: f64, n: usize) -> f64 {
    co(Normalization::Paper, alpha, n)
}

/// `e^{−|α|²/2}·αⁿ/√(n!)`.
pub fn standard_co(alpha: f64, n: usize) -> f64 {
    co(Normalization::Standard, alpha, n)
}

/// `|α⟩⁰ = |α⟩ − e^{−|α|²}|0⟩` in the `Paper` normalization: the vacuum entry
/// cancels and entries `n ≥ 1` are `paper_co(α, n)`.
pub fn vacuum_evacuated_coeffs(alpha: f64, n_max: usize) -> CoefficientVector {
    evacuated_coeffs(Normalization::Paper, alpha, n_max)
}

/// Vacuum-evacuated coherent coefficients under either convention; the
/// subtracted vacuum term always matches the damping of the coherent part.
pub fn evacuated_coeffs(norm: Normalization, alpha: f64, n_max: usize) -> CoefficientVector {
    let n_max = n_max.max(1);
    let entries = (0..=n_max)
        .map(|n| {
            let c = co(norm, alpha, n);
            let v = if n == 0 { c - norm.damping(alpha).exp() } else { c };
            Complex64::new(v, 0.0)
        })
        .collect();
    CoefficientVector::new(entries)
}
