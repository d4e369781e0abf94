//! The two-splitter cascade and the heralding condition on `t2`.
//!
//! Input creation operators are written in terms of output ones:
//! `(a†, b†)ᵀ = M₁·(d†, w†)ᵀ` at the first splitter and
//! `(d†, c†)ᵀ = M₂·(u†, v†)ᵀ` at the second. Eliminating `d†` gives the
//! eight coefficients of [`QMap`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ComplexAmp;

pub type Matrix2 = [[ComplexAmp; 2]; 2];
pub type Matrix3 = [[ComplexAmp; 3]; 3];

/// Residual below which the zero-sum heralding condition counts as met.
pub const ZERO_SUM_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A lossless splitter with amplitude transmittance `t` and the two phase
/// shifts of its transmitted and reflected paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterSpec {
    t: f64,
    phi_tau: f64,
    phi_rho: f64,
}

impl BeamSplitterSpec {
    pub fn new(t: f64, phi_tau: f64, phi_rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Config(format!("transmittance must lie in [0, 1], got {t}")));
        }
        if !phi_tau.is_finite() || !phi_rho.is_finite() {
            return Err(Error::Config("splitter phases must be finite".into()));
        }
        Ok(Self { t, phi_tau, phi_rho })
    }

    /// Splitter with both phase shifts zero.
    pub fn plain(t: f64) -> Result<Self> {
        Self::new(t, 0.0, 0.0)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Amplitude reflectance `√(1 − t²)`.
    pub fn r(&self) -> f64 {
        (1.0 - self.t * self.t).max(0.0).sqrt()
    }

    pub fn phi_tau(&self) -> f64 {
        self.phi_tau
    }

    pub fn phi_rho(&self) -> f64 {
        self.phi_rho
    }

    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(t, self.phi_tau, self.phi_rho)
    }
}

/// `[[t·e^{−iφτ}, r·e^{−iφρ}], [−r·e^{iφρ}, t·e^{iφτ}]]`, mapping the two
/// output creation operators onto each input creation operator.
pub fn bs_matrix(spec: &BeamSplitterSpec) -> Matrix2 {
    let (t, r) = (spec.t(), spec.r());
    [
        [
            Complex64::from_polar(t, -spec.phi_tau),
            Complex64::from_polar(r, -spec.phi_rho),
        ],
        [
            -Complex64::from_polar(r, spec.phi_rho),
            Complex64::from_polar(t, spec.phi_tau),
        ],
    ]
}

/// Coefficients `q_μ^ν` expressing each input creation operator
/// (`a†`, `b†`, `c†`) in terms of the outputs (`u†`, `v†`, `w†`).
/// `q_c^w` vanishes identically and is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QMap {
    pub a_u: ComplexAmp,
    pub a_v: ComplexAmp,
    pub a_w: ComplexAmp,
    pub b_u: ComplexAmp,
    pub b_v: ComplexAmp,
    pub b_w: ComplexAmp,
    pub c_u: ComplexAmp,
    pub c_v: ComplexAmp,
}

impl QMap {
    /// Rows `a, b, c`; columns `u, v, w`.
    pub fn matrix(&self) -> Matrix3 {
        [
            [self.a_u, self.a_v, self.a_w],
            [self.b_u, self.b_v, self.b_w],
            [self.c_u, self.c_v, ZERO],
        ]
    }

    /// `max |(Q·Q†)ᵢⱼ − δᵢⱼ|`.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual3(&self.matrix())
    }

    /// `β·q_b^u + γ·q_c^u`, the vacuum-in-`u` amplitude that the heralding
    /// condition drives to zero.
    pub fn zero_sum(&self, beta: ComplexAmp, gamma: ComplexAmp) -> ComplexAmp {
        beta * self.b_u + gamma * self.c_u
    }
}

/// Composes the cascade: the first splitter takes `(a, b) → (d, w)`, the
/// second `(d, c) → (u, v)`.
pub fn compose_q(bs1: &BeamSplitterSpec, bs2: &BeamSplitterSpec) -> QMap {
    let m1 = bs_matrix(bs1);
    let m2 = bs_matrix(bs2);
    QMap {
        a_u: m1[0][0] * m2[0][0],
        a_v: m1[0][0] * m2[0][1],
        a_w: m1[0][1],
        // The minus sign comes from M₁[1][0] = −r₁·e^{iφρ₁}.
        b_u: m1[1][0] * m2[0][0],
        b_v: m1[1][0] * m2[0][1],
        b_w: m1[1][1],
        c_u: m2[1][0],
        c_v: m2[1][1],
    }
}

/// First splitter embedded in the three-mode space: rows `(a, b, c)`,
/// columns `(d, w, c)`.
pub fn embed_first(bs1: &BeamSplitterSpec) -> Matrix3 {
    let m = bs_matrix(bs1);
    [
        [m[0][0], m[0][1], ZERO],
        [m[1][0], m[1][1], ZERO],
        [ZERO, ZERO, ONE],
    ]
}

/// Second splitter embedded in the three-mode space: rows `(d, w, c)`,
/// columns `(u, v, w)`.
pub fn embed_second(bs2: &BeamSplitterSpec) -> Matrix3 {
    let m = bs_matrix(bs2);
    [
        [m[0][0], m[0][1], ZERO],
        [ZERO, ZERO, ONE],
        [m[1][0], m[1][1], ZERO],
    ]
}

pub fn matmul3(x: &Matrix3, y: &Matrix3) -> Matrix3 {
    let mut out = [[ZERO; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| x[i][k] * y[k][j]).sum();
        }
    }
    out
}

pub fn unitarity_residual2(m: &Matrix2) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let dot: Complex64 = (0..2).map(|k| m[i][k] * m[j][k].conj()).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

pub fn unitarity_residual3(m: &Matrix3) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let dot: Complex64 = (0..3).map(|k| m[i][k] * m[j][k].conj()).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

/// Finds the second-splitter transmittance that makes
/// `β·q_b^u + γ·q_c^u = 0`, so no photon reaches `u` from the coherent
/// beams alone.
///
/// The residual is `A·t₂ + B·√(1−t₂²)`; it is projected on the direction of
/// `A` (its value at `t₂ = 1`) and bisected on `[0, 1]`. The returned root
/// always satisfies the complex residual below [`ZERO_SUM_TOLERANCE`]; phase
/// choices that make the two terms non-collinear yield
/// [`Error::NoSolution`].
pub fn solve_t2(
    beta: ComplexAmp,
    gamma: ComplexAmp,
    bs1: &BeamSplitterSpec,
    phi_tau2: f64,
    phi_rho2: f64,
) -> Result<f64> {
    if beta.norm_sqr() + gamma.norm_sqr() <= 0.0 {
        return Err(Error::Config("solve_t2 needs |β|² + |γ|² > 0".into()));
    }
    if gamma.norm() == 0.0 {
        return Err(Error::Config("solve_t2 needs γ ≠ 0".into()));
    }
    let residual = |t2: f64| -> Result<ComplexAmp> {
        let bs2 = BeamSplitterSpec::new(t2, phi_tau2, phi_rho2)?;
        Ok(compose_q(bs1, &bs2).zero_sum(beta, gamma))
    };

    let at_one = residual(1.0)?;
    if at_one.norm() < ZERO_SUM_TOLERANCE {
        return Ok(1.0);
    }
    let direction = at_one / at_one.norm();
    let projected = |t2: f64| -> Result<f64> { Ok((direction.conj() * residual(t2)?).re) };

    let at_zero = residual(0.0)?;
    if projected(0.0)? >= 0.0 {
        return Err(Error::NoSolution {
            best_residual: at_zero.norm().min(at_one.norm()),
        });
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if projected(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (r_lo, r_hi) = (residual(lo)?.norm(), residual(hi)?.norm());
    let (t2, best) = if r_lo <= r_hi { (lo, r_lo) } else { (hi, r_hi) };
    if best < ZERO_SUM_TOLERANCE {
        Ok(t2)
    } else {
        Err(Error::NoSolution { best_residual: best })
    }
}

/// Variant with `t₁` in place of `t₁²`: `γ/√(β² + γ² − β²·t₁)`. Does not satisfy the zero-sum condition.
pub fn t2_closed_form_linear_t1(beta0: f64, gamma0: f64, t1: f64) -> f64 {
    gamma0 / (beta0 * beta0 + gamma0 * gamma0 - beta0 * beta0 * t1).sqrt()
}

/// `γ/√(β² + γ² − β²·t₁²)`, what the zero-sum condition gives for real
/// amplitudes and zero splitter phases.
pub fn t2_closed_form_squared(beta0: f64, gamma0: f64, t1: f64) -> f64 {
    gamma0 / (beta0 * beta0 + gamma0 * gamma0 - beta0 * beta0 * t1 * t1).sqrt()
}
