//! Exact truncated output amplitudes of the cascade, the single-photon
//! herald in mode `u`, and the closed-form limits of the `|0⟩_v|ψ⟩_w`
//! branch.
//!
//! The input `|ξ⟩_a|β⟩_b|γ⟩_c` is a polynomial in `a†, b†, c†` acting on
//! vacuum. Substituting the [`QMap`] relations and collecting monomials
//! `(u†)^{N_u}(v†)^{N_v}(w†)^{N_w}` gives
//!
//! ```text
//! C(N_u,N_v,N_w) = √(N_u!N_v!N_w!)·e^{−(|β|²+|γ|²)/2}
//!     Σ C_n(ξ)·√(n!)·Π (q_a^x)^{n_x}/n_x! · Π (β·q_b^x)^{l_x}/l_x! · Π (γ·q_c^x)^{m_x}/m_x!
//! ```
//!
//! over all splittings with `n_u+l_u+m_u = N_u`, `n_v+l_v+m_v = N_v`,
//! `n_w+l_w = N_w` and `n, l, m ≤ trunc_in`. The `√(N!)` factor turns
//! creation-operator monomials into normalized number states.
//!
//! Every cell is summed in ascending lexicographic order of
//! `(n_u, n_v, n_w, l_u, l_v, l_w, m_u, m_v)`, so the result is
//! bit-for-bit independent of how cells are scheduled across threads.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    coherent_coeff, ln_factorial, sqrt_factorial, squeezed_coeff, CoefficientVector, CoherentParam, ComplexAmp,
    SqueezeParam, MAX_PHOTONS,
};
use crate::network::{compose_q, BeamSplitterSpec, QMap};

pub const DEFAULT_TRUNC_IN: usize = 16;
pub const DEFAULT_TRUNC_OUT: usize = 9;
/// Minimum norm the truncated input must retain.
pub const MIN_CAPTURED_MASS: f64 = 0.99;
/// Heralding probabilities below this are treated as "never happens".
pub const DEGENERATE_PR: f64 = 1e-15;
/// Tolerance on the zero-sum residual for the closed-form `|ψ⟩_w`.
pub const CONDITION_TOLERANCE: f64 = 1e-8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Everything needed to run the cascade once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub squeeze: SqueezeParam,
    /// Mode `b`; the reference scenarios keep its phase at 0.
    pub beta: CoherentParam,
    /// Mode `c`; its phase is `θ`.
    pub gamma: CoherentParam,
    pub bs1: BeamSplitterSpec,
    pub bs2: BeamSplitterSpec,
    /// Photon-number cap applied to each input expansion.
    pub trunc_in: usize,
    /// Largest `N_v`, `N_w` reported in the heralded grid.
    pub trunc_out: usize,
}

impl ScenarioSpec {
    /// A reference-style scenario: `φ = θ = π`, splitter phases 0, and the
    /// default truncation.
    pub fn standard(s: f64, beta0: f64, gamma0: f64, t1: f64, t2: f64) -> Result<Self> {
        let spec = Self {
            squeeze: SqueezeParam::new(s, PI)?,
            beta: CoherentParam::new(beta0, 0.0)?,
            gamma: CoherentParam::new(gamma0, PI)?,
            bs1: BeamSplitterSpec::plain(t1)?,
            bs2: BeamSplitterSpec::plain(t2)?,
            trunc_in: DEFAULT_TRUNC_IN,
            trunc_out: DEFAULT_TRUNC_OUT,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_truncation(mut self, trunc_in: usize, trunc_out: usize) -> Result<Self> {
        self.trunc_in = trunc_in;
        self.trunc_out = trunc_out;
        self.validate()?;
        Ok(self)
    }

    pub fn with_phi(mut self, phi: f64) -> Result<Self> {
        self.squeeze = SqueezeParam::new(self.squeeze.s(), phi)?;
        Ok(self)
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        self.gamma = CoherentParam::new(self.gamma.magnitude(), theta)?;
        Ok(self)
    }

    pub fn with_t2(mut self, t2: f64) -> Result<Self> {
        self.bs2 = self.bs2.with_t(t2)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trunc_in > MAX_PHOTONS {
            return Err(Error::Config(format!(
                "trunc_in {} exceeds the photon-number bound {MAX_PHOTONS}",
                self.trunc_in
            )));
        }
        if self.trunc_out > self.trunc_in {
            return Err(Error::Config(format!(
                "trunc_out {} must not exceed trunc_in {}",
                self.trunc_out, self.trunc_in
            )));
        }
        if self.trunc_out < 1 {
            return Err(Error::Config("trunc_out must be at least 1".into()));
        }
        Ok(())
    }

    pub fn qmap(&self) -> QMap {
        compose_q(&self.bs1, &self.bs2)
    }

    /// `|β·q_b^u + γ·q_c^u|`.
    pub fn zero_sum_residual(&self) -> f64 {
        self.qmap()
            .zero_sum(self.beta.amplitude(), self.gamma.amplitude())
            .norm()
    }
}

/// Norm retained by truncating each input at `trunc_in`. The cascade is
/// unitary, so this is also the total output mass of the truncated state.
pub fn input_captured_mass(spec: &ScenarioSpec) -> f64 {
    let cap = spec.trunc_in;
    let squeezed: f64 = (0..=cap).map(|n| squeezed_coeff(&spec.squeeze, n).norm_sqr()).sum();
    let beta: f64 = (0..=cap).map(|l| coherent_coeff(spec.beta.amplitude(), l).norm_sqr()).sum();
    let gamma: f64 = (0..=cap).map(|m| coherent_coeff(spec.gamma.amplitude(), m).norm_sqr()).sum();
    squeezed * beta * gamma
}

/// `z^k / k!` for `k = 0..=cap`, from log magnitude and phase.
fn scaled_powers(z: ComplexAmp, cap: usize) -> Vec<ComplexAmp> {
    let (r, arg) = (z.norm(), z.arg());
    (0..=cap)
        .map(|k| {
            if k == 0 {
                Complex64::new(1.0, 0.0)
            } else if r == 0.0 {
                ZERO
            } else {
                Complex64::from_polar((k as f64 * r.ln() - ln_factorial(k)).exp(), k as f64 * arg)
            }
        })
        .collect()
}

/// Precomputed factors shared by every output cell.
struct Engine {
    trunc_in: usize,
    prefactor: f64,
    /// `C_n(ξ)·√(n!)`
    squeezed: Vec<ComplexAmp>,
    a_u: Vec<ComplexAmp>,
    a_v: Vec<ComplexAmp>,
    a_w: Vec<ComplexAmp>,
    b_u: Vec<ComplexAmp>,
    b_v: Vec<ComplexAmp>,
    b_w: Vec<ComplexAmp>,
    c_u: Vec<ComplexAmp>,
    c_v: Vec<ComplexAmp>,
}

impl Engine {
    fn new(spec: &ScenarioSpec, out_cap: usize) -> Self {
        let q = spec.qmap();
        let beta = spec.beta.amplitude();
        let gamma = spec.gamma.amplitude();
        let cap = spec.trunc_in.max(out_cap);
        let squeezed = (0..=spec.trunc_in)
            .map(|n| squeezed_coeff(&spec.squeeze, n) * sqrt_factorial(n))
            .collect();
        Self {
            trunc_in: spec.trunc_in,
            prefactor: (-0.5 * (beta.norm_sqr() + gamma.norm_sqr())).exp(),
            squeezed,
            a_u: scaled_powers(q.a_u, cap),
            a_v: scaled_powers(q.a_v, cap),
            a_w: scaled_powers(q.a_w, cap),
            b_u: scaled_powers(beta * q.b_u, cap),
            b_v: scaled_powers(beta * q.b_v, cap),
            b_w: scaled_powers(beta * q.b_w, cap),
            c_u: scaled_powers(gamma * q.c_u, cap),
            c_v: scaled_powers(gamma * q.c_v, cap),
        }
    }

    fn cell(&self, nu_tot: usize, nv_tot: usize, nw_tot: usize) -> ComplexAmp {
        let cap = self.trunc_in;
        let mut acc = ZERO;
        for n_u in 0..=nu_tot {
            for n_v in 0..=nv_tot {
                for n_w in 0..=nw_tot {
                    let n = n_u + n_v + n_w;
                    if n > cap || n % 2 == 1 {
                        continue;
                    }
                    let l_w = nw_tot - n_w;
                    let a_part = self.squeezed[n] * self.a_u[n_u] * self.a_v[n_v] * self.a_w[n_w];
                    for l_u in 0..=(nu_tot - n_u) {
                        let m_u = nu_tot - n_u - l_u;
                        for l_v in 0..=(nv_tot - n_v) {
                            let m_v = nv_tot - n_v - l_v;
                            if l_u + l_v + l_w > cap || m_u + m_v > cap {
                                continue;
                            }
                            acc += a_part
                                * self.b_u[l_u]
                                * self.b_v[l_v]
                                * self.b_w[l_w]
                                * self.c_u[m_u]
                                * self.c_v[m_v];
                        }
                    }
                }
            }
        }
        let norm = (0.5 * (ln_factorial(nu_tot) + ln_factorial(nv_tot) + ln_factorial(nw_tot))).exp();
        acc * (self.prefactor * norm)
    }
}

/// Dense `C(N_u, N_v, N_w)` for every index up to `cap` in each mode.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAmplitudeTensor {
    amplitudes: Array3<ComplexAmp>,
    trunc_in: usize,
    trunc_out: usize,
}

impl JointAmplitudeTensor {
    pub fn new(amplitudes: Array3<ComplexAmp>, trunc_in: usize, trunc_out: usize) -> Self {
        Self {
            amplitudes,
            trunc_in,
            trunc_out,
        }
    }

    pub fn amplitudes(&self) -> &Array3<ComplexAmp> {
        &self.amplitudes
    }

    /// Largest index stored in each mode.
    pub fn cap(&self) -> usize {
        self.amplitudes.shape()[0] - 1
    }

    pub fn trunc_in(&self) -> usize {
        self.trunc_in
    }

    pub fn trunc_out(&self) -> usize {
        self.trunc_out
    }

    pub fn get(&self, nu: usize, nv: usize, nw: usize) -> ComplexAmp {
        self.amplitudes[[nu, nv, nw]]
    }

    /// `Σ |C|²` over the stored cells, in row-major order.
    pub fn total_mass(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `max |self − other|` over all indices `≤ window` in every mode.
    pub fn max_abs_deviation(&self, other: &JointAmplitudeTensor, window: usize) -> f64 {
        let w = window.min(self.cap()).min(other.cap());
        let mut worst: f64 = 0.0;
        for nu in 0..=w {
            for nv in 0..=w {
                for nw in 0..=w {
                    worst = worst.max((self.get(nu, nv, nw) - other.get(nu, nv, nw)).norm());
                }
            }
        }
        worst
    }
}

/// Computes the full output tensor for `N_u, N_v, N_w ≤ trunc_in`.
///
/// Cells are evaluated in parallel; see the module docs for why the result
/// does not depend on the thread count.
pub fn joint_amplitudes(spec: &ScenarioSpec) -> Result<JointAmplitudeTensor> {
    spec.validate()?;
    let cap = spec.trunc_in;
    let engine = Engine::new(spec, cap);
    let side = cap + 1;
    let cells: Vec<ComplexAmp> = (0..side * side * side)
        .into_par_iter()
        .map(|idx| {
            let nu = idx / (side * side);
            let nv = (idx / side) % side;
            let nw = idx % side;
            engine.cell(nu, nv, nw)
        })
        .collect();
    let amplitudes = Array3::from_shape_vec((side, side, side), cells).expect("shape matches cell count");
    let tensor = JointAmplitudeTensor::new(amplitudes, spec.trunc_in, spec.trunc_out);
    let captured = tensor.total_mass();
    if captured < MIN_CAPTURED_MASS {
        return Err(Error::TruncationMass {
            captured,
            required: MIN_CAPTURED_MASS,
        });
    }
    Ok(tensor)
}

/// Conditional amplitudes `C(1, n, m)` and the derived probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedGrid {
    c: Array2<ComplexAmp>,
    p: Array2<f64>,
    pr: f64,
    pu: f64,
}

impl HeraldedGrid {
    /// Builds the grid from `C(1, n, m)` with `n` indexing mode `v` (rows)
    /// and `m` mode `w` (columns).
    pub fn from_amplitudes(c: Array2<ComplexAmp>) -> Self {
        assert_eq!(c.nrows(), c.ncols(), "heralded grid must be square");
        let p = c.mapv(|z| z.norm_sqr());
        let pr: f64 = p.iter().sum();
        let axis: f64 = p.column(0).iter().sum::<f64>() + p.row(0).iter().sum::<f64>();
        // P₀₀ sits in both sums, as in the published purity.
        let pu = if pr > 0.0 { axis / pr } else { 0.0 };
        Self { c, p, pr, pu }
    }

    pub fn trunc_out(&self) -> usize {
        self.c.nrows() - 1
    }

    pub fn amplitudes(&self) -> &Array2<ComplexAmp> {
        &self.c
    }

    pub fn c(&self, n: usize, m: usize) -> ComplexAmp {
        self.c[[n, m]]
    }

    pub fn probabilities(&self) -> &Array2<f64> {
        &self.p
    }

    /// Heralding probability `Σ P_nm`.
    pub fn pr(&self) -> f64 {
        self.pr
    }

    /// Fraction of `Pr` on the `(n, 0)` and `(0, m)` axes.
    pub fn pu(&self) -> f64 {
        self.pu
    }

    /// `Σ_{n≥1, m≥1} P_nm / Pr`.
    pub fn off_axis_fraction(&self) -> f64 {
        let n = self.trunc_out();
        let mut off = 0.0;
        for i in 1..=n {
            for j in 1..=n {
                off += self.p[[i, j]];
            }
        }
        if self.pr > 0.0 {
            off / self.pr
        } else {
            0.0
        }
    }

    fn check_degenerate(self) -> Result<Self> {
        if self.pr < DEGENERATE_PR {
            return Err(Error::DegenerateScenario {
                pr: self.pr,
                threshold: DEGENERATE_PR,
            });
        }
        Ok(self)
    }
}

#[derive(Serialize, Deserialize)]
struct GridDocument {
    trunc_out: usize,
    /// `c[n][m] = [re, im]`
    c: Vec<Vec<ComplexAmp>>,
    p: Vec<Vec<f64>>,
    pr: f64,
    pu: f64,
}

impl Serialize for HeraldedGrid {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GridDocument {
            trunc_out: self.trunc_out(),
            c: self.c.rows().into_iter().map(|r| r.to_vec()).collect(),
            p: self.p.rows().into_iter().map(|r| r.to_vec()).collect(),
            pr: self.pr,
            pu: self.pu,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HeraldedGrid {
    /// Only the amplitudes are trusted; `p`, `pr` and `pu` are recomputed.
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = GridDocument::deserialize(deserializer)?;
        let side = doc.c.len();
        if side < 2 || doc.c.iter().any(|r| r.len() != side) {
            return Err(D::Error::custom("grid amplitudes must form a square table of side >= 2"));
        }
        let flat: Vec<ComplexAmp> = doc.c.into_iter().flatten().collect();
        let c = Array2::from_shape_vec((side, side), flat).map_err(D::Error::custom)?;
        Ok(HeraldedGrid::from_amplitudes(c))
    }
}

/// Extracts the `N_u = 1` slice of a tensor up to its `trunc_out`.
pub fn herald_single(tensor: &JointAmplitudeTensor) -> Result<HeraldedGrid> {
    let n = tensor.trunc_out();
    if tensor.cap() < 1 || tensor.cap() < n {
        return Err(Error::Config(format!(
            "tensor cap {} does not cover N_u = 1 and trunc_out {n}",
            tensor.cap()
        )));
    }
    let c = Array2::from_shape_fn((n + 1, n + 1), |(i, j)| tensor.get(1, i, j));
    HeraldedGrid::from_amplitudes(c).check_degenerate()
}

/// Result of [`heralded_amplitudes`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldOutcome {
    pub grid: HeraldedGrid,
    /// Norm kept by the input truncation, see [`input_captured_mass`].
    pub captured_mass: f64,
}

/// Computes only the `N_u = 1` cells needed for the heralded grid. The
/// cells are produced by the same kernel as [`joint_amplitudes`], so they
/// are bit-identical to the corresponding slice of the full tensor.
pub fn heralded_amplitudes(spec: &ScenarioSpec) -> Result<HeraldOutcome> {
    spec.validate()?;
    let captured_mass = input_captured_mass(spec);
    if captured_mass < MIN_CAPTURED_MASS {
        return Err(Error::TruncationMass {
            captured: captured_mass,
            required: MIN_CAPTURED_MASS,
        });
    }
    let n = spec.trunc_out;
    let engine = Engine::new(spec, n);
    let c = Array2::from_shape_fn((n + 1, n + 1), |(i, j)| engine.cell(1, i, j));
    let grid = HeraldedGrid::from_amplitudes(c).check_degenerate()?;
    Ok(HeraldOutcome { grid, captured_mass })
}

/// `|(q_a^w / (β·q_b^w))² · (−½·e^{iφ}·tanh s)|`: when small, the `k = 1`
/// term dominates the closed-form `|ψ⟩_w` sum.
pub fn smallv_metric(spec: &ScenarioSpec) -> Result<f64> {
    let q = spec.qmap();
    let denom = spec.beta.amplitude() * q.b_w;
    if denom.norm() == 0.0 {
        return Err(Error::DivisionByZero("β·q_b^w vanishes"));
    }
    let ratio = q.a_w / denom;
    Ok((ratio * ratio * spec.squeeze.pair_amplitude()).norm())
}

/// The `|0⟩_v|ψ⟩_w` branch evaluated in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiW {
    /// Every term of the `k` sum.
    pub full: CoefficientVector,
    /// Only `k = 1` (the photon-added-coherent-like limit).
    pub k1: CoefficientVector,
}

/// Number-state coefficients of `|ψ⟩_w` (the `C(1, 0, N_w)` row) from
///
/// ```text
/// 2·q_a^u·e^{−(|β|²+|γ|²)/2}/√(cosh s) · √(N_w!)
///   Σ_{k=1}^{⌊(N_w+1)/2⌋} (β q_b^w)^{N_w−2k+1} (q_a^w)^{2k−1} x^k / ((N_w−2k+1)!(k−1)!)
/// ```
///
/// with `x = −½·e^{iφ}·tanh s`. Valid only under the zero-sum condition,
/// which removes the terms fed by the coherent beams into `u`.
pub fn approx_psi_w(spec: &ScenarioSpec, n_max: usize) -> Result<PsiW> {
    let residual = spec.zero_sum_residual();
    if residual > CONDITION_TOLERANCE {
        return Err(Error::ConditionViolation {
            residual,
            tolerance: CONDITION_TOLERANCE,
        });
    }
    let q = spec.qmap();
    let beta = spec.beta.amplitude();
    let gamma = spec.gamma.amplitude();
    let x = spec.squeeze.pair_amplitude();
    let bw = beta * q.b_w;
    let lead = q.a_u * (2.0 * (-0.5 * (beta.norm_sqr() + gamma.norm_sqr())).exp() / spec.squeeze.s().cosh().sqrt());

    let term = |nw: usize, k: usize| -> ComplexAmp {
        let lw = nw + 1 - 2 * k;
        bw.powu(lw as u32) * q.a_w.powu((2 * k - 1) as u32) * x.powu(k as u32)
            / (ln_factorial(lw) + ln_factorial(k - 1)).exp()
    };

    let mut full = Vec::with_capacity(n_max + 1);
    let mut k1 = Vec::with_capacity(n_max + 1);
    for nw in 0..=n_max {
        if nw == 0 {
            full.push(ZERO);
            k1.push(ZERO);
            continue;
        }
        let weight = lead * sqrt_factorial(nw);
        let sum: ComplexAmp = (1..=nw.div_ceil(2)).map(|k| term(nw, k)).sum();
        full.push(weight * sum);
        k1.push(weight * term(nw, 1));
    }
    Ok(PsiW {
        full: CoefficientVector::new(full),
        k1: CoefficientVector::new(k1),
    })
}
