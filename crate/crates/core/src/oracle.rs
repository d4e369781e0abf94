//! Brute-force cross-check of the combinatorial engine.
//!
//! The truncated input product state is propagated through each splitter
//! as a Schrödinger-picture unitary. A splitter conserves total photon
//! number, so it acts block-diagonally on sectors `|k, N−k⟩`; each block is
//! built from a dense matrix exponential of the hopping generator and
//! diagonal phase rotations. Nothing here uses the `q` coefficients or the
//! multinomial sum.

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{coherent_coeff, squeezed_coeff, ComplexAmp};
use crate::network::BeamSplitterSpec;
use crate::simulator::{input_captured_mass, JointAmplitudeTensor, ScenarioSpec};

/// Minimum norm kept by the input truncation before propagation.
pub const MIN_ORACLE_MASS: f64 = 0.999;
/// Norm allowed to leak past the per-mode limit.
pub const MAX_LEAKAGE: f64 = 1e-9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Three-mode state truncated per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    amplitudes: Array3<ComplexAmp>,
    /// No slot may ever hold more photons than this.
    limit: usize,
    leakage: f64,
}

impl TruncatedState {
    pub fn amplitudes(&self) -> &Array3<ComplexAmp> {
        &self.amplitudes
    }

    /// Highest occupation stored in each slot.
    pub fn caps(&self) -> [usize; 3] {
        let s = self.amplitudes.shape();
        [s[0] - 1, s[1] - 1, s[2] - 1]
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    /// Norm discarded so far because it exceeded [`Self::limit`].
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    /// Distribution of the total photon number.
    pub fn total_number_distribution(&self) -> Vec<f64> {
        let [a, b, c] = self.caps();
        let mut dist = vec![0.0; a + b + c + 1];
        for ((i, j, k), amp) in self.amplitudes.indexed_iter() {
            dist[i + j + k] += amp.norm_sqr();
        }
        dist
    }
}

/// `|ξ⟩_a ⊗ |β⟩_b ⊗ |γ⟩_c`, each truncated at `spec.trunc_in`, with a
/// lossless per-mode limit of `3·dim`.
pub fn build_input_state(spec: &ScenarioSpec, dim: usize) -> Result<TruncatedState> {
    spec.validate()?;
    if dim < spec.trunc_in {
        return Err(Error::Config(format!(
            "oracle dimension {dim} is below trunc_in {}",
            spec.trunc_in
        )));
    }
    let captured = input_captured_mass(spec);
    if captured < MIN_ORACLE_MASS {
        return Err(Error::TruncationMass {
            captured,
            required: MIN_ORACLE_MASS,
        });
    }
    let cap = spec.trunc_in;
    let a: Vec<_> = (0..=cap).map(|n| squeezed_coeff(&spec.squeeze, n)).collect();
    let b: Vec<_> = (0..=cap).map(|l| coherent_coeff(spec.beta.amplitude(), l)).collect();
    let c: Vec<_> = (0..=cap).map(|m| coherent_coeff(spec.gamma.amplitude(), m)).collect();
    let amplitudes = Array3::from_shape_fn((cap + 1, cap + 1, cap + 1), |(i, j, k)| a[i] * b[j] * c[k]);
    Ok(TruncatedState {
        amplitudes,
        limit: 3 * dim,
        leakage: 0.0,
    })
}

/// Dense `exp(m)` by scaling and squaring with a Taylor core.
pub fn expm(m: &Array2<ComplexAmp>) -> Array2<ComplexAmp> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm needs a square matrix");
    let norm1 = (0..n)
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.mapv(|z| z / 2f64.powi(squarings as i32));

    let mut result = Array2::<ComplexAmp>::eye(n);
    let mut term = Array2::<ComplexAmp>::eye(n);
    for k in 1..=30 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
        let size: f64 = term.iter().map(|z| z.norm()).sum();
        if size < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// How the Schrödinger-picture block is tied to [`crate::network::bs_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// One-photon amplitudes reproduce `bs_matrix` exactly.
    Heisenberg,
    /// Reflection sign flipped. Only useful as a negative control.
    FlippedReflection,
}

/// Unitary on the sector of total photon number `total`, basis index `k` =
/// photons in the first mode of the pair.
///
/// Single-photon action: `R(ψ₁)·[[t, −r], [r, t]]·R(ψ₂)` with
/// `R(ψ) = diag(e^{−iψ}, e^{iψ})`, `θ = arccos t`, `ψ₁ = (φτ − φρ)/2`,
/// `ψ₂ = (φτ + φρ)/2`. Column `j` then holds the output amplitudes of the
/// `j`-th input creation operator, i.e. the transpose of `bs_matrix`.
fn sector_unitary(spec: &BeamSplitterSpec, total: usize, convention: Convention) -> Array2<ComplexAmp> {
    let mut theta = spec.t().clamp(-1.0, 1.0).acos();
    if convention == Convention::FlippedReflection {
        theta = -theta;
    }
    let psi1 = 0.5 * (spec.phi_tau() - spec.phi_rho());
    let psi2 = 0.5 * (spec.phi_tau() + spec.phi_rho());
    let dim = total + 1;

    // θ·(b†a − a†b)
    let mut generator = Array2::<ComplexAmp>::zeros((dim, dim));
    for k in 0..dim {
        let rest = total - k;
        if k > 0 {
            generator[[k - 1, k]] += Complex64::new(theta * ((k * (rest + 1)) as f64).sqrt(), 0.0);
        }
        if k < total {
            generator[[k + 1, k]] -= Complex64::new(theta * (((k + 1) * rest) as f64).sqrt(), 0.0);
        }
    }
    let hop = expm(&generator);
    let rotation = |psi: f64, k: usize| Complex64::from_polar(1.0, -psi * (2.0 * k as f64 - total as f64));
    Array2::from_shape_fn((dim, dim), |(i, j)| rotation(psi1, i) * hop[[i, j]] * rotation(psi2, j))
}

/// Applies a splitter to slots `pair = (p, q)`. The output occupying slot
/// `p` is the first output of the splitter (`d` or `u`), slot `q` the
/// second (`w` or `v`).
pub fn apply_bs(state: &TruncatedState, spec: &BeamSplitterSpec, pair: (usize, usize)) -> Result<TruncatedState> {
    apply_bs_with(state, spec, pair, Convention::Heisenberg)
}

pub fn apply_bs_with(
    state: &TruncatedState,
    spec: &BeamSplitterSpec,
    pair: (usize, usize),
    convention: Convention,
) -> Result<TruncatedState> {
    let (p, q) = pair;
    if p == q || p > 2 || q > 2 {
        return Err(Error::Config(format!("invalid mode pair ({p}, {q})")));
    }
    let spectator = 3 - p - q;
    let caps = state.caps();
    let sector_max = caps[p] + caps[q];
    let new_cap = sector_max.min(state.limit);
    let mut new_caps = caps;
    new_caps[p] = new_cap;
    new_caps[q] = new_cap;

    let unitaries: Vec<_> = (0..=sector_max)
        .map(|n| sector_unitary(spec, n, convention))
        .collect();

    let index = |slot_p: usize, slot_q: usize, slot_s: usize| {
        let mut idx = [0usize; 3];
        idx[p] = slot_p;
        idx[q] = slot_q;
        idx[spectator] = slot_s;
        idx
    };

    let mut out = Array3::<ComplexAmp>::zeros((new_caps[0] + 1, new_caps[1] + 1, new_caps[2] + 1));
    let mut leaked = 0.0;
    for s in 0..=caps[spectator] {
        for (total, u) in unitaries.iter().enumerate() {
            let input: Vec<ComplexAmp> = (0..=total)
                .map(|k| {
                    if k <= caps[p] && total - k <= caps[q] {
                        state.amplitudes[index(k, total - k, s)]
                    } else {
                        ZERO
                    }
                })
                .collect();
            if input.iter().all(|z| *z == ZERO) {
                continue;
            }
            for k in 0..=total {
                let amp: ComplexAmp = (0..=total).map(|j| u[[k, j]] * input[j]).sum();
                if k <= new_cap && total - k <= new_cap {
                    out[index(k, total - k, s)] = amp;
                } else {
                    leaked += amp.norm_sqr();
                }
            }
        }
    }

    let leakage = state.leakage + leaked;
    if leakage > MAX_LEAKAGE {
        return Err(Error::OracleUnreliable { leakage });
    }
    Ok(TruncatedState {
        amplitudes: out,
        limit: state.limit,
        leakage,
    })
}

/// Propagates the input through both splitters and reorders the result
/// into an `(N_u, N_v, N_w)` tensor comparable with
/// [`crate::simulator::joint_amplitudes`].
pub fn oracle_joint_amplitudes(spec: &ScenarioSpec, dim: usize) -> Result<JointAmplitudeTensor> {
    oracle_joint_amplitudes_with(spec, dim, Convention::Heisenberg)
}

pub fn oracle_joint_amplitudes_with(
    spec: &ScenarioSpec,
    dim: usize,
    convention: Convention,
) -> Result<JointAmplitudeTensor> {
    let input = build_input_state(spec, dim)?;
    // slots (a, b, c) → (d, w, c) → (u, w, v)
    let mid = apply_bs_with(&input, &spec.bs1, (0, 1), convention)?;
    let out = apply_bs_with(&mid, &spec.bs2, (0, 2), convention)?;
    let caps = out.caps();
    let side = caps.iter().copied().min().unwrap_or(0) + 1;
    let amplitudes = Array3::from_shape_fn((side, side, side), |(u, v, w)| out.amplitudes[[u, w, v]]);
    Ok(JointAmplitudeTensor::new(amplitudes, spec.trunc_in, spec.trunc_out))
}
