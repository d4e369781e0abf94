//! Least-squares fit of a heralded grid to the entangled ansatz
//! `f·(|0⟩|α⟩⁰ − |−α⟩⁰|0⟩)`.
//!
//! The fit compares the axis amplitudes `C(1,n,0)` and `C(1,0,n)`, `n ≥ 1`,
//! with `−f·co(−α,n)` and `f·co(α,n)`. Rescaling `co` by an `α`-dependent
//! constant leaves `α` and the minimum of `Er` unchanged, so the fit is done
//! once in the standard normalization and the `Paper`-normalization scale is
//! derived from it.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{co, ComplexAmp, Normalization};
use crate::simulator::HeraldedGrid;

pub const DEFAULT_FIT_N_MAX: usize = 9;
pub const ALPHA_MAX: f64 = 4.0;
pub const ALPHA_STEP: f64 = 0.01;
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
/// Per-axis mass below which the grid carries nothing to fit.
pub const DEGENERATE_AXIS_MASS: f64 = 1e-12;

const MAX_NEWTON_STEPS: usize = 200;
const F_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    /// Scale in the standard normalization of `co`.
    pub f: f64,
    /// The same scale expressed with the `e^{−|α|²}` prefactor.
    pub f_paper: f64,
    /// Error function with the `e^{−|α|²}` prefactor, at `(alpha, f_paper)`.
    pub er: f64,
    /// Error function with standard `co`, at `(alpha, f)`.
    pub standard_norm_er: f64,
    pub n_max_used: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// Phase removed from the grid before fitting.
    pub global_phase: f64,
}

/// Phase-aligned axis amplitudes, ordered `v` axis `n = 1..=n_max` then `w`
/// axis `n = 1..=n_max`.
struct AxisData {
    n_max: usize,
    y: Vec<ComplexAmp>,
    phase: f64,
}

impl AxisData {
    fn photons(&self, j: usize) -> usize {
        j % self.n_max + 1
    }

    /// Model value for slot `j` with standard `co`, and the factors turning
    /// it into its first and second `α` derivatives.
    fn model(&self, j: usize, alpha: f64) -> (f64, f64, f64) {
        let n = self.photons(j);
        let sign = if j < self.n_max && n.is_multiple_of(2) { -1.0 } else { 1.0 };
        let x = sign * co(Normalization::Standard, alpha, n);
        let nf = n as f64;
        let d1 = nf / alpha - alpha;
        let d2 = d1 * d1 - nf / (alpha * alpha) - 1.0;
        (x, x * d1, x * d2)
    }

    fn er(&self, alpha: f64, f: f64) -> f64 {
        (0..self.y.len())
            .map(|j| (self.y[j] - f * self.model(j, alpha).0).norm_sqr())
            .sum()
    }

    fn best_f(&self, alpha: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, y) in self.y.iter().enumerate() {
            let x = self.model(j, alpha).0;
            num += x * y.re;
            den += x * x;
        }
        if den == 0.0 {
            return F_MIN;
        }
        (num / den).clamp(F_MIN, 1.0)
    }

    /// Gradient and Hessian of `er` in `(α, f)`.
    fn derivatives(&self, alpha: f64, f: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let (mut ga, mut gf, mut haa, mut haf, mut hff) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (j, y) in self.y.iter().enumerate() {
            let (x, x1, x2) = self.model(j, alpha);
            let res = y.re - f * x;
            ga += -2.0 * f * res * x1;
            gf += -2.0 * res * x;
            haa += 2.0 * f * (f * x1 * x1 - res * x2);
            haf += -2.0 * (y.re - 2.0 * f * x) * x1;
            hff += 2.0 * x * x;
        }
        ([ga, gf], [[haa, haf], [haf, hff]])
    }
}

fn axis_data(grid: &HeraldedGrid, n_max: usize) -> Result<AxisData> {
    if n_max == 0 {
        return Err(Error::Config("fit needs n_max ≥ 1".into()));
    }
    if grid.trunc_out() < n_max {
        return Err(Error::Config(format!(
            "grid covers n ≤ {} but the fit needs n ≤ {n_max}",
            grid.trunc_out()
        )));
    }
    let v_mass: f64 = (1..=n_max).map(|n| grid.c(n, 0).norm_sqr()).sum();
    let w_mass: f64 = (1..=n_max).map(|n| grid.c(0, n).norm_sqr()).sum();
    if v_mass < DEGENERATE_AXIS_MASS && w_mass < DEGENERATE_AXIS_MASS {
        return Err(Error::DegenerateGrid {
            threshold: DEGENERATE_AXIS_MASS,
        });
    }

    // Reference: the largest w-axis entry, which the ansatz makes positive.
    let reference = if w_mass > 0.0 {
        (1..=n_max)
            .map(|n| grid.c(0, n))
            .fold(Complex64::new(0.0, 0.0), |best, c| if c.norm() > best.norm() { c } else { best })
    } else {
        grid.c(1, 0)
    };
    let phase = reference.arg();
    let rotation = Complex64::from_polar(1.0, -phase);
    let y = (1..=n_max)
        .map(|n| grid.c(n, 0))
        .chain((1..=n_max).map(|n| grid.c(0, n)))
        .map(|c| c * rotation)
        .collect();
    Ok(AxisData { n_max, y, phase })
}

/// Fits `(α, f)` to the axis amplitudes `n = 1..=n_max` of `grid`.
pub fn fit_entangled(grid: &HeraldedGrid, n_max: usize) -> Result<FitResult> {
    let data = axis_data(grid, n_max)?;

    // Coarse scan with f profiled out; strict `<` keeps the smallest α on ties.
    let steps = (ALPHA_MAX / ALPHA_STEP).round() as usize;
    let (mut alpha, mut f, mut best) = (ALPHA_STEP, data.best_f(ALPHA_STEP), f64::INFINITY);
    for i in 1..=steps {
        let a = i as f64 * ALPHA_STEP;
        let fa = data.best_f(a);
        let e = data.er(a, fa);
        if e < best {
            (alpha, f, best) = (a, fa, e);
        }
    }

    let (alpha, f, converged, grad_norm) = refine(&data, alpha, f);
    let er_std = data.er(alpha, f);
    let ratio = co(Normalization::Standard, alpha, 1) / co(Normalization::Paper, alpha, 1);
    let f_paper = f * ratio;
    let er = paper_er(&data, alpha, f_paper);
    Ok(FitResult {
        alpha,
        f,
        f_paper,
        er,
        standard_norm_er: er_std,
        n_max_used: n_max,
        converged,
        grad_norm,
        global_phase: data.phase,
    })
}

fn paper_er(data: &AxisData, alpha: f64, f_paper: f64) -> f64 {
    (0..data.y.len())
        .map(|j| {
            let n = data.photons(j);
            let model = if j < data.n_max {
                -co(Normalization::Paper, -alpha, n)
            } else {
                co(Normalization::Paper, alpha, n)
            };
            (data.y[j] - f_paper * model).norm_sqr()
        })
        .sum()
}

/// Damped Newton on `(α, f)` inside `(0, ALPHA_MAX] × (0, 1]`. Returns the
/// point, whether the projected gradient fell below tolerance, and its norm.
fn refine(data: &AxisData, mut alpha: f64, mut f: f64) -> (f64, f64, bool, f64) {
    let projected = |alpha: f64, f: f64| {
        let (g, _) = data.derivatives(alpha, f);
        let gf = if (f >= 1.0 && g[1] < 0.0) || (f <= F_MIN && g[1] > 0.0) {
            0.0
        } else {
            g[1]
        };
        let ga = if alpha >= ALPHA_MAX && g[0] < 0.0 { 0.0 } else { g[0] };
        ga.hypot(gf)
    };

    let mut current = data.er(alpha, f);
    for _ in 0..MAX_NEWTON_STEPS {
        if projected(alpha, f) < GRADIENT_TOLERANCE {
            break;
        }
        let (g, h) = data.derivatives(alpha, f);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let mut step = if h[0][0] > 0.0 && det > 0.0 {
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(h[0][0] * g[1] - h[1][0] * g[0]) / det,
            ]
        } else {
            [-g[0], -g[1]]
        };

        let mut moved = false;
        for _ in 0..60 {
            let a = (alpha + step[0]).clamp(ALPHA_STEP * 1e-3, ALPHA_MAX);
            let ff = (f + step[1]).clamp(F_MIN, 1.0);
            let e = data.er(a, ff);
            if e <= current {
                moved = (a, ff) != (alpha, f);
                (alpha, f, current) = (a, ff, e);
                break;
            }
            step = [step[0] * 0.5, step[1] * 0.5];
        }
        if !moved {
            break;
        }
    }
    let grad = projected(alpha, f);
    (alpha, f, grad < GRADIENT_TOLERANCE, grad)
}

/// Grid of the ansatz with standard `co`.
pub fn ansatz_grid(alpha: f64, f: f64, n_max: usize) -> Result<HeraldedGrid> {
    ansatz_grid_with(Normalization::Standard, alpha, f, n_max)
}

/// `C(1,n,0) = −f·co(−α,n)`, `C(1,0,n) = f·co(α,n)` for `n ≥ 1`, zero
/// elsewhere.
pub fn ansatz_grid_with(norm: Normalization, alpha: f64, f: f64, n_max: usize) -> Result<HeraldedGrid> {
    if n_max == 0 {
        return Err(Error::Config("ansatz grid needs n_max ≥ 1".into()));
    }
    let mut c = Array2::<ComplexAmp>::zeros((n_max + 1, n_max + 1));
    for n in 1..=n_max {
        c[[n, 0]] = Complex64::new(-f * co(norm, -alpha, n), 0.0);
        c[[0, n]] = Complex64::new(f * co(norm, alpha, n), 0.0);
    }
    Ok(HeraldedGrid::from_amplitudes(c))
}
