//! Iterative phase retrieval for comparison: damped Fienup error reduction
//! and Wirtinger flow, both on a dense measurement matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::ensemble::{Ensemble, MeasurementSet};
use crate::rng::seeded;
use crate::signal::Signal;
use crate::{Error, Result};

/// Dense complex matrix with one row `conj(φ_m)ᵀ` per measurement vector, so
/// that `(A x)_m = ⟨φ_m, x⟩`.
pub type MeasurementMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct IterativeOptions {
    pub max_iters: usize,
    /// Damping `β` of the Fienup update. Wirtinger flow ignores it.
    pub step_size: f64,
    /// Stop once the relative intensity residual falls to this value.
    pub tol: f64,
    pub seed: u64,
    /// Power iterations for the spectral start of Wirtinger flow.
    pub power_iters: usize,
    /// Ceiling of the Wirtinger flow step schedule.
    pub wf_step_cap: f64,
    /// Starting point. Replaces the random or spectral start when set.
    pub init: Option<Signal>,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        IterativeOptions { max_iters: 2500, step_size: 0.5, tol: 1e-10, seed: 0, power_iters: 100, wf_step_cap: 0.2, init: None }
    }
}

impl IterativeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidOptions("max_iters must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size < 2.0) {
            return Err(Error::InvalidOptions(format!("step size {} outside (0, 2)", self.step_size)));
        }
        if !(self.wf_step_cap > 0.0 && self.wf_step_cap.is_finite()) {
            return Err(Error::InvalidOptions(format!("step cap {} must be positive", self.wf_step_cap)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidOptions(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IterativeResult {
    pub xhat: Signal,
    pub iters_used: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// Relative intensity residual after each iteration.
    pub history: Vec<f64>,
}

pub fn measurement_matrix(ensemble: &Ensemble) -> MeasurementMatrix {
    let (m, n) = (ensemble.len(), ensemble.n());
    let mut a = DMatrix::zeros(m, n);
    for (row, v) in ensemble.vectors().iter().enumerate() {
        for (col, phi) in v.to_dense(n).into_iter().enumerate() {
            a[(row, col)] = phi.conj();
        }
    }
    a
}

/// `‖ |A x|² − b ‖ / ‖b‖`, or the absolute norm when `b = 0`.
pub fn intensity_residual(ax: &DVector<Complex64>, b: &[f64]) -> f64 {
    let diff: f64 = ax.iter().zip(b).map(|(y, &bm)| (y.norm_sqr() - bm).powi(2)).sum::<f64>().sqrt();
    let scale = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `‖ |A x| − √b₊ ‖`, the quantity error reduction never increases.
pub fn amplitude_residual(a: &MeasurementMatrix, b: &[f64], x: &Signal) -> f64 {
    let ax = a * DVector::from_column_slice(x.entries());
    ax.iter().zip(b).map(|(y, &bm)| (y.norm() - bm.max(0.0).sqrt()).powi(2)).sum::<f64>().sqrt()
}

fn check_shape(a: &MeasurementMatrix, b: &[f64]) -> Result<()> {
    let (m, n) = a.shape();
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: b.len() });
    }
    if m < n {
        return Err(Error::Underdetermined { m, n });
    }
    if let Some(index) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

fn start_point(opts: &IterativeOptions, n: usize) -> Result<Option<DVector<Complex64>>> {
    match &opts.init {
        Some(x0) if x0.len() != n => Err(Error::DimensionMismatch { expected: n, got: x0.len() }),
        Some(x0) => Ok(Some(DVector::from_column_slice(x0.entries()))),
        None => Ok(None),
    }
}

fn gaussian_vector(n: usize, seed: u64) -> DVector<Complex64> {
    let mut rng = seeded(seed);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * half, im * half)
    })
}

/// Norm estimate `√(n Σb / Σ‖φ_m‖²)`, exact in expectation for Gaussian rows.
fn norm_estimate(a: &MeasurementMatrix, b: &[f64]) -> f64 {
    let frob = a.iter().map(|c| c.norm_sqr()).sum::<f64>();
    if frob == 0.0 {
        return 0.0;
    }
    (a.ncols() as f64 * b.iter().sum::<f64>().max(0.0) / frob).sqrt()
}

fn to_signal(x: &DVector<Complex64>) -> Result<Signal> {
    Signal::new(x.iter().copied().collect())
}

fn unit_phase(y: Complex64) -> Complex64 {
    let r = y.norm();
    if r > 0.0 {
        y / r
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Damped error reduction `x ← x + β (P(x) − x)` where `P(x)` is the least
/// squares fit of `A x` to the magnitudes `√b₊` with the phases of `A x`.
pub fn fienup(a: &MeasurementMatrix, b: &[f64], opts: &IterativeOptions) -> Result<IterativeResult> {
    opts.validate()?;
    check_shape(a, b)?;
    let n = a.ncols();
    let qr = a.clone().qr();
    let q_adj = qr.q().adjoint();
    let r = qr.r();
    if let Some(d) = r.diagonal().iter().map(|v| v.norm()).reduce(f64::min) {
        if d == 0.0 {
            return Err(Error::SingularSystem(0.0));
        }
    }
    let magnitudes: Vec<f64> = b.iter().map(|v| v.max(0.0).sqrt()).collect();

    let mut x = match start_point(opts, n)? {
        Some(x0) => x0,
        None => {
            let g = gaussian_vector(n, opts.seed);
            let scale = norm_estimate(a, b);
            let g_norm = g.norm();
            if g_norm > 0.0 {
                g * Complex64::from(scale / g_norm)
            } else {
                g
            }
        }
    };
    let mut ax = a * &x;
    let mut history = Vec::with_capacity(opts.max_iters.min(4096));
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let target = DVector::from_iterator(
            ax.len(),
            ax.iter().zip(&magnitudes).map(|(y, &mag)| unit_phase(*y) * mag),
        );
        let projected = r
            .solve_upper_triangular(&(&q_adj * target))
            .ok_or(Error::SingularSystem(0.0))?;
        x += (projected - &x) * Complex64::from(opts.step_size);
        ax = a * &x;
        let residual = intensity_residual(&ax, b);
        history.push(residual);
        if residual <= opts.tol {
            converged = true;
            break;
        }
    }
    Ok(IterativeResult {
        xhat: to_signal(&x)?,
        iters_used: history.len(),
        final_residual: *history.last().unwrap_or(&f64::NAN),
        converged,
        history,
    })
}

pub fn fienup_recover(set: &MeasurementSet, opts: &IterativeOptions) -> Result<IterativeResult> {
    fienup(&measurement_matrix(set.ensemble()), set.values(), opts)
}

/// Wirtinger gradient `(1/M) Σ (|⟨φ, z⟩|² − b) ⟨φ, z⟩ φ`.
pub fn wf_gradient(a: &MeasurementMatrix, b: &[f64], z: &DVector<Complex64>) -> DVector<Complex64> {
    let az = a * z;
    gradient_from_product(a, b, &az)
}

fn gradient_from_product(a: &MeasurementMatrix, b: &[f64], az: &DVector<Complex64>) -> DVector<Complex64> {
    let weighted =
        DVector::from_iterator(az.len(), az.iter().zip(b).map(|(y, &bm)| *y * (y.norm_sqr() - bm)));
    a.ad_mul(&weighted) / Complex64::from(a.nrows() as f64)
}

/// Leading eigenvector of `(1/M) Σ b_m φ_m φ_mᴴ` by power iteration, scaled
/// to the norm estimate from the total intensity.
pub fn spectral_init(a: &MeasurementMatrix, b: &[f64], power_iters: usize, seed: u64) -> DVector<Complex64> {
    let n = a.ncols();
    let scale = norm_estimate(a, b);
    let mut v = gaussian_vector(n, seed);
    if scale == 0.0 {
        return DVector::zeros(n);
    }
    v /= Complex64::from(v.norm());
    for _ in 0..power_iters {
        let av = a * &v;
        let weighted = DVector::from_iterator(av.len(), av.iter().zip(b).map(|(y, &bm)| *y * bm));
        let next = a.ad_mul(&weighted);
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        v = next / Complex64::from(norm);
    }
    v * Complex64::from(scale)
}

/// Step schedule `min(1 − e^{−t/330}, cap)`.
pub fn wf_step(t: usize, cap: f64) -> f64 {
    (1.0 - (-(t as f64) / 330.0).exp()).min(cap)
}

pub fn wirtinger_flow(a: &MeasurementMatrix, b: &[f64], opts: &IterativeOptions) -> Result<IterativeResult> {
    opts.validate()?;
    check_shape(a, b)?;
    let n = a.ncols();
    let mut z = match start_point(opts, n)? {
        Some(z0) => z0,
        None => spectral_init(a, b, opts.power_iters, opts.seed),
    };
    let x0_sq = z.norm_squared();
    let mut az = a * &z;
    let mut history = Vec::with_capacity(opts.max_iters.min(4096));
    let mut converged = false;
    if x0_sq == 0.0 {
        // Zero start: the gradient vanishes and z stays put.
        let residual = intensity_residual(&az, b);
        history.push(residual);
        converged = residual <= opts.tol;
    } else {
        for t in 1..=opts.max_iters {
            let grad = gradient_from_product(a, b, &az);
            z -= grad * Complex64::from(wf_step(t, opts.wf_step_cap) / x0_sq);
            az = a * &z;
            let residual = intensity_residual(&az, b);
            if !residual.is_finite() {
                history.push(residual);
                break;
            }
            history.push(residual);
            if residual <= opts.tol {
                converged = true;
                break;
            }
        }
    }
    let xhat = if z.iter().all(|c| c.is_finite()) { to_signal(&z)? } else { Signal::zeros(n)? };
    Ok(IterativeResult {
        xhat,
        iters_used: history.len(),
        final_residual: *history.last().unwrap_or(&f64::NAN),
        converged,
        history,
    })
}

pub fn wirtinger_flow_recover(set: &MeasurementSet, opts: &IterativeOptions) -> Result<IterativeResult> {
    wirtinger_flow(&measurement_matrix(set.ensemble()), set.values(), opts)
}
