//! Closed-form recovery by lateration.
//!
//! Real signals (`d = 1`): the origin and the first nonzero entry `x_{j1}`,
//! fixed at `+√w_{j1}`, are the two anchors. Every other support entry follows
//! from its distances to both:
//!
//! ```text
//! x_{jk} = (w_{j1} + w_{jk} − w_{jk,1}) / (2·x_{j1})
//! ```
//!
//! Complex signals (`d = 2`) need a third anchor. Stage one places `x_{j1}` on
//! the positive real axis and recovers `x_{j2}` from `z1 = |x_{j1} + x_{j2}|²`
//! and `z2 = |x_{j1} + i·x_{j2}|²`; the second measurement fixes the sign of
//! `Im x_{j2}`, so the only remaining ambiguity is the global phase. Stage two
//! solves one 2×2 linear system per remaining sensor. Those solves are
//! independent of one another.

mod oracle;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

pub use oracle::{IntensityOracle, NoisyOracle, SetOracle, SignalOracle};

use crate::ensemble::{EnsembleKind, MeasurementSet, MeasurementVector};
use crate::signal::Signal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    /// Coordinate intensities `w_j ≤ zero_tol` are treated as zero entries.
    pub zero_tol: f64,
    /// Relative threshold for the anchor determinant; see [`recover_anchors`].
    pub collinear_tol: f64,
    /// Clamp negative (noisy) intensities to zero before use.
    pub clamp_negatives: bool,
    /// On collinear anchors, try `(j1, j3)`, `(j1, j4)`, … as the anchor pair.
    pub retry_anchor_pairs: bool,
    /// Run the stage-two solves on the rayon pool.
    pub parallel: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            zero_tol: 0.0,
            collinear_tol: 1e-8,
            clamp_negatives: true,
            retry_anchor_pairs: false,
            parallel: false,
        }
    }
}

impl RecoveryOptions {
    /// Defaults with `zero_tol = 3σ`.
    pub fn for_noise(sigma: f64) -> Self {
        RecoveryOptions { zero_tol: 3.0 * sigma.max(0.0), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zero_tol >= 0.0 && self.zero_tol.is_finite()) {
            return Err(Error::InvalidOptions(format!("zero_tol must be finite and >= 0, got {}", self.zero_tol)));
        }
        if !(self.collinear_tol > 0.0 && self.collinear_tol.is_finite()) {
            return Err(Error::InvalidOptions(format!("collinear_tol must be > 0, got {}", self.collinear_tol)));
        }
        Ok(())
    }

    fn clean(&self, w: f64) -> f64 {
        if self.clamp_negatives {
            w.max(0.0)
        } else {
            w
        }
    }
}

/// The two artificial anchors of the complex algorithm, with `x1 = √w1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchors {
    pub j1: usize,
    pub j2: usize,
    pub x1: Complex64,
    pub x2: Complex64,
    /// Measured `|x_{j1}|²` and `|x_{j2}|²`, used on the right-hand side of the
    /// stage-two systems.
    pub w1: f64,
    pub w2: f64,
}

impl Anchors {
    pub fn with_indices(self, j1: usize, j2: usize) -> Self {
        Anchors { j1, j2, ..self }
    }

    /// `|a1·b2 − a2·b1| / (|x1|·√(|x1|² + |x2|²))`; zero when the anchors are
    /// collinear with the origin.
    pub fn normalized_det(&self) -> f64 {
        normalized_det(self.x1, self.x2)
    }
}

fn normalized_det(x1: Complex64, x2: Complex64) -> f64 {
    let det = (x1.conj() * x2).im;
    let scale = x1.norm() * (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if scale == 0.0 {
        0.0
    } else {
        det.abs() / scale
    }
}

/// 1-based indices with `w_j > zero_tol`, increasing.
pub fn detect_support(w: &[f64], zero_tol: f64) -> Vec<usize> {
    w.iter().enumerate().filter(|(_, &v)| v > zero_tol).map(|(i, _)| i + 1).collect()
}

/// Real recovery from coordinate intensities `w` and the differences
/// `diffs[k] = |x_k − x_{j1}|²` for every support index `k ≠ j1`.
///
/// The result equals `x` or `−x`. An empty support yields the zero signal.
pub fn recover_real(w: &[f64], diffs: &BTreeMap<usize, f64>, opts: &RecoveryOptions) -> Result<Signal> {
    opts.validate()?;
    let w: Vec<f64> = w.iter().map(|&v| opts.clean(v)).collect();
    let support = detect_support(&w, opts.zero_tol);
    let mut out = vec![Complex64::new(0.0, 0.0); w.len()];
    let Some((&j1, rest)) = support.split_first() else {
        return Signal::new(out);
    };
    let w1 = w[j1 - 1];
    let x1 = w1.sqrt();
    out[j1 - 1] = Complex64::new(x1, 0.0);
    for &k in rest {
        let wk1 = diffs
            .get(&k)
            .copied()
            .ok_or_else(|| Error::MissingMeasurement(MeasurementVector::diff(j1, k).to_string()))?;
        let wk1 = opts.clean(wk1);
        out[k - 1] = Complex64::new((w1 + w[k - 1] - wk1) / (2.0 * x1), 0.0);
    }
    Signal::new(out)
}

/// Output of a pipeline run, with the number of oracle queries it made.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub signal: Signal,
    pub support: Vec<usize>,
    pub anchors: Option<Anchors>,
    pub queries: usize,
}

fn query_coords(oracle: &dyn IntensityOracle, opts: &RecoveryOptions) -> Result<Vec<f64>> {
    (1..=oracle.n()).map(|k| oracle.intensity(&MeasurementVector::coord(k)).map(|v| opts.clean(v))).collect()
}

/// Two-round real acquisition: `n` coordinate queries, then one difference per
/// support entry after the first. `n + s − 1` queries for `s ≥ 1`.
pub fn recover_real_adaptive(oracle: &dyn IntensityOracle, opts: &RecoveryOptions) -> Result<Recovered> {
    opts.validate()?;
    let w = query_coords(oracle, opts)?;
    let support = detect_support(&w, opts.zero_tol);
    let mut diffs = BTreeMap::new();
    if let Some((&j1, rest)) = support.split_first() {
        for &k in rest {
            diffs.insert(k, oracle.intensity(&MeasurementVector::diff(j1, k))?);
        }
    }
    let queries = w.len() + diffs.len();
    let signal = recover_real(&w, &diffs, opts)?;
    Ok(Recovered { signal, support, anchors: None, queries })
}

/// Stage one: anchors from `w1 = |x1|²`, `w2 = |x2|²`, `z1 = |x1 + x2|²`,
/// `z2 = |x1 + i·x2|²`:
///
/// ```text
/// a1 = √w1,  b1 = 0,
/// a2 = (z1 − w1 − w2) / (2√w1),
/// b2 = (w1 + w2 − z2) / (2√w1).
/// ```
///
/// Fails with [`Error::CollinearAnchors`] when
/// `|b2| ≤ collinear_tol·√(a1² + |x2|²)`. The returned anchors carry indices
/// `(1, 2)`; see [`Anchors::with_indices`].
pub fn recover_anchors(w1: f64, w2: f64, z1: f64, z2: f64, opts: &RecoveryOptions) -> Result<Anchors> {
    opts.validate()?;
    let (w1, w2, z1, z2) = (opts.clean(w1), opts.clean(w2), opts.clean(z1), opts.clean(z2));
    if !(w1 > 0.0) {
        return Err(Error::NonpositiveMagnitude(w1));
    }
    let a1 = w1.sqrt();
    let a2 = (z1 - w1 - w2) / (2.0 * a1);
    let b2 = (w1 + w2 - z2) / (2.0 * a1);
    let x1 = Complex64::new(a1, 0.0);
    let x2 = Complex64::new(a2, b2);
    if normalized_det(x1, x2) <= opts.collinear_tol {
        return Err(Error::CollinearAnchors { j1: 1, j2: 2 });
    }
    Ok(Anchors { j1: 1, j2: 2, x1, x2, w1, w2 })
}

/// Stage two: the sensor with `|x|² = w_j`, `|x − x1|² = w_j1`,
/// `|x − x2|² = w_j2`, from
///
/// ```text
/// a1·a + b1·b = (w1 + w_j − w_j1) / 2
/// a2·a + b2·b = (w2 + w_j − w_j2) / 2
/// ```
pub fn recover_sensor(anchors: &Anchors, w_j: f64, w_j1: f64, w_j2: f64, opts: &RecoveryOptions) -> Result<Complex64> {
    let ndet = anchors.normalized_det();
    if ndet <= opts.collinear_tol {
        return Err(Error::SingularSystem(ndet));
    }
    let (w_j, w_j1, w_j2) = (opts.clean(w_j), opts.clean(w_j1), opts.clean(w_j2));
    let (a1, b1) = (anchors.x1.re, anchors.x1.im);
    let (a2, b2) = (anchors.x2.re, anchors.x2.im);
    let r1 = 0.5 * (anchors.w1 + w_j - w_j1);
    let r2 = 0.5 * (anchors.w2 + w_j - w_j2);
    let det = a1 * b2 - a2 * b1;
    let a = (r1 * b2 - r2 * b1) / det;
    let b = (a1 * r2 - a2 * r1) / det;
    Ok(Complex64::new(a, b))
}

/// Two-stage complex recovery driven by an oracle.
///
/// Queries `e_1..e_n`, finds the support `j1 < … < js`, then for `s ≥ 2` asks
/// for `e_{j1} + e_{j2}`, `e_{j1} − i·e_{j2}` and, per remaining sensor,
/// `e_{j1} − e_{jk}` and `e_{j2} − e_{jk}`: `n + 2s − 2` queries in total.
/// `s = 0` gives the zero signal and `s = 1` gives `√w_{j1}·e_{j1}`.
///
/// The output is exact up to a global phase when `x_{j1}` and `x_{j2}` are not
/// collinear with the origin.
pub fn recover_complex(oracle: &dyn IntensityOracle, opts: &RecoveryOptions) -> Result<Recovered> {
    opts.validate()?;
    let n = oracle.n();
    let w = query_coords(oracle, opts)?;
    let support = detect_support(&w, opts.zero_tol);
    let mut queries = n;
    let mut out = vec![Complex64::new(0.0, 0.0); n];

    match support[..] {
        [] => return Ok(Recovered { signal: Signal::new(out)?, support, anchors: None, queries }),
        [j1] => {
            out[j1 - 1] = Complex64::new(w[j1 - 1].sqrt(), 0.0);
            return Ok(Recovered { signal: Signal::new(out)?, support, anchors: None, queries });
        }
        _ => {}
    }

    let j1 = support[0];
    let candidates = if opts.retry_anchor_pairs { &support[1..] } else { &support[1..2] };
    let mut anchors = None;
    for &j2 in candidates {
        let z1 = oracle.intensity(&MeasurementVector::sum(j1, j2))?;
        let z2 = oracle.intensity(&MeasurementVector::diff_imag(j1, j2))?;
        queries += 2;
        match recover_anchors(w[j1 - 1], w[j2 - 1], z1, z2, opts) {
            Ok(a) => {
                anchors = Some(a.with_indices(j1, j2));
                break;
            }
            Err(Error::CollinearAnchors { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let Some(anchors) = anchors else {
        return Err(Error::CollinearAnchors { j1, j2: support[1] });
    };
    out[j1 - 1] = anchors.x1;
    out[anchors.j2 - 1] = anchors.x2;

    let sensors: Vec<usize> = support.iter().copied().filter(|&k| k != j1 && k != anchors.j2).collect();
    let solve = |&k: &usize| -> Result<Complex64> {
        let wk1 = oracle.intensity(&MeasurementVector::diff(j1, k))?;
        let wk2 = oracle.intensity(&MeasurementVector::diff(anchors.j2, k))?;
        recover_sensor(&anchors, w[k - 1], wk1, wk2, opts)
    };
    let located: Vec<Complex64> = if opts.parallel {
        sensors.par_iter().map(solve).collect::<Result<_>>()?
    } else {
        sensors.iter().map(solve).collect::<Result<_>>()?
    };
    queries += 2 * sensors.len();
    for (&k, z) in sensors.iter().zip(located) {
        out[k - 1] = z;
    }
    Ok(Recovered { signal: Signal::new(out)?, support, anchors: Some(anchors), queries })
}

/// Runs the pipeline matching the set's ensemble: the real algorithm for real
/// ensembles, the two-stage complex algorithm otherwise.
pub fn recover_from_measurements(set: &MeasurementSet, opts: &RecoveryOptions) -> Result<Recovered> {
    let oracle = SetOracle::new(set);
    match set.ensemble().kind() {
        EnsembleKind::RealFull | EnsembleKind::RealSparse => recover_real_adaptive(&oracle, opts),
        _ => recover_complex(&oracle, opts),
    }
}
