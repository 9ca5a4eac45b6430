//! Complex signals, their global-phase canonical form, and phase-invariant
//! reconstruction errors.

use std::ops::Index;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{seeded, Rng};
use crate::{Error, Result};

/// A finite complex vector of length `n ≥ 1`. Real signals are the case where
/// every imaginary part is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalJson", into = "SignalJson")]
pub struct Signal {
    entries: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct SignalJson {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<SignalJson> for Signal {
    type Error = Error;

    fn try_from(json: SignalJson) -> Result<Self> {
        if json.re.len() != json.n {
            return Err(Error::DimensionMismatch { expected: json.n, got: json.re.len() });
        }
        if json.im.len() != json.n {
            return Err(Error::DimensionMismatch { expected: json.n, got: json.im.len() });
        }
        Signal::new(json.re.iter().zip(&json.im).map(|(&re, &im)| Complex64::new(re, im)).collect())
    }
}

impl From<Signal> for SignalJson {
    fn from(signal: Signal) -> Self {
        SignalJson {
            n: signal.len(),
            re: signal.entries.iter().map(|z| z.re).collect(),
            im: signal.entries.iter().map(|z| z.im).collect(),
        }
    }
}

impl Signal {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(index) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Signal { entries })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Signal::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Signal::new(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    /// Entry at 1-based index `k`.
    pub fn at(&self, k: usize) -> Complex64 {
        self.entries[k - 1]
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    /// Number of entries that are exactly nonzero.
    pub fn sparsity(&self) -> usize {
        self.entries.iter().filter(|z| **z != Complex64::new(0.0, 0.0)).count()
    }

    pub fn conj(&self) -> Signal {
        Signal { entries: self.entries.iter().map(|z| z.conj()).collect() }
    }

    pub fn neg(&self) -> Signal {
        Signal { entries: self.entries.iter().map(|z| -z).collect() }
    }

    /// Multiplies every entry by `e^{iα}`.
    pub fn rotate(&self, alpha: f64) -> Signal {
        let u = Complex64::from_polar(1.0, alpha);
        Signal { entries: self.entries.iter().map(|z| z * u).collect() }
    }

    /// Rotates the signal so its first nonzero entry is positive real. The zero
    /// signal is returned unchanged.
    pub fn canonicalize(&self) -> Signal {
        self.canonicalize_with_tol(0.0)
    }

    /// As [`Signal::canonicalize`], treating entries with `|z| ≤ tol` as zero
    /// when looking for the pivot.
    pub fn canonicalize_with_tol(&self, tol: f64) -> Signal {
        let pivot = self.entries.iter().position(|z| {
            let r = z.norm();
            r > tol && r > 0.0
        });
        let Some(idx) = pivot else {
            return self.clone();
        };
        let p = self.entries[idx];
        let u = p.conj() / p.norm();
        let mut entries: Vec<Complex64> = self.entries.iter().map(|z| z * u).collect();
        // pivot set exactly, so a second pass multiplies by exactly 1
        entries[idx] = Complex64::new(p.norm(), 0.0);
        Signal { entries }
    }
}

impl Index<usize> for Signal {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.entries[i]
    }
}

/// `⟨a, b⟩ = Σ conj(a_j)·b_j`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(u, v)| u.conj() * v).sum()
}

/// `δ = min_θ ‖x − e^{iθ}·x̂‖ / ‖x‖`.
///
/// The minimizing rotation makes `⟨e^{iθ}x̂, x⟩` real and nonnegative, i.e.
/// `θ = arg⟨x̂, x⟩`. The residual is then evaluated directly rather than through
/// `‖x‖² + ‖x̂‖² − 2|⟨x̂, x⟩|`, which loses half the digits near zero.
pub fn rel_error_up_to_phase(x: &Signal, xhat: &Signal) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: xhat.len() });
    }
    let xnorm = x.norm();
    if xnorm == 0.0 {
        return Err(Error::ZeroReference);
    }
    let c = inner(xhat.entries(), x.entries());
    let u = if c.norm() > 0.0 { c / c.norm() } else { Complex64::new(1.0, 0.0) };
    let resid = x
        .entries()
        .iter()
        .zip(xhat.entries())
        .map(|(a, b)| (a - u * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(resid / xnorm)
}

/// Error up to rotation and complex conjugation.
pub fn rel_error_up_to_phase_and_conj(x: &Signal, xhat: &Signal) -> Result<f64> {
    let direct = rel_error_up_to_phase(x, xhat)?;
    let reflected = rel_error_up_to_phase(x, &xhat.conj())?;
    Ok(direct.min(reflected))
}

/// Entries with real and imaginary parts i.i.d. uniform on `[−1/2, 1/2]`.
pub fn random_signal(n: usize, seed: u64) -> Result<Signal> {
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    let mut rng = seeded(seed);
    Signal::new((0..n).map(|_| sample_entry(&mut rng)).collect())
}

/// Exactly `s` nonzero entries at uniformly chosen positions.
pub fn random_sparse_signal(n: usize, s: usize, seed: u64) -> Result<Signal> {
    if s < 1 || s > n {
        return Err(Error::BadSparsity { n, s });
    }
    let mut rng = seeded(seed);
    let mut entries = vec![Complex64::new(0.0, 0.0); n];
    let mut positions = sample(&mut rng, n, s).into_vec();
    positions.sort_unstable();
    for i in positions {
        let mut z = sample_entry(&mut rng);
        while z == Complex64::new(0.0, 0.0) {
            z = sample_entry(&mut rng);
        }
        entries[i] = z;
    }
    Signal::new(entries)
}

fn sample_entry(rng: &mut Rng) -> Complex64 {
    Complex64::new(rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5))
}
