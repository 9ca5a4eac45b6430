//! Measurement vectors, the deterministic ensembles used by the closed-form
//! recovery, Gaussian ensembles for the baselines, and the forward maps.
//!
//! The inner product is `⟨φ, x⟩ = Σ conj(φ_j)·x_j`. Structured vectors are
//! evaluated by index arithmetic and are never materialized, so measuring a
//! structured ensemble costs O(1) per vector.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::signal::{inner, Signal};
use crate::{Error, Result};

/// One measurement vector. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum MeasurementVector {
    /// `e_k`
    Coord { k: usize },
    /// `e_j − e_k`, stored with `j < k`
    Diff { j: usize, k: usize },
    /// `e_j + e_k`
    Sum { j: usize, k: usize },
    /// `e_j − i·e_k`
    DiffImag { j: usize, k: usize },
    Dense(DenseVector),
}

/// A materialized measurement vector; serialized as `{"re": [...], "im": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseJson", into = "DenseJson")]
pub struct DenseVector(pub Vec<Complex64>);

#[derive(Serialize, Deserialize)]
struct DenseJson {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<DenseJson> for DenseVector {
    type Error = Error;

    fn try_from(json: DenseJson) -> Result<Self> {
        if json.re.len() != json.im.len() {
            return Err(Error::DimensionMismatch { expected: json.re.len(), got: json.im.len() });
        }
        Ok(DenseVector(json.re.into_iter().zip(json.im).map(|(re, im)| Complex64::new(re, im)).collect()))
    }
}

impl From<DenseVector> for DenseJson {
    fn from(v: DenseVector) -> Self {
        DenseJson { re: v.0.iter().map(|z| z.re).collect(), im: v.0.iter().map(|z| z.im).collect() }
    }
}

impl MeasurementVector {
    pub fn coord(k: usize) -> Self {
        MeasurementVector::Coord { k }
    }

    /// `e_j − e_k`; the pair is reordered so that `j < k`. The intensity is
    /// symmetric in the pair.
    pub fn diff(j: usize, k: usize) -> Self {
        MeasurementVector::Diff { j: j.min(k), k: j.max(k) }
    }

    pub fn sum(j: usize, k: usize) -> Self {
        MeasurementVector::Sum { j, k }
    }

    pub fn diff_imag(j: usize, k: usize) -> Self {
        MeasurementVector::DiffImag { j, k }
    }

    pub fn is_structured(&self) -> bool {
        !matches!(self, MeasurementVector::Dense(_))
    }

    /// Checks index ranges and pair constraints against dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let in_range = |i: usize| (1..=n).contains(&i);
        match *self {
            MeasurementVector::Coord { k } if !in_range(k) => {
                Err(Error::InvalidVector(format!("coord index {k} outside 1..={n}")))
            }
            MeasurementVector::Diff { j, k } if !(in_range(j) && in_range(k) && j < k) => {
                Err(Error::InvalidVector(format!("diff ({j},{k}) needs 1 <= j < k <= {n}")))
            }
            MeasurementVector::Sum { j, k } | MeasurementVector::DiffImag { j, k }
                if !(in_range(j) && in_range(k) && j != k) =>
            {
                Err(Error::InvalidVector(format!("pair ({j},{k}) needs distinct indices in 1..={n}")))
            }
            MeasurementVector::Dense(ref v) if v.0.len() != n => {
                Err(Error::DimensionMismatch { expected: n, got: v.0.len() })
            }
            _ => Ok(()),
        }
    }

    /// `⟨φ, x⟩`. Structured variants assume indices were validated against `x`.
    pub fn inner(&self, x: &[Complex64]) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        match self {
            MeasurementVector::Coord { k } => x[k - 1],
            MeasurementVector::Diff { j, k } => x[j - 1] - x[k - 1],
            MeasurementVector::Sum { j, k } => x[j - 1] + x[k - 1],
            // conj(−i) = i
            MeasurementVector::DiffImag { j, k } => x[j - 1] + i * x[k - 1],
            MeasurementVector::Dense(v) => inner(&v.0, x),
        }
    }

    /// `|⟨φ, x⟩|²`
    pub fn intensity(&self, x: &[Complex64]) -> f64 {
        self.inner(x).norm_sqr()
    }

    pub fn to_dense(&self, n: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        let one = Complex64::new(1.0, 0.0);
        match self {
            MeasurementVector::Coord { k } => v[k - 1] = one,
            MeasurementVector::Diff { j, k } => {
                v[j - 1] = one;
                v[k - 1] = -one;
            }
            MeasurementVector::Sum { j, k } => {
                v[j - 1] = one;
                v[k - 1] = one;
            }
            MeasurementVector::DiffImag { j, k } => {
                v[j - 1] = one;
                v[k - 1] = Complex64::new(0.0, -1.0);
            }
            MeasurementVector::Dense(d) => v.copy_from_slice(&d.0),
        }
        v
    }
}

impl fmt::Display for MeasurementVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasurementVector::Coord { k } => write!(f, "e{k}"),
            MeasurementVector::Diff { j, k } => write!(f, "e{j}-e{k}"),
            MeasurementVector::Sum { j, k } => write!(f, "e{j}+e{k}"),
            MeasurementVector::DiffImag { j, k } => write!(f, "e{j}-i*e{k}"),
            MeasurementVector::Dense(v) => write!(f, "dense[{}]", v.0.len()),
        }
    }
}

/// Which construction produced an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    RealFull,
    RealSparse,
    ComplexFull,
    ComplexSparseStage,
    Gaussian,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleJson")]
pub struct Ensemble {
    n: usize,
    kind: EnsembleKind,
    vectors: Vec<MeasurementVector>,
}

#[derive(Deserialize)]
struct EnsembleJson {
    n: usize,
    kind: EnsembleKind,
    vectors: Vec<MeasurementVector>,
}

impl TryFrom<EnsembleJson> for Ensemble {
    type Error = Error;

    fn try_from(json: EnsembleJson) -> Result<Self> {
        Ensemble::new(json.n, json.kind, json.vectors)
    }
}

impl Ensemble {
    pub fn new(n: usize, kind: EnsembleKind, vectors: Vec<MeasurementVector>) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionTooSmall { n, min: 1 });
        }
        if vectors.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        for v in &vectors {
            v.validate(n)?;
        }
        Ok(Ensemble { n, kind, vectors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn vectors(&self) -> &[MeasurementVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_structured(&self) -> bool {
        self.vectors.iter().all(MeasurementVector::is_structured)
    }
}

fn coords(n: usize) -> impl Iterator<Item = MeasurementVector> {
    (1..=n).map(MeasurementVector::coord)
}

/// `{e_i} ∪ {e_1 − e_j}`: `2n − 1` vectors.
pub fn build_real_full(n: usize) -> Result<Ensemble> {
    let vectors = coords(n).chain((2..=n).map(|j| MeasurementVector::diff(1, j))).collect();
    Ensemble::new(n, EnsembleKind::RealFull, vectors)
}

/// The ensemble of a two-round real acquisition on `support`: the `n` coordinate
/// vectors and `e_{j1} − e_{jk}` for `k ≥ 2`, `n + s − 1` vectors in total.
pub fn build_real_sparse(n: usize, support: &[usize]) -> Result<Ensemble> {
    check_support(n, support, 1)?;
    let j1 = support[0];
    let vectors = coords(n).chain(support[1..].iter().map(|&jk| MeasurementVector::diff(j1, jk))).collect();
    Ensemble::new(n, EnsembleKind::RealSparse, vectors)
}

/// `{e_i} ∪ {e_1 + e_2, e_1 − i·e_2} ∪ {e_1 − e_k}_{k≥3} ∪ {e_2 − e_k}_{k≥3}`:
/// `3n − 2` vectors. The layout is fixed; [`complex_full_position`] indexes it.
pub fn build_complex_full(n: usize) -> Result<Ensemble> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    let vectors = coords(n)
        .chain([MeasurementVector::sum(1, 2), MeasurementVector::diff_imag(1, 2)])
        .chain((3..=n).map(|k| MeasurementVector::diff(1, k)))
        .chain((3..=n).map(|k| MeasurementVector::diff(2, k)))
        .collect();
    Ensemble::new(n, EnsembleKind::ComplexFull, vectors)
}

/// Position of a structured vector inside the [`build_complex_full`] layout.
pub fn complex_full_position(n: usize, v: &MeasurementVector) -> Option<usize> {
    match *v {
        MeasurementVector::Coord { k } if (1..=n).contains(&k) => Some(k - 1),
        MeasurementVector::Sum { j: 1, k: 2 } => Some(n),
        MeasurementVector::DiffImag { j: 1, k: 2 } => Some(n + 1),
        MeasurementVector::Diff { j: 1, k } if (3..=n).contains(&k) => Some(n + 2 + (k - 3)),
        MeasurementVector::Diff { j: 2, k } if (3..=n).contains(&k) => Some(2 * n + (k - 3)),
        _ => None,
    }
}

/// Second-round vectors for a support `j1, …, js` (`s ≥ 2`): the anchor pair
/// `e_{j1} + e_{j2}`, `e_{j1} − i·e_{j2}`, then `e_{j1} − e_{jk}` and
/// `e_{j2} − e_{jk}` for each `k ≥ 3`. `2s − 2` vectors.
pub fn build_complex_stage2(n: usize, support: &[usize]) -> Result<Ensemble> {
    check_support(n, support, 2)?;
    Ensemble::new(n, EnsembleKind::ComplexSparseStage, stage2_vectors(support))
}

/// Coordinate vectors followed by [`build_complex_stage2`]: `n + 2s − 2` vectors.
pub fn build_complex_sparse(n: usize, support: &[usize]) -> Result<Ensemble> {
    check_support(n, support, 2)?;
    let vectors = coords(n).chain(stage2_vectors(support)).collect();
    Ensemble::new(n, EnsembleKind::ComplexSparseStage, vectors)
}

fn stage2_vectors(support: &[usize]) -> Vec<MeasurementVector> {
    let (j1, j2) = (support[0], support[1]);
    let mut vectors = vec![MeasurementVector::sum(j1, j2), MeasurementVector::diff_imag(j1, j2)];
    for &jk in &support[2..] {
        vectors.push(MeasurementVector::diff(j1, jk));
        vectors.push(MeasurementVector::diff(j2, jk));
    }
    vectors
}

fn check_support(n: usize, support: &[usize], min: usize) -> Result<()> {
    if support.len() < min {
        return Err(Error::BadSupport(format!("need at least {min} indices, got {}", support.len())));
    }
    let mut seen = vec![false; n + 1];
    for &j in support {
        if !(1..=n).contains(&j) {
            return Err(Error::BadSupport(format!("index {j} outside 1..={n}")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::BadSupport(format!("index {j} repeated")));
        }
    }
    Ok(())
}

/// `m` dense vectors with i.i.d. entries whose real and imaginary parts are
/// `N(0, 1/2)`, so `E|φ_j|² = 1`.
pub fn build_gaussian(n: usize, m: usize, seed: u64) -> Result<Ensemble> {
    let mut rng = seeded(seed);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid std-dev");
    let vectors = (0..m)
        .map(|_| {
            let v = (0..n).map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect();
            MeasurementVector::Dense(DenseVector(v))
        })
        .collect();
    Ensemble::new(n, EnsembleKind::Gaussian, vectors)
}

/// Intensity values bound to the ensemble that produced them.
///
/// With `sigma > 0` values may be negative; consumers clamp at zero before
/// taking square roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasurementSetJson")]
pub struct MeasurementSet {
    ensemble: Arc<Ensemble>,
    values: Vec<f64>,
    sigma: f64,
}

#[derive(Deserialize)]
struct MeasurementSetJson {
    ensemble: Ensemble,
    values: Vec<f64>,
    sigma: f64,
}

impl TryFrom<MeasurementSetJson> for MeasurementSet {
    type Error = Error;

    fn try_from(json: MeasurementSetJson) -> Result<Self> {
        MeasurementSet::new(Arc::new(json.ensemble), json.values, json.sigma)
    }
}

impl MeasurementSet {
    pub fn new(ensemble: Arc<Ensemble>, values: Vec<f64>, sigma: f64) -> Result<Self> {
        if values.len() != ensemble.len() {
            return Err(Error::DimensionMismatch { expected: ensemble.len(), got: values.len() });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidOptions(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidOptions("measurement values must be finite".into()));
        }
        if sigma == 0.0 && values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidOptions("noiseless intensities must be nonnegative".into()));
        }
        Ok(MeasurementSet { ensemble, values, sigma })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn ensemble_arc(&self) -> &Arc<Ensemble> {
        &self.ensemble
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Count of values below zero (possible only after noise).
    pub fn negative_count(&self) -> usize {
        self.values.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn has_negative(&self) -> bool {
        self.negative_count() > 0
    }
}

fn check_dims(ensemble: &Ensemble, x: &Signal) -> Result<()> {
    if ensemble.n() != x.len() {
        return Err(Error::DimensionMismatch { expected: ensemble.n(), got: x.len() });
    }
    Ok(())
}

/// The intensity map `A_Φ(x)_m = |⟨φ_m, x⟩|²`.
pub fn apply_intensity(ensemble: &Arc<Ensemble>, x: &Signal) -> Result<MeasurementSet> {
    check_dims(ensemble, x)?;
    let values = ensemble.vectors().iter().map(|v| v.intensity(x.entries())).collect();
    Ok(MeasurementSet { ensemble: Arc::clone(ensemble), values, sigma: 0.0 })
}

/// The complex-valued map `B_Φ(x)_m = ⟨φ_m, x⟩²`.
pub fn apply_complex_map(ensemble: &Ensemble, x: &Signal) -> Result<Vec<Complex64>> {
    check_dims(ensemble, x)?;
    Ok(ensemble.vectors().iter().map(|v| v.inner(x.entries()).powi(2)).collect())
}

/// Adds independent real `N(0, σ²)` noise to every value. Negative results are
/// kept. `σ = 0` returns the input unchanged.
pub fn add_noise(b: &MeasurementSet, sigma: f64, seed: u64) -> Result<MeasurementSet> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidOptions(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(b.clone());
    }
    let mut rng = seeded(seed);
    let normal = Normal::new(0.0, sigma).expect("valid std-dev");
    let values = b.values.iter().map(|v| v + normal.sample(&mut rng)).collect();
    Ok(MeasurementSet { ensemble: Arc::clone(&b.ensemble), values, sigma })
}
