//! Sources of intensity values for the recovery pipelines.
//!
//! The closed-form algorithms ask for `|⟨φ, x⟩|²` one structured vector at a
//! time. That covers both acquisition models: a two-round adaptive
//! acquisition answers queries on demand ([`SignalOracle`], [`NoisyOracle`]),
//! while a fixed ensemble measured up front answers from its stored values
//! ([`SetOracle`]).

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand_distr::{Distribution, StandardNormal};

use crate::ensemble::{complex_full_position, EnsembleKind, MeasurementSet, MeasurementVector};
use crate::rng::{derive_seed, seeded};
use crate::signal::Signal;
use crate::{Error, Result};

/// Answers intensity queries for structured measurement vectors. Stage-two
/// solves may query from several threads at once.
pub trait IntensityOracle: Sync {
    /// Ambient dimension `n`.
    fn n(&self) -> usize;

    fn intensity(&self, v: &MeasurementVector) -> Result<f64>;
}

/// Measures a known signal exactly, counting queries.
#[derive(Debug)]
pub struct SignalOracle<'a> {
    x: &'a Signal,
    queries: AtomicUsize,
}

impl<'a> SignalOracle<'a> {
    pub fn new(x: &'a Signal) -> Self {
        SignalOracle { x, queries: AtomicUsize::new(0) }
    }

    pub fn queries(&self) -> usize {
        self.queries.load(Ordering::Relaxed)
    }
}

impl IntensityOracle for SignalOracle<'_> {
    fn n(&self) -> usize {
        self.x.len()
    }

    fn intensity(&self, v: &MeasurementVector) -> Result<f64> {
        v.validate(self.x.len())?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(v.intensity(self.x.entries()))
    }
}

/// Measures a known signal and adds real `N(0, σ²)` noise. The perturbation of
/// each vector is a function of `(seed, vector)` alone, so repeated or
/// reordered queries see the same value.
#[derive(Debug)]
pub struct NoisyOracle<'a> {
    x: &'a Signal,
    sigma: f64,
    seed: u64,
}

impl<'a> NoisyOracle<'a> {
    pub fn new(x: &'a Signal, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidOptions(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(NoisyOracle { x, sigma, seed })
    }
}

impl IntensityOracle for NoisyOracle<'_> {
    fn n(&self) -> usize {
        self.x.len()
    }

    fn intensity(&self, v: &MeasurementVector) -> Result<f64> {
        v.validate(self.x.len())?;
        let key = StructKey::of(v).ok_or(Error::UnstructuredVector)?;
        let clean = v.intensity(self.x.entries());
        if self.sigma == 0.0 {
            return Ok(clean);
        }
        let (tag, j, k) = key.words();
        let mut rng = seeded(derive_seed(&[self.seed, tag, j, k]));
        let eps: f64 = StandardNormal.sample(&mut rng);
        Ok(clean + self.sigma * eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum StructKey {
    Coord(usize),
    Diff(usize, usize),
    Sum(usize, usize),
    DiffImag(usize, usize),
}

impl StructKey {
    fn of(v: &MeasurementVector) -> Option<Self> {
        Some(match *v {
            MeasurementVector::Coord { k } => StructKey::Coord(k),
            MeasurementVector::Diff { j, k } => StructKey::Diff(j, k),
            MeasurementVector::Sum { j, k } => StructKey::Sum(j, k),
            MeasurementVector::DiffImag { j, k } => StructKey::DiffImag(j, k),
            MeasurementVector::Dense(_) => return None,
        })
    }

    fn words(self) -> (u64, u64, u64) {
        match self {
            StructKey::Coord(k) => (0, k as u64, 0),
            StructKey::Diff(j, k) => (1, j as u64, k as u64),
            StructKey::Sum(j, k) => (2, j as u64, k as u64),
            StructKey::DiffImag(j, k) => (3, j as u64, k as u64),
        }
    }
}

/// Answers from a measurement set taken up front. The fixed real and complex
/// layouts are addressed arithmetically; other ensembles go through a table of
/// their structured vectors. Asking for a vector the set does not contain is a
/// [`Error::MissingMeasurement`].
#[derive(Debug)]
pub struct SetOracle<'a> {
    set: &'a MeasurementSet,
    table: Option<HashMap<StructKey, usize>>,
}

impl<'a> SetOracle<'a> {
    pub fn new(set: &'a MeasurementSet) -> Self {
        let mut oracle = SetOracle { set, table: None };
        let fixed_layout = matches!(set.ensemble().kind(), EnsembleKind::RealFull | EnsembleKind::ComplexFull)
            && set.ensemble().vectors().iter().enumerate().all(|(i, v)| oracle.layout_position(v) == Some(i));
        if !fixed_layout {
            oracle.table = Some(
                set.ensemble()
                    .vectors()
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| StructKey::of(v).map(|key| (key, i)))
                    .collect(),
            );
        }
        oracle
    }

    fn layout_position(&self, v: &MeasurementVector) -> Option<usize> {
        let n = self.set.ensemble().n();
        match self.set.ensemble().kind() {
            EnsembleKind::ComplexFull => complex_full_position(n, v),
            EnsembleKind::RealFull => match *v {
                MeasurementVector::Coord { k } if (1..=n).contains(&k) => Some(k - 1),
                MeasurementVector::Diff { j: 1, k } if (2..=n).contains(&k) => Some(n + k - 2),
                _ => None,
            },
            _ => None,
        }
    }

    fn position(&self, v: &MeasurementVector) -> Option<usize> {
        match &self.table {
            Some(table) => table.get(&StructKey::of(v)?).copied(),
            None => self.layout_position(v),
        }
    }
}

impl IntensityOracle for SetOracle<'_> {
    fn n(&self) -> usize {
        self.set.ensemble().n()
    }

    fn intensity(&self, v: &MeasurementVector) -> Result<f64> {
        self.position(v)
            .map(|i| self.set.values()[i])
            .ok_or_else(|| Error::MissingMeasurement(v.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ensemble::{apply_intensity, build_complex_full, build_complex_sparse, build_real_full};
    use crate::signal::random_signal;

    #[test]
    fn set_oracle_matches_direct_measurement() {
        let x = random_signal(6, 1).unwrap();
        let direct = SignalOracle::new(&x);
        for e in [build_real_full(6).unwrap(), build_complex_full(6).unwrap(), build_complex_sparse(6, &[2, 3, 6]).unwrap()] {
            let set = apply_intensity(&Arc::new(e), &x).unwrap();
            let oracle = SetOracle::new(&set);
            for v in set.ensemble().vectors() {
                assert_eq!(oracle.intensity(v).unwrap(), direct.intensity(v).unwrap());
            }
            assert!(matches!(
                oracle.intensity(&MeasurementVector::diff(4, 5)),
                Err(Error::MissingMeasurement(_))
            ));
        }
    }

    #[test]
    fn mislabelled_full_ensemble_falls_back_to_table() {
        use crate::ensemble::Ensemble;
        let x = random_signal(3, 4).unwrap();
        let mut vectors = build_complex_full(3).unwrap().vectors().to_vec();
        vectors.reverse();
        let e = Arc::new(Ensemble::new(3, EnsembleKind::ComplexFull, vectors).unwrap());
        let set = apply_intensity(&e, &x).unwrap();
        let oracle = SetOracle::new(&set);
        for v in e.vectors() {
            assert_eq!(oracle.intensity(v).unwrap(), v.intensity(x.entries()));
        }
    }

    #[test]
    fn signal_oracle_counts() {
        let x = random_signal(3, 1).unwrap();
        let o = SignalOracle::new(&x);
        o.intensity(&MeasurementVector::coord(1)).unwrap();
        o.intensity(&MeasurementVector::diff(1, 3)).unwrap();
        assert_eq!(o.queries(), 2);
        assert!(o.intensity(&MeasurementVector::coord(4)).is_err());
    }

    #[test]
    fn noisy_oracle_is_stable_per_vector() {
        let x = random_signal(4, 2).unwrap();
        let o = NoisyOracle::new(&x, 0.1, 9).unwrap();
        let v = MeasurementVector::diff(1, 3);
        let a = o.intensity(&v).unwrap();
        assert_eq!(a, o.intensity(&v).unwrap());
        assert_ne!(a, v.intensity(x.entries()));
        assert_ne!(a, o.intensity(&MeasurementVector::diff(1, 4)).unwrap());
        let clean = NoisyOracle::new(&x, 0.0, 9).unwrap();
        assert_eq!(clean.intensity(&v).unwrap(), v.intensity(x.entries()));
        assert!(NoisyOracle::new(&x, -1.0, 0).is_err());
    }
}
