//! Paired bootstrap significance test on overall F1, resampling notes.
//!
//! Each repetition draws `N` notes with replacement from the `N` gold notes,
//! sums both systems' cached per-note counts over the draw and records
//! `F1_A - F1_B`. Repetition `i` reads its own ChaCha stream keyed by
//! `(seed, i)`, so results do not depend on how repetitions are scheduled.
//!
//! The two-sided p-value is
//! `min(1, 2 * min(1 + #{d <= 0}, 1 + #{d >= 0}) / (reps + 1))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::schema::AnnotationSchema;
use crate::scoring::{round6, score_corpus, Counts, ScoringError};
use crate::standoff::Corpus;

pub const DEFAULT_REPETITIONS: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 20_220_614;

#[derive(Debug, Error, PartialEq)]
pub enum SignificanceError {
    #[error("gold corpus is empty")]
    EmptyCorpus,
    #[error("bootstrap needs at least one repetition")]
    ZeroRepetitions,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub repetitions: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            repetitions: DEFAULT_REPETITIONS,
            seed: DEFAULT_SEED,
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub notes: usize,
    #[serde(serialize_with = "round6")]
    pub f1_a: f64,
    #[serde(serialize_with = "round6")]
    pub f1_b: f64,
    #[serde(serialize_with = "round6")]
    pub observed_delta: f64,
    pub p_value: f64,
    /// `p_value == p_numerator / p_denominator` exactly.
    pub p_numerator: u64,
    pub p_denominator: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub alpha: f64,
    pub significant: bool,
}

impl BootstrapResult {
    pub fn verdict(&self) -> &'static str {
        if self.significant {
            "statistically different"
        } else {
            "not statistically different"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOutcome {
    pub result: BootstrapResult,
    /// `F1_A - F1_B` for every repetition, in repetition order.
    pub deltas: Vec<f64>,
}

/// Note indices drawn by repetition `repetition`.
pub fn resample_indices(seed: u64, repetition: usize, notes: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repetition as u64);
    (0..notes).map(|_| rng.gen_range(0..notes)).collect()
}

/// Runs the bootstrap over cached per-note `(system A, system B)` totals.
pub fn bootstrap_from_counts(
    notes: &[(Counts, Counts)],
    cfg: &BootstrapConfig,
) -> Result<BootstrapOutcome, SignificanceError> {
    if notes.is_empty() {
        return Err(SignificanceError::EmptyCorpus);
    }
    if cfg.repetitions == 0 {
        return Err(SignificanceError::ZeroRepetitions);
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(SignificanceError::InvalidAlpha(cfg.alpha));
    }
    let (total_a, total_b) = notes
        .iter()
        .fold((Counts::default(), Counts::default()), |(a, b), (x, y)| {
            (a + *x, b + *y)
        });
    let f1_a = total_a.f1();
    let f1_b = total_b.f1();

    let n = notes.len();
    let deltas: Vec<f64> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut a = Counts::default();
            let mut b = Counts::default();
            for i in resample_indices(cfg.seed, rep, n) {
                a += notes[i].0;
                b += notes[i].1;
            }
            a.f1() - b.f1()
        })
        .collect();

    let at_most_zero = deltas.iter().filter(|d| **d <= 0.0).count() as u64;
    let at_least_zero = deltas.iter().filter(|d| **d >= 0.0).count() as u64;
    let denominator = cfg.repetitions as u64 + 1;
    let numerator = (2 * (1 + at_most_zero.min(at_least_zero))).min(denominator);
    let p_value = numerator as f64 / denominator as f64;

    Ok(BootstrapOutcome {
        result: BootstrapResult {
            notes: n,
            f1_a,
            f1_b,
            observed_delta: f1_a - f1_b,
            p_value,
            p_numerator: numerator,
            p_denominator: denominator,
            repetitions: cfg.repetitions,
            seed: cfg.seed,
            alpha: cfg.alpha,
            significant: p_value < cfg.alpha,
        },
        deltas,
    })
}

/// Compares two systems' predictions on the same gold notes.
pub fn paired_bootstrap(
    gold: &Corpus,
    pred_a: &Corpus,
    pred_b: &Corpus,
    schema: &AnnotationSchema,
    cfg: &BootstrapConfig,
) -> Result<BootstrapOutcome, SignificanceError> {
    if gold.is_empty() {
        return Err(SignificanceError::EmptyCorpus);
    }
    let a = score_corpus(gold, pred_a, schema)?;
    let b = score_corpus(gold, pred_b, schema)?;
    let notes: Vec<(Counts, Counts)> = gold
        .doc_ids()
        .map(|id| (a.documents[id].counts.total(), b.documents[id].counts.total()))
        .collect();
    bootstrap_from_counts(&notes, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(reps: usize) -> BootstrapConfig {
        BootstrapConfig {
            repetitions: reps,
            ..Default::default()
        }
    }

    #[test]
    fn identical_systems() {
        let notes = vec![(Counts::new(3, 1, 2), Counts::new(3, 1, 2)); 7];
        let out = bootstrap_from_counts(&notes, &cfg(500)).unwrap();
        assert_eq!(out.result.observed_delta, 0.0);
        assert_eq!(out.result.p_value, 1.0);
        assert!(!out.result.significant);
    }

    #[test]
    fn dominant_system() {
        let notes = vec![(Counts::new(2, 0, 0), Counts::new(0, 2, 0)); 20];
        let out = bootstrap_from_counts(&notes, &cfg(999)).unwrap();
        assert_eq!((out.result.p_numerator, out.result.p_denominator), (2, 1000));
        assert!(out.result.significant);
        assert!(out.deltas.iter().all(|d| *d == 1.0));
    }

    #[test]
    fn streams_are_keyed_by_repetition() {
        assert_eq!(resample_indices(7, 3, 50), resample_indices(7, 3, 50));
        assert_ne!(resample_indices(7, 3, 50), resample_indices(7, 4, 50));
        assert_ne!(resample_indices(7, 3, 50), resample_indices(8, 3, 50));
        assert!(resample_indices(1, 0, 5).iter().all(|i| *i < 5));
    }

    #[test]
    fn input_errors() {
        assert_eq!(
            bootstrap_from_counts(&[], &cfg(10)).unwrap_err(),
            SignificanceError::EmptyCorpus
        );
        let notes = vec![(Counts::new(1, 0, 0), Counts::new(1, 0, 0))];
        assert_eq!(
            bootstrap_from_counts(&notes, &cfg(0)).unwrap_err(),
            SignificanceError::ZeroRepetitions
        );
        let bad = BootstrapConfig {
            alpha: 1.5,
            ..cfg(10)
        };
        assert!(matches!(
            bootstrap_from_counts(&notes, &bad),
            Err(SignificanceError::InvalidAlpha(_))
        ));
    }
}
