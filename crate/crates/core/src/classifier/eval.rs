use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, TrainParams};
use crate::error::{Error, Result};
use crate::features::{build_vocabulary, featurize, FeatureConfig, Vocabulary};
use crate::ingest::ListCandidate;
use crate::linguistics::ImperativeLexicon;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn add(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    pub fold_accuracies: Vec<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_confusion(confusion: Confusion, fold_accuracies: Vec<f64>) -> Self {
        let c = confusion;
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            accuracy: ratio(c.tp + c.tn, c.total()),
            precision,
            recall,
            f1,
            confusion,
            fold_accuracies,
        }
    }

    /// Report over `(truth, predicted)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Confusion::default();
        for (t, p) in pairs {
            c.add(t, p);
        }
        Self::from_confusion(c, Vec::new())
    }
}

/// Stratified fold assignment: each class is shuffled with `seed` and dealt
/// round-robin. Returns the test indices of every fold.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds.max(1)];
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[k % folds.max(1)].push(i);
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

/// Cross-validation output with the per-fold vocabularies kept for inspection.
#[derive(Debug, Clone)]
pub struct CvRun {
    pub report: EvalReport,
    pub folds: Vec<Vec<usize>>,
    pub vocabularies: Vec<Vocabulary>,
}

pub fn cross_validate(
    data: &[(ListCandidate, bool)],
    cfg: &FeatureConfig,
    params: &TrainParams,
    folds: usize,
    wordlist: &BTreeSet<String>,
    lex: &ImperativeLexicon,
) -> Result<EvalReport> {
    cross_validate_detailed(data, cfg, params, folds, wordlist, lex).map(|r| r.report)
}

/// Stratified k-fold cross-validation; the vocabulary of each fold is built
/// from its training split only. `params.seed` drives the fold assignment.
pub fn cross_validate_detailed(
    data: &[(ListCandidate, bool)],
    cfg: &FeatureConfig,
    params: &TrainParams,
    folds: usize,
    wordlist: &BTreeSet<String>,
    lex: &ImperativeLexicon,
) -> Result<CvRun> {
    cfg.validate()?;
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
    let pos = labels.iter().filter(|&&l| l).count();
    let fewest = pos.min(labels.len() - pos);
    if fewest < folds {
        return Err(Error::TooFewExamples {
            needed: folds,
            found: fewest,
        });
    }
    let assignment = stratified_folds(&labels, folds, params.seed);
    let results: Vec<Result<(Confusion, Vocabulary)>> = assignment
        .par_iter()
        .map(|test| {
            let held: BTreeSet<usize> = test.iter().copied().collect();
            let train_idx: Vec<usize> = (0..data.len()).filter(|i| !held.contains(i)).collect();
            let train_cands: Vec<ListCandidate> = train_idx.iter().map(|&i| data[i].0.clone()).collect();
            let vocab = build_vocabulary(&train_cands, cfg, wordlist)?;
            let train_set: Vec<_> = train_idx
                .iter()
                .map(|&i| (featurize(&data[i].0, &vocab, cfg, lex), data[i].1))
                .collect();
            let model = train(&train_set, params)?;
            let mut c = Confusion::default();
            for &i in test {
                let p = model.predict(&featurize(&data[i].0, &vocab, cfg, lex))?;
                c.add(data[i].1, p.is_procedure);
            }
            Ok((c, vocab))
        })
        .collect();

    let mut total = Confusion::default();
    let mut fold_acc = Vec::new();
    let mut vocabularies = Vec::new();
    for r in results {
        let (c, v) = r?;
        fold_acc.push(ratio(c.tp + c.tn, c.total()));
        total.tp += c.tp;
        total.fp += c.fp;
        total.tn += c.tn;
        total.fn_ += c.fn_;
        vocabularies.push(v);
    }
    Ok(CvRun {
        report: EvalReport::from_confusion(total, fold_acc),
        folds: assignment,
        vocabularies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified_and_partition() {
        let labels: Vec<bool> = (0..23).map(|i| i % 3 == 0).collect();
        let folds = stratified_folds(&labels, 5, 9);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        for f in &folds {
            let pos = f.iter().filter(|&&i| labels[i]).count();
            assert!((1..=2).contains(&pos));
        }
        assert_eq!(folds, stratified_folds(&labels, 5, 9));
    }

    #[test]
    fn report_metrics() {
        let r = EvalReport::from_pairs([(true, true), (true, false), (false, false), (false, true), (false, false)]);
        assert_eq!(r.confusion, Confusion { tp: 1, fp: 1, tn: 2, fn_: 1 });
        assert!((r.accuracy - 0.6).abs() < 1e-12);
        assert!((r.precision - 0.5).abs() < 1e-12);
        assert!((r.recall - 0.5).abs() < 1e-12);
        assert!((r.f1 - 0.5).abs() < 1e-12);
        let r = EvalReport::from_pairs([(false, false)]);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }
}
