#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use procmine::classifier::{Kernel, ProcedureClassifier, TrainParams};
use procmine::corpus::{generate_corpus, load_annotations, write_corpus, AnnotationSet, CorpusSpec};
use procmine::features::{builtin_wordlist, FeatureConfig, FeatureVector};
use procmine::ingest::{parse_document, scrub_template, Document};
use procmine::linguistics::ImperativeLexicon;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn spec(seed: u64, n_docs: usize, n_lists: usize) -> CorpusSpec {
    CorpusSpec {
        seed,
        n_docs,
        n_lists,
        ..CorpusSpec::default()
    }
}

/// Writes a generated corpus to a temp dir and loads its annotations back.
pub fn corpus_on_disk(spec: &CorpusSpec) -> (tempfile::TempDir, AnnotationSet) {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&generate_corpus(spec).unwrap(), dir.path()).unwrap();
    let set = load_annotations(&dir.path().join("annotations.jsonl")).unwrap();
    (dir, set)
}

pub fn scrubbed(html: &str, url: &str) -> Document {
    scrub_template(&parse_document(html.as_bytes(), url).unwrap())
}

/// Default-config classifier trained on the seed-7 corpus.
pub fn seed7_classifier() -> ProcedureClassifier {
    let (_dir, set) = corpus_on_disk(&spec(7, 50, 200));
    let data = procmine::corpus::labeled_candidates(&set, FeatureConfig::default().context_k).unwrap();
    ProcedureClassifier::train(
        &data,
        &FeatureConfig::default(),
        &TrainParams::default(),
        builtin_wordlist(),
        ImperativeLexicon::builtin(),
    )
    .unwrap()
}

pub fn dense(xs: &[f64]) -> FeatureVector {
    FeatureVector::new(xs.iter().copied().enumerate().collect(), xs.len())
}

pub fn gram(points: &[Vec<f64>], kernel: &Kernel) -> DMatrix<f64> {
    let v: Vec<FeatureVector> = points.iter().map(|p| dense(p)).collect();
    DMatrix::from_fn(v.len(), v.len(), |i, j| kernel.eval(&v[i], &v[j]))
}

/// Optimum of the soft-margin SVM dual found by enumerating every
/// assignment of each multiplier to {0, C, free} and solving the
/// stationarity system on the free set.
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

pub fn dual_objective(k: &DMatrix<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub fn brute_force_dual(k: &DMatrix<f64>, y: &[f64], c: f64) -> DualSolution {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            // [Q_FF y_F; y_F^T 0] [a_F; b] = [1 - Q_FB a_B; -y_B^T a_B]
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|j| state[*j] == 1).map(|j| q[(i, j)] * c).sum::<f64>();
            }
            rhs[m] = -(0..n).filter(|j| state[*j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = a.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-9..=c + 1e-9).contains(&a))
            && alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() <= 1e-9;
        if !feasible {
            continue;
        }
        let obj = dual_objective(k, y, &alpha);
        if best.as_ref().is_none_or(|b| obj > b.0) {
            best = Some((obj, alpha));
        }
    }
    let (objective, alpha) = best.expect("alpha = 0 is always feasible");
    let g: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| alpha[j] * y[j] * k[(i, j)]).sum())
        .collect();
    let eps = 1e-7;
    let free: Vec<usize> = (0..n).filter(|&i| alpha[i] > eps && alpha[i] < c - eps).collect();
    let bias = if !free.is_empty() {
        free.iter().map(|&i| y[i] - g[i]).sum::<f64>() / free.len() as f64
    } else {
        // y_i (g_i + b) >= 1 at zero, <= 1 at C
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let at_zero = alpha[i] <= eps;
            let bound = y[i] - g[i];
            if (at_zero && y[i] > 0.0) || (!at_zero && y[i] < 0.0) {
                lo = lo.max(bound);
            } else {
                hi = hi.min(bound);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (lo + hi) / 2.0,
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    };
    DualSolution { alpha, bias, objective }
}
