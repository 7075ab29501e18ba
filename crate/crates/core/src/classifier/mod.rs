//! Max-margin list classifier with calibrated confidence.

mod bundle;
mod eval;
mod smo;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::ingest::ListCandidate;

pub use bundle::ProcedureClassifier;
pub use eval::{cross_validate, cross_validate_detailed, stratified_folds, Confusion, CvRun, EvalReport};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Kernel {
    Linear,
    Poly { degree: u32, coef0: f64, gamma: f64 },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Poly {
            degree: 2,
            coef0: 1.0,
            gamma: 1.0,
        }
    }
}

impl Kernel {
    pub fn eval(&self, a: &FeatureVector, b: &FeatureVector) -> f64 {
        let dot = a.dot(b);
        match *self {
            Kernel::Linear => dot,
            Kernel::Poly { degree, coef0, gamma } => (gamma * dot + coef0).powi(degree as i32),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub kernel: Kernel,
    pub reg_c: f64,
    pub seed: u64,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Iteration cap in passes over the data.
    pub max_passes: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            kernel: Kernel::default(),
            reg_c: 1.0,
            seed: 0,
            tol: 1e-3,
            max_passes: 10_000,
        }
    }
}

/// Logistic map from decision value to confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub slope: f64,
    pub intercept: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            slope: 1.0,
            intercept: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub vector: FeatureVector,
    pub label: i8,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub version: u32,
    pub kernel: Kernel,
    pub reg_c: f64,
    pub bias: f64,
    pub calib: Calibration,
    pub support: Vec<SupportVector>,
    pub vocab_fingerprint: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub is_procedure: bool,
    pub confidence: f64,
    pub decision_value: f64,
}

/// Anything that can label a list candidate; the search runs on this.
pub trait ListClassifier {
    fn classify(&self, cand: &ListCandidate) -> Result<Prediction>;
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Largest double below 0.5 and below 1.0.
const BELOW_HALF: f64 = 0.499_999_999_999_999_94;
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

fn confidence(calib: &Calibration, decision: f64) -> f64 {
    let p = logistic(calib.slope * decision + calib.intercept).clamp(f64::MIN_POSITIVE, BELOW_ONE);
    match (decision >= 0.0, p >= 0.5) {
        (true, false) => 0.5,
        (false, true) => BELOW_HALF,
        _ => p,
    }
}

/// Fits `slope` of `σ(slope·f)` to smoothed labels by Newton's method.
/// The intercept stays 0 so that the confidence crosses ½ exactly where the
/// decision value crosses 0.
fn fit_calibration(decisions: &[f64], labels: &[bool]) -> Calibration {
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();
    let nll = |a: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(&f, &t)| {
                let z = a * f;
                // log(1 + e^z) - t z, computed stably
                let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                softplus - t * z
            })
            .sum()
    };
    let mut a = 1.0;
    let mut current = nll(a);
    for _ in 0..100 {
        let (mut g, mut h) = (0.0, 0.0);
        for (&f, &t) in decisions.iter().zip(&targets) {
            let p = logistic(a * f);
            g += (p - t) * f;
            h += p * (1.0 - p) * f * f;
        }
        if h <= 1e-12 || g.abs() < 1e-10 {
            break;
        }
        let step = g / h;
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-10 {
            let cand = a - lambda * step;
            let value = nll(cand);
            if value < current {
                a = cand;
                current = value;
                improved = true;
                break;
            }
            lambda /= 2.0;
        }
        if !improved || (lambda * step).abs() < 1e-12 {
            break;
        }
    }
    if a.is_finite() && a > 0.0 {
        Calibration {
            slope: a,
            intercept: 0.0,
        }
    } else {
        Calibration::default()
    }
}

fn shared_fingerprint<'a>(vectors: impl Iterator<Item = &'a FeatureVector>) -> Result<String> {
    let mut found = String::new();
    for v in vectors {
        if v.fingerprint.is_empty() {
            continue;
        }
        if found.is_empty() {
            found = v.fingerprint.clone();
        } else if found != v.fingerprint {
            return Err(Error::DimensionMismatch {
                expected: found,
                found: v.fingerprint.clone(),
            });
        }
    }
    Ok(found)
}

/// Trains a soft-margin SVM on `(vector, is_procedure)` pairs.
pub fn train(data: &[(FeatureVector, bool)], params: &TrainParams) -> Result<SvmModel> {
    if !(params.reg_c > 0.0 && params.reg_c.is_finite()) {
        return Err(Error::Config(format!("reg_c must be positive, got {}", params.reg_c)));
    }
    if let Kernel::Poly { degree, .. } = params.kernel {
        if degree == 0 {
            return Err(Error::Config("polynomial degree must be at least 1".into()));
        }
    }
    if !data.iter().any(|d| d.1) || !data.iter().any(|d| !d.1) {
        return Err(Error::SingleClass);
    }
    let fingerprint = shared_fingerprint(data.iter().map(|d| &d.0))?;

    let n = data.len();
    let y: Vec<f64> = data.iter().map(|d| if d.1 { 1.0 } else { -1.0 }).collect();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| params.kernel.eval(&data[i].0, &data[j].0)).collect())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));
    let max_iter = params.max_passes.saturating_mul(n.max(1));
    let sol = smo::solve(&gram, &y, params.reg_c, params.tol, max_iter, &order);
    if sol.iterations >= max_iter {
        log::warn!("SMO stopped at the iteration cap ({max_iter}) before reaching tolerance");
    }
    let bias = -sol.rho;

    let decisions: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|i| sol.alpha[i] * y[i] * gram[i][k]).sum::<f64>() + bias)
        .collect();
    let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
    let calib = fit_calibration(&decisions, &labels);

    let support = (0..n)
        .filter(|&i| sol.alpha[i] > 0.0)
        .map(|i| {
            let mut vector = data[i].0.clone();
            vector.fingerprint.clear();
            SupportVector {
                vector,
                label: if data[i].1 { 1 } else { -1 },
                alpha: sol.alpha[i],
            }
        })
        .collect();
    Ok(SvmModel {
        version: MODEL_VERSION,
        kernel: params.kernel,
        reg_c: params.reg_c,
        bias,
        calib,
        support,
        vocab_fingerprint: fingerprint,
    })
}

impl SvmModel {
    pub fn decision_value(&self, x: &FeatureVector) -> f64 {
        self.support
            .iter()
            .map(|s| s.alpha * f64::from(s.label) * self.kernel.eval(&s.vector, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn check_compatible(&self, x: &FeatureVector) -> Result<()> {
        if !x.fingerprint.is_empty()
            && !self.vocab_fingerprint.is_empty()
            && x.fingerprint != self.vocab_fingerprint
        {
            return Err(Error::DimensionMismatch {
                expected: self.vocab_fingerprint.clone(),
                found: x.fingerprint.clone(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        self.check_compatible(x)?;
        Ok(self.prediction_for(self.decision_value(x)))
    }

    /// Prediction for a raw decision value (ties go to the positive class).
    pub fn prediction_for(&self, decision: f64) -> Prediction {
        Prediction {
            is_procedure: decision >= 0.0,
            confidence: confidence(&self.calib, decision),
            decision_value: decision,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SvmModel = serde_json::from_str(text)?;
        if model.version != MODEL_VERSION {
            return Err(Error::ModelMismatch(format!("unsupported model version {}", model.version)));
        }
        Ok(model)
    }
}
