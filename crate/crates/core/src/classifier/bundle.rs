use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{train, ListClassifier, Prediction, SvmModel, TrainParams};
use crate::error::{Error, Result};
use crate::features::{build_vocabulary, featurize, FeatureConfig, FeatureVector, Vocabulary};
use crate::ingest::ListCandidate;
use crate::linguistics::ImperativeLexicon;

const SIDECAR_VERSION: u32 = 1;

/// A trained model together with everything needed to featurize new lists.
#[derive(Debug, Clone)]
pub struct ProcedureClassifier {
    pub model: SvmModel,
    pub vocab: Vocabulary,
    pub config: FeatureConfig,
    pub lexicon: ImperativeLexicon,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    version: u32,
    config: FeatureConfig,
    vocabulary: Vocabulary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    extra_domain_verbs: Vec<String>,
}

/// `m.json` → `m.features.json`.
pub fn sidecar_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("features.json")
}

impl ProcedureClassifier {
    pub fn train(
        data: &[(ListCandidate, bool)],
        config: &FeatureConfig,
        params: &TrainParams,
        wordlist: &BTreeSet<String>,
        lexicon: &ImperativeLexicon,
    ) -> Result<Self> {
        let cands: Vec<ListCandidate> = data.iter().map(|d| d.0.clone()).collect();
        let vocab = build_vocabulary(&cands, config, wordlist)?;
        let set: Vec<(FeatureVector, bool)> = data
            .iter()
            .map(|(c, y)| (featurize(c, &vocab, config, lexicon), *y))
            .collect();
        let model = train(&set, params)?;
        Ok(ProcedureClassifier {
            model,
            vocab,
            config: *config,
            lexicon: lexicon.clone(),
        })
    }

    pub fn featurize(&self, cand: &ListCandidate) -> FeatureVector {
        featurize(cand, &self.vocab, &self.config, &self.lexicon)
    }

    /// Writes the model file and its `.features.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        let builtin = ImperativeLexicon::builtin();
        let sidecar = Sidecar {
            version: SIDECAR_VERSION,
            config: self.config,
            vocabulary: self.vocab.clone(),
            extra_domain_verbs: self
                .lexicon
                .domain_verbs
                .iter()
                .chain(&self.lexicon.verbs)
                .filter(|v| !builtin.contains(v))
                .cloned()
                .collect(),
        };
        let side = sidecar_path(path);
        std::fs::write(path, self.model.to_json()? + "\n").map_err(|e| Error::io(path, e))?;
        std::fs::write(&side, serde_json::to_string(&sidecar)? + "\n").map_err(|e| Error::io(&side, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::ModelNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model = SvmModel::from_json(&text)?;
        let side = sidecar_path(path);
        if !side.is_file() {
            return Err(Error::ModelNotFound(side));
        }
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let sidecar: Sidecar = serde_json::from_str(&text)?;
        if sidecar.version != SIDECAR_VERSION {
            return Err(Error::ModelMismatch(format!(
                "unsupported feature file version {}",
                sidecar.version
            )));
        }
        sidecar.config.validate()?;
        let fp = sidecar.vocabulary.fingerprint(&sidecar.config);
        if !model.vocab_fingerprint.is_empty() && fp != model.vocab_fingerprint {
            return Err(Error::ModelMismatch(format!(
                "model expects vocabulary {} but {} holds {fp}",
                model.vocab_fingerprint,
                side.display()
            )));
        }
        Ok(ProcedureClassifier {
            model,
            vocab: sidecar.vocabulary,
            config: sidecar.config,
            lexicon: ImperativeLexicon::builtin()
                .clone()
                .with_domain_verbs(sidecar.extra_domain_verbs),
        })
    }
}

impl ListClassifier for ProcedureClassifier {
    fn classify(&self, cand: &ListCandidate) -> Result<Prediction> {
        let x = self.featurize(cand);
        self.model.predict(&x).map_err(|e| match e {
            Error::DimensionMismatch { expected, found } => Error::ModelMismatch(format!(
                "vector fingerprint {found} does not match model {expected}"
            )),
            other => other,
        })
    }
}
