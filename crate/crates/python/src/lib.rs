//! Python bindings: the classifier, procedure search, flow mining and the
//! sentence-level analyses.

use std::path::PathBuf;

use procmine::classifier::{ProcedureClassifier, TrainParams};
use procmine::corpus::{block_ablation, generate_corpus, labeled_candidates, load_annotations, write_corpus, CorpusSpec};
use procmine::features::{builtin_wordlist, FeatureConfig};
use procmine::flow::{generate_question, DecisionPoint, FlowConfig};
use procmine::ingest::{extract_list_candidates, parse_document, scrub_template, Document, Sentence};
use procmine::linguistics::{self, ImperativeLexicon};
use procmine::pipeline::{flow_stem, flows_for_candidates, run_pipeline as run, PipelineConfig};
use procmine::search::{find_procedures as search, SearchConfig};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(procmine, ProcmineError, PyException, "Raised for any pipeline error; the message starts with its code.");

fn err(e: procmine::Error) -> PyErr {
    ProcmineError::new_err(format!("{}: {e}", e.code()))
}

/// Converts through JSON so Python receives plain dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| err(e.into()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn document(html: &str, url: &str) -> PyResult<Document> {
    Ok(scrub_template(&parse_document(html.as_bytes(), url).map_err(err)?))
}

/// A trained procedure classifier with its vocabulary.
#[pyclass(name = "Classifier", module = "procmine")]
struct PyClassifier {
    inner: ProcedureClassifier,
}

#[pymethods]
impl PyClassifier {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyClassifier {
            inner: ProcedureClassifier::load(&path).map_err(err)?,
        })
    }

    /// Trains on an annotation file with the default feature set.
    #[staticmethod]
    #[pyo3(signature = (annotations, reg_c = 1.0, seed = 0))]
    fn train(annotations: PathBuf, reg_c: f64, seed: u64) -> PyResult<Self> {
        let config = FeatureConfig::default();
        let set = load_annotations(&annotations).map_err(err)?;
        let data = labeled_candidates(&set, config.context_k).map_err(err)?;
        let params = TrainParams {
            reg_c,
            seed,
            ..TrainParams::default()
        };
        let inner = ProcedureClassifier::train(&data, &config, &params, builtin_wordlist(), ImperativeLexicon::builtin())
            .map_err(err)?;
        Ok(PyClassifier { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    /// Procedures found in a page, in breadth-first order.
    #[pyo3(signature = (html, url = "page.html", threshold = 0.5))]
    fn find_procedures<'py>(&self, py: Python<'py>, html: &str, url: &str, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
        let doc = document(html, url)?;
        let cfg = SearchConfig {
            threshold,
            ..SearchConfig::default()
        };
        let found = search(&doc, &self.inner, &cfg, self.inner.config.context_k).map_err(err)?;
        to_py(py, &found.procedures)
    }

    /// Flow-graph documents for every procedure in a page.
    #[pyo3(signature = (html, url = "page.html", threshold = 0.5))]
    fn mine_flows<'py>(&self, py: Python<'py>, html: &str, url: &str, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
        let doc = document(html, url)?;
        let cfg = SearchConfig {
            threshold,
            ..SearchConfig::default()
        };
        let found = search(&doc, &self.inner, &cfg, self.inner.config.context_k).map_err(err)?;
        let flows = flows_for_candidates(&flow_stem(url), &found.procedures, &FlowConfig::default()).map_err(err)?;
        let docs: Vec<_> = flows.iter().map(|f| &f.document).collect();
        to_py(py, &docs)
    }
}

/// List candidates of a page after template scrubbing.
#[pyfunction]
#[pyo3(signature = (html, url = "page.html", context = 1))]
fn list_candidates<'py>(py: Python<'py>, html: &str, url: &str, context: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &extract_list_candidates(&document(html, url)?, context))
}

/// Condition/effect split of a sentence, or None when it is not a decision point.
#[pyfunction]
fn detect_conditional<'py>(py: Python<'py>, sentence: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &linguistics::detect_conditional(&Sentence::new(sentence)))
}

/// Imperative verbs of a sentence, in order.
#[pyfunction]
fn detect_imperatives(sentence: &str) -> Vec<String> {
    linguistics::detect_imperatives(&Sentence::new(sentence), ImperativeLexicon::builtin())
        .into_iter()
        .map(|a| a.verb)
        .collect()
}

#[pyfunction]
fn similarity(a: &str, b: &str) -> f64 {
    linguistics::similarity(a, b)
}

/// Yes/no question for a conditional sentence, or None.
#[pyfunction]
fn question<'py>(py: Python<'py>, sentence: &str) -> PyResult<Bound<'py, PyAny>> {
    let q = linguistics::detect_conditional(&Sentence::new(sentence)).map(|split| {
        generate_question(&DecisionPoint {
            step_index: 0,
            sentence_index: 0,
            split,
        })
    });
    to_py(py, &q)
}

/// Writes a synthetic corpus to `out` and returns its manifest.
#[pyfunction]
#[pyo3(signature = (out, seed = 7, n_docs = 50, n_lists = None))]
fn write_synthetic_corpus<'py>(
    py: Python<'py>,
    out: PathBuf,
    seed: u64,
    n_docs: usize,
    n_lists: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = CorpusSpec {
        seed,
        n_docs,
        n_lists: n_lists.unwrap_or(n_docs * 4),
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec).map_err(err)?;
    write_corpus(&corpus, &out).map_err(err)?;
    to_py(py, &corpus.manifest)
}

/// Exact-match block accuracy with the rules added one at a time.
#[pyfunction]
#[pyo3(signature = (annotations, overlap_threshold = 0.7, sim_threshold = 0.7))]
fn evaluate_blocks<'py>(
    py: Python<'py>,
    annotations: PathBuf,
    overlap_threshold: f64,
    sim_threshold: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let set = load_annotations(&annotations).map_err(err)?;
    to_py(py, &block_ablation(&set, overlap_threshold, sim_threshold).map_err(err)?)
}

/// Runs the pipeline described by a TOML or JSON config; returns the report.
#[pyfunction]
fn run_pipeline<'py>(py: Python<'py>, config: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let cfg = PipelineConfig::from_file(&config).map_err(err)?;
    to_py(py, &run(&cfg).map_err(err)?)
}

#[pymodule]
#[pyo3(name = "procmine")]
fn procmine_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ProcmineError", m.py().get_type::<ProcmineError>())?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(list_candidates, m)?)?;
    m.add_function(wrap_pyfunction!(detect_conditional, m)?)?;
    m.add_function(wrap_pyfunction!(detect_imperatives, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(question, m)?)?;
    m.add_function(wrap_pyfunction!(write_synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_blocks, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
