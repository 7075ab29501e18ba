//! Command-line front end for procmine.

pub mod serve;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use procmine::classifier::{cross_validate, Kernel, ProcedureClassifier, TrainParams};
use procmine::corpus::{
    block_ablation, evaluate_identification, generate_corpus, labeled_candidates, load_annotations,
    load_document, write_corpus, CorpusSpec,
};
use procmine::features::{builtin_wordlist, FeatureConfig};
use procmine::flow::{BlockRules, FlowConfig};
use procmine::ingest::extract_list_candidates;
use procmine::linguistics::{read_word_list, ImperativeLexicon};
use procmine::pipeline::{
    flows_for_candidates, run_pipeline, unique_stems, write_flows, PipelineConfig,
};
use procmine::search::{find_procedures, ProcedureCandidate, SearchConfig};
use procmine::{Error, Result};
use serde::Serialize;

/// Regularization values tried by `train --grid`.
pub const C_GRID: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Parser)]
#[command(name = "procmine", version, about = "Mine troubleshooting procedures from support pages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the list candidates of a page as JSON Lines.
    Ingest {
        page: PathBuf,
        #[arg(long, default_value_t = 1)]
        context: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a procedure classifier from annotations.
    Train(TrainArgs),
    /// Find procedures in pages and print them as JSON Lines.
    Extract {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        pages: Vec<PathBuf>,
    },
    /// Turn extracted procedures into flow-graph files.
    Flow {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        sim_threshold: f64,
        #[arg(long, default_value_t = 0.7)]
        overlap_threshold: f64,
    },
    /// Score a model or the block rules against annotations.
    Eval {
        #[command(subcommand)]
        what: EvalCommand,
    },
    /// Synthetic corpus tools.
    Corpus {
        #[command(subcommand)]
        what: CorpusCommand,
    },
    /// Run the whole pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Inputs replacing those in the config.
        inputs: Vec<PathBuf>,
    },
    /// Serve flow-graph files read-only over HTTP.
    Serve {
        #[arg(long, default_value = "flows")]
        flows: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Static files served at `/`.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Linear,
    Poly,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub ngram: usize,
    #[arg(long, default_value_t = 1)]
    pub context: usize,
    #[arg(long, num_args = 0..=1, default_value_t = true, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub list_type: bool,
    #[arg(long, num_args = 0..=1, default_value_t = true, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub imperatives: bool,
    #[arg(long, value_enum, default_value_t = KernelKind::Poly)]
    pub kernel: KernelKind,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Pick C from the grid by cross-validation instead of `--c`.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extra domain verbs, one per line.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub wordlist: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// List-level identification accuracy.
    Id {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
    },
    /// Exact-match decision block accuracy with the rule ablation.
    Blocks {
        #[arg(long)]
        annotations: PathBuf,
        /// Accepted for symmetry with `eval id`; block scoring needs no model.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0.7)]
        overlap_threshold: f64,
        #[arg(long, default_value_t = 0.7)]
        sim_threshold: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Generate pages and annotations.
    Gen {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        docs: usize,
        /// Total lists; defaults to four per document.
        #[arg(long)]
        lists: Option<usize>,
        #[arg(long, default_value_t = 0.43)]
        ratio: f64,
        #[arg(long)]
        density: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Process exit status for an error: 2 configuration, 4 model, 3 data.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config(_) => 2,
        Error::ModelNotFound(_) | Error::ModelMismatch(_) | Error::DimensionMismatch { .. } => 4,
        _ => 3,
    }
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// A closed downstream pipe ends output quietly.
fn written(r: std::io::Result<()>) -> Result<()> {
    match r {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(|e| io_err(Path::new("<output>"), e)),
    }
}

fn write_jsonl<T: Serialize>(w: &mut dyn Write, items: &[T]) -> Result<()> {
    for item in items {
        let line = serde_json::to_string(item)?;
        written(writeln!(w, "{line}"))?;
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    written(writeln!(std::io::stdout().lock(), "{text}"))
}

fn threshold(name: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be in [0, 1], got {v}")))
    }
}

#[derive(Serialize)]
struct TrainSummary {
    model: PathBuf,
    reg_c: f64,
    support_vectors: usize,
    examples: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    grid: Vec<(f64, f64)>,
}

fn train(a: &TrainArgs) -> Result<()> {
    let config = FeatureConfig {
        ngram_max: a.ngram,
        context_k: a.context,
        use_list_type: a.list_type,
        use_imperatives: a.imperatives,
    };
    config.validate()?;
    let kernel = match a.kernel {
        KernelKind::Linear => Kernel::Linear,
        KernelKind::Poly => Kernel::Poly {
            degree: a.degree,
            coef0: 1.0,
            gamma: 1.0,
        },
    };
    let lexicon = match &a.lexicon {
        Some(p) => ImperativeLexicon::builtin_with_file(p)?,
        None => ImperativeLexicon::builtin().clone(),
    };
    let wordlist: BTreeSet<String> = match &a.wordlist {
        Some(p) => read_word_list(p)?,
        None => builtin_wordlist().clone(),
    };
    let set = load_annotations(&a.annotations)?;
    let data = labeled_candidates(&set, config.context_k)?;
    let mut params = TrainParams {
        kernel,
        reg_c: a.c,
        seed: a.seed,
        ..TrainParams::default()
    };
    let mut grid = Vec::new();
    if a.grid {
        let mut best = (f64::NEG_INFINITY, a.c);
        for c in C_GRID {
            let p = TrainParams { reg_c: c, ..params };
            let acc = cross_validate(&data, &config, &p, a.folds, &wordlist, &lexicon)?.accuracy;
            grid.push((c, acc));
            if acc > best.0 {
                best = (acc, c);
            }
        }
        params.reg_c = best.1;
    }
    if params.reg_c.is_nan() || params.reg_c <= 0.0 {
        return Err(Error::Config(format!("C must be positive, got {}", params.reg_c)));
    }
    let clf = ProcedureClassifier::train(&data, &config, &params, &wordlist, &lexicon)?;
    clf.save(&a.out)?;
    print_json(&TrainSummary {
        model: a.out.clone(),
        reg_c: params.reg_c,
        support_vectors: clf.model.support.len(),
        examples: data.len(),
        grid,
    })
}

fn extract(model: &Path, thr: f64, out: Option<&Path>, pages: &[PathBuf]) -> Result<()> {
    let clf = ProcedureClassifier::load(model)?;
    let cfg = SearchConfig {
        threshold: threshold("threshold", thr)?,
        ..SearchConfig::default()
    };
    let mut w = output(out)?;
    for page in pages {
        let name = page.to_string_lossy();
        let doc = load_document(page, &name)?;
        let found = find_procedures(&doc, &clf, &cfg, clf.config.context_k).map_err(|e| e.in_file(page))?;
        write_jsonl(&mut *w, &found.procedures)?;
    }
    written(w.flush())
}

fn flow(input: &Path, out: &Path, sim: f64, overlap: f64) -> Result<()> {
    let cfg = FlowConfig {
        sim_threshold: threshold("sim_threshold", sim)?,
        rules: BlockRules {
            overlap_threshold: threshold("overlap_threshold", overlap)?,
            ..BlockRules::default()
        },
    };
    let text = std::fs::read_to_string(input).map_err(|e| io_err(input, e))?;
    let mut groups: Vec<(String, Vec<ProcedureCandidate>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pc: ProcedureCandidate = serde_json::from_str(line).map_err(|e| Error::Schema {
            line: i + 1,
            message: e.to_string(),
        })?;
        match groups.iter_mut().find(|g| g.0 == pc.candidate.doc_url) {
            Some(g) => g.1.push(pc),
            None => groups.push((pc.candidate.doc_url.clone(), vec![pc])),
        }
    }
    let stems = unique_stems(groups.iter().map(|g| g.0.as_str()));
    let mut flows = Vec::new();
    for ((_, procs), stem) in groups.iter().zip(&stems) {
        flows.extend(flows_for_candidates(stem, procs, &cfg)?);
    }
    print_json(&write_flows(out, &flows)?)
}

fn corpus_gen(seed: u64, docs: usize, lists: Option<usize>, ratio: f64, density: Option<f64>, out: &Path) -> Result<()> {
    let defaults = CorpusSpec::default();
    let spec = CorpusSpec {
        seed,
        n_docs: docs,
        n_lists: lists.unwrap_or(docs * 4),
        procedure_ratio: ratio,
        decision_density: density.unwrap_or(defaults.decision_density),
        noise_kinds: defaults.noise_kinds,
    };
    let corpus = generate_corpus(&spec)?;
    write_corpus(&corpus, out)?;
    print_json(&corpus.manifest)
}

fn run_config(config: &Path, thr: Option<f64>, seed: Option<u64>, out: Option<&Path>, inputs: &[PathBuf]) -> Result<()> {
    let mut cfg = PipelineConfig::from_file(config).map_err(|e| match e {
        Error::Io { path, source } => Error::Config(format!("{}: {source}", path.display())),
        e => e,
    })?;
    if let Some(t) = thr {
        cfg.search.threshold = t;
    }
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    if let Some(o) = out {
        cfg.paths.out = o.to_path_buf();
    }
    if !inputs.is_empty() {
        cfg.paths.inputs = inputs.to_vec();
    }
    print_json(&run_pipeline(&cfg)?)
}

fn serve(flows: &Path, bind: &str, ui: Option<&Path>) -> Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| io_err(Path::new(bind), e))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| Error::Config(format!("cannot bind {bind}: {e}")))?;
        log::info!("serving {} on {bind}", flows.display());
        serve::serve(listener, flows.to_path_buf(), ui.map(Path::to_path_buf))
            .await
            .map_err(|e| io_err(flows, e))
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { page, context, out } => {
            let doc = load_document(&page, &page.to_string_lossy())?;
            let mut w = output(out.as_deref())?;
            write_jsonl(&mut *w, &extract_list_candidates(&doc, context))?;
            written(w.flush())
        }
        Command::Train(a) => train(&a),
        Command::Extract {
            model,
            threshold,
            out,
            pages,
        } => extract(&model, threshold, out.as_deref(), &pages),
        Command::Flow {
            input,
            out,
            sim_threshold,
            overlap_threshold,
        } => flow(&input, &out, sim_threshold, overlap_threshold),
        Command::Eval { what } => match what {
            EvalCommand::Id { model, annotations } => {
                let clf = ProcedureClassifier::load(&model)?;
                let set = load_annotations(&annotations)?;
                print_json(&evaluate_identification(&clf, &set, clf.config.context_k)?)
            }
            EvalCommand::Blocks {
                annotations,
                overlap_threshold,
                sim_threshold,
                ..
            } => {
                let set = load_annotations(&annotations)?;
                let rows = block_ablation(
                    &set,
                    threshold("overlap_threshold", overlap_threshold)?,
                    threshold("sim_threshold", sim_threshold)?,
                )?;
                print_json(&rows)
            }
        },
        Command::Corpus {
            what:
                CorpusCommand::Gen {
                    seed,
                    docs,
                    lists,
                    ratio,
                    density,
                    out,
                },
        } => corpus_gen(seed, docs, lists, ratio, density, &out),
        Command::Run {
            config,
            threshold,
            seed,
            out,
            inputs,
        } => run_config(&config, threshold, seed, out.as_deref(), &inputs),
        Command::Serve { flows, bind, ui } => serve(&flows, &bind, ui.as_deref()),
    }
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            exit_code(&e)
        }
    }
}
