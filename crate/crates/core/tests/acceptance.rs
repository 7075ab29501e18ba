//! Acceptance gate: one line per criterion, non-zero exit on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use nalgebra::SymmetricEigen;
use procmine::classifier::{cross_validate, train, Kernel, TrainParams};
use procmine::corpus::{block_ablation, generate_corpus, labeled_candidates, load_annotations};
use procmine::features::{builtin_wordlist, FeatureConfig};
use procmine::flow::{
    extract_decision_block, extract_decision_points, generate_question, map_instructions, Branch,
    BlockRules, DecisionPoint, EdgeLabel, FlowConfig, NodeKind, Procedure, SourceRef, Step,
};
use procmine::ingest::{segment_sentences, DomNode, Sentence};
use procmine::linguistics::{detect_conditional, detect_imperatives, similarity, ImperativeLexicon, Polarity};
use procmine::pipeline::flows_for_candidates;
use procmine::search::{find_procedures, SearchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_force_dual, corpus_on_disk, dense, dual_objective, fixture, gram, scrubbed, spec};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Lowercase words with articles and punctuation removed.
fn normalize(s: &str) -> String {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '/')
        .filter(|w| !w.is_empty() && !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn p1() -> Outcome {
    let golden = [
        (
            "Unless both nodes in the I/O group are online, fix the problem that is causing the node to be offline first",
            "both nodes in the I/O group are online",
            "fix the problem that is causing the node to be offline first",
        ),
        (
            "If the LEDs do not show a fault on the power supplies or batteries, power off both power supplies in the enclosure and remove the power cords",
            "LEDs do not show a fault on the power supplies or batteries",
            "power off both power supplies in the enclosure and remove the power cords",
        ),
        (
            "When you have performed all of the actions that you intend to perform, mark the error as \"fixed\"",
            "you have performed all of the actions that you intend to perform",
            "mark the error as \"fixed\"",
        ),
        (
            "Swap the drive for the correct one but shut down the node first if booted yes is shown for that drive in boot drive view",
            "booted yes is shown for that drive in boot drive view",
            "shut down the node first",
        ),
    ];
    let mut matched = 0;
    let mut misses = Vec::new();
    for (sentence, cond, effect) in golden {
        match detect_conditional(&Sentence::new(sentence)) {
            Some(s) if normalize(&s.condition) == normalize(cond) && normalize(&s.effect) == normalize(effect) => matched += 1,
            got => misses.push(format!("{sentence:?} -> {:?}", got.map(|s| (s.condition, s.effect)))),
        }
    }
    for sentence in ["Check if the light is blinking.", "When can a technician be called?"] {
        match detect_conditional(&Sentence::new(sentence)) {
            None => matched += 1,
            Some(s) => misses.push(format!("{sentence:?} -> unexpected {:?}", s.condition)),
        }
    }
    check(matched == 6, format!("{matched}/6 exact; {}", misses.join("; ")))?;
    Ok("6/6 exact".into())
}

fn is_prefix(a: &[usize], b: &[usize]) -> bool {
    a.len() < b.len() && b.starts_with(a)
}

fn list_paths(node: &DomNode) -> Vec<Vec<usize>> {
    node.descendants().filter(|n| n.is_list()).map(|n| n.node_path.clone()).collect()
}

fn p2() -> Outcome {
    let classifier = common::seed7_classifier();
    let corpus = generate_corpus(&spec(23, 200, 800)).map_err(|e| e.to_string())?;
    let cfg = SearchConfig::default();
    let k = FeatureConfig::default().context_k;
    let (mut lists, mut procedures) = (0, 0);
    for doc in &corpus.docs {
        let d = scrubbed(&doc.html, &doc.file_name);
        let runs: Vec<_> = (0..3)
            .map(|_| find_procedures(&d, &classifier, &cfg, k).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        check(runs[1] == runs[0] && runs[2] == runs[0], format!("{}: runs differ", doc.file_name))?;
        let r = &runs[0];
        check(!r.truncated, format!("{}: truncated", doc.file_name))?;
        let found: Vec<&Vec<usize>> = r.procedures.iter().map(|p| &p.candidate.node_path).collect();
        for a in &found {
            for b in &found {
                check(!is_prefix(a, b), format!("{}: {b:?} lies inside {a:?}", doc.file_name))?;
            }
        }
        let depths: Vec<usize> = r.classified.iter().map(Vec::len).collect();
        check(depths.windows(2).all(|w| w[0] <= w[1]), format!("{}: classification not breadth-first", doc.file_name))?;
        for path in list_paths(&d.dom) {
            let times = r.classified.iter().filter(|c| **c == path).count();
            let shadowed = found.iter().any(|f| is_prefix(f, &path));
            check(
                (times == 1) != shadowed,
                format!("{}: list {path:?} classified {times}x, shadowed={shadowed}", doc.file_name),
            )?;
            lists += 1;
        }
        procedures += found.len();
    }
    Ok(format!("200 docs, {lists} lists, {procedures} procedures, 3 identical runs"))
}

fn p3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut compared = 0;
    for case in 0..50 {
        let n = rng.random_range(2..=8);
        let (kernel, dim) = if case % 2 == 0 {
            (Kernel::Linear, n)
        } else {
            let kernel = Kernel::Poly { degree: 2, coef0: 1.0, gamma: 1.0 };
            (kernel, rng.random_range(3..=5))
        };
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let c = [0.5, 1.0, 10.0][rng.random_range(0..3)];
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

        let k = gram(&points, &kernel);
        let min_eig = SymmetricEigen::new(k.clone()).eigenvalues.min();
        check(min_eig >= -1e-9, format!("case {case}: kernel matrix not PSD ({min_eig})"))?;

        let params = TrainParams { kernel, reg_c: c, tol: 1e-6, ..TrainParams::default() };
        let data: Vec<_> = points.iter().zip(&labels).map(|(p, &l)| (dense(p), l)).collect();
        let model = train(&data, &params).map_err(|e| e.to_string())?;

        let mut alpha = vec![0.0; n];
        for sv in &model.support {
            let i = data.iter().position(|d| d.0 == sv.vector).ok_or("support vector not in training set")?;
            alpha[i] = sv.alpha;
        }
        let balance: f64 = alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        check(balance.abs() <= 1e-6, format!("case {case}: |sum alpha y| = {}", balance.abs()))?;
        check(alpha.iter().all(|&a| (0.0..=c).contains(&a)), format!("case {case}: alpha outside [0, C]"))?;

        let oracle = brute_force_dual(&k, &y, c);
        let ours = dual_objective(&k, &y, &alpha);
        check(
            ours >= oracle.objective - 1e-4 * oracle.objective.abs().max(1.0),
            format!("case {case}: dual objective {ours} below optimum {}", oracle.objective),
        )?;
        for i in 0..n {
            let f: f64 = (0..n).map(|j| oracle.alpha[j] * y[j] * k[(i, j)]).sum::<f64>() + oracle.bias;
            if f.abs() < 1e-4 {
                continue;
            }
            let got = model.decision_value(&data[i].0);
            check(got.signum() == f.signum(), format!("case {case}: point {i} sign {got} vs oracle {f}"))?;
            compared += 1;
        }
    }
    Ok(format!("50 sets, {compared} training-point signs match"))
}

fn p4() -> Outcome {
    let (_dir, set) = corpus_on_disk(&spec(7, 100, 400));
    let data = labeled_candidates(&set, 1).map_err(|e| e.to_string())?;
    let configs = [(false, false), (true, false), (true, true)];
    let mut acc = Vec::new();
    for (use_list_type, use_imperatives) in configs {
        let cfg = FeatureConfig { use_list_type, use_imperatives, ..FeatureConfig::default() };
        let report = cross_validate(&data, &cfg, &TrainParams::default(), 5, builtin_wordlist(), ImperativeLexicon::builtin())
            .map_err(|e| e.to_string())?;
        acc.push(report.accuracy);
    }
    let detail = format!("{} lists: baseline {:.4}, +list-type {:.4}, +imperatives {:.4}", data.len(), acc[0], acc[1], acc[2]);
    check(data.len() >= 400 && acc[1] >= acc[0] && acc[2] >= acc[1] - 0.01, detail.clone())?;
    Ok(detail)
}

fn p5() -> Outcome {
    let set = load_annotations(&fixture("blocks/annotations.jsonl")).map_err(|e| e.to_string())?;
    let rows = block_ablation(&set, 0.7, 0.7).map_err(|e| e.to_string())?;
    let acc: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
    let total = rows[0].score.total;
    let empty = rows[0].score.empty_total;
    let detail = format!(
        "{total} points ({empty} empty): {}",
        acc.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" / ")
    );
    check(
        total >= 40 && empty > 0 && acc.windows(2).all(|w| w[1] >= w[0]) && acc[3] >= 0.85,
        detail.clone(),
    )?;
    Ok(detail)
}

fn p6() -> Outcome {
    let classifier = common::seed7_classifier();
    let html = std::fs::read_to_string(fixture("fig1a.html")).map_err(|e| e.to_string())?;
    let doc = scrubbed(&html, "fig1a.html");
    let found = find_procedures(&doc, &classifier, &SearchConfig::default(), 1).map_err(|e| e.to_string())?;
    check(found.procedures.len() == 1, format!("{} procedures found", found.procedures.len()))?;
    let flows = flows_for_candidates("fig1a", &found.procedures, &FlowConfig::default()).map_err(|e| e.to_string())?;
    let g = flows[0].document.graph();

    const POWER: &str = "Power off the control enclosure by using the management GUI.";
    const LED: &str = "If the LEDs do not show a fault on the power supplies or batteries, power off both power supplies in the enclosure and remove the power cords.";
    const WAIT: &str = "Wait 20 seconds, then replace the power cords and restore power to both power supplies.";
    const JOIN: &str = "If both node canisters continue to report this error replace the enclosure chassis.";
    const STILL: &str = "If the node error is still reported, replace the node canister.";
    let want_nodes: HashSet<(&str, NodeKind)> = [
        (POWER, NodeKind::Instruction),
        (LED, NodeKind::Decision),
        (WAIT, NodeKind::Instruction),
        (JOIN, NodeKind::Decision),
        (STILL, NodeKind::Decision),
    ]
    .into();
    let want_edges: HashSet<(&str, &str, EdgeLabel)> = [
        (POWER, LED, EdgeLabel::Next),
        (LED, WAIT, EdgeLabel::True),
        (LED, JOIN, EdgeLabel::False),
        (WAIT, JOIN, EdgeLabel::Next),
        (JOIN, STILL, EdgeLabel::True),
        (JOIN, STILL, EdgeLabel::False),
    ]
    .into();

    let text: BTreeMap<&str, &str> = g.nodes.iter().map(|n| (n.id.as_str(), n.text.as_str())).collect();
    check(text.len() == g.nodes.len(), "duplicate node ids")?;
    let got_nodes: HashSet<(&str, NodeKind)> = g.nodes.iter().map(|n| (n.text.as_str(), n.kind)).collect();
    let got_edges: HashSet<(&str, &str, EdgeLabel)> = g
        .edges
        .iter()
        .map(|e| (text[e.from.as_str()], text[e.to.as_str()], e.label))
        .collect();
    check(got_nodes.len() == g.nodes.len() && got_edges.len() == g.edges.len(), "graph has repeated nodes or edges")?;
    check(got_nodes == want_nodes, format!("nodes differ: {got_nodes:?}"))?;
    check(got_edges == want_edges, format!("edges differ: {got_edges:?}"))?;
    check(g.entry.as_deref().map(|e| text[e]) == Some(POWER), "entry is not the first step")?;
    Ok(format!("{} nodes, {} edges isomorphic", g.nodes.len(), g.edges.len()))
}

fn one_step(sentences: &str) -> Procedure {
    Procedure {
        source: SourceRef { url: "t".into(), node_path: vec![0] },
        title: String::new(),
        steps: vec![Step {
            index: 0,
            sentences: segment_sentences(sentences),
            sublist_paths: vec![],
            paragraph_breaks: vec![],
        }],
        context: vec![],
    }
}

/// Binary bag-of-words cosine, computed without the library tokenizer.
fn cosine(a: &str, b: &str) -> f64 {
    let words = |s: &str| -> HashSet<String> {
        s.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase).collect()
    };
    let (a, b) = (words(a), words(b));
    a.intersection(&b).count() as f64 / ((a.len() * b.len()) as f64).sqrt()
}

fn p7() -> Outcome {
    let cases = [
        (
            "If slot status is missing, then switch it off. If slot status is failed, then restart.",
            Branch::False,
            true,
        ),
        (
            "If the power supply error LED is off, this state is the normal condition. If the error is not automatically fixed after 2 minutes, replace the system board.",
            Branch::True,
            false,
        ),
    ];
    let mut sims = Vec::new();
    for (text, branch, parallel) in cases {
        let p = one_step(text);
        let points = extract_decision_points(&p);
        check(points.len() == 2, format!("{} decision points in {text:?}", points.len()))?;
        let block = map_instructions(&p, extract_decision_block(&p, &points[0], &BlockRules::default()), 0.7);
        let members: Vec<(usize, usize, Branch)> = block.members.iter().map(|m| (m.step, m.sentence, m.branch)).collect();
        check(members == vec![(0, 1, branch)], format!("{text:?}: members {members:?}"))?;
        let (a, b) = (&points[0].split.condition, &points[1].split.condition);
        let sim = similarity(a, b);
        check((sim - cosine(a, b)).abs() < 1e-12, format!("similarity {sim} disagrees with {}", cosine(a, b)))?;
        check((sim >= 0.7) == parallel, format!("{a:?} vs {b:?}: similarity {sim}"))?;
        sims.push(sim);
    }

    let mut seen = BTreeSet::new();
    for (trigger, negated) in [("If", false), ("If", true), ("Unless", false), ("Unless", true)] {
        let cond = if negated { "the light is not blinking" } else { "the light is blinking" };
        let sentence = format!("{trigger} {cond}, replace the battery.");
        let split = detect_conditional(&Sentence::new(&sentence)).ok_or(format!("no decision in {sentence:?}"))?;
        let inv = split.polarity == Polarity::Inverted;
        check(inv == (trigger == "Unless") && split.condition_negated == negated, format!("{sentence:?}: flags"))?;
        seen.insert((split.condition_negated, inv));
        let d = DecisionPoint { step_index: 0, sentence_index: 0, split };
        let q = generate_question(&d);
        let question_negated = q.text.to_lowercase().split_whitespace().any(|w| w == "not");
        for light_blinking in [false, true] {
            let condition_holds = light_blinking != negated;
            let effect_due = condition_holds != inv;
            let answer_yes = if question_negated { condition_holds } else { light_blinking };
            let branch = if answer_yes { q.yes_branch } else { q.no_branch };
            check(
                (branch == Branch::True) == effect_due,
                format!("{sentence:?} / {:?}: blinking={light_blinking} follows {branch:?}", q.text),
            )?;
        }
    }
    check(seen.len() == 4, "truth table incomplete")?;
    Ok(format!("parallel {:.3}, nested {:.3}, 4/4 branch bindings", sims[0], sims[1]))
}

fn p8() -> Outcome {
    let text = std::fs::read_to_string(fixture("imperatives.jsonl")).map_err(|e| e.to_string())?;
    let lex = ImperativeLexicon::builtin();
    let (mut tp, mut predicted, mut gold, mut rows) = (0usize, 0usize, 0usize, 0usize);
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let sentence = v["sentence"].as_str().ok_or("missing sentence")?;
        let mut want: Vec<String> = v["verbs"]
            .as_array()
            .ok_or("missing verbs")?
            .iter()
            .filter_map(|x| x.as_str().map(str::to_lowercase))
            .collect();
        let got: Vec<String> = detect_imperatives(&Sentence::new(sentence), lex).into_iter().map(|a| a.verb.to_lowercase()).collect();
        predicted += got.len();
        gold += want.len();
        for verb in got {
            if let Some(i) = want.iter().position(|w| *w == verb) {
                want.swap_remove(i);
                tp += 1;
            }
        }
        rows += 1;
    }
    let precision = tp as f64 / predicted as f64;
    let recall = tp as f64 / gold as f64;
    let detail = format!("{rows} sentences: precision {precision:.3}, recall {recall:.3}");
    check(rows == 60 && precision >= 0.80 && recall >= 0.80, detail.clone())?;
    Ok(detail)
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        ("P1 conditional golden", p1, Duration::from_secs(1)),
        ("P2 search invariants", p2, Duration::from_secs(30)),
        ("P3 SVM dual oracle", p3, Duration::from_secs(60)),
        ("P4 feature ablation", p4, Duration::from_secs(300)),
        ("P5 block-rule ablation", p5, Duration::from_secs(10)),
        ("P6 end-to-end flow graph", p6, Duration::from_secs(1)),
        ("P7 mapping and questions", p7, Duration::from_secs(1)),
        ("P8 imperative floor", p8, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > budget => Err(format!("{detail}; over budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {name} ({:.2}s): {detail}", took.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({:.2}s): {detail}", took.as_secs_f64());
            }
        }
    }
    println!("acceptance: {}/8 passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
