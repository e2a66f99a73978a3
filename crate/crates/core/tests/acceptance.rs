//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any gating criterion fails.
//!
//! The optional JNLPBA reproduction runs only when `PICRF_JNLPBA_TRAIN` and
//! `PICRF_JNLPBA_TEST` point at CoNLL files; it never gates.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use picrf::corpus::{
    generate_synthetic, read_conll, GapDistribution, LabelColumn, Sentence,
    SynthConfig, Token,
};
use picrf::crf::{
    forward_backward, log_likelihood_and_gradient, prepare_instances, viterbi, Lattice,
    ModelOrder, StateSpace,
};
use picrf::eval::{run_comparison, run_longdistance, score, LongDistanceConfig};
use picrf::features::{build_feature_index, FeatureSet, TemplateConfig};
use picrf::induction::{count_new_states, induce, revert, Label, LabelAlphabet};
use picrf::training::{measure_iteration_cost, Termination, TrainConfig};
use picrf::{train, Executor, Model};

// ---------------------------------------------------------------------------
// brute-force oracles

/// Every state path of length `len` over `states` states.
fn all_paths(len: usize, states: usize) -> Vec<Vec<usize>> {
    let mut paths = vec![vec![]];
    for _ in 0..len {
        paths = paths
            .into_iter()
            .flat_map(|p| {
                (0..states).map(move |s| {
                    let mut q = p.clone();
                    q.push(s);
                    q
                })
            })
            .collect();
    }
    paths
}

fn path_score(lattice: &Lattice<'_>, path: &[usize]) -> f64 {
    path.iter()
        .enumerate()
        .map(|(t, &s)| lattice.potential(t, if t == 0 { None } else { Some(path[t - 1]) }, s))
        .sum()
}

fn brute_log_z(lattice: &Lattice<'_>) -> f64 {
    let scores: Vec<f64> = all_paths(lattice.len(), lattice.states())
        .iter()
        .map(|p| path_score(lattice, p))
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

fn random_lattice<'a>(space: &'a StateSpace, len: usize, rng: &mut ChaCha8Rng) -> Lattice<'a> {
    let unary = (0..len * space.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let trans: Vec<f64> = (0..space.transition_param_count())
        .map(|_| rng.gen_range(-2.0..2.0))
        .collect();
    Lattice::from_parts(space, len, unary, &trans).unwrap()
}

/// Random strictly valid IOB2 sequence over `types` types.
fn random_iob2(rng: &mut ChaCha8Rng, len: usize, types: usize) -> Vec<Label> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let prev = out.last().and_then(|l: &Label| l.entity_type());
        let roll = rng.gen_range(0..10);
        let label = match (roll, prev) {
            (0..=4, _) => Label::Outside,
            (5..=7, Some(t)) => Label::Inside(t),
            _ => Label::Begin(rng.gen_range(0..types)),
        };
        out.push(label);
    }
    out
}

fn random_corpus(rng: &mut ChaCha8Rng, sentences: usize, types: &[String], max_len: usize) -> Vec<Sentence> {
    let alphabet = LabelAlphabet::new(types).unwrap();
    (0..sentences)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            let labels = random_iob2(rng, len, types.len());
            let tokens = (0..len)
                .map(|_| {
                    let stem = ["gene", "IL", "cell", "of", "the", "x", "protein", "2012"][rng.gen_range(0..8)];
                    Token::new(format!("{stem}{}", rng.gen_range(0..4))).unwrap()
                })
                .collect();
            let labels = labels.iter().map(|&l| alphabet.name(l).to_string()).collect();
            Sentence::new(tokens, Some(labels)).unwrap()
        })
        .collect()
}

fn type_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i}")).collect()
}

// ---------------------------------------------------------------------------
// criteria

fn partition_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for states in 2..=5 {
        let space = StateSpace::dense(states);
        for len in 1..=6 {
            for _ in 0..100 {
                let lattice = random_lattice(&space, len, &mut rng);
                let fb = forward_backward(&lattice).map_err(|e| e.to_string())?;
                let brute = brute_log_z(&lattice);
                let err = (fb.log_z() - brute).abs().max((fb.log_z_backward() - brute).abs());
                worst = worst.max(err);
                if err > 1e-8 {
                    return Err(format!("T={len} S={states}: |ΔlogZ| = {err:e}"));
                }
            }
        }
    }
    Ok(format!("max |ΔlogZ| = {worst:.2e} ≤ 1e-8 over 2400 lattices"))
}

fn viterbi_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut unique = 0;
    for states in 2..=5 {
        let space = StateSpace::dense(states);
        for len in 1..=6 {
            for _ in 0..100 {
                let lattice = random_lattice(&space, len, &mut rng);
                let (path, best) = viterbi(&lattice).map_err(|e| e.to_string())?;
                let mut scored: Vec<(f64, Vec<usize>)> = all_paths(len, states)
                    .into_iter()
                    .map(|p| (path_score(&lattice, &p), p))
                    .collect();
                scored.sort_by(|a, b| b.0.total_cmp(&a.0));
                let err = (best - scored[0].0).abs();
                worst = worst.max(err);
                if err > 1e-9 {
                    return Err(format!("T={len} S={states}: score off by {err:e}"));
                }
                if (path_score(&lattice, &path) - best).abs() > 1e-9 {
                    return Err("returned path does not achieve the returned score".into());
                }
                if scored.len() == 1 || scored[0].0 - scored[1].0 > 1e-12 {
                    unique += 1;
                    if path != scored[0].1 {
                        return Err(format!("T={len} S={states}: path differs from unique argmax"));
                    }
                }
            }
        }
    }
    Ok(format!("max |Δscore| = {worst:.2e} ≤ 1e-9; {unique} unique-argmax paths matched"))
}

fn gradient_check() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let types = type_names(3);
    let corpus = random_corpus(&mut rng, 5, &types, 8);
    let alphabet = LabelAlphabet::new(&types).unwrap();
    let template = TemplateConfig::new(FeatureSet::Two);
    let exec = Executor::sequential();
    let sigma2 = 10.0;
    let h = 1e-5;
    let mut summary = Vec::new();
    for order in ModelOrder::ALL {
        let space = StateSpace::for_order(&alphabet, order, false);
        let index = build_feature_index(&corpus, &template, &alphabet, order).map_err(|e| e.to_string())?;
        let instances = prepare_instances(&corpus, &template, &index, &alphabet, &space, &exec)
            .map_err(|e| e.to_string())?;
        let dim = index.param_count() + space.transition_param_count();
        let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let objective = |w: &[f64]| {
            log_likelihood_and_gradient(&instances, w, &index, &space, sigma2, &exec)
                .unwrap()
                .0
        };
        let (_, grad) = log_likelihood_and_gradient(&instances, &weights, &index, &space, sigma2, &exec)
            .map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for _ in 0..60 {
            let k = rng.gen_range(0..dim);
            let mut plus = weights.clone();
            let mut minus = weights.clone();
            plus[k] += h;
            minus[k] -= h;
            let numeric = (objective(&plus) - objective(&minus)) / (2.0 * h);
            let rel = (numeric - grad[k]).abs() / numeric.abs().max(grad[k].abs()).max(1e-6);
            worst = worst.max(rel);
            if rel > 1e-4 {
                return Err(format!(
                    "{order}: slot {k} analytic {} vs numeric {numeric} (rel {rel:e})",
                    grad[k]
                ));
            }
        }
        summary.push(format!("{order} {worst:.1e}"));
    }
    Ok(format!("60 slots/order, max rel err: {}", summary.join(", ")))
}

fn induction_round_trip() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..10_000 {
        let types = rng.gen_range(1..=5);
        let len = rng.gen_range(0..=40);
        let y = random_iob2(&mut rng, len, types);
        let induced = induce(&y).map_err(|e| e.to_string())?;
        if revert(&induced) != y {
            return Err(format!("case {case}: revert(induce(y)) != y"));
        }
        for (i, label) in induced.iter().enumerate() {
            let precursor = y[..i].iter().rev().find_map(|l| l.entity_type());
            let expected = match y[i] {
                Label::Outside => precursor.map_or(Label::Outside, Label::Carrier),
                other => other,
            };
            if *label != expected {
                return Err(format!("case {case}: position {i} violates precursor soundness"));
            }
        }
    }
    Ok("10000 sequences round-trip; precursor soundness holds".into())
}

fn long_distance() -> Result<String, String> {
    let config = LongDistanceConfig::default();
    assert_eq!(config.synth.entity_type_count, 2);
    assert_eq!(config.synth.gap, GapDistribution::Uniform { min: 2, max: 6 });
    assert_eq!(config.train.template.window_radius(), 1);
    assert_eq!((config.train_sentences, config.test_sentences), (2000, 500));
    let report = run_longdistance(&config).map_err(|e| e.to_string())?;
    let chance = report.chance_level.unwrap();
    let row = |order| report.row(order, FeatureSet::One).unwrap();
    let first = row(ModelOrder::First);
    let pre = row(ModelOrder::PreInduced);
    let first_acc = first.second_entity_accuracy.unwrap();
    let pre_acc = pre.second_entity_accuracy.unwrap();
    let gain = pre.scores.f1() - first.scores.f1();
    let detail = format!(
        "2nd-entity acc first={first_acc:.3} pre-induced={pre_acc:.3} (chance {chance:.2}); F1 first={:.3} pre-induced={:.3}",
        first.scores.f1(),
        pre.scores.f1()
    );
    if first_acc > 0.60 {
        return Err(format!("first-order accuracy above 0.60: {detail}"));
    }
    if (first_acc - chance).abs() > 0.07 {
        return Err(format!("first-order accuracy not within 0.07 of chance: {detail}"));
    }
    if pre_acc < 0.95 {
        return Err(format!("pre-induced accuracy below 0.95: {detail}"));
    }
    if gain < 0.15 {
        return Err(format!("F1 gain {gain:.3} < 0.15: {detail}"));
    }
    Ok(detail)
}

fn timing_ordering() -> Result<String, String> {
    let mut synth = SynthConfig::new(5);
    synth.sentences = 2000;
    let corpus = generate_synthetic(&synth).map_err(|e| e.to_string())?;
    let alphabet = LabelAlphabet::new(&synth.type_names()).unwrap();
    let configs: Vec<TrainConfig> = [ModelOrder::First, ModelOrder::PreInduced, ModelOrder::Second]
        .into_iter()
        .map(|order| {
            let mut c = TrainConfig::new(order, TemplateConfig::new(FeatureSet::One));
            c.threads = 1;
            c
        })
        .collect();
    let table = measure_iteration_cost(&corpus, &configs, &alphabet, 2, 10).map_err(|e| e.to_string())?;
    let secs = |o| table.row(o).unwrap().mean_seconds;
    let (first, pre, second) = (
        secs(ModelOrder::First),
        secs(ModelOrder::PreInduced),
        secs(ModelOrder::Second),
    );
    let pre_over_first = pre / first;
    let second_over_pre = second / pre;
    let detail = format!(
        "s/iter first={first:.4} pre-induced={pre:.4} second={second:.4}; pre/first={pre_over_first:.2} second/pre={second_over_pre:.2}"
    );
    if !(first < pre && pre < second) {
        return Err(format!("ordering violated: {detail}"));
    }
    if pre_over_first > 3.0 {
        return Err(format!("pre/first > 3.0: {detail}"));
    }
    if second_over_pre < 2.0 {
        return Err(format!("second/pre < 2.0: {detail}"));
    }
    Ok(detail)
}

fn state_counts() -> Result<String, String> {
    for e in 1..=5 {
        let alphabet = LabelAlphabet::new(&type_names(e)).unwrap();
        let first = StateSpace::first_order(&alphabet).regular_state_count();
        let pre = StateSpace::pre_induced(&alphabet, false).regular_state_count();
        let second = StateSpace::second_order(&alphabet).regular_state_count();
        if (first, pre, second) != (2 * e + 1, 3 * e + 1, (2 * e + 1) * (2 * e + 1)) {
            return Err(format!("E={e}: got {first}/{pre}/{second}"));
        }
        let counts = count_new_states(e);
        if counts.carriers != e || counts.iob2_formula != (2 * e + 1 - 1) / 2 + 1 {
            return Err(format!("E={e}: new-state report {counts:?}"));
        }
    }
    Ok("2E+1 / 3E+1 / (2E+1)² for E=1..5; carriers=E, (N-1)/2+1 reported".into())
}

fn scorer_fixtures() -> Result<String, String> {
    let sentence = |labels: &[&str]| {
        let tokens: Vec<String> = (0..labels.len()).map(|i| format!("w{i}")).collect();
        let tokens: Vec<&str> = tokens.iter().map(String::as_str).collect();
        Sentence::from_strs(&tokens, Some(labels))
    };
    let strings = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let fixtures = [
        (sentence(&["B-A", "I-A", "O"]), strings(&["B-A", "I-A", "O"]), (1.0, 1.0, 1.0)),
        (sentence(&["B-A", "I-A"]), strings(&["B-A", "O"]), (0.0, 0.0, 0.0)),
        (
            sentence(&["B-A", "O", "B-B", "O", "O"]),
            strings(&["B-A", "B-B", "B-A", "B-A", "O"]),
            (0.25, 0.5, 1.0 / 3.0),
        ),
    ];
    for (i, (gold, pred, (p, r, f))) in fixtures.iter().enumerate() {
        let report = score(std::slice::from_ref(gold), std::slice::from_ref(pred)).map_err(|e| e.to_string())?;
        if report.precision() != *p || report.recall() != *r || (report.f1() - f).abs() > 1e-15 {
            return Err(format!("fixture {i}: got {:?}", report.overall));
        }
        let own = gold.labels.clone().unwrap();
        let perfect = score(std::slice::from_ref(gold), &[own]).map_err(|e| e.to_string())?;
        let has_chunks = perfect.overall.gold > 0;
        if has_chunks && perfect.f1() != 1.0 {
            return Err(format!("fixture {i}: score(gold, gold) not perfect"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let corpus = random_corpus(&mut rng, 200, &type_names(4), 30);
    let gold: Vec<Vec<String>> = corpus.iter().map(|s| s.labels.clone().unwrap()).collect();
    let perfect = score(&corpus, &gold).map_err(|e| e.to_string())?;
    if perfect.f1() != 1.0 || perfect.overall.correct != perfect.overall.gold {
        return Err("score(gold, gold) not perfect on random corpus".into());
    }
    Ok("three fixtures exact; score(gold, gold) = 1 on fixtures and a 200-sentence corpus".into())
}

fn persistence() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let types = type_names(3);
    let corpus = random_corpus(&mut rng, 60, &types, 12);
    let alphabet = LabelAlphabet::new(&types).unwrap();
    let probes = random_corpus(&mut rng, 100, &types, 25);
    for order in ModelOrder::ALL {
        let mut config = TrainConfig::new(order, TemplateConfig::new(FeatureSet::Two));
        config.max_iterations = 30;
        let (model, _) = train(&corpus, &config, &alphabet).map_err(|e| e.to_string())?;
        let text = model.to_text();
        let loaded = Model::load(text.as_bytes()).map_err(|e| e.to_string())?;
        for (i, s) in probes.iter().enumerate() {
            let before = model.decode_states(s).map_err(|e| e.to_string())?;
            let after = loaded.decode_states(s).map_err(|e| e.to_string())?;
            if before != after {
                return Err(format!("{order}: decode of probe {i} changed after reload"));
            }
        }
        if loaded.weights() != model.weights() {
            return Err(format!("{order}: weights changed after reload"));
        }
    }
    Ok("100 probe sentences decode identically after reload for all three orders".into())
}

/// Converged gradient max-norm at the default tolerance on the long-distance
/// corpus. Reported, not gated: a per-iteration relative stop of 1e-6 on an
/// objective near 1e3 with curvature near 1/σ² leaves gradients around 1e-2.
fn converged_gradient() -> Result<String, String> {
    let config = LongDistanceConfig::default();
    let mut synth = config.synth.clone();
    synth.sentences = config.train_sentences;
    let corpus = generate_synthetic(&synth).map_err(|e| e.to_string())?;
    let alphabet = LabelAlphabet::new(&synth.type_names()).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for order in ModelOrder::ALL {
        let mut train_config = config.train.clone();
        train_config.order = order;
        let (_, report) = train(&corpus, &train_config, &alphabet).map_err(|e| e.to_string())?;
        let g = report.final_gradient_max_norm;
        let tolerance_stop = matches!(
            report.termination,
            Termination::RelativeTolerance | Termination::GradientNorm
        );
        if tolerance_stop && g >= 1e-3 {
            ok = false;
        }
        parts.push(format!("{order} {g:.1e} ({})", report.termination.as_str()));
    }
    let detail = format!("max|grad| < 1e-3 at tolerance stop: {}", parts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn jnlpba_reproduction() -> Option<Result<String, String>> {
    let train_path = std::env::var("PICRF_JNLPBA_TRAIN").ok()?;
    let test_path = std::env::var("PICRF_JNLPBA_TEST").ok()?;
    let read = |p: &str| -> Result<Vec<Sentence>, String> {
        let file = std::fs::File::open(p).map_err(|e| e.to_string())?;
        read_conll(std::io::BufReader::new(file), 0, LabelColumn::Last).map_err(|e| e.to_string())
    };
    Some((|| {
        let train_corpus = read(&train_path)?;
        let test_corpus = read(&test_path)?;
        let mut base = TrainConfig::new(ModelOrder::First, TemplateConfig::new(FeatureSet::Two));
        base.threads = std::thread::available_parallelism().map_or(1, |n| n.get());
        let report = run_comparison(
            &train_corpus,
            &test_corpus,
            &[ModelOrder::First, ModelOrder::PreInduced],
            &[FeatureSet::Two],
            &base,
            "jnlpba",
        )
        .map_err(|e| e.to_string())?;
        let f = |o| 100.0 * report.row(o, FeatureSet::Two).unwrap().scores.f1();
        let (first, pre) = (f(ModelOrder::First), f(ModelOrder::PreInduced));
        let detail = format!("F1 first={first:.2} pre-induced={pre:.2} (reference 68.39 / 69.18)");
        if (first - 68.39).abs() <= 3.0 && pre >= first - 0.5 {
            Ok(detail)
        } else {
            Err(detail)
        }
    })())
}

fn main() {
    type Criterion = fn() -> Result<String, String>;
    let criteria: [(&str, Criterion); 9] = [
        ("1 partition-function oracle", partition_oracle),
        ("2 viterbi oracle", viterbi_oracle),
        ("3 gradient check", gradient_check),
        ("4 induction round trip", induction_round_trip),
        ("5 long-distance recovery", long_distance),
        ("6 timing ordering", timing_ordering),
        ("7 state counts", state_counts),
        ("8 scorer fixtures", scorer_fixtures),
        ("9 persistence", persistence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();

    let mut failures = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if filter.is_empty() || filter.iter().any(|f| "gradient".contains(f.as_str())) {
        match converged_gradient() {
            Ok(d) => println!("PASS invariant converged gradient (non-gating): {d}"),
            Err(d) => println!("FAIL invariant converged gradient (non-gating): {d}"),
        }
    }
    if filter.is_empty() || filter.iter().any(|f| "10 jnlpba".contains(f.as_str())) {
        match jnlpba_reproduction() {
            None => println!("SKIP criterion 10 jnlpba reproduction (non-gating): PICRF_JNLPBA_TRAIN/TEST not set"),
            Some(Ok(d)) => println!("PASS criterion 10 jnlpba reproduction (non-gating): {d}"),
            Some(Err(d)) => println!("FAIL criterion 10 jnlpba reproduction (non-gating): {d}"),
        }
    }
    if failures > 0 {
        println!("{failures} gating criteria failed");
        std::process::exit(1);
    }
}
