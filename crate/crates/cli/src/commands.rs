use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use picrf::corpus::{
    conll_to_string, generate_synthetic, read_conll, read_conll_auto, GapDistribution, LabelColumn,
    Sentence, SynthConfig, Tag,
};
use picrf::eval::{run_comparison, run_longdistance, score, LongDistanceConfig};
use picrf::induction::{induce_strs, revert_strs};
use picrf::training::measure_iteration_cost;
use picrf::{Executor, FeatureSet, LabelAlphabet, Model, ModelOrder, TemplateConfig, TrainConfig};

use crate::{
    BenchArgs, Direction, EvalArgs, OptimizerArgs, SynthArgs, SynthFlags, TagArgs, TemplateArgs,
    TrainArgs, TransformArgs,
};

/// Flag combinations clap cannot express; reported with exit code 2.
fn usage_error(message: &str) -> ! {
    let mut cmd = <crate::Cli as clap::CommandFactory>::command();
    cmd.error(clap::error::ErrorKind::ArgumentConflict, message).exit()
}

fn read_labelled(path: &Path) -> Result<Vec<Sentence>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_conll(BufReader::new(file), 0, LabelColumn::Last).with_context(|| format!("reading {}", path.display()))
}

fn read_any(path: &Path) -> Result<Vec<Sentence>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_conll_auto(&text).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn template(args: &TemplateArgs) -> Result<TemplateConfig> {
    let mut t = TemplateConfig::new(FeatureSet::from_id(args.features)?);
    t.min_feature_count = args.min_count;
    Ok(t)
}

fn train_config(order: ModelOrder, template: TemplateConfig, opt: &OptimizerArgs) -> TrainConfig {
    let mut c = TrainConfig::new(order, template);
    c.l2_variance = opt.l2_variance;
    c.max_iterations = opt.max_iters;
    c.relative_tolerance = opt.tol;
    c.history = opt.history;
    c.threads = opt.threads;
    c
}

pub fn train(args: TrainArgs) -> Result<()> {
    let corpus = read_labelled(&args.train)?;
    if corpus.is_empty() {
        bail!("{} contains no sentences", args.train.display());
    }
    let alphabet = LabelAlphabet::from_corpus(&corpus)?;
    let mut config = train_config(args.order, template(&args.template)?, &args.optimizer);
    config.decode_constraints = args.decode_constraints;
    config.seed = args.seed;
    let (model, report) = picrf::train(&corpus, &config, &alphabet)?;

    let out = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut out = BufWriter::new(out);
    model.save(&mut out)?;
    out.flush()?;
    if let Some(path) = &args.report {
        write_file(path, &report.to_table())?;
    }
    if let Some(path) = &args.records {
        write_file(path, &report.to_jsonl())?;
    }
    eprintln!(
        "trained {} model: {} states, {} parameters, {} iterations ({})",
        report.order,
        report.state_count,
        report.parameter_count,
        report.total_iterations(),
        report.termination.as_str()
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<Model> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Model::load(BufReader::new(file)).with_context(|| format!("loading model {}", path.display()))
}

/// Tokens only; gold labels in the input are ignored.
fn tag_corpus(model: &Model, input: &Path, threads: usize) -> Result<(Vec<Sentence>, Vec<Vec<String>>)> {
    let mut corpus = read_any(input)?;
    for s in &mut corpus {
        s.labels = None;
    }
    let exec = Executor::with_threads(threads)?;
    let predicted = model.tag_corpus(&corpus, &exec)?;
    Ok((corpus, predicted))
}

pub fn tag(args: TagArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let (corpus, predicted) = tag_corpus(&model, &args.input, args.threads)?;
    write_file(&args.output, &conll_to_string(&corpus, Some(&predicted))?)
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let gold = read_labelled(&args.gold)?;
    let predicted: Vec<Vec<String>> = match (&args.pred, &args.model, &args.input) {
        (Some(pred), _, _) => read_labelled(pred)?
            .into_iter()
            .map(|s| s.labels.unwrap_or_default())
            .collect(),
        (None, Some(model), Some(input)) => tag_corpus(&load_model(model)?, input, 1)?.1,
        _ => usage_error("either --pred or --model with --input is required"),
    };
    let report = score(&gold, &predicted)?;
    print!("{}", report.to_table(args.per_type));
    Ok(())
}

/// Alphabet over the types named by base or carrier labels.
fn alphabet_from_expanded(corpus: &[Sentence]) -> Result<LabelAlphabet> {
    let mut types = BTreeSet::new();
    for label in corpus.iter().flat_map(|s| s.labels.iter().flatten()) {
        let ty = match label.strip_suffix("[O]") {
            Some(ty) => ty,
            None => match Tag::parse(label)?.entity_type() {
                Some(ty) => ty,
                None => continue,
            },
        };
        types.insert(ty.to_string());
    }
    Ok(LabelAlphabet::new(&types.into_iter().collect::<Vec<_>>())?)
}

pub fn transform(args: TransformArgs) -> Result<()> {
    let mut corpus = read_labelled(&args.input)?;
    let alphabet = alphabet_from_expanded(&corpus)?;
    for (i, s) in corpus.iter_mut().enumerate() {
        let labels = s.labels.as_deref().unwrap_or_default();
        let rewritten = match args.direction {
            Direction::Induce => induce_strs(labels, &alphabet),
            Direction::Revert => revert_strs(labels, &alphabet),
        }
        .with_context(|| format!("sentence {}", i + 1))?;
        s.labels = Some(rewritten);
    }
    write_file(&args.output, &conll_to_string(&corpus, None)?)
}

fn synth_config(flags: &SynthFlags, default_types: usize) -> SynthConfig {
    let mut c = SynthConfig::new(flags.types.unwrap_or(default_types));
    c.seed = flags.seed;
    c.gap = match &flags.gap_weights {
        Some(pairs) => GapDistribution::Weighted(parse_gap_weights(pairs)),
        None => GapDistribution::Uniform {
            min: flags.gap_min,
            max: flags.gap_max,
        },
    };
    if let Some(rule) = &flags.rule {
        c.dependency_rule = rule
            .split(',')
            .map(|v| v.trim().parse().unwrap_or_else(|_| usage_error("--rule expects comma-separated type indices")))
            .collect();
    }
    c
}

fn parse_gap_weights(pairs: &str) -> Vec<(usize, f64)> {
    pairs.split(',')
        .map(|pair| {
            let parsed = pair
                .split_once(':')
                .and_then(|(g, w)| Some((g.trim().parse().ok()?, w.trim().parse().ok()?)));
            parsed.unwrap_or_else(|| usage_error("--gap-weights expects gap:weight pairs"))
        })
        .collect()
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let mut config = synth_config(&args.synth, 2);
    config.sentences = args.sentences;
    let corpus = generate_synthetic(&config)?;
    write_file(&args.out, &conll_to_string(&corpus, None)?)
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let set = FeatureSet::from_id(args.features)?;
    let (table, jsonl) = if args.longdistance {
        let mut config = LongDistanceConfig {
            synth: synth_config(&args.synth, 2),
            train_sentences: args.train_sentences,
            test_sentences: args.test_sentences,
            ..Default::default()
        };
        if let Some(orders) = &args.orders {
            config.orders = orders.clone();
        }
        config.train = train_config(ModelOrder::First, TemplateConfig::new(set), &args.optimizer);
        let report = run_longdistance(&config)?;
        (report.to_table(), report.to_jsonl())
    } else if args.timing {
        let mut synth = synth_config(&args.synth, 5);
        synth.sentences = args.sentences;
        let corpus = generate_synthetic(&synth)?;
        let alphabet = LabelAlphabet::new(&synth.type_names())?;
        let orders = args
            .orders
            .clone()
            .unwrap_or_else(|| vec![ModelOrder::First, ModelOrder::PreInduced, ModelOrder::Second]);
        let configs: Vec<TrainConfig> = orders
            .iter()
            .map(|&o| train_config(o, TemplateConfig::new(set), &args.optimizer))
            .collect();
        let table = measure_iteration_cost(&corpus, &configs, &alphabet, args.warmup, args.measured)?;
        (table.to_table(), table.to_jsonl())
    } else if let (Some(train), Some(test)) = (&args.train, &args.test) {
        let train_corpus = read_labelled(train)?;
        let test_corpus = read_labelled(test)?;
        let orders = args.orders.clone().unwrap_or_else(|| ModelOrder::ALL.to_vec());
        let sets = args
            .feature_sets
            .iter()
            .map(|&id| FeatureSet::from_id(id))
            .collect::<picrf::Result<Vec<_>>>()?;
        let base = train_config(ModelOrder::First, TemplateConfig::new(set), &args.optimizer);
        let id = train.file_stem().map_or("corpus".into(), |s| s.to_string_lossy().into_owned());
        let report = run_comparison(&train_corpus, &test_corpus, &orders, &sets, &base, &id)?;
        (report.to_table(), report.to_jsonl())
    } else {
        usage_error("choose --longdistance, --timing, or --train with --test");
    };
    print!("{table}");
    if let Some(path) = &args.records {
        write_file(path, &jsonl)?;
    }
    Ok(())
}
