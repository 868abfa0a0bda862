use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use abdetect_core::capture::{
    capture_sites, generate_corpus, load_pair_dir, save_pair, write_corpus, CaptureStatus, CorpusSpec,
    SnapshotMode, MINI_FILTER_LIST,
};
use abdetect_core::features::extract_corpus;
use abdetect_core::filterlist::{parse_filter_list, strip_antiadblock, FilterList};
use abdetect_core::ingest::{
    dedupe_union, parse_awis_xml, parse_issue_corpus, parse_site_list, read_dataset, write_dataset,
};
use abdetect_core::ml::{cross_validate, predict, rank_features, ClassifierModel, Learner, Prediction, TrainingSet};
use abdetect_core::report::{
    aggregate_region, label_response, merge_labels, read_manual_labels, read_verification, write_labels,
};
use abdetect_core::{LabeledDataset, Label};

use crate::config::Config;
use crate::error::{CliError, Stage, StageExt};
use crate::runlog::Outputs;
use crate::{
    CaptureArgs, ClassifyArgs, DataArgs, EvaluateArgs, ExtractArgs, FiltersArgs, LearnerArgs, RankArgs, ReportArgs,
    RespondArgs, SitesArgs, TrainArgs,
};

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::new(Stage::Input, format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    let bytes = read(path)?;
    String::from_utf8(bytes).map_err(|e| CliError::new(Stage::Input, format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>, outputs: &mut Outputs) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::new(Stage::Output, format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::new(Stage::Output, format!("{}: {e}", path.display())))?;
    outputs.push(path);
    Ok(())
}

fn load_dataset(args: &DataArgs, stage: Stage) -> Result<LabeledDataset, CliError> {
    let ds = read_dataset(&read(&args.data)?).stage(stage)?;
    if args.features.is_empty() {
        Ok(ds)
    } else {
        ds.with_schema(&args.features).stage(stage)
    }
}

fn learner(args: &LearnerArgs, seed: u64, stage: Stage) -> Result<Learner, CliError> {
    let mut learner = Learner::from_name(&args.learner, seed).stage(stage)?;
    match &mut learner {
        Learner::J48 { min_leaf } => {
            if let Some(m) = args.min_leaf {
                *min_leaf = m;
            }
        }
        Learner::RandomForest { n_trees, .. } => {
            if let Some(t) = args.trees {
                *n_trees = t;
            }
        }
        Learner::NaiveBayes => {}
    }
    Ok(learner)
}

fn filter_list(config: &Config) -> Result<FilterList, CliError> {
    match &config.filter_list {
        Some(path) => Ok(parse_filter_list(&read_text(path)?)),
        None => Ok(parse_filter_list(MINI_FILTER_LIST)),
    }
}

pub fn sites(args: &SitesArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    if args.lists.is_empty() && args.awis.is_empty() && args.issues.is_empty() {
        return Err(CliError::new(Stage::Sites, "no inputs: pass --list, --awis-xml or --issues"));
    }
    let mut lists = Vec::new();
    for path in &args.lists {
        lists.push(parse_site_list(&read_text(path)?, &args.tag).stage(Stage::Sites)?);
    }
    for path in &args.awis {
        lists.push(parse_awis_xml(&read(path)?).stage(Stage::Sites)?);
    }
    for path in &args.issues {
        lists.push(parse_issue_corpus(&read(path)?).stage(Stage::Sites)?);
    }
    let merged = dedupe_union(&lists);
    eprintln!("{} sites", merged.len());
    write(&args.out, abdetect_core::ingest::write_site_list(&merged), outputs)
}

pub fn capture(args: &CaptureArgs, config: &Config, outputs: &mut Outputs) -> Result<(), CliError> {
    if let Some(pages) = args.synth {
        let spec = CorpusSpec {
            pages,
            walls: args.walls,
            dead: args.dead,
            seed: config.seed,
            host_prefix: args.host_prefix.clone(),
        };
        let list = filter_list(config)?;
        let corpus = generate_corpus(&spec, &list).stage(Stage::Capture)?;
        write_corpus(&corpus, &args.out).stage(Stage::Output)?;
        let mut truth = String::from("host,verdict\n");
        for site in &corpus {
            truth.push_str(&format!("{},{}\n", site.pair.site.host(), site.planted_wall));
        }
        write(&args.out.join("labels.csv"), truth, outputs)?;
        outputs.push(&args.out);
        eprintln!("{} synthetic pairs ({} walls)", corpus.len(), args.walls);
        return Ok(());
    }

    let pairs = if let Some(root) = &args.offline {
        let mut dirs = Vec::new();
        for entry in fs::read_dir(root).map_err(|e| CliError::new(Stage::Input, format!("{}: {e}", root.display())))? {
            let entry = entry.map_err(|e| CliError::new(Stage::Input, e.to_string()))?;
            if entry.path().is_dir() {
                dirs.push(entry.path());
            }
        }
        dirs.sort();
        let mut pairs = Vec::with_capacity(dirs.len());
        for dir in dirs {
            let mut pair = load_pair_dir(&dir).stage(Stage::Capture)?;
            for snapshot in [&mut pair.baseline, &mut pair.blocked].into_iter().flatten() {
                snapshot.mode = SnapshotMode::Offline;
            }
            pairs.push(pair);
        }
        pairs
    } else if let Some(list) = &args.sites {
        let sites = parse_site_list(&read_text(list)?, "list").stage(Stage::Capture)?;
        let baseline = config.session("baseline")?;
        let blocked = config.session("blocked")?;
        let options = config.capture_options()?;
        capture_sites(&sites, &baseline, &blocked, &options, config.parallelism)
    } else {
        return Err(CliError::new(Stage::Capture, "pass one of --sites, --offline or --synth"));
    };

    let mut ok = 0;
    for pair in &pairs {
        if pair.status == CaptureStatus::Ok {
            ok += 1;
        } else {
            eprintln!("{}: {}", pair.site.host(), pair.status);
        }
        save_pair(pair, &args.out).stage(Stage::Output)?;
    }
    outputs.push(&args.out);
    eprintln!("{ok}/{} pairs captured", pairs.len());
    Ok(())
}

pub fn extract(args: &ExtractArgs, config: &Config, outputs: &mut Outputs) -> Result<(), CliError> {
    if !args.snapshots.is_dir() {
        return Err(CliError::new(
            Stage::Input,
            format!("{}: not a snapshot directory", args.snapshots.display()),
        ));
    }
    let mut extraction = extract_corpus(&args.snapshots, &config.keywords()).stage(Stage::Extract)?;
    if let Some(path) = &args.labels {
        let verdicts = read_verification(&read(path)?).stage(Stage::Extract)?;
        for row in &mut extraction.dataset.rows {
            if let Some(&v) = verdicts.get(&row.site) {
                row.label = Label::from(v);
            }
        }
    }
    write(&args.out, write_dataset(&extraction.dataset), outputs)?;
    if let Some(path) = &args.skips {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["host", "reason"]).stage(Stage::Output)?;
        for s in &extraction.skipped {
            w.write_record([&s.host, &s.reason]).stage(Stage::Output)?;
        }
        write(path, w.into_inner().expect("in-memory write"), outputs)?;
    }
    eprintln!(
        "{} rows, {} skipped",
        extraction.dataset.rows.len(),
        extraction.skipped.len()
    );
    Ok(())
}

pub fn rank(args: &RankArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    let ds = load_dataset(&args.data, Stage::Rank)?;
    let ranks = rank_features(&ds).stage(Stage::Rank)?;
    let mut table = String::new();
    for r in &ranks {
        let threshold = r.threshold.map_or("-".to_string(), |t| format!("{t}"));
        table.push_str(&format!("{:<10} {:>8.4} {:>8.2}%  <= {}\n", r.feature, r.info_gain, r.percent, threshold));
    }
    print!("{table}");
    if let Some(out) = &args.out {
        let mut json = serde_json::to_string_pretty(&ranks).stage(Stage::Rank)?;
        json.push('\n');
        write(out, json, outputs)?;
    }
    Ok(())
}

pub fn train(args: &TrainArgs, config: &Config, outputs: &mut Outputs) -> Result<(), CliError> {
    let ds = load_dataset(&args.data, Stage::Train)?;
    let learner = learner(&args.learner, config.seed, Stage::Train)?;
    let set = TrainingSet::from_dataset(&ds);
    let model = learner.train(&set).stage(Stage::Train)?;
    if let ClassifierModel::J48(tree) = &model {
        eprint!("{}", tree.render());
    }
    eprintln!("trained {learner} on {} rows", set.len());
    write(&args.out, model.to_json(), outputs)
}

pub fn classify(args: &ClassifyArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    let model = ClassifierModel::from_json(&read_text(&args.model)?).stage(Stage::Classify)?;
    let ds = read_dataset(&read(&args.data)?).stage(Stage::Classify)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["site", "label", "score"]).stage(Stage::Output)?;
    let mut positives = 0;
    for row in &ds.rows {
        let p = predict(&model, row).stage(Stage::Classify)?;
        if p.label == Label::True {
            positives += 1;
        }
        w.write_record([p.site.as_str(), p.label.token(), &format!("{:.6}", p.score)])
            .stage(Stage::Output)?;
    }
    eprintln!("{positives}/{} sites flagged", ds.rows.len());
    write(&args.out, w.into_inner().expect("in-memory write"), outputs)
}

pub fn evaluate(args: &EvaluateArgs, config: &Config, outputs: &mut Outputs) -> Result<(), CliError> {
    let ds = load_dataset(&args.data, Stage::Evaluate)?;
    let learner = learner(&args.learner, config.seed, Stage::Evaluate)?;
    let set = TrainingSet::from_dataset(&ds);
    let report = cross_validate(&set, &learner, args.cv, config.seed).stage(Stage::Evaluate)?;
    let text = report.render_text();
    print!("{text}");
    if let Some(path) = &args.json {
        write(path, report.to_json(), outputs)?;
    }
    if let Some(path) = &args.text {
        write(path, text, outputs)?;
    }
    Ok(())
}

/// Reads a `site,label,score` predictions file.
fn read_predictions(path: &Path, stage: Stage) -> Result<Vec<Prediction>, CliError> {
    let bytes = read(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.stage(stage)?;
        let bad = |what: &str| CliError::new(stage, format!("{}:{}: {what}", path.display(), i + 2));
        let site = record.get(0).ok_or_else(|| bad("missing site"))?.to_string();
        let label: Label = record
            .get(1)
            .ok_or_else(|| bad("missing label"))?
            .parse()
            .map_err(|e: String| bad(&e))?;
        let score = match record.get(2) {
            Some(s) => s.parse().map_err(|_| bad("bad score"))?,
            None => f64::from(u8::from(label == Label::True)),
        };
        out.push(Prediction { site, label, score });
    }
    Ok(out)
}

pub fn report(args: &ReportArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    let verified = read_verification(&read(&args.verified)?).stage(Stage::Report)?;
    let mut runs = Vec::new();
    for spec in &args.predictions {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| CliError::new(Stage::Report, format!("expected name=file, got {spec:?}")))?;
        runs.push((name.to_string(), read_predictions(Path::new(path), Stage::Report)?));
    }
    let report = aggregate_region(&args.region, &runs, &verified).stage(Stage::Report)?;
    let text = report.render_text();
    print!("{text}");
    if let Some(path) = &args.json {
        write(path, report.to_json(), outputs)?;
    }
    if let Some(path) = &args.text {
        write(path, text, outputs)?;
    }
    Ok(())
}

pub fn respond(args: &RespondArgs, config: &Config, outputs: &mut Outputs) -> Result<(), CliError> {
    let flagged: Option<BTreeMap<String, bool>> = match &args.predictions {
        Some(path) => Some(
            read_predictions(path, Stage::Respond)?
                .into_iter()
                .map(|p| (p.site, p.label == Label::True))
                .collect(),
        ),
        None => None,
    };
    let mut dirs = Vec::new();
    for entry in fs::read_dir(&args.snapshots)
        .map_err(|e| CliError::new(Stage::Input, format!("{}: {e}", args.snapshots.display())))?
    {
        let entry = entry.map_err(|e| CliError::new(Stage::Input, e.to_string()))?;
        if entry.path().is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();

    let thresholds = config.thresholds();
    let keywords = config.keywords();
    let mut heuristic = Vec::new();
    for dir in dirs {
        let host = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if let Some(flagged) = &flagged {
            if flagged.get(&host) != Some(&true) {
                continue;
            }
        }
        let pair = load_pair_dir(&dir).stage(Stage::Respond)?;
        if pair.status != CaptureStatus::Ok {
            continue;
        }
        heuristic.push((host, label_response(&pair, &thresholds, &keywords).stage(Stage::Respond)?));
    }
    let manual = match &args.manual {
        Some(path) => read_manual_labels(&read(path)?).stage(Stage::Respond)?,
        None => BTreeMap::new(),
    };
    let merged = merge_labels(heuristic, &manual);
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    for (_, l) in &merged {
        *tally.entry(l.category.to_string()).or_default() += 1;
    }
    for (category, n) in &tally {
        eprintln!("{category}: {n}");
    }
    write(&args.out, write_labels(&merged), outputs)
}

pub fn filters(args: &FiltersArgs, outputs: &mut Outputs) -> Result<(), CliError> {
    let text = read_text(&args.list)?;
    let list = parse_filter_list(&text);
    if list.is_empty() {
        return Err(CliError::new(Stage::Filters, format!("{}: no rules", args.list.display())));
    }
    for (rule, note) in list.diagnostics() {
        eprintln!("line {}: {note}", rule.source_line);
    }
    let kept = strip_antiadblock(&list);
    let lines: Vec<&str> = text.lines().collect();
    let mut out = String::new();
    for rule in &kept.rules {
        out.push_str(lines[rule.source_line - 1]);
        out.push('\n');
    }
    eprintln!("kept {} of {} rules", kept.len(), list.len());
    write(&args.out, out, outputs)
}
