//! Subcommand implementations. Each returns the exit code on completion or a
//! [`CliError`] that maps onto one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use attrib_core::classifier::{
    classify_corpus, classify_dataset, find_high_yield_articles, report_from_traces, CandidateLabel,
    ClassificationTrace, MatchRuleSet,
};
use attrib_core::corpus::{Corpus, IngestFailure, XmlOptions};
use attrib_core::labels::{read_labels_csv, validate_against_corpus, Dataset};
use attrib_core::mosaic::{layout, render_svg, Legend, MosaicTable, ShadingScheme};
use attrib_core::stats::suite::parse_interaction;
use attrib_core::stats::{pearson_residuals, run_analysis_suite, Feature, PopulationSpec, SuiteConfig, SuiteEntry};
use serde::Serialize;
use thiserror::Error;

use crate::{
    ClassifyArgs, CorpusArgs, EvaluateArgs, HighYieldArgs, IngestArgs, SuiteArgs, EXIT_DATA, EXIT_OK, EXIT_USAGE,
};

/// Contrasts run when the suite is given no test configuration.
pub const DEFAULT_CONTRASTS: [(&str, &str); 5] = [
    ("trump", "clinton"),
    ("trump", "non_trump"),
    ("trump", "non_trump_or_clinton"),
    ("clinton", "non_clinton"),
    ("clinton", "non_trump_or_clinton"),
];

pub const DEFAULT_INTERACTIONS: [(Feature, Feature); 2] = [
    (Feature::StanceType, Feature::CueValence),
    (Feature::StanceType, Feature::AttrType),
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Io { .. } => EXIT_DATA,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })
}

fn resolve(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

#[derive(Debug, Serialize, Default)]
struct ConfigEcho {
    command: &'static str,
    corpus_dir: Option<PathBuf>,
    labels_csv: Option<PathBuf>,
    rules_file: Option<PathBuf>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    lenient: bool,
    mosaic: bool,
    contrasts: Vec<String>,
    features: Vec<String>,
    interactions: Vec<String>,
    target: Option<String>,
    min_count: Option<usize>,
    max_tables: Option<u64>,
    n_sim: Option<u64>,
}

fn write_config_echo(out: &Path, echo: &ConfigEcho) -> Result<()> {
    let mut s = serde_json::to_string_pretty(echo).expect("config serializes");
    s.push('\n');
    write_file(&out.join("config_echo.json"), s)
}

fn load_corpus(args: &CorpusArgs) -> Result<(Corpus, Vec<IngestFailure>)> {
    Corpus::load_dir(&args.corpus, XmlOptions { lenient: args.lenient }).map_err(|e| CliError::Data(e.to_string()))
}

/// Load a corpus that must ingest cleanly; failures are listed on stderr.
fn load_clean_corpus(args: &CorpusArgs) -> Result<Corpus> {
    let (corpus, failures) = load_corpus(args)?;
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("{}: {}", f.key, f.error);
        }
        return Err(CliError::Data(format!("{} article(s) failed to ingest", failures.len())));
    }
    Ok(corpus)
}

fn load_rules(path: Option<&Path>) -> Result<MatchRuleSet> {
    match path {
        None => Ok(MatchRuleSet::default()),
        Some(p) => MatchRuleSet::from_file(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
    }
}

fn load_labels(path: &Path) -> Result<Dataset> {
    read_labels_csv(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Print findings; fail if any is an error.
fn check_labels(dataset: &Dataset, corpus: &Corpus) -> Result<()> {
    let report = validate_against_corpus(dataset, corpus);
    for f in &report.findings {
        let level = if f.is_error() { "error" } else { "warning" };
        eprintln!("{level}: {f}");
    }
    match report.error_count() {
        0 => Ok(()),
        n => Err(CliError::Data(format!("{n} label row(s) failed validation against the corpus"))),
    }
}

/// Write to stdout, ignoring a closed pipe (`attrib ... | head`).
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<i32> {
    let (corpus, failures) = load_corpus(&args.corpus)?;

    let mut per_pub: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for a in corpus.articles.values() {
        let e = per_pub.entry(a.key.publisher_name.as_str()).or_default();
        e.0 += 1;
        e.1 += a.attributions.len();
    }
    let mut text = String::from("publisher\tarticles\tattributions\n");
    for (p, (n, m)) in &per_pub {
        let _ = writeln!(text, "{p}\t{n}\t{m}");
    }
    emit(&text);
    for f in &failures {
        eprintln!("{}: {}", f.key, f.error);
    }

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let mut rows: Vec<(String, String, String)> = corpus
            .articles
            .values()
            .map(|a| {
                let cols = format!("{}\t{}\t{}", a.tokens.len(), a.coref_chains.len(), a.attributions.len());
                (a.key.publisher_name.clone(), a.key.article_name.clone(), format!("{cols}\tok"))
            })
            .collect();
        for f in &failures {
            let msg = f.error.to_string().replace(['\t', '\n'], " ");
            rows.push((f.key.publisher_name.clone(), f.key.article_name.clone(), format!("\t\t\terror: {msg}")));
        }
        rows.sort();
        let mut tsv = String::from("publisher\tarticle\ttokens\tcoref_chains\tattributions\tstatus\n");
        for (p, a, rest) in rows {
            let _ = writeln!(tsv, "{p}\t{a}\t{rest}");
        }
        write_file(&out.join("summary.tsv"), tsv)?;
        write_config_echo(
            out,
            &ConfigEcho {
                command: "ingest",
                corpus_dir: Some(resolve(&args.corpus.corpus)),
                output_dir: Some(resolve(out)),
                lenient: args.corpus.lenient,
                ..Default::default()
            },
        )?;
    }
    Ok(if failures.is_empty() { EXIT_OK } else { EXIT_DATA })
}

fn traces_jsonl(traces: &[ClassificationTrace]) -> String {
    let mut s = String::new();
    for t in traces {
        s.push_str(&serde_json::to_string(t).expect("trace serializes"));
        s.push('\n');
    }
    s
}

pub fn cmd_classify(args: &ClassifyArgs) -> Result<i32> {
    let corpus = load_clean_corpus(&args.corpus)?;
    let rules = load_rules(args.rules.as_deref())?;
    let traces = classify_corpus(&corpus, &rules);
    ensure_dir(&args.out)?;
    write_file(&args.out.join("traces.jsonl"), traces_jsonl(&traces))?;
    write_config_echo(
        &args.out,
        &ConfigEcho {
            command: "classify",
            corpus_dir: Some(resolve(&args.corpus.corpus)),
            rules_file: args.rules.as_deref().map(resolve),
            output_dir: Some(resolve(&args.out)),
            lenient: args.corpus.lenient,
            ..Default::default()
        },
    )?;
    let mut counts: BTreeMap<CandidateLabel, usize> = BTreeMap::new();
    for t in &traces {
        *counts.entry(t.label).or_default() += 1;
    }
    let mut text = String::from("label\tcount\n");
    for l in CandidateLabel::ALL {
        let _ = writeln!(text, "{l}\t{}", counts.get(&l).copied().unwrap_or(0));
    }
    emit(&text);
    Ok(EXIT_OK)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<i32> {
    let corpus = load_clean_corpus(&args.corpus)?;
    let dataset = load_labels(&args.labels)?;
    check_labels(&dataset, &corpus)?;
    let rules = load_rules(args.rules.as_deref())?;
    let traces = classify_dataset(&dataset, &corpus, &rules).map_err(|e| CliError::Data(e.to_string()))?;
    let report = report_from_traces(&traces, &dataset);

    ensure_dir(&args.out)?;
    write_file(&args.out.join("traces.jsonl"), traces_jsonl(&traces))?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_file(&args.out.join("eval.json"), json)?;
    write_config_echo(
        &args.out,
        &ConfigEcho {
            command: "evaluate",
            corpus_dir: Some(resolve(&args.corpus.corpus)),
            labels_csv: Some(resolve(&args.labels)),
            rules_file: args.rules.as_deref().map(resolve),
            output_dir: Some(resolve(&args.out)),
            lenient: args.corpus.lenient,
            ..Default::default()
        },
    )?;

    let mut text = format!("n\t{}\naccuracy\t{:.6}\n", report.n, report.accuracy);
    for (label, c) in &report.per_candidate {
        let _ = writeln!(text, "{label}\tprecision {:.6}\trecall {:.6}", c.precision, c.recall);
    }
    emit(&text);
    Ok(EXIT_OK)
}

/// (contrasts, features, interactions)
pub type SuitePlan = (Vec<(String, String)>, Vec<Feature>, Vec<(Feature, Feature)>);

/// Contrasts, features and interactions after defaults are applied.
///
/// With no test flags at all, the full default battery runs. Otherwise the
/// given lists are used as-is, except that contrasts fall back to the
/// defaults and features fall back to every feature when no interaction was
/// requested either.
pub fn suite_plan(args: &SuiteArgs) -> Result<SuitePlan> {
    let no_flags = args.contrasts.is_empty() && args.features.is_empty() && args.interactions.is_empty();
    let contrasts = if args.contrasts.is_empty() {
        DEFAULT_CONTRASTS.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    } else {
        args.contrasts
            .iter()
            .map(|c| match c.split_once(':') {
                Some((a, b)) if !a.is_empty() && !b.is_empty() && !b.contains(':') => Ok((a.to_string(), b.to_string())),
                _ => Err(CliError::Usage(format!("contrast `{c}` is not of the form A:B"))),
            })
            .collect::<Result<Vec<_>>>()?
    };
    let features = if args.features.is_empty() {
        if args.interactions.is_empty() {
            Feature::ALL.to_vec()
        } else {
            Vec::new()
        }
    } else {
        args.features
            .iter()
            .map(|f| f.parse::<Feature>().map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<Vec<_>>>()?
    };
    let interactions = if no_flags {
        DEFAULT_INTERACTIONS.to_vec()
    } else {
        args.interactions
            .iter()
            .map(|s| parse_interaction(s).map_err(|_| CliError::Usage(format!("interaction `{s}` is not F1xF2"))))
            .collect::<Result<Vec<_>>>()?
    };
    Ok((contrasts, features, interactions))
}

pub fn mosaic_file_name(entry: &SuiteEntry) -> String {
    format!(
        "mosaic_{}-vs-{}_{}.svg",
        entry.target_population_label, entry.contrast_population_label, entry.test_factor
    )
}

pub fn cmd_suite(args: &SuiteArgs) -> Result<i32> {
    let (contrasts, features, interactions) = suite_plan(args)?;
    for (a, b) in &contrasts {
        for name in [a, b] {
            PopulationSpec::parse(name).map_err(|e| CliError::Usage(e.to_string()))?;
        }
    }
    let dataset = load_labels(&args.labels)?;
    if let Some(dir) = &args.corpus {
        let corpus = load_clean_corpus(&CorpusArgs { corpus: dir.clone(), lenient: args.lenient })?;
        check_labels(&dataset, &corpus)?;
    }
    let publishers: BTreeSet<&str> = dataset.rows().iter().map(|r| r.key.publisher_name.as_str()).collect();
    for (a, b) in &contrasts {
        for name in [a, b] {
            let spec = PopulationSpec::parse(name).expect("checked above");
            if let Some(p) = &spec.publisher {
                if !publishers.contains(p.as_str()) {
                    return Err(CliError::Data(format!("population `{name}` names unknown publisher `{p}`")));
                }
            }
        }
    }

    let mut config = SuiteConfig::new(contrasts.clone(), features.clone(), interactions.clone(), args.seed);
    config.max_tables = args.max_tables;
    config.n_sim = args.n_sim;
    let entries = run_analysis_suite(&dataset, &config).map_err(|e| CliError::Usage(e.to_string()))?;

    ensure_dir(&args.out)?;
    let mut json = serde_json::to_string_pretty(&entries).expect("suite serializes");
    json.push('\n');
    write_file(&args.out.join("suite.json"), json)?;

    if args.mosaic {
        let scheme = ShadingScheme::default();
        for e in &entries {
            let Some(table) = &e.table else { continue };
            let residuals = pearson_residuals(table).map_err(|err| CliError::Data(err.to_string()))?;
            let lay = layout(&MosaicTable::from(table)).map_err(|err| CliError::Data(err.to_string()))?;
            let legend = Legend {
                title: format!("{} vs {}: {}", e.target_population_label, e.contrast_population_label, e.test_factor),
                x_title: e.test_factor.clone(),
                y_title: "population".to_string(),
                show_key: true,
            };
            let svg = render_svg(&lay, Some(&residuals), &scheme, &legend).map_err(|err| CliError::Data(err.to_string()))?;
            write_file(&args.out.join(mosaic_file_name(e)), svg)?;
        }
    }

    write_config_echo(
        &args.out,
        &ConfigEcho {
            command: "suite",
            corpus_dir: args.corpus.as_deref().map(resolve),
            labels_csv: Some(resolve(&args.labels)),
            seed: Some(args.seed),
            output_dir: Some(resolve(&args.out)),
            lenient: args.lenient,
            mosaic: args.mosaic,
            contrasts: contrasts.iter().map(|(a, b)| format!("{a}:{b}")).collect(),
            features: features.iter().map(|f| f.to_string()).collect(),
            interactions: interactions.iter().map(|(a, b)| format!("{a}x{b}")).collect(),
            max_tables: Some(args.max_tables),
            n_sim: Some(args.n_sim),
            ..Default::default()
        },
    )?;

    let mut text = String::from("target\tcontrast\ttest_type\ttest_factor\tp_value\n");
    for e in &entries {
        let p = e.p_value.map_or_else(|| "-".to_string(), |p| format!("{p:.6e}"));
        let _ = writeln!(
            text,
            "{}\t{}\t{}\t{}\t{p}",
            e.target_population_label, e.contrast_population_label, e.test_type, e.test_factor
        );
    }
    emit(&text);
    Ok(EXIT_OK)
}

pub fn cmd_high_yield(args: &HighYieldArgs) -> Result<i32> {
    let target = match args.target.parse::<CandidateLabel>() {
        Ok(t @ (CandidateLabel::Trump | CandidateLabel::Clinton)) => t,
        _ => return Err(CliError::Data(format!("unsupported target `{}` (expected trump or clinton)", args.target))),
    };
    let corpus = load_clean_corpus(&args.corpus)?;
    let rules = load_rules(args.rules.as_deref())?;
    let hits = find_high_yield_articles(&corpus, &rules, target, args.min_count);
    let mut tsv = String::from("publisher\tarticle\tcount\n");
    for (key, n) in &hits {
        let _ = writeln!(tsv, "{}\t{}\t{n}", key.publisher_name, key.article_name);
    }
    emit(&tsv);
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_file(&out.join("high_yield.tsv"), &tsv)?;
        write_config_echo(
            out,
            &ConfigEcho {
                command: "high-yield",
                corpus_dir: Some(resolve(&args.corpus.corpus)),
                rules_file: args.rules.as_deref().map(resolve),
                output_dir: Some(resolve(out)),
                lenient: args.corpus.lenient,
                target: Some(args.target.clone()),
                min_count: Some(args.min_count),
                ..Default::default()
            },
        )?;
    }
    Ok(EXIT_OK)
}
