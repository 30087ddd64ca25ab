//! Command implementations: the full `run` pipeline plus the corpus-level
//! reports (`synth`, `terms`, `agreement`, `homogeneity`).
//!
//! Pipeline order is ingest → filter → dedup → featurize → strategy →
//! evaluation → output. Each stage tags the errors it raises, and output
//! writing is single-threaded so a bundle is always written in the same
//! order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use scorecast::corpus::{
    agreement_stats, apply_inclusion, dedup_within_uoa, export_jsonl, generate_synthetic,
    ingest_corpus, journal_homogeneity, ArticleRecord, CorpusFormat, DropCounts, Gender,
    LabelScheme,
};
use scorecast::evaluation::{
    blend_overall_accuracy, gpa_rank_shift, half_sample_doubling, institution_correlations,
    institutional_shift, size_quality_correlations, subgroup_shift, BlendedIteration,
    CorrelationMode, ShiftReport,
};
use scorecast::features::{article_terms, term_association_report};
use scorecast::strategies::active::{run_active_learning, AlTrace, StopReason};
use scorecast::strategies::{
    cross_year, outcome_summary_csv, outcome_to_json, run_strategy1, run_strategy2,
    CrossYearReport, FeaturePlan, Provenance, SplitPlan, StrategyOutcome,
};

use crate::config::{load_synth_spec, CliError, CliResult, ResolvedConfig, StrategyChoice};
use crate::plot::{bar_chart, line_chart, Series};

const HALF_SAMPLE_ITERATIONS: usize = 10;

fn corpus_format(path: &Path) -> CorpusFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
        _ => CorpusFormat::Jsonl,
    }
}

/// Corpus after the ingest/filter/dedup stages, with the counts each stage
/// reported.
pub struct CorpusStages {
    pub records: Vec<ArticleRecord>,
    pub ingested: usize,
    pub drops: DropCounts,
    pub after_dedup: usize,
    /// The generator spec, when the corpus was synthesized, so manifests can
    /// embed it.
    pub generator_spec: Option<Value>,
}

/// Run the corpus stages shared by every command. `dedup` is skipped for the
/// agreement report, which measures exactly the duplicates dedup removes.
pub fn load_corpus(resolved: &ResolvedConfig, dedup: bool) -> CliResult<CorpusStages> {
    let mut generator_spec = None;
    let raw = if let Some(path) = &resolved.config.corpus_path {
        ingest_corpus(path, corpus_format(path)).map_err(|e| {
            let mut wrapped = CliError::from_core("ingest", e);
            wrapped.message = format!("{}: {}", path.display(), wrapped.message);
            wrapped
        })?
    } else {
        let spec_path = resolved
            .config
            .synthetic_spec
            .as_ref()
            .expect("config validation guarantees a corpus source");
        let spec = load_synth_spec(spec_path)?;
        generator_spec = Some(serde_json::to_value(&spec).expect("generator spec serializes"));
        generate_synthetic(&spec, resolved.seed).map_err(|e| CliError::from_core("ingest", e))?
    };
    let ingested = raw.len();
    if ingested == 0 {
        return Err(CliError::data("ingest", "corpus is empty"));
    }

    let (kept, drops) = apply_inclusion(&raw, &resolved.config.inclusion);
    if kept.is_empty() {
        return Err(CliError::data(
            "filter",
            format!("inclusion policy removed all {ingested} articles"),
        ));
    }

    let records = if dedup { dedup_within_uoa(&kept, resolved.seed) } else { kept };
    let after_dedup = records.len();
    Ok(CorpusStages { records, ingested, drops, after_dedup, generator_spec })
}

/// The featurize stage's precondition: every article carries a score. The
/// strategies enforce this too, but checking here names the stage and the
/// offending article.
fn ensure_labeled(records: &[ArticleRecord]) -> CliResult<()> {
    for r in records {
        if r.score.is_none() {
            return Err(CliError::data(
                "featurize",
                format!("article {}: missing score", r.id),
            ));
        }
    }
    Ok(())
}

fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_out(out_dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::internal("output", format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(name);
    fs::write(&path, bytes)
        .map_err(|e| CliError::internal("output", format!("cannot write {}: {e}", path.display())))
}

fn write_manifest(
    out_dir: &Path,
    command: &str,
    seed: u64,
    config: &Value,
    generator_spec: Option<&Value>,
) -> CliResult<()> {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let mut manifest = json!({
        "format_version": 1,
        "tool": "scorecast",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "config_hash": sha256_hex(&canonical),
        "artifact_versions": {"summary": 1, "predictions": 1, "charts": 1},
        "config": config,
    });
    if let Some(spec) = generator_spec {
        manifest["generator_spec"] = spec.clone();
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_out(out_dir, "manifest.json", format!("{text}\n").as_bytes())
}

/// Canonical config for hashing and the manifest echo. The output directory
/// is stripped: where a bundle lands must not change its bytes.
fn config_value(resolved: &ResolvedConfig) -> Value {
    let mut value = serde_json::to_value(&resolved.config).expect("run config serializes");
    if let Some(obj) = value.as_object_mut() {
        obj.remove("out_dir");
    }
    value
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let collected: Vec<f64> = values.collect();
    if collected.is_empty() {
        None
    } else {
        Some(collected.iter().sum::<f64>() / collected.len() as f64)
    }
}

// ---------------------------------------------------------------------------
// synth

pub fn cmd_synth(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> CliResult<()> {
    let spec = load_synth_spec(config_path)?;
    let seed = seed.ok_or_else(|| CliError::config("config", "seed: missing (pass --seed)"))?;
    let out_dir =
        out.ok_or_else(|| CliError::config("config", "output directory: missing (pass --out)"))?;

    let records =
        generate_synthetic(&spec, seed).map_err(|e| CliError::from_core("ingest", e))?;
    let mut bytes = Vec::new();
    export_jsonl(&records, &mut bytes).map_err(|e| CliError::from_core("output", e))?;
    write_out(&out_dir, "corpus.jsonl", &bytes)?;

    let spec_value = serde_json::to_value(&spec).expect("generator spec serializes");
    write_manifest(&out_dir, "synth", seed, &spec_value, None)?;
    println!("wrote {} articles to {}", records.len(), out_dir.join("corpus.jsonl").display());
    Ok(())
}

// ---------------------------------------------------------------------------
// terms

pub fn cmd_terms(resolved: &ResolvedConfig) -> CliResult<()> {
    let stages = load_corpus(resolved, true)?;
    ensure_labeled(&stages.records)?;
    let scheme = resolved.scheme();

    let term_sets: Vec<_> = stages.records.iter().map(article_terms).collect();
    let labels: Vec<u8> = stages
        .records
        .iter()
        .map(|r| scheme.class_of(r.score.expect("checked above")))
        .collect();
    let report = term_association_report(&term_sets, &labels, resolved.config.top_n)
        .map_err(|e| CliError::from_core("terms", e))?;

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["class", "rank", "kind", "token", "chi2", "direction"])
        .map_err(|e| CliError::internal("output", e.to_string()))?;
    for (class, entries) in &report {
        for (i, e) in entries.iter().enumerate() {
            csv.write_record([
                scheme.class_name(*class),
                (i + 1).to_string(),
                e.kind.to_string(),
                e.token.clone(),
                e.chi2.to_string(),
                scheme.class_name(e.direction),
            ])
            .map_err(|e| CliError::internal("output", e.to_string()))?;
        }
    }
    let bytes = csv.into_inner().map_err(|e| CliError::internal("output", e.to_string()))?;
    write_out(&resolved.out_dir, "terms.csv", &bytes)?;
    write_manifest(
        &resolved.out_dir,
        "terms",
        resolved.seed,
        &config_value(resolved),
        stages.generator_spec.as_ref(),
    )?;
    println!("wrote term associations for {} articles", stages.records.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// agreement / homogeneity

pub fn cmd_agreement(resolved: &ResolvedConfig) -> CliResult<()> {
    let stages = load_corpus(resolved, false)?;
    let report = agreement_stats(&stages.records, resolved.config.agreement_scope);
    let value = serde_json::to_value(&report).expect("agreement report serializes");
    let text = serde_json::to_string_pretty(&value).expect("agreement report serializes");
    write_out(&resolved.out_dir, "agreement.json", format!("{text}\n").as_bytes())?;
    write_manifest(
        &resolved.out_dir,
        "agreement",
        resolved.seed,
        &config_value(resolved),
        stages.generator_spec.as_ref(),
    )?;
    println!("wrote agreement report over {} articles", stages.records.len());
    Ok(())
}

pub fn cmd_homogeneity(resolved: &ResolvedConfig) -> CliResult<()> {
    let stages = load_corpus(resolved, true)?;
    let report = journal_homogeneity(&stages.records);
    let value = serde_json::to_value(&report).expect("homogeneity report serializes");
    let text = serde_json::to_string_pretty(&value).expect("homogeneity report serializes");
    write_out(&resolved.out_dir, "homogeneity.json", format!("{text}\n").as_bytes())?;
    write_manifest(
        &resolved.out_dir,
        "homogeneity",
        resolved.seed,
        &config_value(resolved),
        stages.generator_spec.as_ref(),
    )?;
    println!("wrote homogeneity report over {} articles", stages.records.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// run

pub fn cmd_run(resolved: &ResolvedConfig) -> CliResult<()> {
    let stages = load_corpus(resolved, true)?;
    ensure_labeled(&stages.records)?;
    let scheme = resolved.scheme();
    let feature_plan =
        FeaturePlan { input_set: resolved.config.input_set, k_total: resolved.config.k_total };

    match &resolved.config.strategy {
        StrategyChoice::CrossYear(c) => {
            let report = cross_year(
                &stages.records,
                scheme,
                &feature_plan,
                &resolved.config.model,
                c.train_year,
                &c.test_years,
                c.n_iterations,
                resolved.seed,
            )
            .map_err(|e| CliError::from_core("strategy", e))?;
            write_cross_year_bundle(resolved, &stages, &report)
        }
        StrategyChoice::Strategy1(c) => {
            let plan = SplitPlan {
                train_fraction: c.train_fraction,
                n_iterations: c.n_iterations,
                seed: resolved.seed,
            };
            let outcome =
                run_strategy1(&stages.records, scheme, &feature_plan, &resolved.config.model, &plan)
                    .map_err(|e| CliError::from_core("strategy", e))?;
            write_outcome_bundle(resolved, &stages, scheme, &outcome, None)
        }
        StrategyChoice::Strategy2(c) => {
            let plan = SplitPlan {
                train_fraction: c.train_fraction,
                n_iterations: c.n_iterations,
                seed: resolved.seed,
            };
            let outcome = run_strategy2(
                &stages.records,
                scheme,
                &feature_plan,
                &resolved.config.model,
                &plan,
                c.threshold,
            )
            .map_err(|e| CliError::from_core("strategy", e))?;
            write_outcome_bundle(resolved, &stages, scheme, &outcome, None)
        }
        StrategyChoice::ActiveLearning(c) => {
            let (trace, outcome) = run_active_learning(
                &stages.records,
                scheme,
                &feature_plan,
                &resolved.config.model,
                c,
                resolved.seed,
            )
            .map_err(|e| CliError::from_core("strategy", e))?;
            write_outcome_bundle(resolved, &stages, scheme, &outcome, Some(&trace))
        }
    }
}

fn corpus_json(stages: &CorpusStages) -> Value {
    json!({
        "ingested": stages.ingested,
        "dropped": {
            "year": stages.drops.year,
            "abstract_len": stages.drops.abstract_len,
            "score": stages.drops.score,
        },
        "after_inclusion": stages.ingested - stages.drops.total(),
        "after_dedup": stages.after_dedup,
    })
}

fn write_cross_year_bundle(
    resolved: &ResolvedConfig,
    stages: &CorpusStages,
    report: &CrossYearReport,
) -> CliResult<()> {
    let out = &resolved.out_dir;

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["year", "n_articles", "accuracy_mean", "skipped"])
        .map_err(|e| CliError::internal("output", e.to_string()))?;
    for y in &report.years {
        csv.write_record([
            y.year.to_string(),
            y.n_articles.to_string(),
            y.accuracy_mean.map(|a| a.to_string()).unwrap_or_default(),
            y.skipped.to_string(),
        ])
        .map_err(|e| CliError::internal("output", e.to_string()))?;
    }
    let bytes = csv.into_inner().map_err(|e| CliError::internal("output", e.to_string()))?;
    write_out(out, "years.csv", &bytes)?;

    let bars: Vec<(String, f64)> = report
        .years
        .iter()
        .filter_map(|y| y.accuracy_mean.map(|a| (y.year.to_string(), a)))
        .collect();
    let svg = bar_chart("accuracy by test year", "year", "accuracy", &bars);
    write_out(out, "years.svg", svg.as_bytes())?;

    let summary = json!({
        "command": "run",
        "strategy": "cross_year",
        "label_mode": resolved.config.label_mode,
        "corpus": corpus_json(stages),
        "train_year": report.train_year,
        "n_iterations": report.n_iterations,
        "years": report.years,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_out(out, "summary.json", format!("{text}\n").as_bytes())?;
    write_manifest(out, "run", resolved.seed, &config_value(resolved), stages.generator_spec.as_ref())?;
    println!("cross-year run complete: {} years evaluated", report.years.len());
    Ok(())
}

/// Everything evaluation needs from one iteration: full blended score
/// vector plus the AI share it was produced under.
struct BlendedScores {
    iterations: Vec<BlendedIteration>,
    human_fraction_mean: Option<f64>,
    ai_accuracy_mean: Option<f64>,
}

fn blend_iterations(
    records: &[ArticleRecord],
    scheme: LabelScheme,
    human: &[u8],
    outcome: &StrategyOutcome,
) -> BlendedScores {
    let row_of: BTreeMap<&str, usize> =
        records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();

    let mut iterations = Vec::with_capacity(outcome.iterations.len());
    for it in &outcome.iterations {
        let mut scores = human.to_vec();
        for p in &it.predictions {
            if p.provenance == Provenance::Ai {
                if let Some(&row) = row_of.get(p.article_id.as_str()) {
                    scores[row] = scheme.class_of(p.predicted);
                }
            }
        }
        let covered = it.n_human + it.n_ai;
        let predicted_fraction =
            if covered == 0 { 0.0 } else { it.n_ai as f64 / covered as f64 };
        iterations.push(BlendedIteration { scores, predicted_fraction });
    }

    let human_fraction_mean = mean_of(
        outcome
            .iterations
            .iter()
            .filter(|it| it.n_human + it.n_ai > 0)
            .map(|it| it.n_human as f64 / (it.n_human + it.n_ai) as f64),
    );
    let ai_accuracy_mean = mean_of(outcome.iterations.iter().filter_map(|it| it.ai_accuracy));
    BlendedScores { iterations, human_fraction_mean, ai_accuracy_mean }
}

fn subgroup_labels(records: &[ArticleRecord]) -> Vec<(&'static str, Vec<Option<String>>)> {
    let ecr = records
        .iter()
        .map(|r| r.ecr.map(|v| if v { "ecr" } else { "experienced" }.to_string()))
        .collect();
    let gender = records
        .iter()
        .map(|r| match r.gender_label {
            Some(Gender::F) => Some("female".to_string()),
            Some(Gender::M) => Some("male".to_string()),
            Some(Gender::Unknown) | None => None,
        })
        .collect();
    let interdisciplinary = records
        .iter()
        .map(|r| {
            r.interdisciplinary
                .map(|v| if v { "interdisciplinary" } else { "monodisciplinary" }.to_string())
        })
        .collect();
    vec![("ecr", ecr), ("gender", gender), ("interdisciplinary", interdisciplinary)]
}

fn shift_csv(report: &ShiftReport) -> CliResult<Vec<u8>> {
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record([
        "institution",
        "n_articles",
        "human_power",
        "blended_power_mean",
        "gain_mean",
        "gain_min",
        "gain_max",
        "overall_gain_mean",
        "overall_gain_min",
        "overall_gain_max",
    ])
    .map_err(|e| CliError::internal("output", e.to_string()))?;
    for e in &report.entries {
        csv.write_record([
            e.institution.clone(),
            e.n_articles.to_string(),
            e.human_power.to_string(),
            e.blended_power_mean.to_string(),
            e.gain_mean.to_string(),
            e.gain_min.to_string(),
            e.gain_max.to_string(),
            e.overall_gain_mean.to_string(),
            e.overall_gain_min.to_string(),
            e.overall_gain_max.to_string(),
        ])
        .map_err(|e| CliError::internal("output", e.to_string()))?;
    }
    csv.into_inner().map_err(|e| CliError::internal("output", e.to_string()))
}

fn write_outcome_bundle(
    resolved: &ResolvedConfig,
    stages: &CorpusStages,
    scheme: LabelScheme,
    outcome: &StrategyOutcome,
    trace: Option<&AlTrace>,
) -> CliResult<()> {
    let out = &resolved.out_dir;
    let records = &stages.records;
    let human: Vec<u8> =
        records.iter().map(|r| scheme.class_of(r.score.expect("featurize checked"))).collect();
    let institutions: Vec<&str> = records.iter().map(|r| r.institution.as_str()).collect();

    // ---- evaluation stage ----
    let blended = blend_iterations(records, scheme, &human, outcome);
    let score_vecs: Vec<Vec<u8>> = blended.iterations.iter().map(|b| b.scores.clone()).collect();

    let shift = institutional_shift(&institutions, &human, &blended.iterations, None)
        .map_err(|e| CliError::from_core("evaluation", e))?;
    let ranks = gpa_rank_shift(&institutions, &human, &score_vecs)
        .map_err(|e| CliError::from_core("evaluation", e))?;

    let mut subgroup_rows: Vec<(String, String, usize, f64, f64, f64)> = Vec::new();
    for (dimension, labels) in subgroup_labels(records) {
        let report = subgroup_shift(&labels, &human, &score_vecs)
            .map_err(|e| CliError::from_core("evaluation", e))?;
        for g in &report.groups {
            subgroup_rows.push((
                dimension.to_string(),
                g.label.clone(),
                g.n_articles,
                g.gain_mean,
                g.gain_min,
                g.gain_max,
            ));
        }
    }

    let correlation_mean = |mode: CorrelationMode| -> CliResult<Option<f64>> {
        let mut values = Vec::new();
        for scores in &score_vecs {
            let r = institution_correlations(&institutions, &human, scores, mode)
                .map_err(|e| CliError::from_core("evaluation", e))?;
            if let Some(v) = r {
                values.push(v);
            }
        }
        Ok(mean_of(values.into_iter()))
    };
    let corr_average = correlation_mean(CorrelationMode::Average)?;
    let corr_total = correlation_mean(CorrelationMode::Total)?;

    let size_quality = if shift.entries.len() >= 2 {
        let mut total_count: BTreeMap<&str, usize> = BTreeMap::new();
        let mut per_uoa: BTreeMap<&str, BTreeMap<u8, usize>> = BTreeMap::new();
        for r in records.iter() {
            *total_count.entry(r.institution.as_str()).or_default() += 1;
            *per_uoa.entry(r.institution.as_str()).or_default().entry(r.uoa).or_default() += 1;
        }
        let gains: Vec<f64> = shift.entries.iter().map(|e| e.gain_mean).collect();
        let inst_size: Vec<f64> =
            shift.entries.iter().map(|e| total_count[e.institution.as_str()] as f64).collect();
        let sub_size: Vec<f64> = shift
            .entries
            .iter()
            .map(|e| *per_uoa[e.institution.as_str()].values().max().expect("nonempty") as f64)
            .collect();
        let mean_power: Vec<f64> = shift.entries.iter().map(|e| e.human_power).collect();
        Some(
            size_quality_correlations(&gains, &inst_size, &sub_size, &mean_power)
                .map_err(|e| CliError::from_core("evaluation", e))?,
        )
    } else {
        None
    };

    let half_sample =
        half_sample_doubling(&institutions, &human, HALF_SAMPLE_ITERATIONS, resolved.seed)
            .map_err(|e| CliError::from_core("evaluation", e))?;

    let modal_frequency = {
        let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
        for &h in &human {
            *counts.entry(h).or_default() += 1;
        }
        counts.values().copied().max().unwrap_or(0) as f64 / human.len() as f64
    };

    let blend_summary = match (blended.human_fraction_mean, blended.ai_accuracy_mean) {
        (Some(h), Some(a)) => {
            let (eligible, all) =
                blend_overall_accuracy(h, a, resolved.config.eligible_fraction);
            json!({
                "human_fraction": h,
                "ai_accuracy": a,
                "eligible_fraction": resolved.config.eligible_fraction,
                "eligible_accuracy": eligible,
                "all_articles_accuracy": all,
            })
        }
        _ => Value::Null,
    };

    // ---- output stage (single-threaded, fixed order) ----
    let mut acc_csv = Vec::new();
    outcome_summary_csv(outcome, &mut acc_csv).map_err(|e| CliError::from_core("output", e))?;
    write_out(out, "accuracy.csv", &acc_csv)?;

    let predictions = outcome_to_json(outcome);
    let text = serde_json::to_string_pretty(&predictions).expect("predictions serialize");
    write_out(out, "predictions.json", format!("{text}\n").as_bytes())?;

    write_out(out, "shift.csv", &shift_csv(&shift)?)?;
    let gain_bars: Vec<(String, f64)> =
        shift.entries.iter().map(|e| (e.institution.clone(), e.gain_mean)).collect();
    write_out(
        out,
        "shift.svg",
        bar_chart("research-power gain by institution", "institution", "gain", &gain_bars)
            .as_bytes(),
    )?;

    let mut rank_csv = csv::Writer::from_writer(Vec::new());
    rank_csv
        .write_record([
            "institution",
            "n_articles",
            "human_gpa",
            "gpa_mean",
            "human_rank",
            "rank_delta_min",
            "rank_delta_mean",
            "rank_delta_max",
        ])
        .map_err(|e| CliError::internal("output", e.to_string()))?;
    for e in &ranks.entries {
        rank_csv
            .write_record([
                e.institution.clone(),
                e.n_articles.to_string(),
                e.human_gpa.to_string(),
                e.gpa_mean.to_string(),
                e.human_rank.to_string(),
                e.rank_delta_min.to_string(),
                e.rank_delta_mean.to_string(),
                e.rank_delta_max.to_string(),
            ])
            .map_err(|e| CliError::internal("output", e.to_string()))?;
    }
    let bytes = rank_csv.into_inner().map_err(|e| CliError::internal("output", e.to_string()))?;
    write_out(out, "rank_shift.csv", &bytes)?;

    let mut sub_csv = csv::Writer::from_writer(Vec::new());
    sub_csv
        .write_record(["dimension", "label", "n_articles", "gain_mean", "gain_min", "gain_max"])
        .map_err(|e| CliError::internal("output", e.to_string()))?;
    for (dimension, label, n, mean, min, max) in &subgroup_rows {
        sub_csv
            .write_record([
                dimension.clone(),
                label.clone(),
                n.to_string(),
                mean.to_string(),
                min.to_string(),
                max.to_string(),
            ])
            .map_err(|e| CliError::internal("output", e.to_string()))?;
    }
    let bytes = sub_csv.into_inner().map_err(|e| CliError::internal("output", e.to_string()))?;
    write_out(out, "subgroups.csv", &bytes)?;

    let mut half_csv = csv::Writer::from_writer(Vec::new());
    half_csv
        .write_record([
            "institution",
            "n_articles",
            "true_power",
            "estimate_mean",
            "estimate_min",
            "estimate_max",
        ])
        .map_err(|e| CliError::internal("output", e.to_string()))?;
    for e in &half_sample.entries {
        half_csv
            .write_record([
                e.institution.clone(),
                e.n_articles.to_string(),
                e.true_power.to_string(),
                e.estimate_mean.to_string(),
                e.estimate_min.to_string(),
                e.estimate_max.to_string(),
            ])
            .map_err(|e| CliError::internal("output", e.to_string()))?;
    }
    let bytes = half_csv.into_inner().map_err(|e| CliError::internal("output", e.to_string()))?;
    write_out(out, "half_sample.csv", &bytes)?;

    let acc_points: Vec<(f64, f64)> = outcome
        .iterations
        .iter()
        .filter_map(|it| it.test_accuracy.map(|a| (it.iteration as f64, a)))
        .collect();
    write_out(
        out,
        "accuracy.svg",
        line_chart(
            "test accuracy by iteration",
            "iteration",
            "accuracy",
            &[Series { label: "accuracy".into(), points: acc_points }],
        )
        .as_bytes(),
    )?;

    if outcome.iterations.iter().any(|it| it.s2.is_some()) {
        let mut curve_csv = csv::Writer::from_writer(Vec::new());
        curve_csv
            .write_record(["iteration", "n", "accuracy"])
            .map_err(|e| CliError::internal("output", e.to_string()))?;
        let mut series = Vec::new();
        for it in &outcome.iterations {
            if let Some(s2) = &it.s2 {
                for p in &s2.curve {
                    curve_csv
                        .write_record([
                            it.iteration.to_string(),
                            p.n.to_string(),
                            p.accuracy.to_string(),
                        ])
                        .map_err(|e| CliError::internal("output", e.to_string()))?;
                }
                series.push(Series {
                    label: format!("it{:02}", it.iteration),
                    points: s2.curve.iter().map(|p| (p.n as f64, p.accuracy)).collect(),
                });
            }
        }
        let bytes =
            curve_csv.into_inner().map_err(|e| CliError::internal("output", e.to_string()))?;
        write_out(out, "curve.csv", &bytes)?;
        write_out(
            out,
            "curve.svg",
            line_chart("accuracy of the n most confident predictions", "n", "accuracy", &series)
                .as_bytes(),
        )?;
    }

    if let Some(trace) = trace {
        let mut trace_csv = csv::Writer::from_writer(Vec::new());
        trace_csv
            .write_record([
                "round",
                "labeled_size",
                "n_selected",
                "estimated_remainder_accuracy",
                "realized_remainder_accuracy",
                "stopped",
            ])
            .map_err(|e| CliError::internal("output", e.to_string()))?;
        for r in &trace.rounds {
            trace_csv
                .write_record([
                    r.round.to_string(),
                    r.labeled_size.to_string(),
                    r.selected_ids.len().to_string(),
                    r.estimated_remainder_accuracy.map(|v| v.to_string()).unwrap_or_default(),
                    r.realized_remainder_accuracy.map(|v| v.to_string()).unwrap_or_default(),
                    r.stopped.to_string(),
                ])
                .map_err(|e| CliError::internal("output", e.to_string()))?;
        }
        let bytes =
            trace_csv.into_inner().map_err(|e| CliError::internal("output", e.to_string()))?;
        write_out(out, "trace.csv", &bytes)?;

        let estimated: Vec<(f64, f64)> = trace
            .rounds
            .iter()
            .filter_map(|r| r.estimated_remainder_accuracy.map(|v| (r.round as f64, v)))
            .collect();
        let realized: Vec<(f64, f64)> = trace
            .rounds
            .iter()
            .filter_map(|r| r.realized_remainder_accuracy.map(|v| (r.round as f64, v)))
            .collect();
        write_out(
            out,
            "trace.svg",
            line_chart(
                "remainder accuracy by labeling round",
                "round",
                "accuracy",
                &[
                    Series { label: "estimated".into(), points: estimated },
                    Series { label: "realized".into(), points: realized },
                ],
            )
            .as_bytes(),
        )?;
    }

    let summary = json!({
        "command": "run",
        "strategy": resolved.config.strategy.kind(),
        "label_mode": resolved.config.label_mode,
        "classes": scheme.classes(),
        "corpus": corpus_json(stages),
        "n_iterations": outcome.iterations.len(),
        "accuracy": {
            "mean": outcome.accuracy_mean,
            "min": outcome.accuracy_min,
            "max": outcome.accuracy_max,
            "modal_baseline": modal_frequency,
            "above_baseline_mean": outcome.accuracy_mean.map(|a| a - modal_frequency),
        },
        "power": {
            "corpus_gain_mean": shift.corpus_gain_mean,
            "predicted_fraction_mean": shift.predicted_fraction_mean,
            "n_institutions": shift.entries.len(),
        },
        "correlations": {"average": corr_average, "total": corr_total},
        "size_quality": size_quality,
        "blend": blend_summary,
        "half_sample": {
            "n_institutions": half_sample.entries.len(),
            "excluded": half_sample.excluded.len(),
        },
        "active_learning": trace.map(|t| json!({
            "batch_size": t.batch_size,
            "n_rounds": t.rounds.len(),
            "stop": match &t.stop {
                StopReason::ThresholdReached { round } => json!({"kind": "threshold_reached", "round": round}),
                StopReason::Exhausted => json!({"kind": "exhausted"}),
            },
        })),
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_out(out, "summary.json", format!("{text}\n").as_bytes())?;

    write_manifest(out, "run", resolved.seed, &config_value(resolved), stages.generator_spec.as_ref())?;
    match outcome.accuracy_mean {
        Some(a) => println!(
            "run complete: {} iterations, mean accuracy {:.3}",
            outcome.iterations.len(),
            a
        ),
        None => println!("run complete: {} iterations", outcome.iterations.len()),
    }
    Ok(())
}
