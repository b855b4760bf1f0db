use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::json;

use super::{io_err, PipelineConfig, PipelineError, RunOptions, Stage, StageCounts, Staging};
use crate::affiliation::{
    build_extractor, export_review_sample, extract_batch, sample_indices, AffiliationRecord,
    AuthorBlock, RulesExtractor, AFFILIATION_PROMPT,
};
use crate::analytics::write_reports;
use crate::dataset::{self, AuthorRecord, ClusterRecord, Dataset, ExtractionSource};
use crate::ingest::{fetch_program, ingest_corpus, Corpus, RawPresentation};
use crate::llm::{Mode, StageModelConfig};
use crate::methodology::{
    build_classifier, classify_batch, cohen_kappa, stratified_sample, KappaReport,
    MethodologyClassifier, MethodologyLabel, MethodologyRecord, RulesClassifier,
    METHODOLOGY_PROMPT,
};
use crate::normalize::{
    bundled_mapping_files, classify_position, normalize_country, normalize_institution,
    normalize_name, MappingTables,
};
use crate::resolve::{resolve, MatchContext, NameVariant};
use crate::util::{read_jsonl, sha256_hex, write_jsonl};

/// Columns of the blinded methodology review sheet.
pub const METHODOLOGY_REVIEW_COLUMNS: [&str; 5] =
    ["source_id", "year", "title", "abstract", "human_label"];

fn read_data<T: DeserializeOwned>(
    config: &PipelineConfig,
    name: &str,
) -> Result<Vec<T>, PipelineError> {
    let path = config.dataset_dir.join(name);
    read_jsonl(&path).map_err(io_err(&path))
}

fn write_data<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<u64, PipelineError> {
    write_jsonl(path, rows)
        .map(|n| n as u64)
        .map_err(io_err(path))
}

/// The parts of a model config that change outputs; endpoint, timeout and
/// concurrency do not.
fn model_view(
    config: &StageModelConfig,
    bundled: &str,
) -> Result<serde_json::Value, PipelineError> {
    Ok(match config.mode {
        Mode::Rules => json!({ "mode": "rules" }),
        Mode::Model => {
            let template = config
                .prompt_template(bundled)
                .map_err(|e| PipelineError::Config(format!("reading prompt template: {e}")))?;
            json!({
                "mode": "model",
                "temperature": config.temperature,
                "max_context": config.max_context,
                "max_tokens": config.max_tokens,
                "prompt": sha256_hex(template.as_bytes()),
            })
        }
    })
}

fn mappings_digest(config: &PipelineConfig) -> Result<String, PipelineError> {
    let mut text = String::new();
    for (name, bundled) in bundled_mapping_files() {
        let content = match &config.mappings_dir {
            Some(dir) if dir.join(name).exists() => {
                let path = dir.join(name);
                std::fs::read_to_string(&path).map_err(io_err(&path))?
            }
            Some(_) => String::new(),
            None => bundled.to_string(),
        };
        text.push_str(&format!("{name}:{}\n", sha256_hex(content.as_bytes())));
    }
    Ok(sha256_hex(text.as_bytes()))
}

/// Hash of every configuration value that influences `stage`'s outputs.
pub(crate) fn config_digest(
    config: &PipelineConfig,
    stage: Stage,
) -> Result<String, PipelineError> {
    let value = match stage {
        Stage::Ingest => json!({ "years": config.years, "layout": config.layout }),
        Stage::Extract => json!({
            "extractor": model_view(&config.extractor, AFFILIATION_PROMPT)?,
            "mappings": mappings_digest(config)?,
            "sample": config.review.extraction_sample,
            "seed": config.seeds.extraction_sample,
        }),
        Stage::Normalize => json!({ "mappings": mappings_digest(config)? }),
        Stage::Resolve => json!({
            "policy": config.scoring()?,
            "largest": config.review.cluster_largest,
            "random": config.review.cluster_random,
            "seed": config.seeds.cluster_sample,
        }),
        Stage::Classify => json!({
            "classifier": model_view(&config.classifier, METHODOLOGY_PROMPT)?,
            "lexicon": config.lexicon()?.digest(),
            "per_category": config.review.methodology_per_category,
            "seed": config.seeds.methodology_sample,
        }),
        Stage::Analyze => json!({ "analytics": config.analytics }),
    };
    Ok(sha256_hex(value.to_string().as_bytes()))
}

/// Fetch every configured year into the corpus. Per-page failures go to
/// `review/fetch_failures.jsonl`; index failures abort.
pub(crate) fn fetch(config: &PipelineConfig) -> Result<(), PipelineError> {
    let base = config
        .fetch
        .base_url
        .as_deref()
        .ok_or_else(|| PipelineError::Config("fetch.base_url is not set".into()))?;
    let mut corpus = Corpus::open(&config.corpus_dir)?;
    let delay = Duration::from_millis(config.fetch.delay_ms);
    let mut failures = Vec::new();
    for &year in &config.years {
        let report = fetch_program(base, year, delay, &mut corpus, &config.layout)?;
        failures.extend(report.failures);
    }
    if !failures.is_empty() {
        let dir = config.dataset_dir.join(super::REVIEW_DIR);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_data(&dir.join("fetch_failures.jsonl"), &failures)?;
    }
    Ok(())
}

pub(crate) fn execute(
    stage: Stage,
    config: &PipelineConfig,
    options: &RunOptions,
    staging: &mut Staging,
) -> Result<StageCounts, PipelineError> {
    match stage {
        Stage::Ingest => ingest(config, staging),
        Stage::Extract => extract(config, options, staging),
        Stage::Normalize => normalize(config, staging),
        Stage::Resolve => resolve_authors(config, staging),
        Stage::Classify => classify(config, options, staging),
        Stage::Analyze => analyze(config, staging),
    }
}

fn ingest(config: &PipelineConfig, staging: &mut Staging) -> Result<StageCounts, PipelineError> {
    let corpus = Corpus::open(&config.corpus_dir)?;
    let out = ingest_corpus(&corpus, &config.years, &config.layout)?;
    if out.pages == 0 {
        return Err(PipelineError::Config(format!(
            "corpus {} holds no presentation pages for the configured years",
            config.corpus_dir.display()
        )));
    }
    let kept = write_data(&staging.output(dataset::RAW_PRESENTATIONS)?, &out.kept)?;
    write_data(
        &staging.output(dataset::EXCLUDED_PRESENTATIONS)?,
        &out.excluded,
    )?;
    write_data(&staging.review("ingest_flagged.jsonl")?, &out.flagged)?;
    Ok(StageCounts {
        records_in: out.pages as u64,
        records_out: kept,
    })
}

fn extract(
    config: &PipelineConfig,
    options: &RunOptions,
    staging: &mut Staging,
) -> Result<StageCounts, PipelineError> {
    let presentations: Vec<RawPresentation> = read_data(config, dataset::RAW_PRESENTATIONS)?;
    let blocks: Vec<AuthorBlock> = presentations
        .iter()
        .flat_map(|p| {
            p.raw_author_blocks
                .iter()
                .enumerate()
                .map(|(i, raw)| AuthorBlock {
                    source_id: p.source_id.clone(),
                    author_index: i,
                    year: p.year,
                    raw: raw.clone(),
                })
        })
        .collect();
    let geo = config.mapping_tables()?.geography;
    let extractor = build_extractor(
        &config.extractor,
        geo.clone(),
        options.endpoint_override.clone(),
    )?;
    let mut records = extract_batch(extractor.as_ref(), &blocks)?;
    if extractor.mode() == Mode::Model {
        // Flagged blocks keep their flag for review but get rule-based fields.
        let rules = RulesExtractor::new(geo);
        for r in records.iter_mut().filter(|r| r.affiliation.is_none()) {
            r.affiliation = rules.parse(&r.raw).ok();
        }
    }
    let out = write_data(&staging.output(dataset::PARSED_AFFILIATIONS)?, &records)?;
    let n = config.review.extraction_sample.min(records.len());
    export_review_sample(
        &records,
        n,
        config.seeds.extraction_sample,
        &staging.review("extraction_sample.csv")?,
    )?;
    Ok(StageCounts {
        records_in: blocks.len() as u64,
        records_out: out,
    })
}

fn nonempty(s: &Option<String>) -> Option<&str> {
    s.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

/// Normalize one parsed block. Blocks without a usable name yield nothing
/// and stay in the extraction review queue.
pub fn normalize_record(r: &AffiliationRecord, tables: &MappingTables) -> Option<AuthorRecord> {
    let a = r.affiliation.as_ref()?;
    let name = normalize_name(&a.name);
    if name.normalized.is_empty() {
        return None;
    }
    let (institution, institution_matched) = match nonempty(&a.institution) {
        Some(raw) => {
            let (c, hit) = normalize_institution(raw, &tables.institutions, &tables.geography);
            (Some(c).filter(|c| !c.is_empty()), hit)
        }
        None => (None, false),
    };
    let (country, state) = normalize_country(
        a.country.as_deref(),
        a.state.as_deref(),
        a.city.as_deref(),
        &tables.geography,
    );
    Some(AuthorRecord {
        record_key: AuthorRecord::key_for(&r.source_id, r.author_index),
        source_id: r.source_id.clone(),
        year: r.year,
        author_index: r.author_index,
        raw: r.raw.clone(),
        name_original: name.original,
        name_normalized: name.normalized,
        degrees: a.degrees.clone(),
        position_raw: a.position.clone(),
        position_category: classify_position(a.position.as_deref()),
        institution_raw: a.institution.clone(),
        institution,
        institution_matched,
        department: a.department.clone(),
        city: a.city.clone(),
        state_raw: a.state.clone(),
        state,
        country_raw: a.country.clone(),
        country,
        extraction: if r.flag.is_some() {
            ExtractionSource::RulesFallback
        } else {
            ExtractionSource::Parsed
        },
        cluster_id: None,
    })
}

fn normalize(config: &PipelineConfig, staging: &mut Staging) -> Result<StageCounts, PipelineError> {
    let records: Vec<AffiliationRecord> = read_data(config, dataset::PARSED_AFFILIATIONS)?;
    let tables = config.mapping_tables()?;
    let authors: Vec<AuthorRecord> = records
        .par_iter()
        .filter_map(|r| normalize_record(r, &tables))
        .collect();
    let out = write_data(&staging.output(dataset::NORMALIZED_RECORDS)?, &authors)?;
    Ok(StageCounts {
        records_in: records.len() as u64,
        records_out: out,
    })
}

/// Cluster the distinct names of `authors`, set each record's cluster id
/// and return the cluster records in canonical-name order.
pub fn cluster_authors(
    authors: &mut [AuthorRecord],
    policy: &crate::resolve::ScoringPolicy,
) -> Result<Vec<ClusterRecord>, PipelineError> {
    let names: BTreeSet<&str> = authors.iter().map(|a| a.name_normalized.as_str()).collect();
    let variants = names
        .into_iter()
        .map(NameVariant::new)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    let mut ctx = MatchContext::default();
    for a in authors.iter() {
        if let Some(inst) = &a.institution {
            ctx.add_institution(&a.name_normalized, inst);
        }
        ctx.add_position(&a.name_normalized, a.year, a.position_category);
    }
    let clusters = resolve(&variants, &ctx, policy);

    let mut cluster_of: HashMap<&str, usize> = HashMap::new();
    for (i, c) in clusters.iter().enumerate() {
        for m in &c.members {
            cluster_of.insert(m.as_str(), i);
        }
    }
    let mut keys: Vec<Vec<String>> = vec![Vec::new(); clusters.len()];
    for a in authors.iter_mut() {
        let i = cluster_of[crate::util::collapse_whitespace(&a.name_normalized).as_str()];
        a.cluster_id = Some(clusters[i].cluster_id.clone());
        keys[i].push(a.record_key.clone());
    }
    Ok(clusters
        .into_iter()
        .zip(keys)
        .map(|(c, mut record_keys)| {
            record_keys.sort_unstable();
            ClusterRecord {
                cluster_id: c.cluster_id,
                canonical_name: c.canonical_name,
                members: c.members,
                record_keys,
            }
        })
        .collect())
}

fn resolve_authors(
    config: &PipelineConfig,
    staging: &mut Staging,
) -> Result<StageCounts, PipelineError> {
    let mut authors: Vec<AuthorRecord> = read_data(config, dataset::NORMALIZED_RECORDS)?;
    let clusters = cluster_authors(&mut authors, &config.scoring()?)?;
    write_data(&staging.output(dataset::AUTHOR_RECORDS)?, &authors)?;
    let out = write_data(&staging.output(dataset::CLUSTERS)?, &clusters)?;
    write_cluster_sample(config, &clusters, &staging.review("clusters_sample.csv")?)?;
    Ok(StageCounts {
        records_in: authors.len() as u64,
        records_out: out,
    })
}

/// Largest clusters first, then a seeded random draw from the rest.
fn write_cluster_sample(
    config: &PipelineConfig,
    clusters: &[ClusterRecord],
    path: &Path,
) -> Result<(), PipelineError> {
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| {
        clusters[b]
            .record_keys
            .len()
            .cmp(&clusters[a].record_keys.len())
            .then_with(|| clusters[a].cluster_id.cmp(&clusters[b].cluster_id))
    });
    let split = config.review.cluster_largest.min(order.len());
    let (largest, rest) = order.split_at(split);
    let n = config.review.cluster_random.min(rest.len());
    let random = sample_indices(rest.len(), n, config.seeds.cluster_sample)?;

    let csv_err = |e: csv::Error| PipelineError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "cluster_id",
        "selection",
        "canonical_name",
        "records",
        "variants",
        "verdict",
    ])
    .map_err(csv_err)?;
    let picks = largest
        .iter()
        .map(|&i| (i, "largest"))
        .chain(random.into_iter().map(|j| (rest[j], "random")));
    for (i, selection) in picks {
        let c = &clusters[i];
        w.write_record([
            c.cluster_id.as_str(),
            selection,
            c.canonical_name.as_str(),
            &c.record_keys.len().to_string(),
            &c.members.join(" | "),
            "",
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn classify(
    config: &PipelineConfig,
    options: &RunOptions,
    staging: &mut Staging,
) -> Result<StageCounts, PipelineError> {
    let presentations: Vec<RawPresentation> = read_data(config, dataset::RAW_PRESENTATIONS)?;
    let lexicon = config.lexicon()?;
    let classifier = build_classifier(
        &config.classifier,
        lexicon.clone(),
        options.endpoint_override.clone(),
    )?;
    let fallback = (classifier.mode() == Mode::Model).then(|| RulesClassifier::new(lexicon));
    let items: Vec<(String, String)> = presentations
        .iter()
        .map(|p| (p.source_id.clone(), p.abstract_text.clone()))
        .collect();
    let records = classify_batch(
        classifier.as_ref(),
        fallback.as_ref().map(|f| f as &dyn MethodologyClassifier),
        &items,
    )?;
    let out = write_data(&staging.output(dataset::METHODOLOGY)?, &records)?;
    write_methodology_sample(
        config,
        &presentations,
        &records,
        &staging.review("methodology_sample.csv")?,
    )?;
    Ok(StageCounts {
        records_in: presentations.len() as u64,
        records_out: out,
    })
}

/// Blinded sheet: machine labels are withheld so the reviewer codes
/// independently.
fn write_methodology_sample(
    config: &PipelineConfig,
    presentations: &[RawPresentation],
    records: &[MethodologyRecord],
    path: &Path,
) -> Result<(), PipelineError> {
    let labeled: Vec<(usize, MethodologyLabel)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.label.map(|l| (i, l)))
        .collect();
    let labels: Vec<MethodologyLabel> = labeled.iter().map(|&(_, l)| l).collect();
    let mut counts = BTreeMap::new();
    for l in MethodologyLabel::ALL {
        let available = labels.iter().filter(|&&x| x == l).count();
        counts.insert(l, config.review.methodology_per_category.min(available));
    }
    let picks = stratified_sample(&labels, &counts, config.seeds.methodology_sample)
        .map_err(|e| PipelineError::Data(e.to_string()))?;

    let csv_err = |e: csv::Error| PipelineError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(METHODOLOGY_REVIEW_COLUMNS)
        .map_err(csv_err)?;
    let mut rows: Vec<usize> = picks.into_iter().map(|j| labeled[j].0).collect();
    rows.sort_unstable();
    for i in rows {
        let p = &presentations[i];
        w.write_record([
            p.source_id.as_str(),
            &p.year.to_string(),
            p.title.as_str(),
            p.abstract_text.as_str(),
            "",
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn analyze(config: &PipelineConfig, staging: &mut Staging) -> Result<StageCounts, PipelineError> {
    let dir = &config.dataset_dir;
    let dataset = Dataset::load(dir).map_err(io_err(dir))?;
    let root = staging.dir.path().to_path_buf();
    let written = write_reports(
        &dataset,
        &root.join("reports"),
        &root.join("figures"),
        &config.analytics,
    )?;
    for path in &written {
        let key = path
            .strip_prefix(&root)
            .expect("reports are written under the staging directory")
            .to_string_lossy()
            .replace('\\', "/");
        staging.outputs.push(key);
    }
    Ok(StageCounts {
        records_in: dataset.presentations.len() as u64,
        records_out: written.len() as u64,
    })
}

#[derive(serde::Deserialize)]
struct ReviewRow {
    source_id: String,
    #[serde(default)]
    human_label: String,
}

/// Agreement between a completed methodology review sheet and the machine
/// labels in `dataset_dir`. Rows with a blank `human_label` are skipped.
pub fn kappa_from_review(dataset_dir: &Path, sheet: &Path) -> Result<KappaReport, PipelineError> {
    let path = dataset_dir.join(dataset::METHODOLOGY);
    let records: Vec<MethodologyRecord> = read_jsonl(&path).map_err(io_err(&path))?;
    let machine: HashMap<&str, Option<MethodologyLabel>> = records
        .iter()
        .map(|r| (r.source_id.as_str(), r.label))
        .collect();

    let data_err = |m: String| PipelineError::Data(format!("{}: {m}", sheet.display()));
    let mut rdr = csv::Reader::from_path(sheet).map_err(|e| data_err(e.to_string()))?;
    let (mut human, mut auto) = (Vec::new(), Vec::new());
    for (i, row) in rdr.deserialize::<ReviewRow>().enumerate() {
        let row = row.map_err(|e| data_err(e.to_string()))?;
        if row.human_label.trim().is_empty() {
            continue;
        }
        let line = i + 2;
        let h: MethodologyLabel = row
            .human_label
            .parse()
            .map_err(|_| data_err(format!("line {line}: unknown label `{}`", row.human_label)))?;
        let m = match machine.get(row.source_id.as_str()) {
            Some(Some(l)) => *l,
            Some(None) => {
                return Err(data_err(format!(
                    "line {line}: {} has no machine label",
                    row.source_id
                )))
            }
            None => {
                return Err(data_err(format!(
                    "line {line}: unknown source_id {}",
                    row.source_id
                )))
            }
        };
        human.push(h);
        auto.push(m);
    }
    cohen_kappa(&human, &auto).map_err(|e| data_err(e.to_string()))
}
