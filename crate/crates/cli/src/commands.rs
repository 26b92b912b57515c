use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use kgverb_core::aligner::{align_corpus, flatten_subproperties, AlignmentExample};
use kgverb_core::filter::{
    eval_scorer, percentile_filter, read_ratings, read_scores, score_all, write_scores, Generated,
    HeuristicScorer, ScoredSentence,
};
use kgverb_core::grouper::{count_cooccurrence, group_corpus, CooccurrenceStats, TripleGroup};
use kgverb_core::ingest::{
    load_pages, load_triples, validate_catalog, CorpusBundle, Loaded, RecordError,
};
use kgverb_core::model::{EntityCatalog, FlatTriple, PageText};
use kgverb_core::report::{report_alignment, report_grouping, AlignmentStats};
use kgverb_core::serializer::{emit_training_pairs, package_documents, serialize_group, write_training_tsv};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::Format;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("opening {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().with_context(|| format!("writing {}", path.display()))
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut w = create(path)?;
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        w.write_all(b"\n")?;
    }
    finish(w, path)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| anyhow!("missing --{flag} (or `{flag}` in the config file)"))
}

fn warn_rejected(path: &Path, rejected: &[RecordError]) {
    if let Some(first) = rejected.first() {
        eprintln!(
            "warning: skipped {} record(s) in {}; first: {first}",
            rejected.len(),
            path.display()
        );
    }
}

fn load<T>(
    path: &Path,
    f: impl FnOnce(BufReader<File>) -> Result<Loaded<T>, kgverb_core::ingest::IngestError>,
) -> Result<Loaded<T>> {
    f(open(path)?).with_context(|| format!("loading {}", path.display()))
}

fn load_catalog(cfg: &PipelineConfig) -> Result<EntityCatalog> {
    let path = required(&cfg.entities, "entities")?;
    let loaded = load(path, |r| validate_catalog(r, cfg.load))?;
    warn_rejected(path, &loaded.rejected);
    Ok(loaded.items)
}

fn load_bundle(cfg: &PipelineConfig, with_pages: bool) -> Result<CorpusBundle> {
    let catalog = load_catalog(cfg)?;
    let tpath = required(&cfg.triples, "triples")?;
    let triples = load(tpath, |r| load_triples(r, &catalog, cfg.load))?;
    warn_rejected(tpath, &triples.rejected);
    let pages = if with_pages {
        let ppath = required(&cfg.pages, "pages")?;
        let pages = load(ppath, |r| load_pages(r, &catalog, cfg.load))?;
        warn_rejected(ppath, &pages.rejected);
        pages.items
    } else {
        Vec::new()
    };
    Ok(CorpusBundle::new(catalog, triples.items, pages)?)
}

pub fn validate(cfg: &PipelineConfig) -> Result<ExitCode> {
    let epath = required(&cfg.entities, "entities")?;
    let opts = cfg.load;
    let catalog = load(epath, |r| validate_catalog(r, opts))?;
    let mut rejected: Vec<(&Path, RecordError)> = catalog.rejected.into_iter().map(|e| (epath, e)).collect();
    let catalog = catalog.items;
    let mut n_triples = 0;
    if let Some(tpath) = cfg.triples.as_deref() {
        let t = load(tpath, |r| load_triples(r, &catalog, opts))?;
        n_triples = t.items.len();
        rejected.extend(t.rejected.into_iter().map(|e| (tpath, e)));
    }
    let mut n_pages = 0;
    let mut n_sentences = 0;
    if let Some(ppath) = cfg.pages.as_deref() {
        let p = load(ppath, |r| load_pages(r, &catalog, opts))?;
        n_pages = p.items.len();
        n_sentences = p.items.iter().map(|p: &PageText| p.sentences.len()).sum();
        rejected.extend(p.rejected.into_iter().map(|e| (ppath, e)));
    }
    println!("entities\t{}", catalog.len());
    println!("triples\t{n_triples}");
    println!("pages\t{n_pages}");
    println!("sentences\t{n_sentences}");
    println!("rejected\t{}", rejected.len());
    for (path, e) in &rejected {
        eprintln!("{}: {e}", path.display());
    }
    Ok(if rejected.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

pub fn align(cfg: &PipelineConfig, out_dir: &Path) -> Result<()> {
    let bundle = load_bundle(cfg, true)?;
    let (examples, stats) = align_corpus(&bundle)?;
    write_jsonl(&out_dir.join("aligned.jsonl"), &examples)?;
    let stats_path = out_dir.join("stats.json");
    let mut w = create(&stats_path)?;
    serde_json::to_writer_pretty(&mut w, &stats)?;
    w.write_all(b"\n")?;
    finish(w, &stats_path)?;
    eprintln!(
        "aligned {} sentence(s), {} of {} triple(s)",
        stats.sentences_selected, stats.triples_aligned, stats.total_triples
    );
    Ok(())
}

pub fn cooc(aligned: &Path, out: &Path) -> Result<()> {
    let examples: Vec<AlignmentExample> = read_jsonl(aligned)?;
    let stats = count_cooccurrence(&examples);
    let mut w = create(out)?;
    stats.write_tsv(&mut w)?;
    finish(w, out)
}

pub fn group(cfg: &PipelineConfig, cooc: &Path, out: &Path) -> Result<()> {
    let bundle = load_bundle(cfg, false)?;
    let stats = CooccurrenceStats::read_tsv(open(cooc)?).with_context(|| format!("loading {}", cooc.display()))?;
    let mut flat: Vec<FlatTriple> = Vec::with_capacity(bundle.triple_count());
    let mut skipped = 0;
    for t in bundle.triples().values().flatten() {
        let (ts, errors) = flatten_subproperties(t, bundle.catalog());
        skipped += errors.len();
        flat.extend(ts);
    }
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} qualifier(s) without a usable object");
    }
    let groups = group_corpus(&flat, &stats, &cfg.grouping)?;
    write_jsonl(out, &groups)
}

pub fn serialize(cfg: &PipelineConfig, aligned: Option<&Path>, groups: Option<&Path>, out_dir: &Path) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    if let Some(aligned) = aligned {
        let examples: Vec<AlignmentExample> = read_jsonl(aligned)?;
        let pairs = emit_training_pairs(&examples, &catalog).collect::<Result<Vec<_>, _>>()?;
        let path = out_dir.join("train.tsv");
        let mut w = create(&path)?;
        write_training_tsv(&mut w, pairs)?;
        finish(w, &path)?;
    }
    if let Some(groups) = groups {
        let groups: Vec<TripleGroup> = read_jsonl(groups)?;
        let path = out_dir.join("inputs.txt");
        let mut w = create(&path)?;
        for g in &groups {
            writeln!(w, "{}", serialize_group(g, &catalog)?)?;
        }
        finish(w, &path)?;
    }
    Ok(())
}

/// A generated.tsv row: `group_line \t sentence`, where `group_line` is the
/// 1-based line of groups.jsonl the sentence was generated from. The
/// sentence id is the row's own 1-based line number.
struct GeneratedRow {
    id: String,
    group: usize,
    text: String,
}

fn read_generated(path: &Path, n_groups: usize) -> Result<Vec<GeneratedRow>> {
    let mut rows = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{}:{}", path.display(), i + 1);
        let (g, text) = line
            .split_once('\t')
            .ok_or_else(|| anyhow!("{}: expected `group_line<TAB>sentence`", at()))?;
        let group: usize = g.trim().parse().map_err(|_| anyhow!("{}: bad group line `{g}`", at()))?;
        if group == 0 || group > n_groups {
            bail!("{}: group line {group} is outside 1..={n_groups}", at());
        }
        rows.push(GeneratedRow {
            id: (i + 1).to_string(),
            group: group - 1,
            text: text.to_owned(),
        });
    }
    Ok(rows)
}

pub fn score(cfg: &PipelineConfig, groups: &Path, generated: &Path, out: &Path) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let groups: Vec<TripleGroup> = read_jsonl(groups)?;
    let rows = read_generated(generated, groups.len())?;
    let items: Vec<Generated> = rows
        .iter()
        .map(|r| Generated {
            id: &r.id,
            text: &r.text,
            group: &groups[r.group],
        })
        .collect();
    let scored = score_all(&HeuristicScorer { catalog: &catalog }, &items)?;
    let mut w = create(out)?;
    write_scores(&mut w, &scored)?;
    finish(w, out)
}

pub fn filter(cfg: &PipelineConfig, groups: &Path, generated: &Path, scores: &Path, out_dir: &Path) -> Result<()> {
    let groups: Vec<TripleGroup> = read_jsonl(groups)?;
    let rows = read_generated(generated, groups.len())?;
    let mut by_id: HashMap<String, f64> = HashMap::new();
    for (id, s) in read_scores(open(scores)?).with_context(|| format!("loading {}", scores.display()))? {
        if by_id.insert(id.clone(), s).is_some() {
            bail!("{}: duplicate sentence id `{id}`", scores.display());
        }
    }
    let mut items = Vec::with_capacity(rows.len());
    for r in rows {
        let score = by_id
            .remove(&r.id)
            .ok_or_else(|| anyhow!("no score for sentence `{}` in {}", r.id, scores.display()))?;
        items.push(ScoredSentence::new(r.id, groups[r.group].subject.clone(), r.text, score)?);
    }
    if let Some(id) = by_id.keys().min() {
        bail!("{}: score for unknown sentence `{id}`", scores.display());
    }
    let (kept, removed) = percentile_filter(items, cfg.fraction)?;
    write_jsonl(&out_dir.join("kept.jsonl"), &kept)?;
    write_jsonl(&out_dir.join("removed.jsonl"), &removed)?;
    eprintln!("kept {}, removed {}", kept.len(), removed.len());
    Ok(())
}

pub fn eval(predicted: &Path, human: &Path, format: Format) -> Result<()> {
    let pred = read_ratings(open(predicted)?).with_context(|| format!("loading {}", predicted.display()))?;
    let human_rows = read_ratings(open(human)?).with_context(|| format!("loading {}", human.display()))?;
    let mut human_by_id: HashMap<&str, f64> = HashMap::new();
    for (id, v) in &human_rows {
        if human_by_id.insert(id, *v).is_some() {
            bail!("{}: duplicate id `{id}`", human.display());
        }
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (id, p) in &pred {
        let h = human_by_id
            .remove(id.as_str())
            .ok_or_else(|| anyhow!("no human score for `{id}`"))?;
        xs.push(*p);
        ys.push(h);
    }
    if let Some(id) = human_by_id.keys().min() {
        bail!("no predicted score for `{id}`");
    }
    let r = eval_scorer(&xs, &ys)?;
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&r)?),
        Format::Text => {
            println!("N         {}", r.n);
            println!("Pearson   {:.4}", r.pearson);
            println!("Spearman  {:.4}", r.spearman);
            println!("Kendall   {:.4}", r.kendall);
        }
    }
    Ok(())
}

pub fn package(kept: &Path, out: &Path) -> Result<()> {
    let kept: Vec<ScoredSentence> = read_jsonl(kept)?;
    let docs = package_documents(kept.into_iter().map(|s| (s.subject, s.text)));
    write_jsonl(out, &docs)
}

pub fn report_alignment_cmd(stats: &Path, format: Format) -> Result<()> {
    let stats: AlignmentStats =
        serde_json::from_reader(open(stats)?).with_context(|| format!("loading {}", stats.display()))?;
    match format {
        Format::Text => print!("{}", report_alignment(&stats)),
        Format::Json => println!("{}", serde_json::to_string_pretty(&stats)?),
    }
    Ok(())
}

pub fn report_grouping_cmd(cfg: &PipelineConfig, groups: &Path, format: Format) -> Result<()> {
    let groups: Vec<TripleGroup> = read_jsonl(groups)?;
    let r = report_grouping(&groups, cfg.grouping.max_depth);
    match format {
        Format::Text => print!("{}", r.to_text()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&r)?),
    }
    Ok(())
}
