use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use serde::Serialize;

use crsq_core::aspect::AspectLexicon;
use crsq_core::corpus::{build_product_index, load_reviews, CategorySet, ProductIndex};
use crsq_core::dataset::{
    load_dataset, parse_dataset, read_dataset, write_dataset, Arity, DatasetStats, QuestionRecord, QUESTIONS_PER_RECORD,
};
use crsq_core::eval::{
    evaluate as run_evaluation, first_reference_predictions, read_predictions, reduce as run_reduction,
    render_comparison, split as run_split, EvalOptions, EvalReport, QuestionSet, Reduction, ReductionConfig,
    SplitConfig,
};
use crsq_core::exec::Execution;
use crsq_core::pipeline::{mine_stream, select_stream, PipelineOptions};
use crsq_core::question::{
    generate_external_batch, generate_template, record_id, GeneratedRecord, HttpAdapter, ProcessAdapter,
    QuestionAdapter, QuestionFlag, TemplateChoice, TemplateConfig,
};
use crsq_core::select::{detect_activity, sample_per_category, CandidateRecord, CandidateSentence};
use crsq_core::store::{QuestionIndex, StoreEntry};
use crsq_core::synth::{synthetic_dataset, write_review_corpus};
use crsq_core::text::{sentence_spans, Abbreviations, Lexicon, RuleTagger, Sentence};

use crate::config::Config;
use crate::manifest::Run;
use crate::{Classify, CorpusArgs, Engine, Failure, QuestionsKept};

pub fn exec(cfg: &Config) -> Execution {
    if cfg.threads == 1 {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

pub fn tagger(cfg: &Config) -> Result<RuleTagger, Failure> {
    let lexicon = match &cfg.corpus.lexicon_dir {
        Some(dir) => Lexicon::builtin()
            .with_overrides(dir)
            .with_context(|| format!("tagger lexicon overrides in {}", dir.display()))
            .data()?,
        None => Lexicon::builtin(),
    };
    Ok(RuleTagger::new(lexicon))
}

fn abbreviations(cfg: &Config) -> Result<Abbreviations, Failure> {
    match &cfg.corpus.abbreviations {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| p.display().to_string()).data()?;
            Ok(Abbreviations::from_lines(&text))
        }
        None => Ok(Abbreviations::default()),
    }
}

fn open_corpus(cfg: &mut Config, corpus: &CorpusArgs, run: &mut Run) -> Result<ProductIndex, Failure> {
    if corpus.categories.is_some() {
        cfg.corpus.categories = corpus.categories.clone();
    }
    let categories = match &cfg.corpus.categories {
        Some(p) => {
            run.input(p);
            CategorySet::load(p).data()?
        }
        None => CategorySet::default(),
    };
    run.input(&corpus.meta);
    run.input(&corpus.reviews);
    let products = build_product_index(&corpus.meta, &categories).data()?;
    let s = products.stats;
    eprintln!(
        "products: {} indexed of {} ({} outside categories, {} without category, {} duplicates, {} malformed)",
        s.indexed, s.records, s.outside_categories, s.missing_category, s.duplicates, s.malformed
    );
    Ok(products)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).data()
}

#[derive(Serialize)]
struct SentenceLine<'a> {
    review_id: &'a str,
    sentence_index: usize,
    category: &'a str,
    text: &'a str,
}

pub fn ingest(cfg: &mut Config, corpus: &CorpusArgs, out: &Path) -> Result<(), Failure> {
    let mut run = Run::new("ingest");
    let products = open_corpus(cfg, corpus, &mut run)?;
    let abbreviations = abbreviations(cfg)?;
    let exec = exec(cfg);
    let mut w = run.create(out).data()?;
    let mut stream = load_reviews(&corpus.reviews, &products).data()?;
    let mut sentences = 0usize;
    loop {
        let chunk = stream.next_chunk(cfg.corpus.chunk_size.max(1)).data()?;
        if chunk.is_empty() {
            break;
        }
        let blocks = exec.map(&chunk, |(review, category)| {
            let mut block = String::new();
            for (i, span) in sentence_spans(&review.text, &abbreviations).into_iter().enumerate() {
                let line = SentenceLine {
                    review_id: &review.review_id,
                    sentence_index: i,
                    category: &category.name,
                    text: &review.text[span],
                };
                block.push_str(&serde_json::to_string(&line).expect("sentence serializes"));
                block.push('\n');
            }
            block
        });
        for b in blocks {
            sentences += b.lines().count();
            w.write_all(b.as_bytes()).data()?;
        }
    }
    w.flush().data()?;
    let s = stream.stats();
    eprintln!(
        "reviews: {} emitted, {} malformed, {} unknown product; {sentences} sentences",
        s.emitted, s.malformed, s.unknown_product
    );
    run.finish(cfg).data()?;
    Ok(())
}

fn lexicon_text(lexicons: &HashMap<String, AspectLexicon>) -> String {
    let sorted: BTreeMap<_, _> = lexicons.iter().collect();
    sorted.values().map(|l| l.to_text()).collect::<Vec<_>>().join("\n")
}

/// Parses a file of `# category:` blocks as written by `mine-aspects`.
pub fn parse_lexicons(text: &str) -> anyhow::Result<HashMap<String, AspectLexicon>> {
    let mut blocks: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.trim_start().starts_with("# category:") || blocks.is_empty() {
            blocks.push(String::new());
        }
        let b = blocks.last_mut().expect("a block is open");
        b.push_str(line);
        b.push('\n');
    }
    let mut out = HashMap::new();
    for b in blocks {
        let lex = AspectLexicon::parse(&b)?;
        if lex.category.is_empty() {
            if lex.is_empty() {
                continue;
            }
            return Err(anyhow!("aspect lines before the first `# category:` header"));
        }
        out.insert(lex.category.clone(), lex);
    }
    Ok(out)
}

pub fn mine_aspects(cfg: &mut Config, corpus: &CorpusArgs, out: &Path) -> Result<(), Failure> {
    let mut run = Run::new("mine-aspects");
    let products = open_corpus(cfg, corpus, &mut run)?;
    let tagger = tagger(cfg)?;
    let abbreviations = abbreviations(cfg)?;
    let opts = PipelineOptions {
        tagger: &tagger,
        abbreviations: &abbreviations,
        require_aspect: cfg.aspects.require_aspect,
        chunk_size: cfg.corpus.chunk_size,
        exec: exec(cfg),
    };
    let mut stream = load_reviews(&corpus.reviews, &products).data()?;
    let (lexicons, stats) = mine_stream(&mut stream, cfg.aspects.min_support, &opts).data()?;
    eprintln!(
        "{} sentences; {} categories, {} aspects",
        stats.sentences,
        lexicons.len(),
        lexicons.values().map(AspectLexicon::len).sum::<usize>()
    );
    run.write(out, lexicon_text(&lexicons).as_bytes()).data()?;
    run.finish(cfg).data()?;
    Ok(())
}

pub fn select(cfg: &mut Config, corpus: &CorpusArgs, lexicons: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let mut run = Run::new("select");
    let products = open_corpus(cfg, corpus, &mut run)?;
    let tagger = tagger(cfg)?;
    let abbreviations = abbreviations(cfg)?;
    let opts = PipelineOptions {
        tagger: &tagger,
        abbreviations: &abbreviations,
        require_aspect: cfg.aspects.require_aspect,
        chunk_size: cfg.corpus.chunk_size,
        exec: exec(cfg),
    };
    let lexicons = match lexicons {
        Some(p) => {
            run.input(p);
            parse_lexicons(&read_text(p)?)
                .with_context(|| p.display().to_string())
                .data()?
        }
        None if opts.require_aspect => {
            let mut stream = load_reviews(&corpus.reviews, &products).data()?;
            mine_stream(&mut stream, cfg.aspects.min_support, &opts).data()?.0
        }
        None => HashMap::new(),
    };
    let started = Instant::now();
    let mut w = run.create(out).data()?;
    let mut stream = load_reviews(&corpus.reviews, &products).data()?;
    let stats = select_stream(&mut stream, &lexicons, &opts, |c| {
        serde_json::to_writer(&mut w, &CandidateRecord::from(&c))?;
        w.write_all(b"\n")
    })
    .data()?;
    w.flush().data()?;
    let secs = started.elapsed().as_secs_f64();
    eprintln!(
        "reviews: {} emitted, {} malformed, {} unknown product; {} sentences, {} candidates ({:.0} sentences/s)",
        stats.ingest.emitted,
        stats.ingest.malformed,
        stats.ingest.unknown_product,
        stats.sentences,
        stats.candidates,
        stats.sentences as f64 / secs.max(1e-9)
    );
    run.finish(cfg).data()?;
    Ok(())
}

fn read_candidates(path: &Path) -> Result<Vec<CandidateRecord>, Failure> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .with_context(|| format!("{}:{}: not a candidate record", path.display(), i + 1))
                .data()
        })
        .collect()
}

fn write_lines<T: Serialize>(run: &mut Run, out: &Path, items: &[T]) -> Result<(), Failure> {
    let mut w = run.create(out).data()?;
    for item in items {
        serde_json::to_writer(&mut w, item).data()?;
        w.write_all(b"\n").data()?;
    }
    w.flush().data()
}

pub fn sample(cfg: &Config, candidates: &Path, out: &Path) -> Result<(), Failure> {
    let mut run = Run::new("sample");
    run.input(candidates);
    let mut by_category: BTreeMap<String, Vec<CandidateRecord>> = BTreeMap::new();
    for c in read_candidates(candidates)? {
        by_category.entry(c.category.clone()).or_default().push(c);
    }
    let mut picked = Vec::new();
    for (category, list) in by_category {
        let have = list.len();
        let sample = sample_per_category(list, cfg.sample.per_category, cfg.seed);
        eprintln!("{category}: {} of {have}", sample.len());
        picked.extend(sample);
    }
    write_lines(&mut run, out, &picked)?;
    run.finish(cfg).data()?;
    Ok(())
}

/// A sentence to generate for, from a candidates file or a dataset.
pub struct InputSentence {
    pub id: String,
    pub review_id: String,
    pub sentence_index: u32,
    pub category: String,
    pub text: String,
}

fn is_json_lines(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

pub fn read_sentences(path: &Path) -> Result<Vec<InputSentence>, Failure> {
    let text = read_text(path)?;
    if is_json_lines(&text) {
        return Ok(read_candidates(path)?
            .into_iter()
            .map(|c| InputSentence {
                id: record_id(&c.review_id, c.sentence_index),
                review_id: c.review_id,
                sentence_index: c.sentence_index,
                category: c.category,
                text: c.text,
            })
            .collect());
    }
    let records = parse_dataset(&text, Arity::AtMost(QUESTIONS_PER_RECORD))
        .with_context(|| path.display().to_string())
        .data()?;
    Ok(records
        .into_iter()
        .map(|r| InputSentence {
            review_id: r.id.clone(),
            id: r.id,
            sentence_index: 0,
            category: r.category,
            text: r.sentence,
        })
        .collect())
}

fn template_config(cfg: &Config) -> TemplateConfig {
    let g = &cfg.generate;
    let mut t = TemplateConfig::default();
    if !g.templates.is_empty() {
        t.templates = g.templates.clone();
    }
    t.stoplist.extend(g.extra_stopwords.iter().map(|w| w.to_lowercase()));
    for (category, noun) in &g.category_nouns {
        t = t.with_category_noun(category, noun);
    }
    t.choice = match g.template {
        Some(i) => TemplateChoice::Fixed(i),
        None => TemplateChoice::Seeded,
    };
    t
}

fn candidate_of(s: &InputSentence, tagger: &RuleTagger) -> CandidateSentence {
    let sentence = Sentence::analyze(s.review_id.as_str(), s.sentence_index, s.text.as_str(), tagger);
    CandidateSentence {
        activities: detect_activity(&sentence),
        sentence,
        category: s.category.clone(),
        aspect_values: Vec::new(),
    }
}

pub fn generate(cfg: &Config, input: &Path, engine: Engine, out: &Path) -> Result<(), Failure> {
    let mut run = Run::new("generate");
    run.input(input);
    let sentences = read_sentences(input)?;
    let tagger = tagger(cfg)?;
    let exec = exec(cfg);
    let candidates: Vec<CandidateSentence> = exec.map(&sentences, |s| candidate_of(s, &tagger));
    let mut records: Vec<GeneratedRecord> = match engine {
        Engine::Template => {
            let tcfg = template_config(cfg);
            let labels = exec.map(&candidates, |c| {
                if c.activities.is_empty() {
                    return Ok(crsq_core::question::QuestionLabel::NotApplicable);
                }
                generate_template(c, &tcfg, cfg.seed)
            });
            labels
                .into_iter()
                .zip(&sentences)
                .map(|(label, s)| {
                    let label = label.with_context(|| format!("sentence {}", s.id)).data()?;
                    Ok(GeneratedRecord::from_label(&s.review_id, s.sentence_index, &s.category, &label))
                })
                .collect::<Result<_, Failure>>()?
        }
        Engine::Adapter => {
            let g = &cfg.generate;
            let adapter: Box<dyn QuestionAdapter> = match (&g.adapter_command, &g.adapter_url) {
                (Some(cmd), _) => Box::new(ProcessAdapter::shell(cmd)),
                (None, Some(url)) => Box::new(HttpAdapter::new(url.as_str())),
                (None, None) => {
                    return Err(Failure::Usage(anyhow!(
                        "the adapter engine needs --adapter-command or --adapter-url"
                    )))
                }
            };
            let results = generate_external_batch(
                &candidates,
                adapter.as_ref(),
                Duration::from_millis(g.timeout_ms),
                g.in_flight,
            );
            results
                .iter()
                .zip(&sentences)
                .map(|(r, s)| match r {
                    Ok(label) => GeneratedRecord::from_label(&s.review_id, s.sentence_index, &s.category, label),
                    Err(e) => GeneratedRecord::from_error(&s.review_id, s.sentence_index, &s.category, e),
                })
                .collect()
        }
    };
    for (r, s) in records.iter_mut().zip(&sentences) {
        r.id = s.id.clone();
    }
    write_lines(&mut run, out, &records)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    let na = records.iter().filter(|r| r.is_na()).count();
    eprintln!("{} sentences: {} questions, {na} N/A, {failed} failed", records.len(), records.len() - na - failed);
    if failed > 0 {
        return Err(Failure::Service(anyhow!(
            "{failed} of {} adapter requests failed; output left at {}",
            records.len(),
            crate::manifest::partial(out).display()
        )));
    }
    run.finish(cfg).data()?;
    Ok(())
}

fn read_references(path: &Path) -> Result<Vec<QuestionRecord>, Failure> {
    read_dataset(path, Arity::AtMost(QUESTIONS_PER_RECORD))
        .with_context(|| path.display().to_string())
        .data()
}

pub fn evaluate(
    cfg: &Config,
    references: &Path,
    predictions: Option<&Path>,
    first_reference: bool,
    out: &Path,
) -> Result<(), Failure> {
    let mut run = Run::new("evaluate");
    run.input(references);
    let refs = read_references(references)?;
    let preds = match predictions {
        Some(p) if !first_reference => {
            run.input(p);
            let f = File::open(p).with_context(|| p.display().to_string()).data()?;
            read_predictions(BufReader::new(f)).with_context(|| p.display().to_string()).data()?
        }
        _ => first_reference_predictions(&refs),
    };
    let opts = EvalOptions {
        rouge_mode: cfg.evaluate.rouge,
        exec: exec(cfg),
    };
    let report = run_evaluation(&preds, &refs, opts).data()?;
    print!("{}", report.render());
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    run.write(out, json.as_bytes()).data()?;
    run.finish(cfg).data()?;
    Ok(())
}

pub fn compare(cfg: &Config, reports: &[String], out: Option<&Path>) -> Result<(), Failure> {
    let mut run = Run::new("compare");
    let mut loaded = Vec::new();
    for spec in reports {
        let (label, path) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("expected LABEL=report.json, got {spec:?}"))
            .usage()?;
        let path = Path::new(path);
        run.input(path);
        let report: EvalReport = serde_json::from_str(&read_text(path)?)
            .with_context(|| path.display().to_string())
            .data()?;
        loaded.push((label.to_string(), report));
    }
    let table = render_comparison(&loaded);
    print!("{table}");
    if let Some(out) = out {
        run.write(out, table.as_bytes()).data()?;
        run.finish(cfg).data()?;
    }
    Ok(())
}

fn write_records(run: &mut Run, out: &Path, records: &[QuestionRecord]) -> Result<(), Failure> {
    let w = run.create(out).data()?;
    write_dataset(records, w).data()
}

pub fn split(cfg: &Config, dataset: &Path, train_out: &Path, test_out: &Path) -> Result<(), Failure> {
    let mut run = Run::new("split");
    run.input(dataset);
    let records = read_references(dataset)?;
    let split_cfg = SplitConfig {
        train_fraction: cfg.split.train_fraction,
        seed: cfg.seed,
    };
    let (train, test) = run_split(&records, split_cfg).data()?;
    eprintln!("train {} / test {}", train.len(), test.len());
    write_records(&mut run, train_out, &train)?;
    write_records(&mut run, test_out, &test)?;
    run.finish(cfg).data()?;
    Ok(())
}

pub fn reduce(
    cfg: &Config,
    train: &Path,
    questions: Option<QuestionsKept>,
    fraction: Option<f64>,
    out: &Path,
) -> Result<(), Failure> {
    let mut run = Run::new("reduce");
    run.input(train);
    let records = read_references(train)?;
    let mode = match (questions, fraction) {
        (Some(q), _) => Reduction::QuestionSet(match q {
            QuestionsKept::Q1 => QuestionSet::Q1,
            QuestionsKept::Q3 => QuestionSet::Q3,
            QuestionsKept::Q5 => QuestionSet::Q5,
        }),
        (None, Some(f)) => Reduction::SentenceFraction(f),
        (None, None) => return Err(Failure::Usage(anyhow!("give --questions or --fraction"))),
    };
    let reduced = run_reduction(&records, ReductionConfig { mode, seed: cfg.seed }).usage()?;
    let stats = DatasetStats::of(&reduced);
    eprintln!("{} records, {} questions", stats.total, stats.questions);
    write_records(&mut run, out, &reduced)?;
    run.finish(cfg).data()?;
    Ok(())
}

fn index_entries(cfg: &Config, path: &Path) -> Result<Vec<StoreEntry>, Failure> {
    let text = read_text(path)?;
    if !is_json_lines(&text) {
        let records = parse_dataset(&text, Arity::AtMost(QUESTIONS_PER_RECORD))
            .with_context(|| path.display().to_string())
            .data()?;
        return Ok(records
            .iter()
            .flat_map(|r| {
                r.questions().iter().map(|q| StoreEntry {
                    id: r.id.clone(),
                    category: r.category.clone(),
                    text: q.clone(),
                })
            })
            .collect());
    }
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let g: GeneratedRecord = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: not a generated-question record", path.display(), i + 1))
            .data()?;
        let generic = g.flags.contains(&QuestionFlag::Generic);
        if g.error.is_some() || g.is_na() || (generic && !cfg.index.include_generic) {
            continue;
        }
        entries.push(StoreEntry {
            id: g.id,
            category: g.category,
            text: g.label,
        });
    }
    Ok(entries)
}

pub fn index(cfg: &Config, questions: &Path, out: &Path) -> Result<(), Failure> {
    let mut run = Run::new("index");
    run.input(questions);
    let entries = index_entries(cfg, questions)?;
    let index = QuestionIndex::from_entries(entries, cfg.index.weighting).data()?;
    eprintln!("{} questions indexed", index.len());
    let mut w = run.create(out).data()?;
    index.write(&mut w).data()?;
    w.flush().data()?;
    run.finish(cfg).data()?;
    Ok(())
}

pub fn dataset_stats(dataset: &Path, lenient: bool, json: bool) -> Result<(), Failure> {
    let stats = if lenient {
        DatasetStats::of(&read_references(dataset)?)
    } else {
        load_dataset(dataset).with_context(|| dataset.display().to_string()).data()?.1
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    } else {
        print!("{}", stats.render());
    }
    Ok(())
}

pub fn synth_corpus(cfg: &Config, meta: &Path, reviews: &Path, sentences: usize, usage_every: usize) -> Result<(), Failure> {
    let mut run = Run::new("synth-corpus");
    let mut m = run.create(meta).data()?;
    let mut r = run.create(reviews).data()?;
    let shape = write_review_corpus(&mut m, &mut r, sentences, usage_every, cfg.seed).data()?;
    m.flush().data()?;
    r.flush().data()?;
    drop((m, r));
    eprintln!(
        "{} products, {} reviews, {} sentences ({} with a usage clause)",
        shape.products, shape.reviews, shape.sentences, shape.usage_sentences
    );
    run.finish(cfg).data()?;
    Ok(())
}

pub fn synth_dataset(cfg: &Config, out: &Path) -> Result<(), Failure> {
    let mut run = Run::new("synth-dataset");
    write_records(&mut run, out, &synthetic_dataset(cfg.seed))?;
    run.finish(cfg).data()?;
    Ok(())
}
