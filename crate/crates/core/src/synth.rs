//! Seeded synthetic corpora: a keyword-separable corpus, two scenario
//! corpora with planted annotation problems, and Gaussian point clouds.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{Map, Value};

use crate::corpus::{AnnotationSet, Category, CorpusSnapshot, LabelSchema, Record};
use crate::error::{Error, Result};
use crate::vectorizer::stopwords::ENGLISH;

/// Records plus annotations, ready to snapshot or write out.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<Record>,
    pub annotations: AnnotationSet,
}

#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub corpus: PathBuf,
    pub annotations: PathBuf,
    pub schema: PathBuf,
}

impl SynthCorpus {
    pub fn snapshot(&self) -> Result<CorpusSnapshot> {
        CorpusSnapshot::from_records(self.records.clone())?.with_annotations(self.annotations.clone())
    }

    /// Writes `corpus.jsonl`, `annotations.json` and `schema.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<SynthPaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = SynthPaths {
            corpus: dir.join("corpus.jsonl"),
            annotations: dir.join("annotations.json"),
            schema: dir.join("schema.json"),
        };
        let mut out = Vec::new();
        self.write_jsonl(&mut out).map_err(|e| Error::io(&paths.corpus, e))?;
        std::fs::write(&paths.corpus, out).map_err(|e| Error::io(&paths.corpus, e))?;
        std::fs::write(&paths.annotations, self.annotations_json()).map_err(|e| Error::io(&paths.annotations, e))?;
        std::fs::write(&paths.schema, self.annotations.schema.to_json()).map_err(|e| Error::io(&paths.schema, e))?;
        Ok(paths)
    }

    pub fn write_jsonl(&self, w: &mut impl Write) -> std::io::Result<()> {
        for r in &self.records {
            let mut obj = Map::new();
            obj.insert("id".into(), Value::String(r.id.clone()));
            for (k, v) in &r.text_fields {
                obj.insert(k.clone(), Value::String(v.clone()));
            }
            serde_json::to_writer(&mut *w, &Value::Object(obj))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// `{"record-id": {"category": [labels]}}` for labeled records.
    pub fn annotations_json(&self) -> String {
        let mut top = Map::new();
        for r in &self.records {
            if self.annotations.label_count(&r.id) == 0 {
                continue;
            }
            let by_cat: Map<String, Value> = self
                .annotations
                .by_category(&r.id)
                .into_iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(k, v)| (k, Value::from(v)))
                .collect();
            top.insert(r.id.clone(), Value::Object(by_cat));
        }
        serde_json::to_string_pretty(&Value::Object(top)).expect("json")
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Distinct pronounceable non-stopword tokens, not in `exclude`.
fn pseudo_words<R: Rng>(rng: &mut R, n: usize, exclude: &BTreeSet<String>) -> Vec<String> {
    let stop: BTreeSet<&str> = ENGLISH.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(*CONSONANTS.choose(rng).unwrap() as char);
            w.push(*VOWELS.choose(rng).unwrap() as char);
        }
        if rng.random_bool(0.5) {
            w.push(*CONSONANTS.choose(rng).unwrap() as char);
        }
        if stop.contains(w.as_str()) || exclude.contains(&w) || !seen.insert(w.clone()) {
            continue;
        }
        out.push(w);
    }
    out
}

fn record_id(i: usize) -> String {
    format!("r{i:05}")
}

fn build_schema(cats: &[(&str, Vec<String>)]) -> LabelSchema {
    LabelSchema::new(
        cats.iter()
            .map(|(n, l)| Category {
                name: n.to_string(),
                labels: l.clone(),
            })
            .collect(),
    )
    .expect("generator schema is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeywordSpec {
    pub records: usize,
    pub categories: usize,
    pub labels_per_category: usize,
    pub seed: u64,
}

impl Default for KeywordSpec {
    fn default() -> Self {
        KeywordSpec {
            records: 500,
            categories: 3,
            labels_per_category: 4,
            seed: 0,
        }
    }
}

pub const KEYWORD_CATEGORIES: [&str; 3] = ["Problem", "Solution", "Item"];

/// Category names, label names and their unique trigger tokens.
pub struct KeywordVocabulary {
    pub categories: Vec<(String, Vec<String>)>,
    pub triggers: IndexMap<String, String>,
    pub filler: Vec<String>,
}

pub fn keyword_vocabulary(spec: &KeywordSpec) -> KeywordVocabulary {
    // Vocabulary does not depend on the corpus seed.
    let mut rng = ChaCha20Rng::seed_from_u64(0x6b65_7977);
    let filler = pseudo_words(&mut rng, 200, &BTreeSet::new());
    let excl: BTreeSet<String> = filler.iter().cloned().collect();
    let n_labels = spec.categories * spec.labels_per_category;
    let trig = pseudo_words(&mut rng, n_labels, &excl);
    let mut categories = Vec::new();
    let mut triggers = IndexMap::new();
    for c in 0..spec.categories {
        let name = KEYWORD_CATEGORIES
            .get(c)
            .map_or_else(|| format!("Category{c}"), |s| s.to_string());
        let prefix = name.to_lowercase();
        let labels: Vec<String> = (0..spec.labels_per_category).map(|j| format!("{prefix}_{j}")).collect();
        for (j, l) in labels.iter().enumerate() {
            triggers.insert(l.clone(), format!("kw{}", trig[c * spec.labels_per_category + j]));
        }
        categories.push((name, labels));
    }
    KeywordVocabulary {
        categories,
        triggers,
        filler,
    }
}

/// Each label is carried iff its unique trigger token is in the text.
pub fn keyword_corpus(spec: &KeywordSpec) -> SynthCorpus {
    let vocab = keyword_vocabulary(spec);
    let schema = build_schema(
        &vocab
            .categories
            .iter()
            .map(|(n, l)| (n.as_str(), l.clone()))
            .collect::<Vec<_>>(),
    );
    let mut ann = AnnotationSet::empty(schema);
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.records);
    for i in 0..spec.records {
        let id = record_id(i);
        let n_fill = rng.random_range(6..=12);
        let mut words: Vec<String> = (0..n_fill).map(|_| vocab.filler.choose(&mut rng).unwrap().clone()).collect();
        for (_, labels) in &vocab.categories {
            for l in labels {
                if rng.random_bool(0.3) {
                    let pos = rng.random_range(0..=words.len());
                    words.insert(pos, vocab.triggers[l].clone());
                    ann.assign(&id, l);
                }
            }
        }
        records.push(Record::new(id, [("DESCRIPTION", words.join(" "))]));
    }
    SynthCorpus {
        records,
        annotations: ann,
    }
}

pub const HVAC_DUPLICATE_PAIR: (&str, &str) = ("room too_hot", "too_hot room");
pub const HVAC_HTML_LABEL: &str = "br richard";
pub const HVAC_HTML_TOKENS: [&str; 3] = ["rich", "text", "br"];

/// Maintenance-order corpus with a duplicate label pair and an
/// HTML-polluted sub-corpus. Returns the corpus and the polluted ids.
pub fn hvac_scenario(records: usize, polluted: usize, seed: u64) -> (SynthCorpus, Vec<String>) {
    let problems: [(&str, &[&str]); 4] = [
        ("hot", &["room", "hot", "temperature", "warm"]),
        ("leak", &["water", "leak", "drip", "ceiling"]),
        ("noise", &["noise", "loud", "rattle", "fan"]),
        ("filter dirty", &["filter", "dirty", "dust", "clogged"]),
    ];
    let solutions: [(&str, &str); 4] = [
        ("replace", "replaced"),
        ("repair", "repaired"),
        ("clean", "cleaned"),
        ("adjust", "adjusted"),
    ];
    let items: [(&str, &str); 3] = [("thermostat", "thermostat"), ("belt", "belt"), ("valve", "valve")];
    let schema = build_schema(&[
        (
            "PI",
            vec![
                HVAC_DUPLICATE_PAIR.0.into(),
                HVAC_DUPLICATE_PAIR.1.into(),
                "leak".into(),
                "noise".into(),
                "filter dirty".into(),
            ],
        ),
        ("S", solutions.iter().map(|s| s.0.to_string()).collect()),
        (
            "X",
            std::iter::once(HVAC_HTML_LABEL.to_string())
                .chain(items.iter().map(|s| s.0.to_string()))
                .collect(),
        ),
    ]);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut filler_rng = ChaCha20Rng::seed_from_u64(0x6876_6163);
    let filler = pseudo_words(&mut filler_rng, 60, &BTreeSet::new());
    let mut ann = AnnotationSet::empty(schema);
    let mut out = Vec::with_capacity(records);
    let mut polluted_ids = Vec::new();
    for i in 0..records {
        let id = record_id(i);
        let (pi, cues) = problems.choose(&mut rng).unwrap();
        let (s, s_word) = solutions.choose(&mut rng).unwrap();
        let (x, x_word) = items.choose(&mut rng).unwrap();
        let mut words: Vec<String> = cues.choose_multiple(&mut rng, 2).map(|s| s.to_string()).collect();
        words.push(s_word.to_string());
        words.push(x_word.to_string());
        for _ in 0..rng.random_range(2..=4) {
            words.push(filler.choose(&mut rng).unwrap().clone());
        }
        words.shuffle(&mut rng);
        let is_polluted = i % (records / polluted.max(1)).max(1) == 0 && polluted_ids.len() < polluted;
        if is_polluted {
            let mut markup: Vec<String> = ["div", "class", "rich", "text", "br", "br", "span", "style"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            markup.shuffle(&mut rng);
            words.splice(0..0, markup);
            words.push("br".into());
            ann.assign(&id, HVAC_HTML_LABEL);
            polluted_ids.push(id.clone());
        } else {
            if *pi == "hot" {
                ann.assign(&id, HVAC_DUPLICATE_PAIR.0);
                ann.assign(&id, HVAC_DUPLICATE_PAIR.1);
            } else {
                ann.assign(&id, pi);
            }
            ann.assign(&id, s);
            if rng.random_bool(0.15) {
                let (s2, w2) = solutions.choose(&mut rng).unwrap();
                ann.assign(&id, s2);
                words.push(w2.to_string());
            }
            ann.assign(&id, x);
        }
        let long: String = words.join(" ");
        out.push(Record::new(
            id,
            [("DESCRIPTION", words[..words.len().min(4)].join(" ")), ("LONG_DESCRIPTION", long)],
        ));
    }
    (
        SynthCorpus {
            records: out,
            annotations: ann,
        },
        polluted_ids,
    )
}

pub const NLU_CLUSTER_LABELS: (&str, &str) = ("qa", "object_query");
pub const NLU_ENTITY_CATEGORY: &str = "suggested_entities";

/// Assistant-utterance corpus: short commands with scenario, intent and
/// entity labels, plus a cluster of long questions with no entity labels.
/// Returns the corpus and the cluster ids.
pub fn nlu_scenario(records: usize, cluster: usize, seed: u64) -> (SynthCorpus, Vec<String>) {
    struct Intent {
        scenario: &'static str,
        intent: &'static str,
        entity: &'static str,
        words: &'static [&'static str],
        values: &'static [&'static str],
    }
    let intents = [
        Intent {
            scenario: "alarm",
            intent: "alarm_set",
            entity: "time",
            words: &["wake", "alarm", "set"],
            values: &["seven", "six", "noon", "morning"],
        },
        Intent {
            scenario: "weather",
            intent: "weather_query",
            entity: "place_name",
            words: &["weather", "forecast", "rain"],
            values: &["boston", "paris", "tokyo", "denver"],
        },
        Intent {
            scenario: "music",
            intent: "play_music",
            entity: "song_name",
            words: &["play", "song", "music"],
            values: &["yesterday", "imagine", "hallelujah", "thriller"],
        },
        Intent {
            scenario: "calendar",
            intent: "calendar_set",
            entity: "date",
            words: &["meeting", "calendar", "schedule"],
            values: &["monday", "tomorrow", "friday", "weekend"],
        },
    ];
    let mut scen: Vec<String> = intents.iter().map(|i| i.scenario.to_string()).collect();
    scen.push(NLU_CLUSTER_LABELS.0.into());
    let mut intent_labels: Vec<String> = intents.iter().map(|i| i.intent.to_string()).collect();
    intent_labels.push(NLU_CLUSTER_LABELS.1.into());
    let mut entities: Vec<String> = intents.iter().map(|i| i.entity.to_string()).collect();
    entities.push("philosophy".into());
    let schema = build_schema(&[
        ("scenario", scen),
        ("intent", intent_labels),
        (NLU_ENTITY_CATEGORY, entities),
    ]);
    let topics = [
        "meaning", "existence", "ethics", "knowledge", "truth", "mind", "reality", "virtue", "reason", "freedom",
        "justice", "beauty", "logic", "consciousness", "morality", "being",
    ];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut ann = AnnotationSet::empty(schema);
    let mut out = Vec::with_capacity(records);
    let mut cluster_ids = Vec::new();
    let stride = (records / cluster.max(1)).max(1);
    for i in 0..records {
        let id = record_id(i);
        let in_cluster = i % stride == 1 % stride && cluster_ids.len() < cluster;
        let (question, answer) = if in_cluster {
            let n = rng.random_range(24..=34);
            let mut words = vec!["explain".to_string(), "philosophy".to_string()];
            words.extend((0..n).map(|_| topics.choose(&mut rng).unwrap().to_string()));
            ann.assign(&id, NLU_CLUSTER_LABELS.0);
            ann.assign(&id, NLU_CLUSTER_LABELS.1);
            cluster_ids.push(id.clone());
            (words.join(" "), "qa_factoid".to_string())
        } else {
            let it = intents.choose(&mut rng).unwrap();
            let v = it.values.choose(&mut rng).unwrap();
            let mut words: Vec<String> = it.words.choose_multiple(&mut rng, 2).map(|s| s.to_string()).collect();
            words.push(v.to_string());
            words.shuffle(&mut rng);
            ann.assign(&id, it.scenario);
            ann.assign(&id, it.intent);
            ann.assign(&id, it.entity);
            (words.join(" "), format!("[{} : {v}]", it.entity))
        };
        out.push(Record::new(id, [("answer", question), ("answer_normalized", answer)]));
    }
    (
        SynthCorpus {
            records: out,
            annotations: ann,
        },
        cluster_ids,
    )
}

/// `clusters` isotropic Gaussian blobs of `per_cluster` points in `dim`
/// dimensions, unit variance, centers `separation` apart on the axes.
pub fn gaussian_clusters(
    clusters: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(clusters * per_cluster);
    let mut labels = Vec::with_capacity(clusters * per_cluster);
    for c in 0..clusters {
        for _ in 0..per_cluster {
            let p: Vec<f64> = (0..dim)
                .map(|d| {
                    let center = if d == c % dim { separation / std::f64::consts::SQRT_2 } else { 0.0 };
                    center + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                })
                .collect::<Vec<f64>>();
            points.push(p);
            labels.push(c);
        }
    }
    (points, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_labels_follow_triggers() {
        let spec = KeywordSpec {
            records: 50,
            ..KeywordSpec::default()
        };
        let corpus = keyword_corpus(&spec);
        let vocab = keyword_vocabulary(&spec);
        for r in &corpus.records {
            let toks: BTreeSet<&str> = r.text_fields["DESCRIPTION"].split(' ').collect();
            for (label, trig) in &vocab.triggers {
                assert_eq!(toks.contains(trig.as_str()), corpus.annotations.has_label(&r.id, label));
            }
        }
        assert_eq!(corpus.annotations.schema.label_count(), 12);
    }

    #[test]
    fn generators_are_seeded() {
        let a = keyword_corpus(&KeywordSpec::default());
        let b = keyword_corpus(&KeywordSpec::default());
        assert_eq!(a.records, b.records);
        assert_eq!(a.annotations, b.annotations);
        let (h1, p1) = hvac_scenario(200, 20, 3);
        let (h2, p2) = hvac_scenario(200, 20, 3);
        assert_eq!(h1.records, h2.records);
        assert_eq!(p1, p2);
        assert_eq!(p1.len(), 20);
        let (_, c) = nlu_scenario(200, 25, 1);
        assert_eq!(c.len(), 25);
    }

    #[test]
    fn cluster_centers_are_separated() {
        let (pts, labels) = gaussian_clusters(3, 60, 20, 10.0, 0);
        assert_eq!(pts.len(), 180);
        let mean = |c: usize| -> Vec<f64> {
            let members: Vec<&Vec<f64>> = pts.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            (0..20).map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64).collect()
        };
        let (m0, m1) = (mean(0), mean(1));
        let d: f64 = m0.iter().zip(&m1).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((d - 10.0).abs() < 1.0, "{d}");
    }
}
