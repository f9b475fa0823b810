//! Label co-occurrence, duplication possibility, information density and
//! confidence summaries.

use std::cmp::Ordering;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationSet, CorpusSnapshot, Record};
use crate::error::{Error, Result};
use crate::surrogate::{confidence_score, ConfidenceVector, SurrogateModel};
use crate::vectorizer::Tokenizer;

/// Symmetric co-assignment counts for one category; the diagonal holds
/// each label's record count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix {
    pub category: String,
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl CooccurrenceMatrix {
    pub fn num(&self, i: usize) -> usize {
        self.counts[i][i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

pub fn cooccurrence(snapshot: &CorpusSnapshot, category: &str) -> Result<CooccurrenceMatrix> {
    cooccurrence_in(snapshot.annotations(), category)
}

pub fn cooccurrence_in(ann: &AnnotationSet, category: &str) -> Result<CooccurrenceMatrix> {
    let cat = ann
        .schema
        .category(category)
        .ok_or_else(|| Error::UnknownCategory(category.to_string()))?;
    let m = cat.labels.len();
    let mut counts = vec![vec![0usize; m]; m];
    let mut present = Vec::with_capacity(m);
    for labels in ann.assignments.values() {
        present.clear();
        present.extend((0..m).filter(|&j| labels.contains(&cat.labels[j])));
        for &a in &present {
            for &b in &present {
                counts[a][b] += 1;
            }
        }
    }
    Ok(CooccurrenceMatrix {
        category: cat.name.clone(),
        labels: cat.labels.clone(),
        counts,
    })
}

/// Per label with Num > 0: mean of Co/Num over partners with Co > 0 (0 if
/// it has none). Category score: mean over labels with Num > 0.
pub fn duplication_possibility(stats: &CooccurrenceMatrix) -> Result<f64> {
    let m = stats.labels.len();
    if m == 0 {
        return Err(Error::Empty(format!("category {:?} has no labels", stats.category)));
    }
    let mut total = 0.0;
    let mut used = 0usize;
    for i in 0..m {
        let num = stats.num(i);
        if num == 0 {
            continue;
        }
        used += 1;
        let ratios: Vec<f64> = (0..m)
            .filter(|&j| j != i && stats.counts[i][j] > 0)
            .map(|j| stats.counts[i][j] as f64 / num as f64)
            .collect();
        if !ratios.is_empty() {
            total += ratios.iter().sum::<f64>() / ratios.len() as f64;
        }
    }
    if used == 0 {
        return Err(Error::Empty(format!("category {:?} has no assigned labels", stats.category)));
    }
    Ok(total / used as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    pub label: String,
    pub partner: String,
    pub cooccurrence: usize,
    /// Co(label, partner) / Num(label).
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDuplication {
    pub category: String,
    /// `None` when no label of the category is assigned.
    pub score: Option<f64>,
    /// Directed pairs with Co > 0, highest ratio first.
    pub pairs: Vec<PairRatio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicationReport {
    pub categories: Vec<CategoryDuplication>,
}

impl DuplicationReport {
    pub fn category(&self, name: &str) -> Option<&CategoryDuplication> {
        self.categories.iter().find(|c| c.category == name)
    }
}

pub fn ranked_pairs(stats: &CooccurrenceMatrix) -> Vec<PairRatio> {
    let m = stats.labels.len();
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i != j && stats.counts[i][j] > 0 {
                pairs.push(PairRatio {
                    label: stats.labels[i].clone(),
                    partner: stats.labels[j].clone(),
                    cooccurrence: stats.counts[i][j],
                    ratio: stats.counts[i][j] as f64 / stats.num(i) as f64,
                });
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.ratio
            .total_cmp(&a.ratio)
            .then(b.cooccurrence.cmp(&a.cooccurrence))
            .then_with(|| a.label.cmp(&b.label))
            .then_with(|| a.partner.cmp(&b.partner))
    });
    pairs
}

pub fn duplication_report(snapshot: &CorpusSnapshot) -> DuplicationReport {
    let ann = snapshot.annotations();
    let categories = ann
        .schema
        .category_names()
        .map(|name| {
            let stats = cooccurrence_in(ann, name).expect("category from schema");
            CategoryDuplication {
                category: name.to_string(),
                score: duplication_possibility(&stats).ok(),
                pairs: ranked_pairs(&stats),
            }
        })
        .collect();
    DuplicationReport { categories }
}

/// `ln(labels / words)`; `-inf` for unlabeled records, `+inf` for labeled
/// records with no words.
pub fn info_density(label_count: usize, word_count: usize) -> f64 {
    match (label_count, word_count) {
        (0, _) => f64::NEG_INFINITY,
        (_, 0) => f64::INFINITY,
        (l, w) => (l as f64 / w as f64).ln(),
    }
}

pub fn record_density(record: &Record, annotations: &AnnotationSet, tokenizer: &Tokenizer) -> DensityEntry {
    let label_count = annotations.label_count(&record.id);
    let word_count = tokenizer.word_count(&record.modeling_text());
    DensityEntry {
        id: record.id.clone(),
        label_count,
        word_count,
        d_info: info_density(label_count, word_count),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEntry {
    pub id: String,
    pub label_count: usize,
    pub word_count: usize,
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub d_info: f64,
}

fn density_order(a: &DensityEntry, b: &DensityEntry) -> Ordering {
    a.d_info.total_cmp(&b.d_info).then_with(|| a.id.cmp(&b.id))
}

/// Entries in corpus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub entries: Vec<DensityEntry>,
}

impl DensityReport {
    /// Lowest density first; unlabeled records lead.
    pub fn ascending(&self) -> Vec<&DensityEntry> {
        let mut v: Vec<&DensityEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| density_order(a, b));
        v
    }

    pub fn descending(&self) -> Vec<&DensityEntry> {
        let mut v: Vec<&DensityEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| density_order(b, a));
        v
    }

    pub fn get(&self, id: &str) -> Option<&DensityEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

pub fn density_report(snapshot: &CorpusSnapshot, tokenizer: &Tokenizer) -> DensityReport {
    let ann = snapshot.annotations();
    DensityReport {
        entries: snapshot
            .records()
            .iter()
            .map(|r| record_density(r, ann, tokenizer))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceEntry {
    pub id: String,
    pub confidence: ConfidenceVector,
    pub score: f64,
    /// Mean per category; categories without labels are omitted.
    pub categories: IndexMap<String, f64>,
}

pub fn confidence_entry(model: &SurrogateModel, record: &Record) -> ConfidenceEntry {
    let cv = model.predict_proba(record);
    let mut categories = IndexMap::new();
    let mut offset = 0;
    for cat in &model.categories {
        let m = cat.classifiers.len();
        if m > 0 {
            let mean = cv.values()[offset..offset + m].iter().sum::<f64>() / m as f64;
            categories.insert(cat.name.clone(), mean);
        }
        offset += m;
    }
    ConfidenceEntry {
        id: record.id.clone(),
        score: confidence_score(&cv).unwrap_or(f64::NAN),
        confidence: cv,
        categories,
    }
}

pub fn confidence_report(model: &SurrogateModel, snapshot: &CorpusSnapshot) -> Vec<ConfidenceEntry> {
    snapshot
        .records()
        .iter()
        .map(|r| confidence_entry(model, r))
        .collect()
}
