//! Perturbation-based local explanations: token-type masks, a distance
//! kernel and a weighted ridge fit of the target label's probability.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Record;
use crate::error::{Error, Result};
use crate::surrogate::SurrogateModel;
use crate::vectorizer::Tokenizer;

/// Anything that scores the labels of one category from raw text.
pub trait TextClassifier {
    /// Labels of `category` in output order; `None` if unknown.
    fn category_labels(&self, category: &str) -> Option<Vec<String>>;
    fn predict_category(&self, category: &str, text: &str) -> Vec<f64>;
    fn tokenizer(&self) -> &Tokenizer;
    fn in_vocabulary(&self, token: &str) -> bool;
}

impl TextClassifier for SurrogateModel {
    fn category_labels(&self, category: &str) -> Option<Vec<String>> {
        self.categories
            .iter()
            .find(|c| c.name == category)
            .map(|c| c.classifiers.iter().map(|k| k.label.clone()).collect())
    }

    fn predict_category(&self, category: &str, text: &str) -> Vec<f64> {
        match self.categories.iter().position(|c| c.name == category) {
            Some(i) => self.predict_category_text(i, text),
            None => Vec::new(),
        }
    }

    fn tokenizer(&self) -> &Tokenizer {
        self.vectorizer.tfidf.tokenizer()
    }

    fn in_vocabulary(&self, token: &str) -> bool {
        self.vectorizer.tfidf.index_of(token).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub n_features: usize,
    pub seed: u64,
    /// Explicit target label; the category's most probable label if unset.
    pub target: Option<String>,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            n_samples: 1000,
            kernel_width: 25.0,
            n_features: 10,
            seed: 0,
            target: None,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(Error::InvalidArgument("n_samples must be at least 10".into()));
        }
        if !(self.kernel_width > 0.0 && self.kernel_width.is_finite()) {
            return Err(Error::InvalidArgument("kernel_width must be positive".into()));
        }
        if self.n_features == 0 {
            return Err(Error::InvalidArgument("n_features must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbedSample {
    /// One entry per distinct token type.
    pub mask: Vec<bool>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    /// Distinct token types in order of first appearance.
    pub types: Vec<String>,
    pub samples: Vec<PerturbedSample>,
}

fn masked_text(tokens: &[String], type_of: &[usize], mask: &[bool]) -> String {
    let kept: Vec<&str> = tokens
        .iter()
        .zip(type_of)
        .filter(|(_, &t)| mask[t])
        .map(|(s, _)| s.as_str())
        .collect();
    kept.join(" ")
}

/// Sample 0 keeps everything; each other sample removes all occurrences
/// of a uniformly sized random set of token types.
pub fn perturb(tokens: &[String], n_samples: usize, seed: u64) -> Result<Perturbation> {
    if tokens.is_empty() {
        return Err(Error::Empty("no tokens to perturb".into()));
    }
    let mut types: IndexMap<&str, ()> = IndexMap::new();
    let type_of: Vec<usize> = tokens
        .iter()
        .map(|t| types.insert_full(t.as_str(), ()).0)
        .collect();
    let d = types.len();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_samples.max(1));
    let full = vec![true; d];
    samples.push(PerturbedSample {
        text: masked_text(tokens, &type_of, &full),
        mask: full,
    });
    for _ in 1..n_samples {
        let remove = rng.random_range(1..=d);
        let mut mask = vec![true; d];
        for i in sample(&mut rng, d, remove) {
            mask[i] = false;
        }
        samples.push(PerturbedSample {
            text: masked_text(tokens, &type_of, &mask),
            mask,
        });
    }
    Ok(Perturbation {
        types: types.keys().map(|s| s.to_string()).collect(),
        samples,
    })
}

/// Cosine distance between a binary mask and the all-ones mask.
pub fn mask_distance(mask: &[bool]) -> f64 {
    let kept = mask.iter().filter(|&&m| m).count();
    if kept == 0 || mask.is_empty() {
        return 1.0;
    }
    1.0 - (kept as f64 / mask.len() as f64).sqrt()
}

pub fn kernel_weight(distance: f64, width: f64) -> f64 {
    (-(distance * distance) / (width * width)).exp()
}

/// Weighted ridge with an unpenalized intercept. Returns
/// `(coefficients, intercept)`.
pub fn weighted_ridge(x: &[Vec<f64>], y: &[f64], w: &[f64], alpha: f64) -> Result<(Vec<f64>, f64)> {
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    let wsum: f64 = w.iter().sum();
    if n == 0 || wsum <= 0.0 {
        return Err(Error::Empty("no weighted samples".into()));
    }
    let mut xm = vec![0.0; d];
    let mut ym = 0.0;
    for ((row, &yi), &wi) in x.iter().zip(y).zip(w) {
        for (m, v) in xm.iter_mut().zip(row) {
            *m += wi * v;
        }
        ym += wi * yi;
    }
    xm.iter_mut().for_each(|m| *m /= wsum);
    ym /= wsum;
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut centered = vec![0.0; d];
    for ((row, &yi), &wi) in x.iter().zip(y).zip(w) {
        for (c, (v, m)) in centered.iter_mut().zip(row.iter().zip(&xm)) {
            *c = v - m;
        }
        let yc = yi - ym;
        for a in 0..d {
            let ca = wi * centered[a];
            if ca == 0.0 {
                continue;
            }
            rhs[a] += ca * yc;
            for b in a..d {
                gram[(a, b)] += ca * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
        gram[(a, a)] += alpha;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("ridge system is not positive definite".into()))?;
    let beta = chol.solve(&rhs);
    let intercept = ym - beta.iter().zip(&xm).map(|(b, m)| b * m).sum::<f64>();
    Ok((beta.iter().copied().collect(), intercept))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Highlight {
    pub start: usize,
    pub end: usize,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub record_id: String,
    pub category: String,
    pub target_label: String,
    pub target_probability: f64,
    pub top_labels: Vec<(String, f64)>,
    /// Surface form of each token type with its coefficient, largest
    /// magnitude first.
    pub contributions: Vec<(String, f64)>,
    pub intercept: f64,
    /// Byte spans into the record's modeling text.
    pub highlights: Vec<Highlight>,
    pub modeling_text: String,
}

const RIDGE_ALPHA: f64 = 1.0;
const TOP_LABELS: usize = 5;

pub fn explain<M: TextClassifier + ?Sized>(
    model: &M,
    record: &Record,
    category: &str,
    config: &ExplainConfig,
) -> Result<Explanation> {
    config.validate()?;
    let labels = model
        .category_labels(category)
        .ok_or_else(|| Error::UnknownCategory(category.to_string()))?;
    if labels.is_empty() {
        return Err(Error::Empty(format!("category {category:?} has no labels")));
    }
    let text = record.modeling_text();
    let spans = model.tokenizer().spans(&text);
    if !spans.iter().any(|t| model.in_vocabulary(&t.text)) {
        return Err(Error::NoTokens);
    }
    let probs = model.predict_category(category, &text);
    let target = match &config.target {
        Some(t) => labels
            .iter()
            .position(|l| l == t)
            .ok_or_else(|| Error::UnknownLabel(format!("{t} (category {category})")))?,
        None => (0..labels.len())
            .max_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(b.cmp(&a)))
            .expect("non-empty"),
    };
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let top_labels = order
        .iter()
        .take(TOP_LABELS)
        .map(|&i| (labels[i].clone(), probs[i]))
        .collect();

    let tokens: Vec<String> = spans.iter().map(|t| t.text.clone()).collect();
    let pert = perturb(&tokens, config.n_samples, config.seed)?;
    let x: Vec<Vec<f64>> = pert
        .samples
        .iter()
        .map(|s| s.mask.iter().map(|&m| f64::from(u8::from(m))).collect())
        .collect();
    let y: Vec<f64> = pert
        .samples
        .iter()
        .map(|s| model.predict_category(category, &s.text)[target])
        .collect();
    let w: Vec<f64> = pert
        .samples
        .iter()
        .map(|s| kernel_weight(mask_distance(&s.mask), config.kernel_width))
        .collect();
    let (coef, intercept) = weighted_ridge(&x, &y, &w, RIDGE_ALPHA)?;

    let mut ranked: Vec<usize> = (0..coef.len()).collect();
    ranked.sort_by(|&a, &b| coef[b].abs().total_cmp(&coef[a].abs()).then(a.cmp(&b)));
    ranked.truncate(config.n_features);
    let surface = |type_idx: usize| -> String {
        let t = spans
            .iter()
            .find(|s| s.text == pert.types[type_idx])
            .expect("type comes from spans");
        text[t.start..t.end].to_string()
    };
    let contributions = ranked.iter().map(|&i| (surface(i), coef[i])).collect();
    let sign_of: IndexMap<&str, Sign> = ranked
        .iter()
        .map(|&i| {
            let s = if coef[i] > 0.0 {
                Sign::Positive
            } else if coef[i] < 0.0 {
                Sign::Negative
            } else {
                Sign::None
            };
            (pert.types[i].as_str(), s)
        })
        .collect();
    let highlights = spans
        .iter()
        .map(|t| Highlight {
            start: t.start,
            end: t.end,
            sign: sign_of.get(t.text.as_str()).copied().unwrap_or(Sign::None),
        })
        .collect();
    Ok(Explanation {
        record_id: record.id.clone(),
        category: category.to_string(),
        target_label: labels[target].clone(),
        target_probability: probs[target],
        top_labels,
        contributions,
        intercept,
        highlights,
        modeling_text: text,
    })
}
