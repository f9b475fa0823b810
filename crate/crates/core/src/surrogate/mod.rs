//! Per-category one-vs-rest surrogate classifiers with calibrated
//! probabilities, evaluation metrics and a versioned model file.

mod calibration;
mod linear;
mod metrics;
mod split;

use std::path::Path;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{CorpusSnapshot, LabelSchema, Record};
use crate::error::{Error, Result};
use crate::vectorizer::{Vectorizer, VectorizerConfig};

pub use self::calibration::{fit_platt, Sigmoid};
pub use self::linear::{train_hinge, LinearModel};
pub use self::metrics::{one_hot_encode, CategoryMatrix, EvalMetrics, LabelMatrix};
pub use self::split::{stratified_split, Split};

pub const MODEL_FORMAT: &str = "labelscope-surrogate";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// Inverse regularization strength.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    /// Share of the non-validation records held out for calibration.
    pub calibration_fraction: f64,
    /// Labels with fewer training positives become constant-negative.
    pub min_positives: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            c: 1.0,
            epochs: 20,
            seed: 0,
            validation_fraction: 0.2,
            calibration_fraction: 0.2,
            min_positives: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelClassifier {
    pub label: String,
    pub linear: LinearModel,
    pub calibration: Sigmoid,
    /// Trained as constant-negative (too few positives).
    pub constant: bool,
}

impl LabelClassifier {
    pub fn probability(&self, x: &[f64]) -> f64 {
        self.calibration.probability(self.linear.decision(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryModel {
    pub name: String,
    pub classifiers: Vec<LabelClassifier>,
}

/// Per-record label probabilities in global label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfidenceVector(pub Vec<f64>);

impl ConfidenceVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub vectorizer: Vectorizer,
    pub schema: LabelSchema,
    pub categories: Vec<CategoryModel>,
    /// Annotation version of the training snapshot.
    pub trained_on_version: u64,
    pub vectorizer_config: VectorizerConfig,
    pub training_config: TrainingConfig,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SurrogateModel,
    pub metrics: EvalMetrics,
    pub validation_ids: Vec<String>,
    pub warnings: Vec<String>,
}

fn label_seed(seed: u64, global_index: usize) -> u64 {
    seed ^ (global_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn train(snapshot: &CorpusSnapshot, vcfg: &VectorizerConfig, tcfg: &TrainingConfig) -> Result<TrainOutcome> {
    if snapshot.is_empty() {
        return Err(Error::Empty("corpus has no records".into()));
    }
    if snapshot.len() < 2 {
        return Err(Error::InvalidArgument("training needs at least 2 records".into()));
    }
    if !(tcfg.c > 0.0 && tcfg.c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", tcfg.c)));
    }
    if tcfg.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    let split = stratified_split(snapshot, tcfg.validation_fraction, tcfg.calibration_fraction, tcfg.seed)?;
    let records = snapshot.records();
    let texts: Vec<String> = records.iter().map(Record::modeling_text).collect();
    let (vectorizer, reduced) = Vectorizer::fit(&texts, vcfg)?;
    let ann = snapshot.annotations();
    let schema = ann.schema.clone();

    let train_x: Vec<Vec<f64>> = split.train.iter().map(|&i| reduced[i].clone()).collect();
    let mut warnings = Vec::new();
    let mut categories = Vec::with_capacity(schema.categories().len());
    let mut global = 0usize;
    for cat in schema.categories() {
        if cat.labels.is_empty() {
            warnings.push(format!("category {:?} has no labels", cat.name));
        }
        let mut classifiers = Vec::with_capacity(cat.labels.len());
        for label in &cat.labels {
            let has = |i: &usize| ann.has_label(&records[*i].id, label);
            let y: Vec<bool> = split.train.iter().map(has).collect();
            let positives = y.iter().filter(|&&v| v).count();
            let clf = if positives < tcfg.min_positives {
                let msg = format!(
                    "label {label:?} has {positives} training positive(s); trained as constant-negative"
                );
                tracing::warn!("{msg}");
                warnings.push(msg);
                let mut linear = LinearModel::zeros(vectorizer.dim());
                linear.bias = -1.0;
                let p = 1.0 / (split.train.len() as f64 + 2.0);
                LabelClassifier {
                    label: label.clone(),
                    linear,
                    calibration: Sigmoid::constant(-1.0, p),
                    constant: true,
                }
            } else {
                let mut rng = ChaCha20Rng::seed_from_u64(label_seed(tcfg.seed, global));
                let linear = train_hinge(&train_x, &y, tcfg.c, tcfg.epochs, &mut rng);
                let cal_scores: Vec<f64> = split.calibration.iter().map(|&i| linear.decision(&reduced[i])).collect();
                let cal_y: Vec<bool> = split.calibration.iter().map(has).collect();
                let calibration = fit_platt(&cal_scores, &cal_y)
                    .or_else(|| {
                        let mut s = cal_scores.clone();
                        let mut t = cal_y.clone();
                        s.extend(train_x.iter().map(|x| linear.decision(x)));
                        t.extend_from_slice(&y);
                        fit_platt(&s, &t)
                    })
                    .unwrap_or_else(|| {
                        let msg = format!("label {label:?}: calibration fit failed; using prior sigmoid");
                        tracing::warn!("{msg}");
                        warnings.push(msg);
                        let n1 = positives as f64;
                        let n0 = y.len() as f64 - n1;
                        Sigmoid {
                            a: -1.0,
                            b: ((n0 + 1.0) / (n1 + 1.0)).ln(),
                        }
                    });
                LabelClassifier {
                    label: label.clone(),
                    linear,
                    calibration,
                    constant: false,
                }
            };
            classifiers.push(clf);
            global += 1;
        }
        categories.push(CategoryModel {
            name: cat.name.clone(),
            classifiers,
        });
    }

    let model = SurrogateModel {
        vectorizer,
        schema,
        categories,
        trained_on_version: snapshot.version(),
        vectorizer_config: vcfg.clone(),
        training_config: tcfg.clone(),
    };
    let validation_ids: Vec<String> = split.validation.iter().map(|&i| records[i].id.clone()).collect();
    let metrics = evaluate(&model, snapshot, &validation_ids)?;
    Ok(TrainOutcome {
        model,
        metrics,
        validation_ids,
        warnings,
    })
}

impl SurrogateModel {
    pub fn label_order(&self) -> Vec<String> {
        self.schema.labels().map(|(_, l)| l.to_string()).collect()
    }

    pub fn label_count(&self) -> usize {
        self.categories.iter().map(|c| c.classifiers.len()).sum()
    }

    pub fn predict_vector(&self, x: &[f64]) -> ConfidenceVector {
        ConfidenceVector(
            self.categories
                .iter()
                .flat_map(|c| c.classifiers.iter().map(|clf| clf.probability(x)))
                .collect(),
        )
    }

    pub fn predict_text(&self, text: &str) -> ConfidenceVector {
        self.predict_vector(&self.vectorizer.word_vector(text))
    }

    pub fn predict_proba(&self, record: &Record) -> ConfidenceVector {
        self.predict_text(&record.modeling_text())
    }

    /// Probabilities of one category's labels, in schema order.
    pub fn predict_category_text(&self, category: usize, text: &str) -> Vec<f64> {
        let x = self.vectorizer.word_vector(text);
        self.categories[category]
            .classifiers
            .iter()
            .map(|c| c.probability(&x))
            .collect()
    }

    /// Labels whose probability is at least `threshold`, per category.
    pub fn predict_labels(&self, record: &Record, threshold: f64) -> IndexMap<String, Vec<String>> {
        let cv = self.predict_proba(record);
        self.labels_from_confidence(&cv, threshold)
    }

    pub fn labels_from_confidence(&self, cv: &ConfidenceVector, threshold: f64) -> IndexMap<String, Vec<String>> {
        let mut values = cv.0.iter();
        self.categories
            .iter()
            .map(|c| {
                let labels = c
                    .classifiers
                    .iter()
                    .filter(|_| values.next().is_some_and(|&p| p >= threshold))
                    .map(|clf| clf.label.clone())
                    .collect();
                (c.name.clone(), labels)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let envelope = serde_json::json!({
            "format": MODEL_FORMAT,
            "format_version": MODEL_FORMAT_VERSION,
            "model": self,
        });
        serde_json::to_string(&envelope).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Corrupt(e.to_string()))?;
        let format = value.get("format").and_then(Value::as_str);
        if format != Some(MODEL_FORMAT) {
            return Err(Error::Corrupt(format!("not a {MODEL_FORMAT} file")));
        }
        let version = value
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Corrupt("missing format_version".into()))?;
        if version != u64::from(MODEL_FORMAT_VERSION) {
            return Err(Error::VersionMismatch {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                supported: MODEL_FORMAT_VERSION,
            });
        }
        let body = value
            .get("model")
            .cloned()
            .ok_or_else(|| Error::Corrupt("missing model body".into()))?;
        let model: SurrogateModel = serde_json::from_value(body).map_err(|e| Error::Corrupt(e.to_string()))?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        let dim = self.vectorizer.dim();
        if self.categories.len() != self.schema.categories().len() {
            return Err(Error::Corrupt("category blocks do not match schema".into()));
        }
        for (block, cat) in self.categories.iter().zip(self.schema.categories()) {
            if block.name != cat.name || block.classifiers.len() != cat.labels.len() {
                return Err(Error::Corrupt(format!("category block {:?} does not match schema", block.name)));
            }
            for (clf, label) in block.classifiers.iter().zip(&cat.labels) {
                if &clf.label != label || clf.linear.weights.len() != dim {
                    return Err(Error::Corrupt(format!("classifier for {label:?} is malformed")));
                }
            }
        }
        if self.vectorizer.svd.n_features != self.vectorizer.tfidf.len() {
            return Err(Error::Corrupt("reducer does not match vocabulary".into()));
        }
        Ok(())
    }
}

pub fn save_model(model: &SurrogateModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SurrogateModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SurrogateModel::from_json(&text)
}

pub fn confidence_score(cv: &ConfidenceVector) -> Result<f64> {
    if cv.is_empty() {
        return Err(Error::Empty("confidence vector has no labels".into()));
    }
    Ok(cv.0.iter().sum::<f64>() / cv.len() as f64)
}

/// Mean probability per category; `cv` must follow `schema`'s label order.
pub fn category_confidence(cv: &ConfidenceVector, schema: &LabelSchema) -> Result<IndexMap<String, f64>> {
    if cv.len() != schema.label_count() {
        return Err(Error::DimensionMismatch {
            expected: schema.label_count(),
            found: cv.len(),
        });
    }
    let mut out = IndexMap::new();
    let mut offset = 0;
    for cat in schema.categories() {
        let m = cat.labels.len();
        if m == 0 {
            return Err(Error::Empty(format!("category {:?} has no labels", cat.name)));
        }
        let mean = cv.0[offset..offset + m].iter().sum::<f64>() / m as f64;
        out.insert(cat.name.clone(), mean);
        offset += m;
    }
    Ok(out)
}

/// Metrics at threshold 0.5 over the given record ids, against the
/// snapshot's current annotations.
pub fn evaluate<S: AsRef<str>>(model: &SurrogateModel, snapshot: &CorpusSnapshot, ids: &[S]) -> Result<EvalMetrics> {
    if ids.is_empty() {
        return Err(Error::Empty("evaluation split has no records".into()));
    }
    let order = model.label_order();
    let ann = snapshot.annotations();
    let mut truth = Vec::with_capacity(ids.len());
    let mut pred = Vec::with_capacity(ids.len());
    for id in ids {
        let id = id.as_ref();
        let record = snapshot.record(id).ok_or_else(|| Error::UnknownRecord(id.to_string()))?;
        truth.push(order.iter().map(|l| ann.has_label(id, l)).collect());
        pred.push(model.predict_proba(record).0.iter().map(|&p| p >= 0.5).collect());
    }
    EvalMetrics::from_cells(&truth, &pred)
}
