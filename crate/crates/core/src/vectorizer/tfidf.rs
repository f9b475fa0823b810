use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::Tokenizer;
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SparseVector};

/// Fitted TF-IDF weighting with smoothed idf `ln((1+N)/(1+df)) + 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "TfidfRepr", into = "TfidfRepr")]
pub struct TfidfModel {
    tokenizer: Tokenizer,
    sublinear_tf: bool,
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TfidfRepr {
    tokenizer: Tokenizer,
    sublinear_tf: bool,
    vocabulary: Vec<String>,
    idf: Vec<f64>,
}

impl From<TfidfRepr> for TfidfModel {
    fn from(r: TfidfRepr) -> Self {
        let index = r
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        TfidfModel {
            tokenizer: r.tokenizer,
            sublinear_tf: r.sublinear_tf,
            vocabulary: r.vocabulary,
            idf: r.idf,
            index,
        }
    }
}

impl From<TfidfModel> for TfidfRepr {
    fn from(m: TfidfModel) -> Self {
        TfidfRepr {
            tokenizer: m.tokenizer,
            sublinear_tf: m.sublinear_tf,
            vocabulary: m.vocabulary,
            idf: m.idf,
        }
    }
}

impl TfidfModel {
    /// Vocabulary is sorted, so the fit does not depend on document order.
    pub fn fit<S: AsRef<str>>(docs: &[S], tokenizer: Tokenizer, sublinear_tf: bool) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Empty("no documents".into()));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            let mut terms = tokenizer.terms(doc.as_ref());
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::Empty(
                "all documents are empty after tokenization".into(),
            ));
        }
        let n = docs.len() as f64;
        let (vocabulary, idf): (Vec<String>, Vec<f64>) = df
            .into_iter()
            .map(|(t, d)| {
                let w = ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0;
                (t, w)
            })
            .unzip();
        Ok(TfidfModel::from(TfidfRepr {
            tokenizer,
            sublinear_tf,
            vocabulary,
            idf,
        }))
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.index_of(term).map(|i| self.idf[i])
    }

    /// Term counts times idf, L2-normalized. Text with no in-vocabulary term
    /// maps to the zero vector.
    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for term in self.tokenizer.terms(text) {
            if let Some(i) = self.index_of(&term) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let pairs = counts
            .into_iter()
            .map(|(i, c)| {
                let tf = if self.sublinear_tf { 1.0 + c.ln() } else { c };
                (i, tf * self.idf[i])
            })
            .collect();
        let mut v = SparseVector::from_pairs(self.len(), pairs);
        let norm = v.norm();
        if norm > 0.0 {
            v.scale(1.0 / norm);
        }
        v
    }

    pub fn transform_many<S: AsRef<str>>(&self, docs: &[S]) -> CsrMatrix {
        let rows: Vec<SparseVector> = docs.iter().map(|d| self.transform(d.as_ref())).collect();
        CsrMatrix::from_rows(self.len(), &rows).expect("rows share the vocabulary size")
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::vectorizer::TokenizerConfig;

    fn tok() -> Tokenizer {
        Tokenizer::new(TokenizerConfig::default(), BTreeSet::new())
    }

    #[test]
    fn stopwords_never_in_vocabulary() {
        let t = Tokenizer::new(TokenizerConfig::default(), ["the".to_string()].into());
        let m = TfidfModel::fit(&["the pump", "the valve"], t, false).unwrap();
        assert!(m.index_of("the").is_none());
        assert_eq!(m.vocabulary(), ["pump", "valve"]);
    }

    #[test]
    fn all_empty_documents_rejected() {
        assert!(matches!(TfidfModel::fit(&["", "  ,"], tok(), false), Err(Error::Empty(_))));
        assert!(TfidfModel::fit::<&str>(&[], tok(), false).is_err());
    }

    #[test]
    fn ubiquitous_term_has_unit_idf() {
        let m = TfidfModel::fit(&["pump leak", "pump", "pump valve"], tok(), false).unwrap();
        assert_eq!(m.idf_of("pump"), Some(1.0));
    }

    #[test]
    fn oov_text_is_zero_vector() {
        let m = TfidfModel::fit(&["pump leak"], tok(), false).unwrap();
        let v = m.transform("unknown words");
        assert_eq!(v.nnz(), 0);
        assert_eq!(v.norm(), 0.0);
        let v = m.transform("leak");
        assert_eq!(v.nnz(), 1);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sublinear_tf_dampens_repeats() {
        let docs = ["pump leak", "pump valve", "valve"];
        let lin = TfidfModel::fit(&docs, tok(), false).unwrap();
        let sub = TfidfModel::fit(&docs, tok(), true).unwrap();
        let text = "pump pump pump pump valve";
        let (p, v) = (lin.index_of("pump").unwrap(), lin.index_of("valve").unwrap());
        let r_lin = lin.transform(text).get(p) / lin.transform(text).get(v);
        let r_sub = sub.transform(text).get(p) / sub.transform(text).get(v);
        assert!(r_sub < r_lin);
    }

    #[test]
    fn serde_rebuilds_index() {
        let m = TfidfModel::fit(&["pump leak", "valve"], tok(), false).unwrap();
        let back: TfidfModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back.index_of("valve"), m.index_of("valve"));
        assert_eq!(back.transform("leak valve"), m.transform("leak valve"));
    }
}
