//! Text to dense word vectors: tokenization, TF-IDF, truncated SVD.

mod svd;
pub mod stopwords;
mod tfidf;
mod tokenize;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sparse::CsrMatrix;

pub use self::svd::{fit_truncated_svd, SvdModel, SvdOptions};
pub use self::tfidf::TfidfModel;
pub use self::tokenize::{default_stopwords, Token, Tokenizer, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VectorizerConfig {
    pub tokenizer: TokenizerConfig,
    /// Replaces the bundled English list when set.
    pub stopwords: Option<Vec<String>>,
    pub sublinear_tf: bool,
    /// Reduced dimension; capped at `min(n, |V|) - 1`.
    pub components: usize,
    pub svd: SvdOptions,
    pub seed: u64,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            tokenizer: TokenizerConfig::default(),
            stopwords: None,
            sublinear_tf: false,
            components: 300,
            svd: SvdOptions::default(),
            seed: 0,
        }
    }
}

impl VectorizerConfig {
    pub fn build_tokenizer(&self) -> Tokenizer {
        let stop = match &self.stopwords {
            Some(words) => words.iter().cloned().collect(),
            None => default_stopwords(),
        };
        Tokenizer::new(self.tokenizer.clone(), stop)
    }

    pub fn effective_components(&self, n_docs: usize, vocab: usize) -> usize {
        let cap = n_docs.min(vocab).saturating_sub(1).max(1);
        self.components.clamp(1, cap)
    }
}

/// Fitted TF-IDF + SVD pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vectorizer {
    pub tfidf: TfidfModel,
    pub svd: SvdModel,
}

impl Vectorizer {
    /// Fits both stages; also returns the reduced training matrix.
    pub fn fit<S: AsRef<str>>(docs: &[S], config: &VectorizerConfig) -> Result<(Self, Vec<Vec<f64>>)> {
        let tfidf = TfidfModel::fit(docs, config.build_tokenizer(), config.sublinear_tf)?;
        let matrix: CsrMatrix = tfidf.transform_many(docs);
        let k = config.effective_components(docs.len(), tfidf.len());
        let svd = fit_truncated_svd(&matrix, k, config.seed, config.svd)?;
        let reduced = svd.reduce_matrix(&matrix)?;
        Ok((Vectorizer { tfidf, svd }, reduced))
    }

    pub fn word_vector(&self, text: &str) -> Vec<f64> {
        self.svd
            .reduce(&self.tfidf.transform(text))
            .expect("tfidf and svd dimensions agree")
    }

    pub fn dim(&self) -> usize {
        self.svd.k
    }
}
