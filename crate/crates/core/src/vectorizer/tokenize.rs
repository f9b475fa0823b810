use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::stopwords;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Minimum token length in characters.
    pub min_token_len: usize,
    /// 1 = unigrams, 2 = unigrams and bigrams.
    pub ngram_max: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            min_token_len: 2,
            ngram_max: 1,
        }
    }
}

/// A token with its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Word tokenizer: maximal runs of letters, digits and underscore.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    pub config: TokenizerConfig,
    pub stopwords: BTreeSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(TokenizerConfig::default(), default_stopwords())
    }
}

pub fn default_stopwords() -> BTreeSet<String> {
    stopwords::ENGLISH.iter().map(|s| s.to_string()).collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl Tokenizer {
    pub fn new(config: TokenizerConfig, stopwords: BTreeSet<String>) -> Self {
        let stopwords = if config.lowercase {
            stopwords.into_iter().map(|s| s.to_lowercase()).collect()
        } else {
            stopwords
        };
        Tokenizer { config, stopwords }
    }

    /// Unigram tokens with spans, stopwords removed.
    pub fn spans(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        let mut start: Option<usize> = None;
        let emit = |s: usize, e: usize, out: &mut Vec<Token>| {
            let raw = &text[s..e];
            if raw.chars().count() < self.config.min_token_len {
                return;
            }
            let t = if self.config.lowercase {
                raw.to_lowercase()
            } else {
                raw.to_string()
            };
            if !self.stopwords.contains(&t) {
                out.push(Token {
                    text: t,
                    start: s,
                    end: e,
                });
            }
        };
        for (i, c) in text.char_indices() {
            match (is_word_char(c), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    emit(s, i, &mut out);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            emit(s, text.len(), &mut out);
        }
        out
    }

    /// Unigram tokens, stopwords removed.
    pub fn words(&self, text: &str) -> Vec<String> {
        self.spans(text).into_iter().map(|t| t.text).collect()
    }

    /// Vectorizer terms: unigrams, plus adjacent bigrams when enabled.
    pub fn terms(&self, text: &str) -> Vec<String> {
        let words = self.words(text);
        if self.config.ngram_max < 2 {
            return words;
        }
        let mut terms = Vec::with_capacity(words.len() * 2);
        terms.extend(words.iter().cloned());
        terms.extend(words.windows(2).map(|w| format!("{} {}", w[0], w[1])));
        terms
    }

    pub fn word_count(&self, text: &str) -> usize {
        self.spans(text).len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_stop(words: &[&str]) -> Tokenizer {
        Tokenizer::new(
            TokenizerConfig::default(),
            words.iter().map(|s| s.to_string()).collect(),
        )
    }

    #[test]
    fn lowercases_and_splits() {
        let t = with_stop(&[]);
        assert_eq!(t.words("Too HOT in room 4b"), ["too", "hot", "in", "room", "4b"]);
        let t = with_stop(&["in"]);
        assert_eq!(t.words("Too HOT in room 4b"), ["too", "hot", "room", "4b"]);
    }

    #[test]
    fn empty_text() {
        assert!(Tokenizer::default().words("").is_empty());
    }

    #[test]
    fn html_fragments_are_words() {
        assert_eq!(with_stop(&[]).words("<br> richard"), ["br", "richard"]);
    }

    #[test]
    fn short_tokens_dropped_and_underscore_kept() {
        assert_eq!(with_stop(&[]).words("a too_hot x9 b"), ["too_hot", "x9"]);
    }

    #[test]
    fn spans_point_into_source() {
        let text = "Pump  LEAK, éclair";
        let spans = with_stop(&[]).spans(text);
        for s in &spans {
            assert_eq!(text[s.start..s.end].to_lowercase(), s.text);
        }
        assert_eq!(spans.len(), 3);
    }

    #[test]
    fn bigrams() {
        let t = Tokenizer::new(
            TokenizerConfig {
                ngram_max: 2,
                ..Default::default()
            },
            BTreeSet::new(),
        );
        assert_eq!(t.terms("water leak room"), ["water", "leak", "room", "water leak", "leak room"]);
    }
}
