/// Bundled English stopword list (175 entries).
pub const ENGLISH: &[&str] = &[
    "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was",
    "were", "be", "been", "being", "have", "has", "had", "having", "do", "does",
    "did", "doing", "an", "the", "and", "but", "if", "or", "because", "as",
    "until", "while", "of", "at", "by", "for", "with", "about", "against", "between",
    "into", "through", "during", "before", "after", "above", "below", "to", "from", "up",
    "down", "in", "out", "on", "off", "over", "under", "again", "further", "then",
    "once", "here", "there", "when", "where", "why", "how", "all", "any", "both",
    "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "can", "will", "just",
    "don", "should", "now", "ll", "re", "ve", "ain", "aren", "couldn", "didn",
    "doesn", "hadn", "hasn", "haven", "isn", "ma", "mightn", "mustn", "needn", "shan",
    "shouldn", "wasn", "weren", "won", "wouldn", "also", "could", "would", "may", "might",
    "must", "shall", "upon", "yet", "via", "per", "onto", "among", "within", "without",
    "though", "whether", "either", "neither", "unless", "although", "since", "toward", "towards",
    "besides", "another", "every", "much", "many", "several",
];

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    #[test]
    fn list_has_175_unique_lowercase_entries() {
        let set: HashSet<_> = super::ENGLISH.iter().collect();
        assert_eq!(super::ENGLISH.len(), 175);
        assert_eq!(set.len(), 175);
        assert!(super::ENGLISH.iter().all(|w| w.len() >= 2 && w.chars().all(|c| c.is_ascii_lowercase())));
    }
}
