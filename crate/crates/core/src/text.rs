//! Phrase normalization shared by the catalog, the vocabulary and the validator.

/// Case-folds, turns punctuation into spaces and collapses whitespace.
///
/// Hyphens and apostrophes survive so values such as `at-large` or
/// `mercedes-benz` stay single words.
pub fn normalize_phrase(text: &str) -> String {
    let mapped: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '\'' { c } else { ' ' })
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}
