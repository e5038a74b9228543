use std::collections::BTreeSet;

/// Lowercases, splits on every non-alphanumeric character and drops empty
/// tokens. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// [`tokenize`] followed by stopword removal.
pub fn tokenize_filtered(text: &str, stopwords: &BTreeSet<String>) -> Vec<String> {
    let mut tokens = tokenize(text);
    if !stopwords.is_empty() {
        tokens.retain(|t| !stopwords.contains(t));
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(tokenize("COVID-19 patients."), ["covid", "19", "patients"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Ibuprofen ibuprofen"), ["ibuprofen", "ibuprofen"]);
        assert_eq!(tokenize("  --  "), Vec::<String>::new());
    }

    #[test]
    fn stopwords_removed() {
        let stop: BTreeSet<String> = ["the".to_string()].into();
        assert_eq!(tokenize_filtered("The cat and the hat", &stop), ["cat", "and", "hat"]);
    }
}
