//! Shared text normalization and tokenization helpers.

use unicode_normalization::UnicodeNormalization;

/// Canonical form used for matching: NFC-composed, lowercased.
/// Byte offsets reported by the matcher refer to this form.
pub fn normalize_for_matching(text: &str) -> String {
    text.nfc().collect::<String>().to_lowercase()
}

/// Canonical form for lexicon terms: NFC, lowercase, whitespace collapsed
/// to single spaces, no leading/trailing whitespace.
pub fn normalize_term(term: &str) -> String {
    normalize_for_matching(term)
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Whitespace tokenization after punctuation detachment: every character
/// that is neither alphanumeric nor whitespace becomes its own token.
///
/// `"The cat sat."` tokenizes to `["The", "cat", "sat", "."]`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.push(ch);
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Answer length in the configured unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    #[default]
    Characters,
    WhitespaceTokens,
}

impl LengthUnit {
    pub fn measure(&self, text: &str) -> usize {
        match self {
            LengthUnit::Characters => text.chars().count(),
            LengthUnit::WhitespaceTokens => text.split_whitespace().count(),
        }
    }
}

impl std::str::FromStr for LengthUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "characters" | "chars" => Ok(LengthUnit::Characters),
            "whitespace_tokens" | "tokens" => Ok(LengthUnit::WhitespaceTokens),
            other => Err(format!("unknown length unit: {other}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_detaches_punctuation() {
        assert_eq!(tokenize("The cat sat."), vec!["The", "cat", "sat", "."]);
        assert_eq!(tokenize("don't"), vec!["don", "'", "t"]);
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("  a  b "), vec!["a", "b"]);
    }

    #[test]
    fn term_normalization_collapses_whitespace() {
        assert_eq!(normalize_term("  Gene   Expression \n"), "gene expression");
        assert_eq!(normalize_term("Enzyme"), "enzyme");
    }

    #[test]
    fn length_units() {
        assert_eq!(LengthUnit::Characters.measure("ab cd"), 5);
        assert_eq!(LengthUnit::WhitespaceTokens.measure("ab cd"), 2);
    }
}
