use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Character-level cleanup applied before tokenization.
///
/// Line-break hyphenation (`frag-\nment`) is rejoined, control characters
/// other than whitespace are dropped, then the optional case folding and
/// diacritic stripping run in that order.
pub fn normalize_text(raw: &str, lowercase: bool, strip_diacritics: bool) -> String {
    let mut text = rejoin_hyphenation(raw);
    text.retain(|c| !c.is_control() || c.is_whitespace());
    if lowercase {
        text = text.to_lowercase();
    }
    if strip_diacritics {
        text = text.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect();
    }
    text
}

/// Joins a word split as `letter '-' [spaces] newline [spaces] letter`.
fn rejoin_hyphenation(raw: &str) -> String {
    let chars: Vec<char> = raw.chars().collect();
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '-' && out.chars().next_back().is_some_and(char::is_alphabetic) {
            if let Some(next) = skip_line_break(&chars, i + 1) {
                if chars.get(next).is_some_and(|c| c.is_alphabetic()) {
                    i = next;
                    continue;
                }
            }
        }
        out.push(c);
        i += 1;
    }
    out
}

/// Returns the position after `[ \t]* \r? \n [ \t]*` starting at `i`, if
/// the line break is there.
fn skip_line_break(chars: &[char], mut i: usize) -> Option<usize> {
    while matches!(chars.get(i), Some(' ' | '\t')) {
        i += 1;
    }
    if chars.get(i) == Some(&'\r') {
        i += 1;
    }
    if chars.get(i) != Some(&'\n') {
        return None;
    }
    i += 1;
    while matches!(chars.get(i), Some(' ' | '\t')) {
        i += 1;
    }
    Some(i)
}

/// How raw text is cut into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tokenizer {
    /// Split on whitespace and sentence punctuation, then trim leading and
    /// trailing symbols. Inner symbols and digits stay in the token so the
    /// noise rules can judge OCR debris such as `xj7##q` as a whole.
    #[default]
    Words,
    /// Split on every non-letter character.
    LettersOnly,
}

const SEPARATORS: &[char] = &[
    ',', ';', ':', '.', '!', '?', '(', ')', '[', ']', '{', '}', '"', '\'', '«', '»', '“', '”',
    '‘', '’', '…',
];

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        match self {
            Tokenizer::LettersOnly => text
                .split(|c: char| !c.is_alphabetic())
                .filter(|t| !t.is_empty())
                .map(str::to_owned)
                .collect(),
            Tokenizer::Words => text
                .split(|c: char| c.is_whitespace() || c.is_control() || SEPARATORS.contains(&c))
                .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
                .filter(|t| !t.is_empty())
                .map(str::to_owned)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejoins_line_break_hyphenation() {
        assert_eq!(normalize_text("ELEI-\nÇÃO", true, false), "eleição");
        assert_eq!(normalize_text("frag- \r\n  ment", false, false), "fragment");
    }

    #[test]
    fn keeps_ordinary_hyphens() {
        assert_eq!(normalize_text("guarda-chuva", false, false), "guarda-chuva");
        assert_eq!(normalize_text("1922-\n1964", false, false), "1922-\n1964");
        assert_eq!(normalize_text("fim -\nnovo", false, false), "fim -\nnovo");
    }

    #[test]
    fn removes_control_characters() {
        assert_eq!(normalize_text("abc\x07def", false, false), "abcdef");
        assert_eq!(normalize_text("a\u{0}b\tc\nd", false, false), "ab\tc\nd");
    }

    #[test]
    fn clean_text_is_unchanged() {
        let clean = "a mesa eleitoral abriu as urnas";
        assert_eq!(normalize_text(clean, true, true), clean);
    }

    #[test]
    fn strips_diacritics() {
        assert_eq!(normalize_text("Eleição à mesa", true, true), "eleicao a mesa");
    }

    #[test]
    fn tokenize_splits_on_punctuation() {
        let want = vec!["a", "mesa", "o", "voto"];
        assert_eq!(Tokenizer::Words.tokenize("a mesa, o voto."), want);
        assert_eq!(Tokenizer::LettersOnly.tokenize("a mesa, o voto."), want);
    }

    #[test]
    fn tokenize_empty() {
        assert!(Tokenizer::Words.tokenize("").is_empty());
        assert!(Tokenizer::LettersOnly.tokenize("").is_empty());
    }

    #[test]
    fn letters_only_splits_inside_words() {
        assert_eq!(Tokenizer::LettersOnly.tokenize("x1y"), vec!["x", "y"]);
        assert_eq!(Tokenizer::Words.tokenize("x1y"), vec!["x1y"]);
        assert_eq!(Tokenizer::Words.tokenize("--xj7##q!"), vec!["xj7##q"]);
    }
}
