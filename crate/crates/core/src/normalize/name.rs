use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// An author name kept verbatim next to its matching form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedName {
    pub original: String,
    pub normalized: String,
}

/// Latin letters that have no compatibility decomposition but an obvious
/// ASCII spelling.
fn fold_latin(c: char) -> Option<&'static str> {
    Some(match c {
        'ø' => "o",
        'Ø' => "O",
        'ł' => "l",
        'Ł' => "L",
        'đ' => "d",
        'Đ' => "D",
        'ð' => "d",
        'Ð' => "D",
        'þ' => "th",
        'Þ' => "Th",
        'ß' => "ss",
        'æ' => "ae",
        'Æ' => "AE",
        'œ' => "oe",
        'Œ' => "OE",
        'ı' => "i",
        _ => return None,
    })
}

/// Fold a name into its matching form.
///
/// NFKD decomposition, combining marks dropped, asterisks (presenter marks)
/// removed, whitespace collapsed. Characters without any ASCII spelling
/// (CJK, Hangul jamo, ...) are kept so distinct East Asian names stay
/// distinct.
pub fn normalize_name(raw: &str) -> NormalizedName {
    let mut folded = String::with_capacity(raw.len());
    for c in raw.nfkd() {
        if is_combining_mark(c) || c == '*' {
            continue;
        }
        match fold_latin(c) {
            Some(s) => folded.push_str(s),
            None => folded.push(c),
        }
    }
    NormalizedName {
        original: raw.to_string(),
        normalized: crate::util::collapse_whitespace(&folded),
    }
}
