use std::collections::HashMap;

/// Length of the longest common subsequence of `a` and `b`.
///
/// Bit-parallel formulation: one bit per character of `a`, one pass over
/// `b`, multi-word carry for long strings.
pub fn lcs_len(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let words = a.len().div_ceil(64);
    let mut masks: HashMap<char, Vec<u64>> = HashMap::new();
    for (i, &c) in a.iter().enumerate() {
        masks.entry(c).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
    }
    let zero = vec![0u64; words];
    let mut s = vec![u64::MAX; words];
    for c in b {
        let m = masks.get(c).unwrap_or(&zero);
        let mut carry = 0u64;
        for w in 0..words {
            let matched = s[w] & m[w];
            let (sum, c1) = s[w].overflowing_add(matched);
            let (sum, c2) = sum.overflowing_add(carry);
            carry = u64::from(c1 || c2);
            s[w] = sum | (s[w] & !m[w]);
        }
    }
    let tail = a.len() % 64;
    s.iter()
        .enumerate()
        .map(|(w, &word)| {
            let valid = if w == words - 1 && tail != 0 {
                (1u64 << tail) - 1
            } else {
                u64::MAX
            };
            (!word & valid).count_ones() as usize
        })
        .sum()
}

/// Insertion/deletion edit distance.
pub fn indel_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    a.len() + b.len() - 2 * lcs_len(&a, &b)
}

/// Normalized indel similarity on a 0-100 integer scale (half rounds up).
/// Two empty strings are identical.
pub fn ratio(a: &str, b: &str) -> u8 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 100;
    }
    let common = 2 * lcs_len(&a, &b);
    ((200 * common + total) / (2 * total)) as u8
}

/// Whitespace tokens sorted and re-joined with single spaces.
pub fn sort_tokens(s: &str) -> String {
    let mut tokens: Vec<&str> = s.split_whitespace().collect();
    tokens.sort_unstable();
    tokens.join(" ")
}

/// [`ratio`] after sorting each side's whitespace tokens, so word order
/// does not matter. No case folding or punctuation stripping happens here;
/// see [`match_form`].
pub fn token_sort_ratio(a: &str, b: &str) -> u8 {
    ratio(&sort_tokens(a), &sort_tokens(b))
}

/// Lowercase, punctuation replaced by spaces, whitespace collapsed.
pub fn match_form(s: &str) -> String {
    let replaced: String = s
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .flat_map(char::to_lowercase)
        .collect();
    crate::util::collapse_whitespace(&replaced)
}
