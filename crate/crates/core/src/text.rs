//! Text normalization shared by indexing, matching and hashing.

/// Unicode-aware lowercase with internal whitespace collapsed to single spaces.
pub fn normalize_title(s: &str) -> String {
    collapse_whitespace(&s.to_lowercase())
}

/// Trim and collapse whitespace runs, preserving case.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercase, then split on runs of non-alphanumeric characters.
pub fn tokenize(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// True when `needle` occurs in `haystack` as a contiguous run of tokens.
pub fn contains_token_run(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}
