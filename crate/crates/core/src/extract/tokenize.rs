/// Lower-cases `text` and splits it into terms.
///
/// Separators are all characters other than letters, digits, `.` and `-`.
/// Leading and trailing periods and hyphens are trimmed from each term, so
/// `"U.S."` becomes `"u.s"` while `"climate-change"` stays whole.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '.' || c == '-'))
        .map(|t| t.trim_matches(|c| c == '.' || c == '-'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}
