/// Lowercases and splits on runs of non-alphanumeric characters.
///
/// Hashtag markers disappear with the rest of the punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}
