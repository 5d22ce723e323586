/// Lowercases `text` and replaces punctuation, newlines and tabs by single
/// spaces. Letters and digits survive; runs of whitespace collapse.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(normalize("Going\tConcern, REALLY?"), "going concern really");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("a  b\n\nc"), "a b c");
        assert_eq!(normalize("  --Årsrapport 2015!  "), "årsrapport 2015");
    }
}
