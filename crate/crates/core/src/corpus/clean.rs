/// Punctuation kept by [`clean_text`] besides letters, digits and space.
pub const RETAINED_PUNCTUATION: &str = ".,'?!";

/// Lowercase, drop characters outside the retained class, collapse
/// whitespace runs to one space and trim. No stemming or lemmatization.
///
/// The retained class is alphanumeric characters (Unicode), space and
/// [`RETAINED_PUNCTUATION`]. Any whitespace character acts as a separator.
pub fn clean_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            pending_space = true;
        } else if c.is_alphanumeric() || RETAINED_PUNCTUATION.contains(c) {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}
