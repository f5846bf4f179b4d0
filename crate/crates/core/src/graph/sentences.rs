//! Sentence boundary detection.

/// Words whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "mt", "vs", "e.g", "i.e", "gen", "col",
    "capt", "lt", "sgt", "rev", "hon", "gov", "sen", "rep", "messrs", "mme", "mlle",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];

fn is_abbreviation(before_period: &str) -> bool {
    let word_start = before_period
        .rfind(|c: char| !(c.is_alphanumeric() || c == '.'))
        .map_or(0, |i| i + before_period[i..].chars().next().map_or(1, char::len_utf8));
    let word = &before_period[word_start..];
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Splits `text` at `.`, `?` or `!` (plus closing quotes or brackets)
/// followed by whitespace. Each sentence keeps its trailing whitespace, so
/// the sentences concatenate back to `text`.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();

    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '?' | '!') {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, next)) = chars.peek() {
            if matches!(next, '.' | '?' | '!') || CLOSERS.contains(&next) {
                end = j + next.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        match chars.peek() {
            Some(&(_, next)) if next.is_whitespace() => {}
            _ => continue,
        }
        if c == '.' && is_abbreviation(&text[start..i]) {
            continue;
        }
        while let Some(&(j, next)) = chars.peek() {
            if next.is_whitespace() {
                end = j + next.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        sentences.push(&text[start..end]);
        start = end;
    }
    if start < text.len() {
        sentences.push(&text[start..]);
    }
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_on_terminators() {
        assert_eq!(split_sentences("A met B. C left."), ["A met B. ", "C left."]);
        assert_eq!(split_sentences("Why? Because! Yes."), ["Why? ", "Because! ", "Yes."]);
    }

    #[test]
    fn abbreviation_guard() {
        assert_eq!(split_sentences("Dr. Who ran."), ["Dr. Who ran."]);
        assert_eq!(
            split_sentences("Mr. and Mrs. Dursley lived here. They were proud."),
            ["Mr. and Mrs. Dursley lived here. ", "They were proud."]
        );
        assert_eq!(split_sentences("Use e.g. this one. Done."), ["Use e.g. this one. ", "Done."]);
    }

    #[test]
    fn empty_and_unterminated() {
        assert!(split_sentences("").is_empty());
        assert_eq!(split_sentences("no boundary here"), ["no boundary here"]);
        assert_eq!(split_sentences("3.14 is pi"), ["3.14 is pi"]);
    }

    #[test]
    fn closing_quotes_stay_with_sentence() {
        assert_eq!(
            split_sentences("\"Go away.\" He left."),
            ["\"Go away.\" ", "He left."]
        );
    }

    proptest! {
        #[test]
        fn concatenation_is_identity(text in "[A-Za-z .?!\"\n]{0,200}") {
            let joined: String = split_sentences(&text).concat();
            prop_assert_eq!(joined, text);
        }
    }
}
