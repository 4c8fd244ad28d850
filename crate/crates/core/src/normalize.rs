//! Text normalization shared by the tokenizer, the fact matcher and the
//! metrics: lowercase, punctuation split off as separate tokens, letter/digit
//! runs separated, whitespace collapsed to single spaces.

pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    let mut prev: Option<char> = None;
    let push_space = |out: &mut String| {
        if !out.is_empty() && !out.ends_with(' ') {
            out.push(' ');
        }
    };
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_whitespace() {
            push_space(&mut out);
            prev = None;
            continue;
        }
        if ch.is_alphanumeric() {
            if let Some(p) = prev {
                let boundary = !p.is_alphanumeric() || (p.is_ascii_digit() != ch.is_ascii_digit());
                if boundary {
                    push_space(&mut out);
                }
            }
            out.push(ch);
        } else {
            push_space(&mut out);
            out.push(ch);
        }
        prev = Some(ch);
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Whitespace tokens of the normalized text.
pub fn words(text: &str) -> Vec<String> {
    normalize(text).split(' ').filter(|w| !w.is_empty()).map(str::to_string).collect()
}

/// Numbers written in a normalized text (maximal digit runs).
pub fn numerals(text: &str) -> Vec<u64> {
    normalize(text)
        .split(' ')
        .filter(|w| !w.is_empty() && w.chars().all(|c| c.is_ascii_digit()))
        .filter_map(|w| w.parse().ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation_and_case() {
        assert_eq!(normalize("The Chart, shown: 60%."), "the chart , shown : 60 % .");
        assert_eq!(normalize("  a   b  "), "a b");
        assert_eq!(normalize("q1 and 2b"), "q 1 and 2 b");
    }

    #[test]
    fn idempotent() {
        for s in ["Hello, World!", "x=3.5", "the 12 categories ."] {
            let once = normalize(s);
            assert_eq!(normalize(&once), once);
        }
    }

    #[test]
    fn numerals_found() {
        assert_eq!(numerals("peaks at 87 in mar, 100%"), vec![87, 100]);
    }
}
