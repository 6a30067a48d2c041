//! Deterministic tweet normalization.
//!
//! Rules, applied in this order:
//! 1. whitespace-separated chunks that look like URLs become `<url>`;
//! 2. `@handle` mentions become `<user>`;
//! 3. text is lower-cased;
//! 4. chunks are split into word, punctuation and emoji tokens;
//! 5. any run of the same character longer than 3 is cut to 3.

pub const USER_TOKEN: &str = "<user>";
pub const URL_TOKEN: &str = "<url>";

/// Longest allowed run of one repeated character.
pub const MAX_REPEAT: usize = 3;

/// True for the placeholder tokens produced by normalization.
pub fn is_placeholder(token: &str) -> bool {
    token == USER_TOKEN || token == URL_TOKEN
}

pub fn normalize(raw_text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in raw_text.split_whitespace() {
        if is_url(chunk) {
            out.push(URL_TOKEN.to_string());
            continue;
        }
        tokenize_chunk(&chunk.to_lowercase(), &mut out);
    }
    out
}

fn is_url(chunk: &str) -> bool {
    let lower = chunk.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Word,
    Punct,
    Emoji,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || is_combining_mark(c)
}

fn is_combining_mark(c: char) -> bool {
    matches!(c as u32,
        0x0300..=0x036F | 0x0610..=0x061A | 0x064B..=0x065F | 0x0670 | 0x06D6..=0x06ED)
}

pub(crate) fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF | 0x2600..=0x27BF | 0x2300..=0x23FF | 0x2B00..=0x2BFF | 0x3030 | 0x303D)
}

fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0E | 0xFE0F | 0x1F3FB..=0x1F3FF | 0x20E3)
}

fn class_of(c: char) -> CharClass {
    if is_emoji(c) {
        CharClass::Emoji
    } else if is_word_char(c) {
        CharClass::Word
    } else {
        CharClass::Punct
    }
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        // Placeholders survive re-normalization intact.
        if c == '<' {
            if let Some(tok) = [USER_TOKEN, URL_TOKEN].into_iter().find(|p| starts_with_at(&chars, i, p)) {
                out.push(tok.to_string());
                i += tok.chars().count();
                continue;
            }
        }
        if c == '@' && chars.get(i + 1).is_some_and(|&n| is_word_char(n)) {
            i += 1;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            out.push(USER_TOKEN.to_string());
            continue;
        }
        match class_of(c) {
            CharClass::Word => {
                let start = i;
                i += 1;
                while i < chars.len() {
                    if is_word_char(chars[i]) {
                        i += 1;
                    } else if is_apostrophe(chars[i]) && chars.get(i + 1).is_some_and(|&n| is_word_char(n)) {
                        i += 2;
                    } else {
                        break;
                    }
                }
                out.push(collapse_repeats(&chars[start..i]));
            }
            CharClass::Punct => {
                // A hashtag stays one token with its marker.
                if c == '#' && chars.get(i + 1).is_some_and(|&n| is_word_char(n)) {
                    let start = i;
                    i += 1;
                    while i < chars.len() && is_word_char(chars[i]) {
                        i += 1;
                    }
                    out.push(collapse_repeats(&chars[start..i]));
                    continue;
                }
                let start = i;
                while i < chars.len() && chars[i] == c {
                    i += 1;
                }
                out.push(collapse_repeats(&chars[start..i]));
            }
            CharClass::Emoji => {
                let start = i;
                i += 1;
                loop {
                    if i < chars.len() && is_emoji_modifier(chars[i]) {
                        i += 1;
                    } else if i + 1 < chars.len() && chars[i] == '\u{200D}' && is_emoji(chars[i + 1]) {
                        i += 2;
                    } else {
                        break;
                    }
                }
                out.push(chars[start..i].iter().collect());
            }
        }
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn starts_with_at(chars: &[char], at: usize, pat: &str) -> bool {
    let mut j = at;
    for p in pat.chars() {
        if chars.get(j) != Some(&p) {
            return false;
        }
        j += 1;
    }
    true
}

/// Cuts every run of a repeated character down to [`MAX_REPEAT`].
pub fn collapse_repeats(chars: &[char]) -> String {
    let mut out = String::with_capacity(chars.len());
    let mut run = 0;
    let mut prev = None;
    for &c in chars {
        if Some(c) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(c);
        }
        if run <= MAX_REPEAT {
            out.push(c);
        }
    }
    out
}
