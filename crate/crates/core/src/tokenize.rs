//! Tweet-aware unigram tokenizer.
//!
//! Each whitespace-delimited chunk is scanned left to right. At every
//! position the rules are tried in priority order and the first one that
//! matches a non-empty prefix wins:
//!
//! url > email > mention > hashtag > emoticon > punctuation block > word
//!
//! After scanning, urls, emails, mentions, single punctuation marks and
//! stopwords are dropped and everything is lowercased.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
pub const DEFAULT_EMOTICONS: &str = include_str!("../data/emoticons.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Url,
    Email,
    Mention,
    Hashtag,
    Emoticon,
    Punctuation,
    Word,
}

#[derive(Debug, Clone)]
pub struct TokenRule {
    pub name: &'static str,
    pub kind: TokenKind,
    pub pattern: String,
    pub priority: u32,
    regex: Regex,
}

impl TokenRule {
    fn new(name: &'static str, kind: TokenKind, pattern: String, priority: u32) -> Result<Self> {
        let regex = Regex::new(&format!("^(?:{pattern})"))
            .map_err(|e| Error::Config(format!("token rule {name}: {e}")))?;
        Ok(TokenRule {
            name,
            kind,
            pattern,
            priority,
            regex,
        })
    }

    fn match_len(&self, s: &str) -> Option<usize> {
        let m = self.regex.find(s)?;
        if m.end() == 0 {
            return None;
        }
        // Emoticons may not run into a following letter or digit ("xDrive").
        if self.kind == TokenKind::Emoticon
            && s[m.end()..]
                .chars()
                .next()
                .is_some_and(char::is_alphanumeric)
        {
            return None;
        }
        Some(m.end())
    }
}

/// Parse a one-entry-per-line list, ignoring blank lines.
pub fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn decode_entities(text: &str) -> std::borrow::Cow<'_, str> {
    if !text.contains('&') {
        return text.into();
    }
    text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
        .into()
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    rules: Vec<TokenRule>,
    stopwords: HashSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(
            &parse_list(DEFAULT_STOPWORDS),
            &parse_list(DEFAULT_EMOTICONS),
        )
        .expect("shipped token assets are valid")
    }
}

impl Tokenizer {
    pub fn new(stopwords: &[String], emoticons: &[String]) -> Result<Self> {
        let emoticon_pattern = emoticons
            .iter()
            .map(|e| format!("(?:{e})"))
            .collect::<Vec<_>>()
            .join("|");
        let mut rules = vec![
            TokenRule::new(
                "url",
                TokenKind::Url,
                r"(?i)(?:https?://|www\.)\S+".into(),
                0,
            )?,
            TokenRule::new(
                "email",
                TokenKind::Email,
                r"[\w.+\-]+@[\w\-]+(?:\.[\w\-]+)+".into(),
                1,
            )?,
            TokenRule::new("mention", TokenKind::Mention, r"@\w+".into(), 2)?,
            TokenRule::new("hashtag", TokenKind::Hashtag, r"#\w+".into(), 3)?,
        ];
        if !emoticon_pattern.is_empty() {
            rules.push(TokenRule::new(
                "emoticon",
                TokenKind::Emoticon,
                emoticon_pattern,
                4,
            )?);
        }
        rules.push(TokenRule::new(
            "punctuation",
            TokenKind::Punctuation,
            r"[^\w\s]+".into(),
            5,
        )?);
        rules.push(TokenRule::new(
            "word",
            TokenKind::Word,
            r"\w+(?:['’]\w+)*".into(),
            6,
        )?);
        rules.sort_by_key(|r| r.priority);
        Ok(Tokenizer {
            rules,
            stopwords: stopwords.iter().map(|w| w.to_lowercase()).collect(),
        })
    }

    /// Default emoticons with the stopword list read from `path`.
    pub fn with_stopwords_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Tokenizer::new(&parse_list(&text), &parse_list(DEFAULT_EMOTICONS))
    }

    pub fn rules(&self) -> &[TokenRule] {
        &self.rules
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    /// Every token with its rule, before any cleanup.
    pub fn scan(&self, text: &str) -> Vec<(TokenKind, String)> {
        let text = decode_entities(text);
        let mut out = Vec::new();
        for chunk in text.split_whitespace() {
            let mut rest = chunk;
            while !rest.is_empty() {
                let (kind, len) = self
                    .rules
                    .iter()
                    .find_map(|r| r.match_len(rest).map(|n| (r.kind, n)))
                    .unwrap_or_else(|| {
                        (
                            TokenKind::Punctuation,
                            rest.chars().next().map_or(1, char::len_utf8),
                        )
                    });
                out.push((kind, rest[..len].to_string()));
                rest = &rest[len..];
            }
        }
        out
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.scan(text)
            .into_iter()
            .filter_map(|(kind, tok)| {
                if matches!(kind, TokenKind::Url | TokenKind::Email | TokenKind::Mention) {
                    return None;
                }
                let mut chars = tok.chars();
                if let (Some(c), None) = (chars.next(), chars.next()) {
                    if !c.is_alphanumeric() {
                        return None;
                    }
                }
                let tok = tok.to_lowercase().replace('’', "'");
                if tok.starts_with('@') || self.is_stopword(&tok) {
                    None
                } else {
                    Some(tok)
                }
            })
            .collect()
    }
}

fn shared() -> &'static Tokenizer {
    static TOKENIZER: OnceLock<Tokenizer> = OnceLock::new();
    TOKENIZER.get_or_init(Tokenizer::default)
}

/// Tokenize with the shipped stopword and emoticon lists.
pub fn tokenize_text(text: &str) -> Vec<String> {
    shared().tokenize(text)
}

pub fn is_stopword(token: &str) -> bool {
    shared().is_stopword(token)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize_text(s)
    }

    #[test]
    fn mixed_tweet() {
        assert_eq!(toks("Hello @bob #Sunny :)"), ["hello", "#sunny", ":)"]);
    }

    #[test]
    fn empty_and_stopwords() {
        assert!(toks("").is_empty());
        assert!(toks("The the THE").is_empty());
    }

    #[test]
    fn stopword_membership() {
        assert!(is_stopword("the"));
        assert!(!is_stopword("#the"));
        assert!(!is_stopword("zebra"));
        assert_eq!(toks("#the"), ["#the"]);
    }

    #[test]
    fn shipped_stopword_list_size() {
        assert_eq!(parse_list(DEFAULT_STOPWORDS).len(), 179);
    }

    #[test]
    fn emails_mentions_urls_dropped() {
        assert_eq!(toks("mail bob.smith@example.com now"), ["mail"]);
        assert_eq!(toks("@alice @bob_2 zebra"), ["zebra"]);
        assert_eq!(
            toks("see https://t.co/xyz www.example.com zebra"),
            ["see", "zebra"]
        );
    }

    #[test]
    fn punctuation_blocks() {
        assert_eq!(toks("wow!!! ok. & more?"), ["wow", "!!!", "ok"]);
        assert_eq!(toks("Tom &amp; Jerry"), ["tom", "jerry"]);
    }

    #[test]
    fn emoticon_boundaries() {
        assert_eq!(toks("lol:) xD <3 -_-"), ["lol", ":)", "xd", "<3", "-_-"]);
        assert_eq!(toks("xDrive"), ["xdrive"]);
        assert_eq!(toks("(hello)"), ["hello"]);
    }

    #[test]
    fn contractions_and_case() {
        assert_eq!(toks("Don't STOP believin'"), ["stop", "believin"]);
        assert_eq!(toks("Y'ALL"), ["y'all"]);
    }

    #[test]
    fn rules_are_priority_ordered() {
        let t = Tokenizer::default();
        let names: Vec<_> = t.rules().iter().map(|r| r.name).collect();
        assert_eq!(
            names,
            [
                "url",
                "email",
                "mention",
                "hashtag",
                "emoticon",
                "punctuation",
                "word"
            ]
        );
    }

    proptest! {
        #[test]
        fn output_tokens_are_clean(text in "[ a-zA-Z0-9@#:;().!?'&_\\-/<>=]{0,60}") {
            let email = Regex::new(r"@[\w\-]+\.[\w\-]+").unwrap();
            let a = toks(&text);
            prop_assert_eq!(&a, &toks(&text));
            for t in &a {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.starts_with('@'));
                prop_assert!(!email.is_match(t));
                prop_assert_eq!(t.to_lowercase(), t.clone());
                let single_punct = t.chars().count() == 1 && !t.chars().all(char::is_alphanumeric);
                prop_assert!(!single_punct);
            }
        }
    }
}
