use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../../data/default_lexicon.txt");

/// Lowercases, drops apostrophes, turns other punctuation into separators.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for ch in text.chars() {
        if ch == '\'' || ch == '\u{2019}' {
            continue;
        }
        if ch.is_alphanumeric() {
            cleaned.extend(ch.to_lowercase());
        } else {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().map(str::to_owned).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    Exact(String),
    Prefix(String),
}

impl Pattern {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        if raw.chars().any(char::is_uppercase) {
            return Err(format!("pattern `{raw}` must be lowercase"));
        }
        match raw.strip_suffix('*') {
            Some("") => Err("bare `*` pattern".into()),
            Some(prefix) if prefix.contains('*') => Err(format!("pattern `{raw}` has an inner `*`")),
            Some(prefix) => Ok(Pattern::Prefix(prefix.to_owned())),
            None if raw.contains('*') => Err(format!("pattern `{raw}` has an inner `*`")),
            None => Ok(Pattern::Exact(raw.to_owned())),
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        match self {
            Pattern::Exact(w) => w == token,
            Pattern::Prefix(p) => token.starts_with(p.as_str()),
        }
    }
}

/// Ordered word-category dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    categories: Vec<(String, Vec<Pattern>)>,
}

impl Lexicon {
    pub fn new(categories: Vec<(String, Vec<Pattern>)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (name, patterns) in &categories {
            if name.is_empty() {
                return Err(Error::invalid("empty category name"));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate category `{name}`")));
            }
            if patterns.is_empty() {
                return Err(Error::invalid(format!("category `{name}` has no patterns")));
            }
        }
        Ok(Self { categories })
    }

    /// Parses `category: word word prefix*` lines; `#` starts a comment line.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut categories = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: origin.to_owned(),
                line: i + 1,
                msg,
            };
            let (name, words) = line
                .split_once(':')
                .ok_or_else(|| err("expected `category: patterns`".into()))?;
            let patterns = words
                .split_whitespace()
                .map(Pattern::parse)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(err)?;
            categories.push((name.trim().to_owned(), patterns));
        }
        Self::new(categories)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    /// The bundled stand-in dictionary.
    pub fn default_lexicon() -> Self {
        Self::parse(DEFAULT_LEXICON, "default_lexicon.txt").expect("bundled lexicon parses")
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|(n, _)| n.as_str())
    }

    pub fn categories(&self) -> &[(String, Vec<Pattern>)] {
        &self.categories
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryVector {
    /// Fraction of tokens matching each category, in lexicon order.
    pub proportions: Vec<f64>,
    pub token_count: usize,
}

pub fn category_counts<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> CategoryVector {
    let n = tokens.len();
    let proportions = lexicon
        .categories
        .iter()
        .map(|(_, patterns)| {
            if n == 0 {
                return 0.0;
            }
            let hits = tokens
                .iter()
                .filter(|t| patterns.iter().any(|p| p.matches(t.as_ref())))
                .count();
            hits as f64 / n as f64
        })
        .collect();
    CategoryVector {
        proportions,
        token_count: n,
    }
}
