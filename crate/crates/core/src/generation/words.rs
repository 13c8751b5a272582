//! Name-splitting helpers shared by the OS and application conventions.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

/// Separators tried when joining name words: none, underscore, dash.
pub const SEPARATORS: [&str; 3] = ["", "_", "-"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenClass {
    VersionLike,
    Plain,
}

fn version_word() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\d+(\.\d+)*$").unwrap())
}

fn dotted_version() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(\.\d+)+").unwrap())
}

/// `VersionLike` iff the whole word is digit groups separated by dots.
pub fn classify_version_token(word: &str) -> TokenClass {
    if version_word().is_match(word) {
        TokenClass::VersionLike
    } else {
        TokenClass::Plain
    }
}

/// Every dotted version string (`1.2`, `3.4.5`, ...) appearing in `title`.
pub fn extract_versions_from_text(title: &str) -> BTreeSet<String> {
    dotted_version()
        .find_iter(title)
        .map(|m| m.as_str().to_string())
        .collect()
}

/// Lowercased whitespace-separated words; `:` is not allowed in CPE tokens.
pub fn words(name: &str) -> Vec<String> {
    name.split_whitespace()
        .map(|w| w.to_lowercase().replace(':', "_"))
        .collect()
}

pub fn non_version_words(name: &str) -> Vec<String> {
    words(name)
        .into_iter()
        .filter(|w| classify_version_token(w) == TokenClass::Plain)
        .collect()
}

/// Joins all words with each separator. One word yields itself.
pub fn join_with_separators<S: AsRef<str>>(words: &[S]) -> BTreeSet<String> {
    match words {
        [] => BTreeSet::new(),
        [only] => BTreeSet::from([only.as_ref().to_string()]),
        _ => SEPARATORS
            .iter()
            .map(|sep| {
                words
                    .iter()
                    .map(AsRef::as_ref)
                    .collect::<Vec<_>>()
                    .join(sep)
            })
            .collect(),
    }
}

/// `"windows xp"` -> `{windowsxp, windows_xp, windows-xp}`.
pub fn word_combinations(name: &str) -> BTreeSet<String> {
    join_with_separators(&words(name))
}

/// First letters of the non-version words, e.g. `"media player classic 12.5"`
/// -> `{mpc}`. Empty when fewer than two words remain.
pub fn abbreviate_name(name: &str) -> BTreeSet<String> {
    let ws = non_version_words(name);
    if ws.len() <= 1 {
        return BTreeSet::new();
    }
    let abbr: String = ws.iter().filter_map(|w| w.chars().next()).collect();
    BTreeSet::from([abbr])
}
