//! Candidate components for application and hardware PVCs.

use std::collections::BTreeSet;

use super::index::GenerationIndex;
use super::words::{
    abbreviate_name, extract_versions_from_text, join_with_separators, non_version_words, words,
};
use crate::cpe::normalize_token;
use crate::pvc::Pvc;

fn normalized(v: Option<&str>) -> Option<String> {
    v.map(normalize_token).filter(|s| !s.is_empty())
}

/// Publisher, first word, and first-two-words joins, unioned. Falls back to
/// the whole name so the result is never empty.
pub fn app_vendor_candidates(pvc: &Pvc) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.extend(normalized(pvc.publisher.as_deref()));
    out.extend(normalized(pvc.vendor.as_deref()));
    let ws = words(&pvc.name);
    if ws.len() >= 2 {
        out.insert(ws[0].clone());
    }
    if ws.len() >= 3 {
        out.extend(join_with_separators(&ws[..2]));
    }
    if out.is_empty() {
        out.extend(normalized(Some(&pvc.name)));
    }
    out
}

/// Every contiguous run of words, joined with each separator.
fn contiguous_runs(ws: &[String]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for start in 0..ws.len() {
        for end in start + 1..=ws.len() {
            out.extend(join_with_separators(&ws[start..end]));
        }
    }
    out
}

/// Two phases. Phase 1 keeps name combinations (any contiguous word run) and
/// abbreviations that exist in the dictionary; if any survive they are the
/// answer. Otherwise phase 2 derives products from the count of non-version
/// words.
pub fn app_product_candidates(pvc: &Pvc, index: &GenerationIndex) -> BTreeSet<String> {
    let ws = non_version_words(&pvc.name);

    let phase1: BTreeSet<String> = contiguous_runs(&ws)
        .into_iter()
        .chain(abbreviate_name(&pvc.name))
        .filter(|p| index.known_products.contains(p))
        .collect();
    if !phase1.is_empty() {
        return phase1;
    }

    let mut out = BTreeSet::new();
    match ws.len() {
        0 => out.extend(normalized(Some(&pvc.name))),
        1 => {
            out.insert(ws[0].clone());
        }
        2 => {
            out.insert(ws[0].clone());
            out.extend(join_with_separators(&ws));
        }
        3 => {
            out.insert(ws[1].clone());
            out.extend(join_with_separators(&[&ws[0], &ws[2]]));
            out.extend(join_with_separators(&[&ws[1], &ws[2]]));
        }
        _ => out.extend(join_with_separators(&ws)),
    }
    out
}

/// Display version and dotted versions found in the name; `-` when neither
/// is available.
pub fn app_version_candidates(pvc: &Pvc) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.extend(normalized(pvc.display_version.as_deref()));
    out.extend(normalized(pvc.version.as_deref()));
    out.extend(extract_versions_from_text(&pvc.name));
    if out.is_empty() {
        out.insert("-".to_string());
    }
    out
}
