use std::collections::{BTreeSet, HashMap};

use crate::cpe::CpeName;

use super::feed::CveRecord;

/// Inverted index from (vendor, product) to applicability names.
///
/// Applicability names with an ANY vendor or product go to a wildcard list
/// that every lookup scans. Queries with an ANY vendor or product scan
/// everything. Candidates are always confirmed with the full component match,
/// so the result equals the all-pairs definition.
#[derive(Debug, Default)]
pub struct MatchIndex {
    ids: Vec<String>,
    by_vendor_product: HashMap<(String, String), Vec<(u32, CpeName)>>,
    wildcard: Vec<(u32, CpeName)>,
}

impl MatchIndex {
    pub fn build<'a>(records: impl IntoIterator<Item = &'a CveRecord>) -> Self {
        let mut idx = MatchIndex::default();
        for record in records {
            let slot = idx.ids.len() as u32;
            idx.ids.push(record.id.clone());
            for name in &record.applicability {
                match (name.vendor.value(), name.product.value()) {
                    (Some(v), Some(p)) => idx
                        .by_vendor_product
                        .entry((v.to_string(), p.to_string()))
                        .or_default()
                        .push((slot, name.clone())),
                    _ => idx.wildcard.push((slot, name.clone())),
                }
            }
        }
        idx
    }

    /// Ids of every CVE with at least one applicability name matching at
    /// least one of `cpes`.
    pub fn match_cpes<'a>(&self, cpes: impl IntoIterator<Item = &'a CpeName>) -> BTreeSet<String> {
        let mut hits: BTreeSet<u32> = BTreeSet::new();
        let mut check = |entries: &[(u32, CpeName)], query: &CpeName| {
            for (slot, name) in entries {
                if !hits.contains(slot) && query.matches(name) {
                    hits.insert(*slot);
                }
            }
        };
        for query in cpes {
            match (query.vendor.value(), query.product.value()) {
                (Some(v), Some(p)) => {
                    if let Some(entries) = self.by_vendor_product.get(&(v.to_string(), p.to_string()))
                    {
                        check(entries, query);
                    }
                    check(&self.wildcard, query);
                }
                _ => {
                    for entries in self.by_vendor_product.values() {
                        check(entries, query);
                    }
                    check(&self.wildcard, query);
                }
            }
        }
        hits.into_iter().map(|s| self.ids[s as usize].clone()).collect()
    }
}
