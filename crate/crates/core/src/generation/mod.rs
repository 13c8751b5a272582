//! Candidate CPE generation for PVCs.
//!
//! Each CPE component gets a set of candidate tokens from naming conventions
//! (per PVC kind); the full candidate set is the cartesian product of the
//! component sets.

mod app;
mod index;
mod os;
mod words;

use std::collections::BTreeSet;

pub use app::{app_product_candidates, app_vendor_candidates, app_version_candidates};
pub use index::{GenerationIndex, LINUX_VENDOR_SEED};
pub use os::{
    os_product_candidates, os_update_candidates, os_vendor_candidates, os_version_candidates,
};
pub use words::{
    abbreviate_name, classify_version_token, extract_versions_from_text, word_combinations,
    TokenClass, SEPARATORS,
};

use crate::cpe::{Component, CpeName, Part};
use crate::error::GenerationError;
use crate::pvc::{Pvc, PvcKind};

/// Candidate tokens per CPE component.
///
/// Platforms, vendors, products and versions must be non-empty; updates,
/// editions and languages may be empty, in which case the component is ANY.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentCandidates {
    pub platforms: BTreeSet<Part>,
    pub vendors: BTreeSet<String>,
    pub products: BTreeSet<String>,
    pub versions: BTreeSet<String>,
    pub updates: BTreeSet<String>,
    pub editions: BTreeSet<String>,
    pub languages: BTreeSet<String>,
}

impl ComponentCandidates {
    fn validate(&self) -> Result<(), GenerationError> {
        if self.platforms.is_empty() {
            return Err(GenerationError::EmptyCandidates("platforms"));
        }
        let required = [
            ("vendors", &self.vendors),
            ("products", &self.products),
            ("versions", &self.versions),
        ];
        for (label, set) in required {
            if set.is_empty() {
                return Err(GenerationError::EmptyCandidates(label));
            }
        }
        let all = required.into_iter().chain([
            ("updates", &self.updates),
            ("editions", &self.editions),
            ("languages", &self.languages),
        ]);
        for (label, set) in all {
            if set.iter().any(|t| Component::new(t).is_any()) {
                return Err(GenerationError::EmptyMember(label));
            }
        }
        Ok(())
    }

    /// Names in nested-loop order, before deduplication. Its length is
    /// `|P|·|V|·|PR|·|VR|·max(1,|U|)·max(1,|E|)·max(1,|L|)`.
    pub fn expand(&self) -> Result<Vec<CpeName>, GenerationError> {
        self.validate()?;
        fn or_any(set: &BTreeSet<String>) -> Vec<Component> {
            if set.is_empty() {
                vec![Component::Any]
            } else {
                set.iter().map(|s| Component::new(s)).collect()
            }
        }
        let updates = or_any(&self.updates);
        let editions = or_any(&self.editions);
        let languages = or_any(&self.languages);

        let mut out = Vec::new();
        for &part in &self.platforms {
            for vendor in &self.vendors {
                for product in &self.products {
                    for version in &self.versions {
                        for update in &updates {
                            for edition in &editions {
                                for language in &languages {
                                    out.push(CpeName {
                                        part,
                                        vendor: Component::new(vendor),
                                        product: Component::new(product),
                                        version: Component::new(version),
                                        update: update.clone(),
                                        edition: edition.clone(),
                                        language: language.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn cartesian_expand(c: &ComponentCandidates) -> Result<BTreeSet<CpeName>, GenerationError> {
    Ok(c.expand()?.into_iter().collect())
}

/// Assembles the per-component candidates for `pvc`.
pub fn component_candidates(pvc: &Pvc, index: &GenerationIndex) -> ComponentCandidates {
    match pvc.kind {
        PvcKind::OperatingSystem => {
            let mut vendors = os_vendor_candidates(pvc, index);
            if vendors.is_empty() {
                vendors = index.known_vendors.clone();
            }
            if vendors.is_empty() {
                vendors = word_combinations(&pvc.name);
            }
            ComponentCandidates {
                platforms: BTreeSet::from([Part::OperatingSystem]),
                vendors,
                products: os_product_candidates(pvc),
                versions: os_version_candidates(pvc),
                updates: os_update_candidates(pvc),
                ..Default::default()
            }
        }
        PvcKind::Application | PvcKind::Hardware => {
            let part = if pvc.kind == PvcKind::Hardware {
                Part::Hardware
            } else {
                Part::Application
            };
            ComponentCandidates {
                platforms: BTreeSet::from([part]),
                vendors: app_vendor_candidates(pvc),
                products: app_product_candidates(pvc, index),
                versions: app_version_candidates(pvc),
                ..Default::default()
            }
        }
    }
}

/// Candidate CPE names for one PVC. Fails only when the PVC name has no
/// usable characters.
pub fn generate_cpes(
    pvc: &Pvc,
    index: &GenerationIndex,
) -> Result<BTreeSet<CpeName>, GenerationError> {
    cartesian_expand(&component_candidates(pvc, index))
}
