use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cpe::{CpeName, Part};

/// Distributions known to publish Linux operating systems. Only the entries
/// that also appear in the ingested dictionary end up in the index.
pub const LINUX_VENDOR_SEED: [&str; 22] = [
    "canonical",
    "conectiva",
    "corel",
    "debian",
    "engardelinux",
    "gentoo",
    "ibm",
    "linux",
    "linuxmint",
    "mandrakesoft",
    "mandriva",
    "novell",
    "opensuse",
    "opensuse_project",
    "oracle",
    "redhat",
    "scientificlinux",
    "sgi",
    "slackware",
    "suse",
    "trustix",
    "windriver",
];

/// Lookup tables derived from the CPE dictionary of one database generation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationIndex {
    pub known_vendors: BTreeSet<String>,
    pub known_products: BTreeSet<String>,
    pub vendor_to_products: BTreeMap<String, BTreeSet<String>>,
    pub product_to_vendors: BTreeMap<String, BTreeSet<String>>,
    /// OS (part `o`) product -> vendors.
    pub os_product_vendors: BTreeMap<String, BTreeSet<String>>,
    /// Vendors of any product whose name contains "android".
    pub android_vendors: BTreeSet<String>,
    /// OS products published by apple.
    pub apple_os_products: BTreeSet<String>,
    /// Seed list intersected with dictionary vendors.
    pub linux_vendors: BTreeSet<String>,
}

impl GenerationIndex {
    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a CpeName>) -> Self {
        let mut idx = GenerationIndex::default();
        for name in names {
            let vendor = name.vendor.value();
            let product = name.product.value();
            if let Some(v) = vendor {
                idx.known_vendors.insert(v.to_string());
            }
            if let Some(p) = product {
                idx.known_products.insert(p.to_string());
            }
            let (Some(v), Some(p)) = (vendor, product) else {
                continue;
            };
            idx.vendor_to_products
                .entry(v.to_string())
                .or_default()
                .insert(p.to_string());
            idx.product_to_vendors
                .entry(p.to_string())
                .or_default()
                .insert(v.to_string());
            if p.contains("android") {
                idx.android_vendors.insert(v.to_string());
            }
            if name.part == Part::OperatingSystem {
                idx.os_product_vendors
                    .entry(p.to_string())
                    .or_default()
                    .insert(v.to_string());
                if v == "apple" {
                    idx.apple_os_products.insert(p.to_string());
                }
            }
        }
        idx.linux_vendors = LINUX_VENDOR_SEED
            .iter()
            .filter(|v| idx.known_vendors.contains(**v))
            .map(|v| v.to_string())
            .collect();
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(uris: &[&str]) -> Vec<CpeName> {
        uris.iter().map(|u| CpeName::parse(u).unwrap()).collect()
    }

    #[test]
    fn derives_family_lists() {
        let dict = names(&[
            "cpe:/o:google:android:8.0",
            "cpe:/o:motorola:android:4.1.2",
            "cpe:/o:codeaurora:android-msm:3.2.57",
            "cpe:/o:apple:iphone_os:10.1.1",
            "cpe:/a:apple:safari:10",
            "cpe:/o:canonical:ubuntu_linux:18.04",
        ]);
        let idx = GenerationIndex::from_names(&dict);
        assert!(idx.android_vendors.is_superset(&BTreeSet::from([
            "google".to_string(),
            "motorola".to_string(),
        ])));
        assert!(idx.android_vendors.contains("codeaurora"));
        assert_eq!(idx.apple_os_products, BTreeSet::from(["iphone_os".to_string()]));
        assert_eq!(idx.linux_vendors, BTreeSet::from(["canonical".to_string()]));
        assert!(idx.known_vendors.contains("canonical"));
        assert_eq!(
            idx.os_product_vendors["ubuntu_linux"],
            BTreeSet::from(["canonical".to_string()])
        );
    }

    #[test]
    fn empty_dictionary_gives_empty_index() {
        assert_eq!(GenerationIndex::from_names(&[]), GenerationIndex::default());
    }
}
