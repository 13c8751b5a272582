//! Candidate components for operating-system PVCs.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use super::index::GenerationIndex;
use super::words::{word_combinations, words};
use crate::cpe::normalize_token;
use crate::pvc::Pvc;

/// Vendor hints taken from the PVC's own fields.
fn field_hints(pvc: &Pvc) -> BTreeSet<String> {
    [pvc.vendor.as_deref(), pvc.publisher.as_deref()]
        .into_iter()
        .flatten()
        .map(normalize_token)
        .filter(|s| !s.is_empty())
        .collect()
}

fn vendors_of_products<'a>(
    products: impl IntoIterator<Item = &'a String>,
    index: &GenerationIndex,
    keep_vendor: impl Fn(&str) -> bool,
) -> BTreeSet<String> {
    products
        .into_iter()
        .filter_map(|p| index.os_product_vendors.get(p))
        .flatten()
        .filter(|v| keep_vendor(v))
        .cloned()
        .collect()
}

/// Ordered decision procedure: the first convention that yields a
/// non-empty set wins. An empty result is possible.
pub fn os_vendor_candidates(pvc: &Pvc, index: &GenerationIndex) -> BTreeSet<String> {
    let name = pvc.name.to_lowercase();
    let combos = word_combinations(&pvc.name);
    let hints = field_hints(pvc);

    // windows
    if name.contains("windows") {
        return BTreeSet::from(["microsoft".to_string()]);
    }

    // android
    if name.contains("android") {
        let matched: BTreeSet<String> = hints.intersection(&index.android_vendors).cloned().collect();
        if !matched.is_empty() {
            return matched;
        }
        if !index.android_vendors.is_empty() {
            return index.android_vendors.clone();
        }
    }

    // apple
    if combos.iter().any(|c| index.apple_os_products.contains(c)) {
        return BTreeSet::from(["apple".to_string()]);
    }

    // linux: a direct vendor match first, then the vendor of a matching OS name
    let direct: BTreeSet<String> = hints
        .iter()
        .chain(combos.iter())
        .filter(|h| index.linux_vendors.contains(*h))
        .cloned()
        .collect();
    if !direct.is_empty() {
        return direct;
    }
    let via_product = vendors_of_products(&combos, index, |v| index.linux_vendors.contains(v));
    if !via_product.is_empty() {
        return via_product;
    }

    // any known vendor matching the PVC's fields or name words
    let known: BTreeSet<String> = hints
        .iter()
        .chain(combos.iter())
        .cloned()
        .chain(words(&pvc.name))
        .filter(|h| index.known_vendors.contains(h))
        .collect();
    if !known.is_empty() {
        return known;
    }

    // any OS product matching the name, reflected onto its vendors
    vendors_of_products(&combos, index, |_| true)
}

pub fn os_product_candidates(pvc: &Pvc) -> BTreeSet<String> {
    word_combinations(&pvc.name)
}

/// Union of the version-part conventions that have their inputs, the
/// all-versions marker `-`, and the name combinations. Never empty.
pub fn os_version_candidates(pvc: &Pvc) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if let (Some(ma), Some(mi), Some(b)) = (pvc.major, pvc.minor, pvc.build) {
        out.insert(format!("{ma}.{mi}.{b}"));
        if let Some(r) = pvc.revision {
            out.insert(format!("{ma}.{mi}.{b}.{r}"));
        }
    }
    if let Some(r) = pvc.revision {
        out.insert(r.to_string());
    }
    if let (Some(ma), Some(mi)) = (pvc.major, pvc.minor) {
        out.insert(format!("{ma}.{mi}"));
    }
    if let Some(b) = pvc.build {
        out.insert(b.to_string());
    }
    if let Some(v) = pvc.version.as_deref().map(normalize_token) {
        if !v.is_empty() {
            out.insert(v);
        }
    }
    out.insert("-".to_string());
    out.extend(word_combinations(&pvc.name));
    out
}

fn service_pack_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)service\s*pack\s*(\d+)").unwrap())
}

/// `"service pack 3"` -> `{sp3}`; otherwise empty.
pub fn os_update_candidates(pvc: &Pvc) -> BTreeSet<String> {
    pvc.service_pack
        .as_deref()
        .and_then(|sp| service_pack_re().captures(sp))
        .map(|c| BTreeSet::from([format!("sp{}", &c[1])]))
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpe::CpeName;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn index() -> GenerationIndex {
        let dict: Vec<CpeName> = [
            "cpe:/o:microsoft:windows_xp",
            "cpe:/o:google:android:8.0",
            "cpe:/o:motorola:android:4.1.2",
            "cpe:/o:codeaurora:android-msm:3.2.57",
            "cpe:/o:apple:iphone_os:10.1.1",
            "cpe:/o:apple:mac_os_x:10.13",
            "cpe:/o:canonical:ubuntu_linux:18.04",
            "cpe:/o:debian:debian_linux:9.0",
            "cpe:/o:linux:linux_kernel:4.4",
            "cpe:/o:freebsd:freebsd:11.0",
            "cpe:/o:sun:solaris:10",
        ]
        .iter()
        .map(|u| CpeName::parse(u).unwrap())
        .collect();
        GenerationIndex::from_names(&dict)
    }

    #[test]
    fn windows_is_microsoft() {
        assert_eq!(os_vendor_candidates(&Pvc::os("windows 10"), &index()), set(&["microsoft"]));
        assert_eq!(os_vendor_candidates(&Pvc::os("Windows XP"), &index()), set(&["microsoft"]));
    }

    #[test]
    fn android_vendors() {
        let idx = index();
        assert_eq!(
            os_vendor_candidates(&Pvc::os("android"), &idx),
            set(&["google", "motorola", "codeaurora"])
        );
        let mut hinted = Pvc::os("android");
        hinted.vendor = Some("Motorola".into());
        assert_eq!(os_vendor_candidates(&hinted, &idx), set(&["motorola"]));
    }

    #[test]
    fn apple_os() {
        assert_eq!(os_vendor_candidates(&Pvc::os("iphone os"), &index()), set(&["apple"]));
        assert_eq!(os_vendor_candidates(&Pvc::os("mac os x"), &index()), set(&["apple"]));
    }

    #[test]
    fn linux_distributions() {
        let idx = index();
        assert_eq!(os_vendor_candidates(&Pvc::os("ubuntu linux"), &idx), set(&["canonical"]));
        let mut hinted = Pvc::os("stretch");
        hinted.vendor = Some("debian".into());
        assert_eq!(os_vendor_candidates(&hinted, &idx), set(&["debian"]));
    }

    #[test]
    fn other_vendors_and_products() {
        let idx = index();
        // name word is itself a known vendor
        assert_eq!(os_vendor_candidates(&Pvc::os("freebsd"), &idx), set(&["freebsd"]));
        // name matches an OS product, reflected onto its vendor
        assert_eq!(os_vendor_candidates(&Pvc::os("solaris"), &idx), set(&["sun"]));
        assert!(os_vendor_candidates(&Pvc::os("plan9"), &idx).is_empty());
    }

    #[test]
    fn versions() {
        let mut p = Pvc::os("windows 10");
        p.major = Some(10);
        p.minor = Some(1);
        p.build = Some(2991);
        p.revision = Some(5000);
        let v = os_version_candidates(&p);
        assert!(v.is_superset(&set(&["10.1.2991", "5000", "10.1.2991.5000", "10.1", "2991", "-"])));

        assert_eq!(os_version_candidates(&Pvc::os("plan9")), set(&["-", "plan9"]));

        let mut xp = Pvc::os("windows xp");
        xp.major = Some(5);
        xp.minor = Some(1);
        xp.build = Some(2600);
        assert!(os_version_candidates(&xp).contains("5.1.2600"));
    }

    #[test]
    fn service_packs() {
        let mut p = Pvc::os("windows xp");
        assert!(os_update_candidates(&p).is_empty());
        p.service_pack = Some("service pack 3".into());
        assert_eq!(os_update_candidates(&p), set(&["sp3"]));
        p.service_pack = Some("Service Pack 1".into());
        assert_eq!(os_update_candidates(&p), set(&["sp1"]));
        p.service_pack = Some("RTM".into());
        assert!(os_update_candidates(&p).is_empty());
    }
}
