//! Cross-checks against brute-force oracles that share no code with the
//! indexed paths.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use proptest::prelude::*;
use pvcscan_core::db::ExploitLink;
use pvcscan_core::generation::{cartesian_expand, ComponentCandidates};
use pvcscan_core::{CpeName, CveRecord, Inventory, Part, Pvc, ScanReport, Scanner, VulnDb};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Component-wise match over raw URI text.
fn oracle_match(a: &str, b: &str) -> bool {
    let split = |s: &str| -> Vec<String> {
        let rest = s.strip_prefix("cpe:/").unwrap();
        let mut v: Vec<String> = rest.split(':').map(str::to_string).collect();
        v.resize(7, String::new());
        v
    };
    let (a, b) = (split(a), split(b));
    a[0] == b[0] && (1..7).all(|i| a[i].is_empty() || b[i].is_empty() || a[i] == b[i])
}

const VENDORS: [&str; 4] = ["acme", "globex", "initech", "umbrella"];
const PRODUCTS: [&str; 4] = ["paint", "mail", "server", "agent"];
const VERSIONS: [&str; 4] = ["1.0", "1.1", "2.0", "3.5"];

fn random_uri(rng: &mut StdRng) -> String {
    let part = ["o", "a", "h"][rng.gen_range(0..3)];
    let mut pick = |xs: &[&str]| -> String {
        if rng.gen_bool(0.2) {
            String::new()
        } else {
            xs[rng.gen_range(0..xs.len())].to_string()
        }
    };
    let v = pick(&VENDORS);
    let p = pick(&PRODUCTS);
    let ver = pick(&VERSIONS);
    let upd = pick(&["sp1", "sp2"]);
    CpeName::parse(&format!("cpe:/{part}:{v}:{p}:{ver}:{upd}"))
        .unwrap()
        .to_uri()
}

fn random_db(rng: &mut StdRng, n_cves: usize) -> (VulnDb, Vec<(String, Vec<String>)>) {
    let db = VulnDb::in_memory();
    let mut tx = db.begin_update();
    let mut table = Vec::new();
    for i in 0..n_cves {
        let id = format!("CVE-2020-{:05}", i);
        let apps: Vec<String> = (0..rng.gen_range(0..4)).map(|_| random_uri(rng)).collect();
        let mut rec = CveRecord::new(&id);
        rec.applicability = apps.iter().map(|u| CpeName::parse(u).unwrap()).collect();
        tx.upsert_cve(rec);
        table.push((id, apps));
    }
    tx.commit().unwrap();
    (db, table)
}

#[test]
fn indexed_matching_equals_all_pairs() {
    for seed in 0..20u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.gen_range(0..800);
        let (db, table) = random_db(&mut rng, n);
        let inputs: Vec<String> = (0..rng.gen_range(0..60))
            .map(|_| random_uri(&mut rng))
            .collect();
        let names: Vec<CpeName> = inputs.iter().map(|u| CpeName::parse(u).unwrap()).collect();
        let got = db.match_cpes_to_cves(&names);
        let expected: BTreeSet<String> = table
            .iter()
            .filter(|(_, apps)| apps.iter().any(|a| inputs.iter().any(|g| oracle_match(g, a))))
            .map(|(id, _)| id.clone())
            .collect();
        assert_eq!(got, expected, "seed {seed}");
    }
}

fn token_set(max: usize) -> impl Strategy<Value = BTreeSet<String>> {
    proptest::collection::btree_set("[a-z0-9]{1,3}", 0..=max)
}

fn parts() -> impl Strategy<Value = BTreeSet<Part>> {
    proptest::collection::btree_set(
        prop_oneof![
            Just(Part::OperatingSystem),
            Just(Part::Application),
            Just(Part::Hardware)
        ],
        1..=3,
    )
}

proptest! {
    #[test]
    fn cartesian_size_and_members(
        parts in parts(),
        vendors in proptest::collection::btree_set("[a-z]{1,3}", 1..=3),
        products in proptest::collection::btree_set("[a-z]{1,3}", 1..=3),
        versions in proptest::collection::btree_set("[0-9]{1,2}", 1..=3),
        updates in token_set(2),
        editions in token_set(2),
        languages in token_set(2),
    ) {
        let c = ComponentCandidates {
            platforms: parts.clone(),
            vendors: vendors.clone(),
            products: products.clone(),
            versions: versions.clone(),
            updates: updates.clone(),
            editions: editions.clone(),
            languages: languages.clone(),
        };
        let raw = c.expand().unwrap();
        let opt = |s: &BTreeSet<String>| s.len().max(1);
        prop_assert_eq!(
            raw.len(),
            parts.len() * vendors.len() * products.len() * versions.len()
                * opt(&updates) * opt(&editions) * opt(&languages)
        );
        let or_blank = |s: &BTreeSet<String>| {
            if s.is_empty() { vec![String::new()] } else { s.iter().cloned().collect() }
        };
        let mut expected = BTreeSet::new();
        for p in &parts {
            for v in &vendors {
                for pr in &products {
                    for ver in &versions {
                        for u in or_blank(&updates) {
                            for e in or_blank(&editions) {
                                for l in or_blank(&languages) {
                                    let uri = format!("cpe:/{}:{v}:{pr}:{ver}:{u}:{e}:{l}", p.letter());
                                    expected.insert(CpeName::parse(&uri).unwrap());
                                }
                            }
                        }
                    }
                }
            }
        }
        prop_assert_eq!(cartesian_expand(&c).unwrap(), expected);
    }
}

#[test]
fn dictionary_index_counts_match_a_distinct_scan() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut lines = vec!["# comment".to_string(), String::new()];
    for _ in 0..100 {
        let v = format!("vendor{}", rng.gen_range(0..30));
        let p = format!("product{}", rng.gen_range(0..45));
        let part = ["o", "a", "h"][rng.gen_range(0..3)];
        lines.push(format!("cpe:/{part}:{v}:{p}:{}", rng.gen_range(0..5)));
    }
    let text = lines.join("\n");
    let db = VulnDb::in_memory();
    let mut tx = db.begin_update();
    assert_eq!(tx.ingest_cpe_dictionary_str(&text), 100);
    tx.commit().unwrap();

    let mut vendors = HashSet::new();
    let mut products = HashSet::new();
    let mut names = HashSet::new();
    for l in lines.iter().filter(|l| l.starts_with("cpe:/")) {
        let f: Vec<&str> = l.split(':').collect();
        vendors.insert(f[2].to_string());
        products.insert(f[3].to_string());
        names.insert(l.clone());
    }
    let snap = db.snapshot();
    assert_eq!(snap.dictionary().len(), names.len());
    assert_eq!(snap.index().known_products.len(), products.len());
    assert_eq!(snap.index().known_vendors.len(), vendors.len());
}

#[test]
fn exploit_flags_equal_a_join() {
    let mut rng = StdRng::seed_from_u64(11);
    let ids: Vec<String> = (0..200).map(|i| format!("CVE-2019-{:04}", 1000 + i)).collect();
    let mut csv = String::from("exploit_id,cve_id\n");
    let mut links = Vec::new();
    for k in 0..150 {
        // some links point at CVEs the feed does not have
        let cve = format!("CVE-2019-{:04}", 1000 + rng.gen_range(0..260));
        csv.push_str(&format!("EDB-{k},{cve}\n"));
        links.push(cve);
    }
    let db = VulnDb::in_memory();
    let mut tx = db.begin_update();
    for id in &ids {
        tx.upsert_cve(CveRecord::new(id));
    }
    tx.ingest_exploit_map_str(&csv).unwrap();
    tx.commit().unwrap();

    let expected: BTreeSet<&String> = ids.iter().filter(|id| links.contains(id)).collect();
    let snap = db.snapshot();
    let flagged: BTreeSet<&String> = snap
        .cves()
        .filter(|r| r.exploit_available)
        .map(|r| &r.id)
        .collect();
    assert_eq!(flagged, expected);
    assert!(snap.exploit_links().contains(&ExploitLink {
        exploit_id: "EDB-0".into(),
        cve_id: links[0].clone()
    }));
}

fn fixture_db() -> VulnDb {
    let db = VulnDb::in_memory();
    let mut tx = db.begin_update();
    tx.ingest_cpe_dictionary_str(
        "cpe:/a:acme:paint:1.0\ncpe:/a:globex:mail:2.0\ncpe:/o:microsoft:windows_xp\n",
    );
    let mut r = CveRecord::new("CVE-2021-0001");
    r.applicability
        .insert(CpeName::parse("cpe:/a:acme:paint:1.0").unwrap());
    tx.upsert_cve(r);
    let mut r = CveRecord::new("CVE-2021-0100");
    r.applicability
        .insert(CpeName::parse("cpe:/o:microsoft:windows_xp").unwrap());
    tx.upsert_cve(r);
    tx.commit().unwrap();
    db
}

#[test]
fn rescan_after_update_reflects_the_new_cve() {
    let db = Arc::new(fixture_db());
    let scanner = Scanner::new(db.clone(), 2);
    let mut pvc = Pvc::app("Acme Paint");
    pvc.version = Some("1.0".into());

    let first = scanner.scan_pvc(&pvc).unwrap();
    assert!(!first.cache_hit);
    assert_eq!(first.cve_ids, BTreeSet::from(["CVE-2021-0001".to_string()]));
    let second = scanner.scan_pvc(&pvc).unwrap();
    assert!(second.cache_hit);
    assert_eq!(second.cve_ids, first.cve_ids);

    let mut tx = db.begin_update();
    let mut r = CveRecord::new("CVE-2021-0002");
    r.applicability
        .insert(CpeName::parse("cpe:/a:acme:paint").unwrap());
    tx.upsert_cve(r);
    tx.commit().unwrap();

    let third = scanner.scan_pvc(&pvc).unwrap();
    assert!(!third.cache_hit);
    assert_eq!(
        third.cve_ids,
        BTreeSet::from(["CVE-2021-0001".to_string(), "CVE-2021-0002".to_string()])
    );
}

#[test]
fn concurrent_job_equals_sequential_job() {
    let db = Arc::new(fixture_db());
    let mut rng = StdRng::seed_from_u64(3);
    let names = ["Acme Paint", "Globex Mail", "Initech Agent", "Windows XP"];
    let pvcs: Vec<Pvc> = (0..1000)
        .map(|i| {
            let name = names[rng.gen_range(0..names.len())];
            let mut p = if name.starts_with("Windows") {
                Pvc::os(name)
            } else {
                Pvc::app(name)
            };
            p.version = Some(format!("{}.0", i % 3));
            p
        })
        .collect();
    let inv = Inventory {
        target_label: "fleet".into(),
        pvcs,
    };
    let sequential = Scanner::new(db.clone(), 1).execute_job("a", &inv);
    let concurrent = Scanner::new(db.clone(), 8).execute_job("b", &inv);
    let by_pvc = |r: &ScanReport| -> Vec<(Pvc, Vec<String>)> {
        r.results
            .iter()
            .map(|p| (p.pvc.clone(), p.cves.iter().map(|c| c.id.clone()).collect()))
            .collect()
    };
    assert_eq!(by_pvc(&sequential), by_pvc(&concurrent));
    assert_eq!(sequential.results.len(), 1000);
    assert!(sequential.summary.total_cves >= 2);
    assert_eq!(sequential.summary, concurrent.summary);
}
