//! NVD JSON feed parsing (the `CVE_Items` shape).

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracing::warn;

use crate::cpe::{Component, CpeName, Part};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvssScore {
    /// e.g. "3.1" or "2.0".
    pub version: String,
    pub base_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveRecord {
    pub id: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub cvss_scores: Vec<CvssScore>,
    #[serde(default)]
    pub applicability: BTreeSet<CpeName>,
    #[serde(default)]
    pub exploit_available: bool,
    #[serde(default)]
    pub published: Option<String>,
}

impl CveRecord {
    pub fn new(id: impl Into<String>) -> Self {
        CveRecord {
            id: id.into(),
            description: String::new(),
            cvss_scores: Vec::new(),
            applicability: BTreeSet::new(),
            exploit_available: false,
            published: None,
        }
    }

    /// Highest base score across CVSS versions.
    pub fn max_cvss(&self) -> Option<f64> {
        self.cvss_scores
            .iter()
            .map(|s| s.base_score)
            .fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.max(s))))
    }
}

fn cve_id_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^CVE-\d{4}-\d{4,}$").unwrap())
}

pub fn is_cve_id(s: &str) -> bool {
    cve_id_re().is_match(s)
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct FeedStats {
    pub upserted: usize,
    pub skipped: usize,
}

// Typed view of the subset of a feed item we read. Everything is optional so
// that sparse items still deserialize.
#[derive(Debug, Deserialize)]
struct Item {
    cve: Option<ItemCve>,
    configurations: Option<Configurations>,
    impact: Option<Impact>,
    #[serde(rename = "publishedDate")]
    published_date: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ItemCve {
    #[serde(rename = "CVE_data_meta")]
    meta: Option<Meta>,
    description: Option<Description>,
}

#[derive(Debug, Deserialize)]
struct Meta {
    #[serde(rename = "ID")]
    id: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Description {
    #[serde(default)]
    description_data: Vec<LangString>,
}

#[derive(Debug, Deserialize)]
struct LangString {
    lang: Option<String>,
    value: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Configurations {
    #[serde(default)]
    nodes: Vec<Node>,
}

#[derive(Debug, Deserialize)]
struct Node {
    #[serde(default)]
    children: Vec<Node>,
    #[serde(default)]
    cpe_match: Vec<CpeMatch>,
}

#[derive(Debug, Deserialize)]
struct CpeMatch {
    vulnerable: Option<bool>,
    #[serde(rename = "cpe22Uri")]
    cpe22: Option<String>,
    #[serde(rename = "cpe23Uri")]
    cpe23: Option<String>,
    #[serde(rename = "versionStartIncluding")]
    start_including: Option<String>,
    #[serde(rename = "versionEndIncluding")]
    end_including: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Impact {
    #[serde(rename = "baseMetricV3")]
    v3: Option<BaseMetric>,
    #[serde(rename = "baseMetricV2")]
    v2: Option<BaseMetric>,
}

#[derive(Debug, Deserialize)]
struct BaseMetric {
    #[serde(rename = "cvssV3", alias = "cvssV2")]
    cvss: Option<Cvss>,
}

#[derive(Debug, Deserialize)]
struct Cvss {
    version: Option<String>,
    #[serde(rename = "baseScore")]
    base_score: Option<f64>,
}

/// Converts a CPE 2.3 formatted string to the 2.2 name it denotes, keeping
/// only the seven 2.2 components.
pub fn cpe23_to_name(s: &str) -> Option<CpeName> {
    let rest = s.strip_prefix("cpe:2.3:")?;
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut escaped = false;
    for ch in rest.chars() {
        if escaped {
            cur.push(ch);
            escaped = false;
        } else if ch == '\\' {
            escaped = true;
        } else if ch == ':' {
            fields.push(std::mem::take(&mut cur));
        } else {
            cur.push(ch);
        }
    }
    fields.push(cur);
    let part = Part::from_letter(fields.first()?)?;
    let comp = |i: usize| match fields.get(i).map(String::as_str) {
        None | Some("*") | Some("") => Component::Any,
        Some(v) => Component::new(v),
    };
    Some(CpeName {
        part,
        vendor: comp(1),
        product: comp(2),
        version: comp(3),
        update: comp(4),
        edition: comp(5),
        language: comp(6),
    })
}

fn match_names(m: &CpeMatch) -> Vec<CpeName> {
    let base = match (&m.cpe22, &m.cpe23) {
        (Some(u), _) => CpeName::parse(u).ok(),
        (None, Some(u)) => cpe23_to_name(u),
        _ => None,
    };
    let Some(base) = base else {
        return Vec::new();
    };
    // Version ranges collapse to the inclusive bounds as exact versions.
    let bounds: Vec<&String> = [&m.start_including, &m.end_including]
        .into_iter()
        .flatten()
        .collect();
    if !base.version.is_any() || bounds.is_empty() {
        return vec![base];
    }
    bounds
        .into_iter()
        .map(|v| CpeName {
            version: Component::new(v),
            ..base.clone()
        })
        .collect()
}

fn collect_nodes(nodes: &[Node], out: &mut BTreeSet<CpeName>) {
    for node in nodes {
        for m in &node.cpe_match {
            if m.vulnerable.unwrap_or(true) {
                out.extend(match_names(m));
            }
        }
        collect_nodes(&node.children, out);
    }
}

fn record_from_item(item: Item) -> Option<CveRecord> {
    let cve = item.cve?;
    let id = cve.meta?.id?;
    if !is_cve_id(&id) {
        return None;
    }
    let description = cve
        .description
        .map(|d| {
            let pick = d
                .description_data
                .iter()
                .find(|l| l.lang.as_deref() == Some("en"))
                .or_else(|| d.description_data.first());
            pick.and_then(|l| l.value.clone()).unwrap_or_default()
        })
        .unwrap_or_default();

    let mut cvss_scores = Vec::new();
    if let Some(impact) = item.impact {
        for (metric, default_version) in [(impact.v3, "3.x"), (impact.v2, "2.0")] {
            if let Some(c) = metric.and_then(|m| m.cvss) {
                if let Some(score) = c.base_score.filter(|s| (0.0..=10.0).contains(s)) {
                    cvss_scores.push(CvssScore {
                        version: c.version.unwrap_or_else(|| default_version.into()),
                        base_score: score,
                    });
                }
            }
        }
    }

    let mut applicability = BTreeSet::new();
    if let Some(conf) = item.configurations {
        collect_nodes(&conf.nodes, &mut applicability);
    }

    Some(CveRecord {
        id,
        description,
        cvss_scores,
        applicability,
        exploit_available: false,
        published: item.published_date,
    })
}

/// Parses a feed document. Items without a usable CVE id are skipped and
/// counted. Fails only when the document itself is not a feed.
pub fn parse_feed(text: &str) -> Result<(Vec<CveRecord>, usize), String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let items = match doc.get("CVE_Items") {
        Some(Value::Array(items)) => items,
        Some(_) => return Err("`CVE_Items` is not an array".into()),
        None => return Err("missing `CVE_Items`".into()),
    };
    let mut records = Vec::with_capacity(items.len());
    let mut skipped = 0;
    for (i, raw) in items.iter().enumerate() {
        let parsed = serde_json::from_value::<Item>(raw.clone())
            .ok()
            .and_then(record_from_item);
        match parsed {
            Some(r) => records.push(r),
            None => {
                warn!(item = i, "skipping feed item without a valid CVE id");
                skipped += 1;
            }
        }
    }
    Ok((records, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_item() {
        let feed = r#"{"CVE_Items":[{
            "cve":{"CVE_data_meta":{"ID":"CVE-2017-0144"},
                   "description":{"description_data":[{"lang":"en","value":"SMBv1 RCE"}]}},
            "configurations":{"nodes":[{"operator":"OR","cpe_match":[
                {"vulnerable":true,"cpe23Uri":"cpe:2.3:o:microsoft:windows_7:-:sp1:*:*:*:*:*:*"},
                {"vulnerable":false,"cpe23Uri":"cpe:2.3:h:acme:box:*:*:*:*:*:*:*:*"}],
                "children":[{"cpe_match":[{"cpe22Uri":"cpe:/o:microsoft:windows_xp::sp3"}]}]}]},
            "impact":{"baseMetricV3":{"cvssV3":{"version":"3.0","baseScore":8.1}},
                      "baseMetricV2":{"cvssV2":{"version":"2.0","baseScore":9.3}}},
            "publishedDate":"2017-03-17T00:59Z"}]}"#;
        let (records, skipped) = parse_feed(feed).unwrap();
        assert_eq!(skipped, 0);
        let r = &records[0];
        assert_eq!(r.id, "CVE-2017-0144");
        assert_eq!(r.description, "SMBv1 RCE");
        assert_eq!(r.cvss_scores.len(), 2);
        assert_eq!(r.max_cvss(), Some(9.3));
        let uris: Vec<String> = r.applicability.iter().map(|n| n.to_uri()).collect();
        assert_eq!(
            uris,
            vec!["cpe:/o:microsoft:windows_7:-:sp1", "cpe:/o:microsoft:windows_xp::sp3"]
        );
    }

    #[test]
    fn sparse_items_are_kept_and_bad_ids_skipped() {
        let feed = r#"{"CVE_Items":[
            {"cve":{"CVE_data_meta":{"ID":"CVE-2020-1234"}}},
            {"cve":{"CVE_data_meta":{"ID":"not-an-id"}}},
            {"cve":{}},
            {"impact":{}}]}"#;
        let (records, skipped) = parse_feed(feed).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(skipped, 3);
        assert!(records[0].applicability.is_empty());
        assert!(records[0].cvss_scores.is_empty());
        assert_eq!(records[0].max_cvss(), None);
    }

    #[test]
    fn version_ranges_become_exact_bounds() {
        let feed = r#"{"CVE_Items":[{"cve":{"CVE_data_meta":{"ID":"CVE-2021-44228"}},
            "configurations":{"nodes":[{"cpe_match":[
              {"cpe23Uri":"cpe:2.3:a:apache:log4j:*:*:*:*:*:*:*:*",
               "versionStartIncluding":"2.0.1","versionEndExcluding":"2.3.1"},
              {"cpe23Uri":"cpe:2.3:a:apache:log4j:*:*:*:*:*:*:*:*",
               "versionEndExcluding":"2.0"}]}]}}]}"#;
        let (records, _) = parse_feed(feed).unwrap();
        let uris: Vec<String> = records[0].applicability.iter().map(|n| n.to_uri()).collect();
        assert_eq!(uris, vec!["cpe:/a:apache:log4j", "cpe:/a:apache:log4j:2.0.1"]);
    }

    #[test]
    fn rejects_non_feeds() {
        assert!(parse_feed("[]").is_err());
        assert!(parse_feed("{").is_err());
        assert_eq!(parse_feed(r#"{"CVE_Items":[]}"#).unwrap().0.len(), 0);
    }

    #[test]
    fn cpe23_unescapes() {
        let n = cpe23_to_name(r"cpe:2.3:a:foo:bar\:baz:1.0:*:*:*:*:*:*").unwrap();
        assert_eq!(n.product, Component::Value("bar_baz".into()));
        assert!(cpe23_to_name("cpe:/a:foo").is_none());
    }
}
