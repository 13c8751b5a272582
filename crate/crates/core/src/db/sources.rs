//! CPE dictionary listings and exploit-to-CVE maps.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::feed::is_cve_id;
use crate::cpe::CpeName;

fn embedded_uri() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"cpe:/[^\s"'<>]*"#).unwrap())
}

/// One name per line. Blank lines and `#` comments are ignored; lines that
/// are not a bare URI (XML-derived listings) contribute the first embedded
/// `cpe:/...` token. Malformed names are skipped and counted.
pub fn parse_dictionary(text: &str) -> (Vec<CpeName>, usize) {
    let mut names = Vec::new();
    let mut skipped = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let candidate = if line.starts_with("cpe:") {
            Some(line)
        } else {
            embedded_uri().find(line).map(|m| m.as_str())
        };
        let Some(candidate) = candidate else {
            continue;
        };
        match CpeName::parse(candidate) {
            Ok(n) => names.push(n),
            Err(e) => {
                warn!(line = lineno + 1, error = %e, "skipping malformed dictionary entry");
                skipped += 1;
            }
        }
    }
    (names, skipped)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExploitLink {
    pub exploit_id: String,
    pub cve_id: String,
}

/// CSV rows `exploit_id,cve_id`; an optional header row is skipped. Rows
/// whose second column is not a CVE id are skipped and counted.
pub fn parse_exploit_map(text: &str) -> Result<(Vec<ExploitLink>, usize), csv::Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut links = Vec::new();
    let mut skipped = 0;
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let exploit = row.get(0).unwrap_or_default();
        let cve = row.get(1).unwrap_or_default().to_uppercase();
        if is_cve_id(&cve) && !exploit.is_empty() {
            links.push(ExploitLink {
                exploit_id: exploit.to_string(),
                cve_id: cve,
            });
        } else if i > 0 {
            warn!(row = i + 1, "skipping malformed exploit link");
            skipped += 1;
        }
    }
    Ok((links, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dictionary_lines_and_xml() {
        let text = "# comment\n\ncpe:/o:canonical:ubuntu_linux:18.04\n\
                    <cpe-item name=\"cpe:/a:adobe:reader:9.0\">\n\
                    cpe:/q:bad\n";
        let (names, skipped) = parse_dictionary(text);
        assert_eq!(names.len(), 2);
        assert_eq!(skipped, 1);
        assert_eq!(names[1].to_uri(), "cpe:/a:adobe:reader:9.0");
        assert_eq!(parse_dictionary(""), (vec![], 0));
    }

    #[test]
    fn exploit_csv() {
        let (links, skipped) =
            parse_exploit_map("exploit_id,cve_id\nEDB-1,CVE-2017-0001\n42,cve-2018-1234\nx,junk\n")
                .unwrap();
        assert_eq!(links.len(), 2);
        assert_eq!(links[1].cve_id, "CVE-2018-1234");
        assert_eq!(skipped, 1);
        let (links, skipped) = parse_exploit_map("EDB-1,CVE-2017-0001\n").unwrap();
        assert_eq!((links.len(), skipped), (1, 0));
        assert_eq!(parse_exploit_map("").unwrap(), (vec![], 0));
    }
}
