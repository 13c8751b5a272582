use pvcscan_core::ScanReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

fn describe(score: Option<f64>) -> String {
    score.map_or_else(|| "-".into(), |s| format!("{s:.1}"))
}

/// One line per PVC, then a total line.
pub fn render_text(report: &ScanReport) -> String {
    let mut out = String::new();
    for r in &report.results {
        let mut label = format!("[{}] {}", r.pvc.kind.as_str(), r.pvc.name);
        if let Some(v) = r.pvc.version.as_deref().or(r.pvc.display_version.as_deref()) {
            label.push(' ');
            label.push_str(v);
        }
        out.push_str(&format!(
            "{label}: {} CVEs, worst CVSS {}, exploit {}",
            r.cves.len(),
            describe(r.max_cvss()),
            if r.has_exploit() { "yes" } else { "no" }
        ));
        if let Some(e) = &r.error {
            out.push_str(&format!(" (error: {e})"));
        }
        out.push('\n');
    }
    let s = &report.summary;
    out.push_str(&format!("{} vulnerabilities", s.total_cves));
    if s.total_cves > 0 {
        out.push_str(&format!(
            ", worst CVSS {}, {} with known exploits",
            describe(s.max_cvss),
            s.exploit_available
        ));
    }
    out.push('\n');
    out
}

pub fn render_report(report: &ScanReport, format: Format) -> String {
    match format {
        Format::Text => render_text(report),
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
    }
}

/// True when some CVE scores at or above `threshold`.
pub fn exceeds_threshold(report: &ScanReport, threshold: f64) -> bool {
    report
        .results
        .iter()
        .flat_map(|r| &r.cves)
        .any(|c| c.cvss.is_some_and(|s| s >= threshold))
}
