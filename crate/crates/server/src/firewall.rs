//! Ordered allow/deny rules checked before a request is processed.

use std::net::IpAddr;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Allow,
    Deny,
}

/// One rule. Absent fields match anything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirewallRule {
    pub action: Action,
    #[serde(default)]
    pub cidr: Option<IpNet>,
    #[serde(default, alias = "client_id")]
    pub client_id_pattern: Option<String>,
    #[serde(default)]
    pub require_valid_key: bool,
}

impl FirewallRule {
    pub fn allow_all() -> Self {
        FirewallRule {
            action: Action::Allow,
            cidr: None,
            client_id_pattern: None,
            require_valid_key: true,
        }
    }

    pub fn matches(&self, source: IpAddr, client_id: &str, key_valid: bool) -> bool {
        self.cidr.map_or(true, |net| net.contains(&source))
            && self
                .client_id_pattern
                .as_deref()
                .map_or(true, |p| glob_match(p, client_id))
            && (!self.require_valid_key || key_valid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(String),
}

/// First matching rule wins; no match is a reject.
pub fn verify_request(source: IpAddr, client_id: &str, key_valid: bool, rules: &[FirewallRule]) -> Verdict {
    for (i, rule) in rules.iter().enumerate() {
        if rule.matches(source, client_id, key_valid) {
            return match rule.action {
                Action::Allow => Verdict::Accept,
                Action::Deny => Verdict::Reject(format!("denied by rule {i}")),
            };
        }
    }
    Verdict::Reject("default-deny".into())
}

/// Shell-style glob with `*` (any run) and `?` (one char).
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}
