mod common;

use std::collections::HashSet;
use std::time::{Duration, SystemTime};

use common::*;
use pvcscan_core::Scanner;
use pvcscan_protocol::{seal_message, unix_now, Envelope, MessageBody};
use pvcscan_server::{Action, FirewallRule, JobState, ServerConfig};

fn wait_done(server: &pvcscan_server::Server, token: &str) {
    for _ in 0..500 {
        if matches!(server.jobs().job(token).map(|j| j.state), Some(JobState::Done | JobState::Failed)) {
            return;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
    panic!("job {token} did not finish");
}

#[test]
fn scan_request_is_accepted_with_echo_and_closes() {
    let server = server_with(config(), &["alice"]);
    let mut alice = Peer::new("alice");
    let frame = alice.frame(&MessageBody::ScanRequest { rsd: inventory() });
    let resp = server.handle_frame(&frame, localhost()).unwrap();
    assert!(resp.close);
    match alice.open(&resp) {
        MessageBody::ScanAccept {
            token,
            echo_client_id_a,
        } => {
            assert_eq!(echo_client_id_a, "alice");
            assert_eq!(token.len(), 32);
            assert_eq!(server.jobs().job(&token).unwrap().state, JobState::Queued);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn garbage_unknown_clients_and_bad_tags_are_dropped() {
    let server = server_with(config(), &["alice"]);
    assert!(server.handle_frame(b"\x00\x00\x00\x03abc", localhost()).is_none());
    assert!(server.handle_frame(b"GET / HTTP/1.0\r\n\r\n", localhost()).is_none());

    let mut mallory = Peer::new("mallory");
    let frame = mallory.frame(&MessageBody::ScanRequest { rsd: inventory() });
    assert!(server.handle_frame(&frame, localhost()).is_none());

    let mut alice = Peer::new("alice");
    let mut frame = alice.frame(&MessageBody::ScanRequest { rsd: inventory() });
    let last = frame.len() - 1;
    frame[last] ^= 1;
    assert!(server.handle_frame(&frame, localhost()).is_none());
    // unattributable traffic never counts against the named client
    assert_eq!(server.block_state("alice").unwrap().violations, 0);
    assert_eq!(server.jobs().job_count(), 0);
}

#[test]
fn replay_is_answered_with_protocol_error_then_blocked() {
    let server = server_with(config(), &["alice"]);
    let mut alice = Peer::new("alice");
    let frame = alice.frame(&MessageBody::ScanRequest { rsd: inventory() });
    let now = SystemTime::now();
    assert!(matches!(
        alice.open(&server.handle_frame_at(&frame, localhost(), now).unwrap()),
        MessageBody::ScanAccept { .. }
    ));
    let replay = server.handle_frame_at(&frame, localhost(), now).unwrap();
    assert_eq!(
        alice.open(&replay),
        MessageBody::ProtocolError {
            code: "replay".into()
        }
    );
    let state = server.block_state("alice").unwrap();
    assert_eq!(state.violations, 1);

    // inside the 2 s block: rejected, nothing changes, no job queued
    let body = alice.send_at(
        &server,
        &MessageBody::ScanRequest { rsd: inventory() },
        now + Duration::from_millis(1500),
    );
    assert_eq!(body, MessageBody::reject("blocked"));
    assert_eq!(server.block_state("alice").unwrap(), state);
    assert_eq!(server.jobs().job_count(), 1);

    // after it: served again
    let body = alice.send_at(
        &server,
        &MessageBody::ScanRequest { rsd: inventory() },
        now + Duration::from_millis(2100),
    );
    assert!(matches!(body, MessageBody::ScanAccept { .. }));
    assert!(server.reset_client("alice"));
    assert_eq!(server.block_state("alice").unwrap().violations, 0);
}

#[test]
fn stale_and_impersonating_frames_get_distinct_codes() {
    let server = server_with(config(), &["alice", "bob"]);
    let alice = credential("alice");
    let stale = seal_message(&alice, &MessageBody::ResultRequest { token: "x".into() }, 5, unix_now() - 120);
    let resp = server.handle_frame(&stale.encode(), localhost()).unwrap();
    let env = Envelope::decode(&resp.frame).unwrap();
    let body = pvcscan_protocol::open_response(&env, &alice, 5, unix_now(), 60).unwrap().body;
    assert_eq!(body, MessageBody::ProtocolError { code: "stale-timestamp".into() });

    // bob shares alice's key material here, so a header rewrite passes the tag
    let mut env = seal_message(&alice, &MessageBody::ScanRequest { rsd: inventory() }, 6, unix_now());
    env.client_id_a = "bob".into();
    let resp = server.handle_frame(&env.encode(), localhost()).unwrap();
    let bob = credential("bob");
    let reply = Envelope::decode(&resp.frame).unwrap();
    let body = pvcscan_protocol::open_response(&reply, &bob, 6, unix_now(), 60).unwrap().body;
    assert_eq!(body, MessageBody::ProtocolError { code: "impersonation".into() });
    assert_eq!(server.block_state("bob").unwrap().violations, 1);
    assert_eq!(server.jobs().job_count(), 0);
}

#[test]
fn polling_not_ready_then_report_then_limit() {
    let cfg = ServerConfig {
        max_polls: 3,
        ..config()
    };
    let server = server_with(cfg, &["alice"]);
    let mut alice = Peer::new("alice");
    let token = alice.submit(&server);
    let poll = MessageBody::ResultRequest { token: token.clone() };
    assert_eq!(alice.send(&server, &poll), MessageBody::ResultNotReady {});

    server.start_workers();
    wait_done(&server, &token);
    match alice.send(&server, &poll) {
        MessageBody::ResultResponse { report } => {
            assert_eq!(report.token, token);
            assert_eq!(
                report.cve_ids().into_iter().collect::<Vec<_>>(),
                vec!["CVE-2021-0001".to_string(), "CVE-2021-0002".to_string()]
            );
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(alice.send(&server, &poll), MessageBody::ResultResponse { .. }));
    assert_eq!(alice.send(&server, &poll), MessageBody::reject("poll-limit"));
    assert_eq!(server.block_state("alice").unwrap().violations, 1);
    server.shutdown();
}

#[test]
fn tokens_are_bound_to_their_client() {
    let server = server_with(config(), &["alice", "carol"]);
    let mut alice = Peer::new("alice");
    let token = alice.submit(&server);
    let mut carol = Peer::new("carol");
    let body = carol.send(&server, &MessageBody::ResultRequest { token });
    assert_eq!(body, MessageBody::reject("unknown-token"));
    assert_eq!(server.block_state("carol").unwrap().violations, 1);
    let body = alice.send(&server, &MessageBody::ResultRequest { token: "feed".into() });
    assert_eq!(body, MessageBody::reject("unknown-token"));
    assert_eq!(server.block_state("alice").unwrap().violations, 0);
}

#[test]
fn fifo_with_one_worker() {
    let server = server_with(config(), &["alice"]);
    let mut alice = Peer::new("alice");
    let tokens: Vec<String> = (0..3).map(|_| alice.submit(&server)).collect();
    server.start_workers();
    for t in &tokens {
        wait_done(&server, t);
    }
    let seqs: Vec<u64> = tokens
        .iter()
        .map(|t| server.jobs().job(t).unwrap().finished_seq.unwrap())
        .collect();
    assert_eq!(seqs, vec![0, 1, 2]);
    server.shutdown();
}

#[test]
fn full_queue_rejects_busy() {
    let cfg = ServerConfig {
        queue_capacity: 2,
        ..config()
    };
    let server = server_with(cfg, &["alice"]);
    let mut alice = Peer::new("alice");
    alice.submit(&server);
    alice.submit(&server);
    let body = alice.send(&server, &MessageBody::ScanRequest { rsd: inventory() });
    assert_eq!(body, MessageBody::reject("busy"));
}

#[test]
fn ten_thousand_tokens_are_unique() {
    let jobs = pvcscan_server::JobManager::new(10_000);
    let tokens: HashSet<String> = (0..10_000)
        .map(|_| jobs.enqueue_job(inventory(), "alice").unwrap())
        .collect();
    assert_eq!(tokens.len(), 10_000);
    assert!(jobs.enqueue_job(inventory(), "alice").is_err());
}

#[test]
fn firewall_default_deny_and_first_match() {
    let cfg = ServerConfig {
        firewall: vec![],
        ..config()
    };
    let server = server_with(cfg, &["alice"]);
    let mut alice = Peer::new("alice");
    let body = alice.send(&server, &MessageBody::ScanRequest { rsd: inventory() });
    assert_eq!(body, MessageBody::reject("default-deny"));

    let cfg = ServerConfig {
        firewall: vec![
            FirewallRule {
                action: Action::Deny,
                cidr: None,
                client_id_pattern: Some("evil*".into()),
                require_valid_key: false,
            },
            FirewallRule::allow_all(),
        ],
        ..config()
    };
    let server = server_with(cfg, &["evil-bot", "alice"]);
    let mut evil = Peer::new("evil-bot");
    let body = evil.send(&server, &MessageBody::ScanRequest { rsd: inventory() });
    assert_eq!(body, MessageBody::reject("denied by rule 0"));
    let mut alice = Peer::new("alice");
    assert!(matches!(
        alice.send(&server, &MessageBody::ScanRequest { rsd: inventory() }),
        MessageBody::ScanAccept { .. }
    ));

    let cfg = ServerConfig {
        firewall: vec![FirewallRule {
            action: Action::Allow,
            cidr: Some("10.0.0.0/8".parse().unwrap()),
            client_id_pattern: None,
            require_valid_key: true,
        }],
        ..config()
    };
    let server = server_with(cfg, &["alice"]);
    let mut alice = Peer::new("alice");
    let frame = alice.frame(&MessageBody::ScanRequest { rsd: inventory() });
    let resp = server.handle_frame(&frame, "10.1.2.3".parse().unwrap()).unwrap();
    assert!(matches!(alice.open(&resp), MessageBody::ScanAccept { .. }));
    let frame = alice.frame(&MessageBody::ScanRequest { rsd: inventory() });
    let resp = server.handle_frame(&frame, localhost()).unwrap();
    assert_eq!(alice.open(&resp), MessageBody::reject("default-deny"));
}

#[test]
fn uninitialized_database_fails_the_job() {
    let server = pvcscan_server::Server::new(
        config(),
        vec![credential("alice")],
        std::sync::Arc::new(pvcscan_core::VulnDb::in_memory()),
    );
    let mut alice = Peer::new("alice");
    let token = alice.submit(&server);
    server.start_workers();
    wait_done(&server, &token);
    let body = alice.send(&server, &MessageBody::ResultRequest { token });
    assert_eq!(body, MessageBody::reject("failed: database not initialized"));
    server.shutdown();
}

#[test]
fn unexpected_message_types_get_a_protocol_error() {
    let server = server_with(config(), &["alice"]);
    let mut alice = Peer::new("alice");
    let body = alice.send(&server, &MessageBody::ResultNotReady {});
    assert_eq!(body, MessageBody::ProtocolError { code: "unexpected-message".into() });
}

#[test]
fn hundred_concurrent_frames_all_accounted_for() {
    let server = server_with(config(), &["alice"]);
    let ids: Vec<String> = (0..100).map(|i| format!("c{i}")).collect();
    let server = pvcscan_server::Server::new(
        ServerConfig {
            queue_capacity: 80,
            ..config()
        },
        ids.iter().map(|id| credential(id)).collect(),
        server.db().clone(),
    );
    let outcomes: Vec<MessageBody> = std::thread::scope(|s| {
        let handles: Vec<_> = ids
            .iter()
            .map(|id| {
                let server = &server;
                s.spawn(move || Peer::new(id).send(server, &MessageBody::ScanRequest { rsd: inventory() }))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let accepted: HashSet<String> = outcomes
        .iter()
        .filter_map(|b| match b {
            MessageBody::ScanAccept { token, .. } => Some(token.clone()),
            _ => None,
        })
        .collect();
    let busy = outcomes
        .iter()
        .filter(|b| **b == MessageBody::reject("busy"))
        .count();
    assert_eq!(accepted.len(), 80);
    assert_eq!(accepted.len() + busy, 100);
    let scanner = Scanner::new(server.db().clone(), 1);
    for t in &accepted {
        server.jobs().run_job(t, &scanner);
        assert_eq!(server.jobs().job(t).unwrap().state, JobState::Done);
    }
}
