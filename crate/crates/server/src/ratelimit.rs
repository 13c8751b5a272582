//! Exponential blocking of misbehaving clients.

use pvcscan_protocol::BlockState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateLimit {
    Pass,
    /// Blocked until this unix time in milliseconds.
    Blocked(u64),
}

/// Block length in milliseconds for the `k`-th violation.
pub fn block_duration_ms(base_secs: f64, k: u32) -> u64 {
    let secs = base_secs.powi(k.min(i32::MAX as u32) as i32);
    let ms = secs * 1000.0;
    if ms.is_finite() && ms < (u64::MAX / 2) as f64 {
        ms.round() as u64
    } else {
        u64::MAX / 2
    }
}

/// While blocked nothing changes. Otherwise a violation increments the
/// counter and blocks for `base^k` seconds; clean traffic passes.
pub fn apply_rate_limit(state: &mut BlockState, violation: bool, now_ms: u64, base_secs: f64) -> RateLimit {
    if let Some(until) = state.blocked_until {
        if now_ms < until {
            return RateLimit::Blocked(until);
        }
    }
    if !violation {
        return RateLimit::Pass;
    }
    state.violations = state.violations.saturating_add(1);
    let until = now_ms.saturating_add(block_duration_ms(base_secs, state.violations));
    state.blocked_until = Some(until);
    RateLimit::Blocked(until)
}

/// Administrative reset of a client's violation history.
pub fn reset(state: &mut BlockState) {
    *state = BlockState::default();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_blocks() {
        let mut s = BlockState::default();
        let mut now = 1_000_000;
        let mut lengths = Vec::new();
        for _ in 0..3 {
            match apply_rate_limit(&mut s, true, now, 2.0) {
                RateLimit::Blocked(until) => {
                    lengths.push(until - now);
                    now = until;
                }
                RateLimit::Pass => panic!("violation passed"),
            }
        }
        assert_eq!(lengths, vec![2000, 4000, 8000]);
    }

    #[test]
    fn blocked_requests_change_nothing() {
        let mut s = BlockState::default();
        let until = match apply_rate_limit(&mut s, true, 0, 2.0) {
            RateLimit::Blocked(u) => u,
            _ => unreachable!(),
        };
        let before = s;
        assert_eq!(apply_rate_limit(&mut s, true, 1999, 2.0), RateLimit::Blocked(until));
        assert_eq!(apply_rate_limit(&mut s, false, 1000, 2.0), RateLimit::Blocked(until));
        assert_eq!(s, before);
        // the block ends exactly at `until`
        assert_eq!(apply_rate_limit(&mut s, false, 2000, 2.0), RateLimit::Pass);
        assert_eq!(s.violations, 1);
        reset(&mut s);
        assert_eq!(s, BlockState::default());
    }

    #[test]
    fn huge_exponents_saturate() {
        assert_eq!(block_duration_ms(2.0, 10_000), u64::MAX / 2);
        assert_eq!(block_duration_ms(2.0, 0), 1000);
    }
}
