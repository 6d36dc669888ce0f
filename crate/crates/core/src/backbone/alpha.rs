//! α-count fault discrimination.
//!
//! Each error judgment adds one to the score; each error-free judgment
//! multiplies it by the decay factor `K`. A score at or above the threshold
//! `T` classifies the fault as permanent or intermittent rather than
//! transient.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judgment {
    Error,
    NoError,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCount {
    pub score: f64,
    pub decay: f64,
    pub threshold: f64,
}

impl AlphaCount {
    pub fn new(decay: f64, threshold: f64) -> Self {
        debug_assert!((0.0..1.0).contains(&decay));
        debug_assert!(threshold > 0.0);
        AlphaCount {
            score: 0.0,
            decay,
            threshold,
        }
    }

    /// `true` once the score has reached the threshold.
    pub fn is_non_transient(&self) -> bool {
        self.score >= self.threshold
    }
}

pub fn alpha_update(a: AlphaCount, judgment: Judgment) -> AlphaCount {
    let score = match judgment {
        Judgment::Error => a.score + 1.0,
        Judgment::NoError => a.score * a.decay,
    };
    AlphaCount { score, ..a }
}

/// Scenario-level α-count settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaParams {
    pub decay: f64,
    pub threshold: f64,
    /// Length of one judgment period in local milliseconds.
    pub judgment_period_ms: f64,
}

impl AlphaParams {
    pub const DEFAULT_DECAY: f64 = 0.9;
    pub const DEFAULT_THRESHOLD: f64 = 3.0;

    /// Defaults with the judgment period set to ten times the shortest
    /// watchdog period.
    pub fn for_shortest_watchdog(period_ms: Option<u32>) -> Self {
        AlphaParams {
            decay: Self::DEFAULT_DECAY,
            threshold: Self::DEFAULT_THRESHOLD,
            judgment_period_ms: 10.0 * period_ms.unwrap_or(150) as f64,
        }
    }

    pub fn window(&self, local_ms: f64) -> i64 {
        (local_ms / self.judgment_period_ms).floor() as i64
    }
}

impl Default for AlphaParams {
    fn default() -> Self {
        Self::for_shortest_watchdog(None)
    }
}

/// α-count driven by time-stamped error reports. Time is cut into judgment
/// windows; every window that elapses without an error is one error-free
/// judgment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaTrack {
    pub count: AlphaCount,
    judged_through: Option<i64>,
}

impl AlphaTrack {
    pub fn new(params: &AlphaParams) -> Self {
        AlphaTrack {
            count: AlphaCount::new(params.decay, params.threshold),
            judged_through: None,
        }
    }

    pub fn score(&self) -> f64 {
        self.count.score
    }

    /// Records an error observed in `window`.
    pub fn error_at(&mut self, window: i64) {
        self.judge_until(window);
        self.count = alpha_update(self.count, Judgment::Error);
        self.judged_through = Some(window.max(self.judged_through.unwrap_or(window)));
    }

    /// Issues an error-free judgment for every window strictly before
    /// `window` that has not been judged yet.
    pub fn judge_until(&mut self, window: i64) {
        let Some(last) = self.judged_through else {
            return;
        };
        for _ in last + 1..window {
            self.count = alpha_update(self.count, Judgment::NoError);
        }
        if window - 1 > last {
            self.judged_through = Some(window - 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(k: f64, t: f64, js: &[Judgment]) -> AlphaCount {
        js.iter()
            .fold(AlphaCount::new(k, t), |a, j| alpha_update(a, *j))
    }

    #[test]
    fn zero_is_fixed_point() {
        let a = alpha_update(AlphaCount::new(0.9, 3.0), Judgment::NoError);
        assert_eq!(a.score, 0.0);
    }

    #[test]
    fn two_errors_then_clean() {
        use Judgment::*;
        let a = stream(0.5, 3.0, &[Error, Error]);
        assert_eq!(a.score, 2.0);
        assert_eq!(alpha_update(a, NoError).score, 1.0);
    }

    #[test]
    fn three_errors_reach_threshold() {
        use Judgment::*;
        let a = stream(0.9, 3.0, &[Error, Error]);
        assert!(!a.is_non_transient());
        let a = alpha_update(a, Error);
        assert_eq!(a.score, 3.0);
        assert!(a.is_non_transient());
    }

    #[test]
    fn windows_decay_only_when_empty() {
        let params = AlphaParams {
            decay: 0.5,
            threshold: 3.0,
            judgment_period_ms: 100.0,
        };
        let mut t = AlphaTrack::new(&params);
        t.error_at(2);
        t.error_at(2);
        t.error_at(3);
        assert_eq!(t.score(), 3.0);
        // windows 4 and 5 are empty
        t.error_at(6);
        assert_eq!(t.score(), 3.0 * 0.25 + 1.0);
        t.judge_until(8);
        assert_eq!(t.score(), (3.0 * 0.25 + 1.0) * 0.5);
        // judging the same span twice changes nothing
        t.judge_until(8);
        assert_eq!(t.score(), (3.0 * 0.25 + 1.0) * 0.5);
        t.error_at(8);
        assert_eq!(t.score(), (3.0 * 0.25 + 1.0) * 0.5 + 1.0);
    }

    #[test]
    fn default_period_is_ten_watchdog_periods() {
        assert_eq!(
            AlphaParams::for_shortest_watchdog(Some(150)).judgment_period_ms,
            1500.0
        );
        assert_eq!(AlphaParams::default().window(2999.0), 1);
    }
}
