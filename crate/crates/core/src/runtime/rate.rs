//! Client-side token bucket, in the GCRA formulation: the first `burst`
//! calls pass immediately, later ones are spaced `1/qps` apart.

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct TokenBucket {
    interval_ns: u64,
    tolerance_ns: u64,
    /// Theoretical arrival time of the next conforming call.
    tat_ns: u64,
    granted: u64,
}

impl TokenBucket {
    pub fn new(qps: f64, burst: u32) -> Self {
        assert!(qps > 0.0, "qps must be positive");
        let interval_ns = ((1e9 / qps).ceil() as u64).max(1);
        let burst = u64::from(burst.max(1));
        TokenBucket { interval_ns, tolerance_ns: interval_ns * (burst - 1), tat_ns: 0, granted: 0 }
    }

    /// Takes one token for a call issued at `at`, returning when it may
    /// proceed.
    pub fn acquire(&mut self, at: SimTime) -> SimTime {
        let t = at.as_micros() * 1_000;
        let tat = self.tat_ns.max(t);
        let allow = tat.saturating_sub(self.tolerance_ns).max(t);
        self.tat_ns = tat + self.interval_ns;
        self.granted += 1;
        SimTime::from_micros(allow.div_ceil(1_000))
    }

    pub fn granted(&self) -> u64 {
        self.granted
    }
}
