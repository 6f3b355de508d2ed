use std::collections::VecDeque;

/// Coarse phase of a subscriber station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    Backoff,
    AwaitGrant,
    Piggyback,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Backoff => "backoff",
            Phase::AwaitGrant => "await_grant",
            Phase::Piggyback => "piggyback",
        }
    }
}

/// Per-station protocol state.
#[derive(Debug, Clone, PartialEq)]
pub struct SubscriberState {
    pub phase: Phase,
    /// Contention round of the head packet, `0..=D`.
    pub round: u32,
    /// TOs still to skip before the request goes out.
    pub backoff_tos: u64,
    /// Frames left in the current T16 wait.
    pub t16_remaining: u32,
    /// Consecutive piggybacked grants used so far.
    pub piggy_count: u32,
    /// Arrival instants of queued packets, head first, in frames.
    pub queue: VecDeque<f64>,
    /// Frame in which the head packet entered service.
    pub head_service_start: Option<u64>,
}

impl Default for SubscriberState {
    fn default() -> Self {
        Self {
            phase: Phase::Idle,
            round: 0,
            backoff_tos: 0,
            t16_remaining: 0,
            piggy_count: 0,
            queue: VecDeque::new(),
            head_service_start: None,
        }
    }
}

/// A successful request waiting in the base station's pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasePending {
    pub ss_id: usize,
    pub frame_received: u64,
}

impl BasePending {
    pub fn age(&self, frame: u64) -> u64 {
        frame - self.frame_received
    }
}
