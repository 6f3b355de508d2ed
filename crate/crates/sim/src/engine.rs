//! The frame loop of a single replication.
//!
//! Each frame runs, in order: contention start for idle stations holding
//! packets, slot allocation (piggyback reservations first, then a uniform
//! random subset of the pending pool), data transmission with the follow-up
//! decision, request transmission in the TOs, T16 expiry, and arrivals.
//!
//! A request sent in frame `r` may be granted in frames `r+1..=r+M`; when the
//! last of those passes without a grant the station redraws its backoff in
//! frame `r+M` and can contend again from frame `r+M+1`.

use pgpoll_core::ValidConfig;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::state::{BasePending, Phase, SubscriberState};
use crate::trace::{EventKind, TraceEvent};

/// Raw event counts over the measured frames of one replication.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counters {
    pub frames: u64,
    pub tx_contention: u64,
    pub tx_piggyback: u64,
    pub requests: u64,
    pub collided: u64,
    /// Pending requests eligible for a grant, summed over frames.
    pub pending_frames: u64,
    pub pool_grants: u64,
    pub drops: u64,
    pub delay_contention: f64,
    pub delay_piggyback: f64,
    pub wait_sum: f64,
    pub wait_count: u64,
}

/// Protocol-rule breaches detected while running; all must stay zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Violations {
    pub slot_overflow: u64,
    pub pool_age: u64,
    pub duplicate_grant: u64,
    pub retry_overflow: u64,
    pub early_drop: u64,
    pub piggy_demand: u64,
    pub piggy_limit: u64,
    pub packet_balance: u64,
    pub state_bounds: u64,
}

impl Violations {
    pub fn total(&self) -> u64 {
        self.slot_overflow
            + self.pool_age
            + self.duplicate_grant
            + self.retry_overflow
            + self.early_drop
            + self.piggy_demand
            + self.piggy_limit
            + self.packet_balance
            + self.state_bounds
    }
}

/// Lifetime packet totals, warmup included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PacketTotals {
    pub arrived: u64,
    pub served: u64,
    pub dropped: u64,
    pub queued: u64,
}

struct Station {
    state: SubscriberState,
    rng: ChaCha8Rng,
    request_frame: u64,
    attempts: u32,
    totals: PacketTotals,
}

/// Mixes a master seed and a replication index into a replication seed.
pub fn replication_seed(master: u64, replication: u64) -> u64 {
    let mut z = master
        ^ replication
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn component_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub struct Network<'a> {
    config: &'a ValidConfig,
    stations: Vec<Station>,
    bs_rng: ChaCha8Rng,
    pool: Vec<BasePending>,
    arrivals: Poisson<f64>,
    frame: u64,
    measuring: bool,
    counters: Counters,
    violations: Violations,
    log: Option<Vec<TraceEvent>>,
}

impl<'a> Network<'a> {
    pub fn new(config: &'a ValidConfig, seed: u64, record: bool) -> Self {
        let n = config.n_ss as usize;
        let stations = (0..n)
            .map(|i| Station {
                state: SubscriberState::default(),
                rng: component_rng(seed, i as u64 + 1),
                request_frame: 0,
                attempts: 0,
                totals: PacketTotals::default(),
            })
            .collect();
        Self {
            config,
            stations,
            bs_rng: component_rng(seed, 0),
            pool: Vec::new(),
            arrivals: Poisson::new(config.lambda * config.t_frame).expect("lambda validated > 0"),
            frame: 0,
            measuring: false,
            counters: Counters::default(),
            violations: Violations::default(),
            log: record.then(Vec::new),
        }
    }

    pub fn set_measuring(&mut self, on: bool) {
        self.measuring = on;
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn violations(&self) -> &Violations {
        &self.violations
    }

    pub fn states(&self) -> impl Iterator<Item = &SubscriberState> {
        self.stations.iter().map(|s| &s.state)
    }

    pub fn pool(&self) -> &[BasePending] {
        &self.pool
    }

    pub fn take_log(&mut self) -> Vec<TraceEvent> {
        self.log.take().unwrap_or_default()
    }

    pub fn totals(&self) -> PacketTotals {
        self.stations
            .iter()
            .fold(PacketTotals::default(), |mut acc, s| {
                acc.arrived += s.totals.arrived;
                acc.served += s.totals.served;
                acc.dropped += s.totals.dropped;
                acc.queued += s.state.queue.len() as u64;
                acc
            })
    }

    /// Checks the per-station and global packet balance.
    pub fn audit_packets(&mut self) {
        for s in &self.stations {
            let t = s.totals;
            if t.arrived != t.served + t.dropped + s.state.queue.len() as u64 {
                self.violations.packet_balance += 1;
            }
        }
    }

    fn emit(&mut self, ss: usize, kind: EventKind, detail: impl FnOnce() -> String) {
        if let Some(log) = self.log.as_mut() {
            log.push(TraceEvent {
                frame: self.frame,
                ss,
                kind,
                detail: detail(),
            });
        }
    }

    pub fn step(&mut self) {
        let k = self.frame;
        if self.measuring {
            self.counters.frames += 1;
        }
        for id in 0..self.stations.len() {
            let st = &self.stations[id].state;
            if st.phase == Phase::Idle && !st.queue.is_empty() {
                self.start_round(id, 0);
            }
        }
        let granted = self.allocate();
        for (id, via_piggyback) in granted {
            self.transmit(id, via_piggyback);
        }
        self.contend();
        self.expire();
        self.arrive();
        self.check_bounds();
        self.frame = k + 1;
    }

    /// Begins contention round `round` for the head packet in the current frame.
    fn start_round(&mut self, id: usize, round: u32) {
        let k = self.frame;
        let window = self.config.window(round);
        let station = &mut self.stations[id];
        let counter = station.rng.random_range(0..window);
        let st = &mut station.state;
        st.phase = Phase::Backoff;
        st.round = round;
        st.backoff_tos = counter;
        st.t16_remaining = 0;
        if round == 0 {
            station.attempts = 0;
            st.head_service_start = Some(k);
            let arrival = *st.queue.front().expect("contention needs a packet");
            if self.measuring {
                self.counters.wait_sum += k as f64 - arrival;
                self.counters.wait_count += 1;
            }
        }
        self.emit(id, EventKind::ContentionStart, || {
            format!("round={round} counter={counter}")
        });
    }

    /// Returns the stations transmitting this frame, piggybacks first.
    fn allocate(&mut self) -> Vec<(usize, bool)> {
        let k = self.frame;
        let l = self.config.n_slots as usize;
        let m = u64::from(self.config.t16_frames);
        let mut out: Vec<(usize, bool)> = (0..self.stations.len())
            .filter(|&i| self.stations[i].state.phase == Phase::Piggyback)
            .map(|i| (i, true))
            .collect();
        if out.len() > l {
            self.violations.piggy_demand += 1;
        }
        for p in &self.pool {
            let age = p.age(k);
            if age < 1 || age > m {
                self.violations.pool_age += 1;
            }
        }
        let free = l.saturating_sub(out.len());
        let take = free.min(self.pool.len());
        if self.measuring {
            self.counters.pending_frames += self.pool.len() as u64;
            self.counters.pool_grants += take as u64;
        }
        let mut chosen = index::sample(&mut self.bs_rng, self.pool.len(), take).into_vec();
        chosen.sort_unstable_by(|a, b| b.cmp(a));
        let mut from_pool: Vec<BasePending> = chosen
            .into_iter()
            .map(|i| self.pool.swap_remove(i))
            .collect();
        from_pool.sort_unstable_by_key(|p| p.ss_id);
        for id in out.iter().map(|&(i, _)| i).collect::<Vec<_>>() {
            self.emit(id, EventKind::Grant, || "piggyback".into());
        }
        for p in from_pool {
            let age = p.age(k);
            self.emit(p.ss_id, EventKind::Grant, || format!("age={age}"));
            out.push((p.ss_id, false));
        }
        if out.len() > l {
            self.violations.slot_overflow += 1;
        }
        let mut ids: Vec<usize> = out.iter().map(|&(i, _)| i).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != out.len() {
            self.violations.duplicate_grant += 1;
        }
        out
    }

    fn transmit(&mut self, id: usize, via_piggyback: bool) {
        let k = self.frame;
        let g = self.config.max_piggy;
        let measuring = self.measuring;
        let station = &mut self.stations[id];
        let st = &mut station.state;
        st.queue.pop_front().expect("granted station has a packet");
        let start = st
            .head_service_start
            .take()
            .expect("head packet in service");
        let delay = (k - start) as f64;
        station.totals.served += 1;
        if measuring {
            if via_piggyback {
                self.counters.tx_piggyback += 1;
                self.counters.delay_piggyback += delay;
            } else {
                self.counters.tx_contention += 1;
                self.counters.delay_contention += delay;
            }
        }
        let mode = if via_piggyback {
            "piggyback"
        } else {
            "contention"
        };
        self.emit(id, EventKind::Transmit, || {
            format!("mode={mode} delay={delay}")
        });

        let st = &mut self.stations[id].state;
        let eligible = st.queue.front().is_some_and(|&t| t < k as f64);
        if eligible && st.piggy_count < g {
            st.piggy_count += 1;
            st.phase = Phase::Piggyback;
            st.head_service_start = Some(k);
            let count = st.piggy_count;
            let head = *st.queue.front().expect("eligible head");
            if measuring {
                self.counters.wait_sum += k as f64 - head;
                self.counters.wait_count += 1;
            }
            self.emit(id, EventKind::PiggybackRequest, || format!("count={count}"));
        } else {
            st.piggy_count = 0;
            self.next_packet(id, eligible);
        }
    }

    fn next_packet(&mut self, id: usize, eligible: bool) {
        if eligible {
            self.start_round(id, 0);
        } else {
            let st = &mut self.stations[id].state;
            st.phase = Phase::Idle;
            st.round = 0;
            self.emit(id, EventKind::Idle, String::new);
        }
    }

    fn expire(&mut self) {
        let k = self.frame;
        let d = self.config.max_retx;
        for id in 0..self.stations.len() {
            let station = &mut self.stations[id];
            if station.state.phase != Phase::AwaitGrant || station.request_frame == k {
                continue;
            }
            let st = &mut station.state;
            st.t16_remaining -= 1;
            if st.t16_remaining > 0 {
                continue;
            }
            self.pool.retain(|p| p.ss_id != id);
            let round = self.stations[id].state.round;
            self.emit(id, EventKind::Expire, || format!("round={round}"));
            if round < d {
                self.start_round(id, round + 1);
                continue;
            }
            let station = &mut self.stations[id];
            if k - station.request_frame != u64::from(self.config.t16_frames) {
                self.violations.early_drop += 1;
            }
            station.state.queue.pop_front();
            station.totals.dropped += 1;
            let start = station
                .state
                .head_service_start
                .take()
                .expect("head packet in service");
            if self.measuring {
                self.counters.drops += 1;
                self.counters.delay_contention += (k - start) as f64;
            }
            self.emit(id, EventKind::Drop, || format!("round={round}"));
            let eligible = self.stations[id]
                .state
                .queue
                .front()
                .is_some_and(|&t| t < k as f64);
            self.next_packet(id, eligible);
        }
    }

    fn contend(&mut self) {
        let k = self.frame;
        let ns = u64::from(self.config.n_tos);
        let mut senders: Vec<(u64, usize)> = Vec::new();
        for (id, station) in self.stations.iter_mut().enumerate() {
            let st = &mut station.state;
            if st.phase != Phase::Backoff {
                continue;
            }
            if st.backoff_tos < ns {
                senders.push((st.backoff_tos, id));
            } else {
                st.backoff_tos -= ns;
            }
        }
        senders.sort_unstable();
        let mut i = 0;
        while i < senders.len() {
            let to = senders[i].0;
            let mut j = i;
            while j < senders.len() && senders[j].0 == to {
                j += 1;
            }
            let success = j - i == 1;
            for &(_, id) in &senders[i..j] {
                let station = &mut self.stations[id];
                station.attempts += 1;
                station.request_frame = k;
                station.state.phase = Phase::AwaitGrant;
                station.state.t16_remaining = self.config.t16_frames;
                station.state.backoff_tos = 0;
                if station.attempts > self.config.max_retx + 1 {
                    self.violations.retry_overflow += 1;
                }
                if success {
                    self.pool.push(BasePending {
                        ss_id: id,
                        frame_received: k,
                    });
                }
                if self.measuring {
                    self.counters.requests += 1;
                    if !success {
                        self.counters.collided += 1;
                    }
                }
                let kind = if success {
                    EventKind::Request
                } else {
                    EventKind::Collision
                };
                self.emit(id, kind, || format!("to={to}"));
            }
            i = j;
        }
    }

    fn arrive(&mut self) {
        let k = self.frame as f64;
        for id in 0..self.stations.len() {
            let station = &mut self.stations[id];
            let n = self.arrivals.sample(&mut station.rng) as u64;
            if n == 0 {
                continue;
            }
            let mut instants: Vec<f64> = (0..n).map(|_| k + station.rng.random::<f64>()).collect();
            instants.sort_by(f64::total_cmp);
            station.totals.arrived += n;
            station.state.queue.extend(instants.iter().copied());
            if self.log.is_some() {
                for t in instants {
                    self.emit(id, EventKind::Arrival, || format!("t={t:.6}"));
                }
            }
        }
    }

    fn check_bounds(&mut self) {
        let c = self.config;
        let mut bad = 0;
        for s in &self.stations {
            let st = &s.state;
            if st.round > c.max_retx
                || st.piggy_count > c.max_piggy
                || st.t16_remaining > c.t16_frames
            {
                bad += 1;
            }
            if st.phase == Phase::Piggyback && c.max_piggy == 0 {
                self.violations.piggy_limit += 1;
            }
        }
        let mut seen = vec![false; self.stations.len()];
        for p in &self.pool {
            if std::mem::replace(&mut seen[p.ss_id], true) {
                bad += 1;
            }
        }
        self.violations.state_bounds += bad;
    }
}
