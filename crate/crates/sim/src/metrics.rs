use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::engine::Counters;

/// Replication mean and 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// `None` with a single replication.
    pub half_width: Option<f64>,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let n = samples.len();
        if n == 0 {
            return None;
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Some(Self {
                mean,
                half_width: None,
            });
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        Some(Self {
            mean,
            half_width: Some(t * (var / n as f64).sqrt()),
        })
    }
}

/// Metrics of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub th: f64,
    pub th_c: f64,
    pub th_pg: f64,
    pub es: Option<f64>,
    pub es_c: Option<f64>,
    pub ew: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub p_s: f64,
    pub p_d: Option<f64>,
    pub e_r: f64,
    pub e_p: f64,
    /// Piggybacked transmissions per contention transmission.
    pub g_bar: Option<f64>,
}

fn ratio(num: f64, den: u64) -> Option<f64> {
    (den > 0).then(|| num / den as f64)
}

impl RunStats {
    pub fn from_counters(c: &Counters, n_tos: u32) -> Self {
        let frames = c.frames.max(1) as f64;
        let finished = c.tx_contention + c.drops;
        let th_c = c.tx_contention as f64 / frames;
        let th_pg = c.tx_piggyback as f64 / frames;
        Self {
            th: th_c + th_pg,
            th_c,
            th_pg,
            es: ratio(
                c.delay_contention + c.delay_piggyback,
                finished + c.tx_piggyback,
            ),
            es_c: ratio(c.delay_contention, finished),
            ew: ratio(c.wait_sum, c.wait_count),
            p: ratio(c.collided as f64, c.requests),
            q: ratio(c.pool_grants as f64, c.pending_frames),
            p_s: (c.requests - c.collided) as f64 / (frames * f64::from(n_tos)),
            p_d: ratio(c.drops as f64, finished),
            e_r: c.pending_frames as f64 / frames,
            e_p: c.tx_piggyback as f64 / frames,
            g_bar: ratio(c.tx_piggyback as f64, c.tx_contention),
        }
    }
}

/// Aggregated simulator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub th: Estimate,
    pub th_c: Estimate,
    pub th_pg: Estimate,
    pub es: Option<Estimate>,
    pub es_c: Option<Estimate>,
    pub ew: Option<Estimate>,
    pub p: Option<Estimate>,
    pub q: Option<Estimate>,
    pub p_s: Estimate,
    pub p_d: Option<Estimate>,
    pub e_r: Estimate,
    pub e_p: Estimate,
    pub g_bar: Option<Estimate>,
    pub replications: usize,
}

fn collect(runs: &[RunStats], f: impl Fn(&RunStats) -> Option<f64>) -> Option<Estimate> {
    let xs: Vec<f64> = runs.iter().filter_map(f).collect();
    Estimate::from_samples(&xs)
}

impl SimMetrics {
    pub fn aggregate(runs: &[RunStats]) -> Self {
        assert!(!runs.is_empty(), "at least one replication");
        let always = |f: fn(&RunStats) -> f64| collect(runs, |r| Some(f(r))).expect("nonempty");
        Self {
            th: always(|r| r.th),
            th_c: always(|r| r.th_c),
            th_pg: always(|r| r.th_pg),
            es: collect(runs, |r| r.es),
            es_c: collect(runs, |r| r.es_c),
            ew: collect(runs, |r| r.ew),
            p: collect(runs, |r| r.p),
            q: collect(runs, |r| r.q),
            p_s: always(|r| r.p_s),
            p_d: collect(runs, |r| r.p_d),
            e_r: always(|r| r.e_r),
            e_p: always(|r| r.e_p),
            g_bar: collect(runs, |r| r.g_bar),
            replications: runs.len(),
        }
    }

    /// Metric means by name, matching the model's field names.
    pub fn means(&self) -> Vec<(&'static str, Option<f64>)> {
        let m = |e: &Option<Estimate>| e.map(|e| e.mean);
        vec![
            ("th", Some(self.th.mean)),
            ("th_c", Some(self.th_c.mean)),
            ("th_pg", Some(self.th_pg.mean)),
            ("es", m(&self.es)),
            ("es_c", m(&self.es_c)),
            ("ew", m(&self.ew)),
            ("p", m(&self.p)),
            ("q", m(&self.q)),
            ("p_s", Some(self.p_s.mean)),
            ("p_d", m(&self.p_d)),
            ("e_r", Some(self.e_r.mean)),
            ("e_p", Some(self.e_p.mean)),
            ("g_bar", m(&self.g_bar)),
        ]
    }
}
