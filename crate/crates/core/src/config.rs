//! Network and traffic parameters.
//!
//! Units: the frame duration is the time unit, so delays are in frames and
//! rates are in packets per frame. With `t_frame = 1` the arrival rate and the
//! offered load coincide numerically.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invariant(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("json: {0}")]
    Json(String),
}

/// Protocol and traffic parameters of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Number of subscriber stations.
    pub n_ss: u32,
    /// Transmission opportunities (contention slots) per uplink subframe.
    pub n_tos: u32,
    /// Data slots per uplink subframe.
    pub n_slots: u32,
    /// Initial contention window.
    pub w0: u32,
    /// Backoff exponent cap; the largest window is `2^m_exp * w0`.
    pub m_exp: u32,
    /// T16 window length in frames.
    pub t16_frames: u32,
    /// Maximum number of bandwidth-request retransmissions.
    pub max_retx: u32,
    /// Maximum number of consecutive piggybacked requests; 0 disables piggybacking.
    pub max_piggy: u32,
    /// Poisson arrival rate per station, packets per frame.
    pub lambda: f64,
    /// Frame duration; the time unit, so always 1.
    pub t_frame: f64,
}

impl Default for NetworkConfig {
    /// Default operating point of the saturation experiments: 50 stations,
    /// 20 TOs, W0 = 32, m = 5, T16 = 6 frames, 5 retransmissions, L = 7, no
    /// piggybacking, offered load 1.
    fn default() -> Self {
        Self {
            n_ss: 50,
            n_tos: 20,
            n_slots: 7,
            w0: 32,
            m_exp: 5,
            t16_frames: 6,
            max_retx: 5,
            max_piggy: 0,
            lambda: 1.0,
            t_frame: 1.0,
        }
    }
}

pub const FIELD_NAMES: [&str; 10] = [
    "n_ss",
    "n_tos",
    "n_slots",
    "w0",
    "m_exp",
    "t16_frames",
    "max_retx",
    "max_piggy",
    "lambda",
    "t_frame",
];

impl NetworkConfig {
    /// Offered load `lambda * t_frame`, in Erlang.
    pub fn rho_in(&self) -> f64 {
        self.lambda * self.t_frame
    }

    /// Checks every parameter invariant and wraps the config for downstream use.
    pub fn validate(self) -> Result<ValidConfig, ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invariant(msg));
        if self.n_ss < 1 {
            return fail("n_ss must be >= 1".into());
        }
        if self.n_tos < 1 {
            return fail("n_tos must be >= 1".into());
        }
        if self.n_slots < 1 {
            return fail("n_slots must be >= 1".into());
        }
        if self.t16_frames < 1 {
            return fail("t16_frames must be >= 1".into());
        }
        if self.w0 < self.n_tos {
            return fail(format!(
                "w0 ({}) must be >= n_tos ({})",
                self.w0, self.n_tos
            ));
        }
        // 2^m_exp * w0 has to fit comfortably in a u64 counter.
        if self.m_exp > 40 || (u64::from(self.w0) << self.m_exp) > (1u64 << 48) {
            return fail(format!(
                "maximum window 2^{} * {} is too large",
                self.m_exp, self.w0
            ));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return fail(format!(
                "lambda must be finite and > 0, got {}",
                self.lambda
            ));
        }
        if self.t_frame != 1.0 {
            return fail(format!(
                "t_frame must be 1 (the frame is the time unit), got {}",
                self.t_frame
            ));
        }
        Ok(ValidConfig(self))
    }

    /// Sets one parameter by field name or by its conventional symbol
    /// (`N`, `Ns`, `L`, `W0`, `m`, `M`, `D`, `G`, `rho_in`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let count = |v: &str| -> Result<u32, ConfigError> {
            v.trim().parse::<u32>().map_err(|e| ConfigError::BadValue {
                key: key.to_string(),
                value: v.to_string(),
                reason: e.to_string(),
            })
        };
        let real = |v: &str| -> Result<f64, ConfigError> {
            v.trim().parse::<f64>().map_err(|e| ConfigError::BadValue {
                key: key.to_string(),
                value: v.to_string(),
                reason: e.to_string(),
            })
        };
        match key.trim() {
            "n_ss" | "N" => self.n_ss = count(value)?,
            "n_tos" | "Ns" | "N_s" => self.n_tos = count(value)?,
            "n_slots" | "L" => self.n_slots = count(value)?,
            "w0" | "W0" => self.w0 = count(value)?,
            "m_exp" | "m" => self.m_exp = count(value)?,
            "t16_frames" | "M" => self.t16_frames = count(value)?,
            "max_retx" | "D" => self.max_retx = count(value)?,
            "max_piggy" | "G" => self.max_piggy = count(value)?,
            "lambda" => self.lambda = real(value)?,
            // t_frame is pinned to 1, so the offered load is the arrival rate
            "rho_in" => self.lambda = real(value)? / self.t_frame,
            "t_frame" | "T_fr" => self.t_frame = real(value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parses the flat `key=value` format. Blank lines and `#` comments are
    /// skipped; keys absent from the text keep their default values.
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            let k = k.trim();
            if !FIELD_NAMES.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn to_kv_string(&self) -> String {
        format!(
            "n_ss={}\nn_tos={}\nn_slots={}\nw0={}\nm_exp={}\nt16_frames={}\nmax_retx={}\nmax_piggy={}\nlambda={}\nt_frame={}\n",
            self.n_ss,
            self.n_tos,
            self.n_slots,
            self.w0,
            self.m_exp,
            self.t16_frames,
            self.max_retx,
            self.max_piggy,
            self.lambda,
            self.t_frame
        )
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Picks JSON when the text starts with `{`, key=value otherwise.
    pub fn parse_any(text: &str) -> Result<Self, ConfigError> {
        if text.trim_start().starts_with('{') {
            Self::from_json_str(text)
        } else {
            Self::from_kv_str(text)
        }
    }
}

impl FromStr for NetworkConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_any(s)
    }
}

impl fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} Ns={} L={} W0={} m={} M={} D={} G={} lambda={}",
            self.n_ss,
            self.n_tos,
            self.n_slots,
            self.w0,
            self.m_exp,
            self.t16_frames,
            self.max_retx,
            self.max_piggy,
            self.lambda
        )
    }
}

/// A [`NetworkConfig`] that passed [`NetworkConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidConfig(NetworkConfig);

impl ValidConfig {
    pub fn into_inner(self) -> NetworkConfig {
        self.0
    }

    /// Window size `2^min(i, m) * w0` of contention round `i`.
    pub fn window(&self, round: u32) -> u64 {
        u64::from(self.0.w0) << round.min(self.0.m_exp)
    }
}

impl Deref for ValidConfig {
    type Target = NetworkConfig;

    fn deref(&self) -> &NetworkConfig {
        &self.0
    }
}

impl AsRef<NetworkConfig> for ValidConfig {
    fn as_ref(&self) -> &NetworkConfig {
        &self.0
    }
}
