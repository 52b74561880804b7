use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::equalizer::{FeedbackMode, ReceiverKind, ReceiverSpec, DEFAULT_ZF_EPSILON};
use crate::modem::Modulation;
use crate::Error;

/// One curve in a sweep: an equalizer or the simulated matched-filter bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Receiver {
    Equalizer(ReceiverSpec),
    /// Symbol-by-symbol detection with all channel energy collected and no ISI.
    Mfb,
}

impl Receiver {
    pub fn label(&self) -> String {
        match self {
            Receiver::Equalizer(spec) => spec.label(),
            Receiver::Mfb => "mfb".to_string(),
        }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Sweep description. Serialized as a flat JSON object; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub constellation: Modulation,
    /// Receiver names such as `mmse-dfe`, `wl-zf-le` or `mfb`. A DFE name may
    /// carry a `/genie` or `/decision` suffix overriding `feedback`.
    pub receivers: Vec<String>,
    pub feedback: FeedbackMode,
    pub fbf_len: usize,
    pub n_r: usize,
    pub v: usize,
    pub m: usize,
    pub snr_grid_db: Vec<f64>,
    pub min_bit_errors: u64,
    pub max_blocks: u64,
    pub master_seed: u64,
    pub parallel_width: usize,
    pub zf_epsilon: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            constellation: Modulation::Bpsk,
            receivers: vec!["mmse-dfe".into()],
            feedback: FeedbackMode::DecisionDirected,
            fbf_len: 20,
            n_r: 1,
            v: 20,
            m: 512,
            snr_grid_db: (0..=7).map(|i| 2.0 * i as f64).collect(),
            min_bit_errors: 200,
            max_blocks: 20_000,
            master_seed: 1,
            parallel_width: 1,
            zf_epsilon: DEFAULT_ZF_EPSILON,
        }
    }
}

/// Every key a config document may contain.
pub const CONFIG_KEYS: [&str; 13] = [
    "constellation",
    "receivers",
    "feedback",
    "fbf_len",
    "n_r",
    "v",
    "m",
    "snr_grid_db",
    "min_bit_errors",
    "max_blocks",
    "master_seed",
    "parallel_width",
    "zf_epsilon",
];

/// Smallest accepted `min_bit_errors`.
pub const MIN_BIT_ERRORS_FLOOR: u64 = 100;

impl SweepConfig {
    pub fn from_json(text: &str) -> crate::Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| Error::invalid(unknown_key_hint(e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Applies a `key=value` override. Values are read as JSON where
    /// possible. `snr_grid_db` also accepts `start:step:stop` and
    /// comma-separated lists; `receivers` accepts comma-separated names.
    pub fn set(&mut self, key: &str, value: &str) -> crate::Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::invalid(format!("unknown key {key:?}; valid keys: {}", CONFIG_KEYS.join(", "))));
        }
        let parsed = match key {
            "snr_grid_db" => Value::from(parse_grid(value)?),
            "receivers" if !value.trim_start().starts_with('[') => {
                Value::from(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect::<Vec<_>>())
            }
            _ => serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string())),
        };
        let mut doc = serde_json::to_value(&*self)?;
        doc[key] = parsed;
        *self = serde_json::from_value(doc).map_err(|e| Error::invalid(format!("bad value for {key}: {e}")))?;
        Ok(())
    }

    /// Checks ranges and parses the receiver list.
    pub fn validate(&self) -> crate::Result<()> {
        if self.n_r == 0 {
            return Err(Error::invalid("n_r must be at least 1"));
        }
        if self.m < 2 {
            return Err(Error::invalid(format!("block size m must be at least 2, got {}", self.m)));
        }
        if self.v == 0 || self.v > self.m {
            return Err(Error::invalid(format!("channel length v={} must lie in 1..={}", self.v, self.m)));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::invalid("snr_grid_db is empty"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("snr_grid_db contains a non-finite value"));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("snr_grid_db must be strictly increasing"));
        }
        if self.min_bit_errors < MIN_BIT_ERRORS_FLOOR {
            return Err(Error::invalid(format!(
                "min_bit_errors must be at least {MIN_BIT_ERRORS_FLOOR}, got {}",
                self.min_bit_errors
            )));
        }
        if self.max_blocks == 0 {
            return Err(Error::invalid("max_blocks must be at least 1"));
        }
        if self.parallel_width == 0 {
            return Err(Error::invalid("parallel_width must be at least 1"));
        }
        self.parsed_receivers().map(|_| ())
    }

    /// The receiver list with suffixes and defaults resolved.
    pub fn parsed_receivers(&self) -> crate::Result<Vec<Receiver>> {
        if self.receivers.is_empty() {
            return Err(Error::invalid("receiver list is empty"));
        }
        self.receivers.iter().map(|name| self.parse_receiver(name)).collect()
    }

    fn parse_receiver(&self, name: &str) -> crate::Result<Receiver> {
        if name.trim().eq_ignore_ascii_case("mfb") {
            return Ok(Receiver::Mfb);
        }
        let (base, feedback) = match name.split_once('/') {
            Some((base, mode)) => (base, FeedbackMode::from_str(mode.trim())?),
            None => (name, self.feedback),
        };
        let kind: ReceiverKind = base.parse()?;
        if kind.is_wl() && self.constellation != Modulation::Bpsk {
            return Err(Error::invalid(format!("{kind} needs a real constellation, not {}", self.constellation)));
        }
        if kind.is_dfe() {
            let max = if kind.is_wl() { self.m / 2 } else { self.m - 1 };
            if self.fbf_len == 0 || self.fbf_len > max {
                return Err(Error::invalid(format!("fbf_len {} outside 1..={max} for {kind}", self.fbf_len)));
            }
        }
        let spec = ReceiverSpec { kind, fbf_len: self.fbf_len, feedback, zf_epsilon: self.zf_epsilon };
        spec.validate()?;
        Ok(Receiver::Equalizer(spec))
    }
}

fn unknown_key_hint(e: serde_json::Error) -> String {
    let msg = e.to_string();
    if msg.contains("unknown field") {
        format!("{msg}; valid keys: {}", CONFIG_KEYS.join(", "))
    } else {
        format!("bad config: {msg}")
    }
}

/// `a:b:c` (start, step, stop inclusive), a comma list, or a JSON array.
fn parse_grid(text: &str) -> crate::Result<Vec<f64>> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| Error::invalid(format!("bad snr grid {t:?}: {e}")));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad number {s:?} in snr grid")));
    let parts: Vec<&str> = t.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) || stop < start {
                return Err(Error::invalid(format!("bad snr grid {t:?}: need step > 0 and stop >= start")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + step * i as f64).collect())
        }
        [_] => t.split(',').map(num).collect(),
        _ => Err(Error::invalid(format!("bad snr grid {t:?}; use start:step:stop or a comma list"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = SweepConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.snr_grid_db.len(), 8);
        assert_eq!(SweepConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn json_round_trip() {
        let cfg = SweepConfig { receivers: vec!["wl-mmse-dfe/genie".into(), "mfb".into()], ..SweepConfig::default() };
        let back = SweepConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_list_valid_ones() {
        let err = SweepConfig::from_json(r#"{"snr": [1]}"#).unwrap_err().to_string();
        assert!(err.contains("master_seed") && err.contains("snr_grid_db"), "{err}");
        let err = SweepConfig::default().set("seed", "3").unwrap_err().to_string();
        assert!(err.contains("master_seed"));
    }

    #[test]
    fn overrides() {
        let mut cfg = SweepConfig::default();
        cfg.set("snr_grid_db", "0:2:14").unwrap();
        assert_eq!(cfg.snr_grid_db, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0]);
        cfg.set("snr_grid_db", "1,3.5").unwrap();
        assert_eq!(cfg.snr_grid_db, vec![1.0, 3.5]);
        cfg.set("receivers", "zf-le, mmse-dfe/genie").unwrap();
        assert_eq!(cfg.receivers, vec!["zf-le", "mmse-dfe/genie"]);
        cfg.set("constellation", "16qam").unwrap();
        assert_eq!(cfg.constellation, Modulation::Qam16);
        cfg.set("n_r", "2").unwrap();
        assert_eq!(cfg.n_r, 2);
        cfg.set("feedback", "genie").unwrap();
        assert_eq!(cfg.feedback, FeedbackMode::Genie);
        assert!(cfg.set("n_r", "two").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |json: &str| SweepConfig::from_json(json).is_err();
        assert!(bad(r#"{"v": 21, "m": 20}"#));
        assert!(bad(r#"{"snr_grid_db": [2, 1]}"#));
        assert!(bad(r#"{"snr_grid_db": []}"#));
        assert!(bad(r#"{"min_bit_errors": 50}"#));
        assert!(bad(r#"{"receivers": ["wl-zf-le"], "constellation": "8psk"}"#));
        assert!(bad(r#"{"receivers": ["zf-dfe"], "fbf_len": 0}"#));
        assert!(bad(r#"{"receivers": ["wl-zf-dfe"], "fbf_len": 300}"#));
        assert!(bad(r#"{"receivers": ["zf-mlse"]}"#));
        assert!(bad(r#"{"receivers": ["zf-dfe/sometimes"]}"#));
        assert!(bad(r#"{"parallel_width": 0}"#));
    }

    #[test]
    fn receiver_suffixes() {
        let cfg = SweepConfig {
            receivers: vec!["mmse-dfe".into(), "zf-dfe/genie".into(), "mfb".into(), "conv-zf-le".into()],
            ..SweepConfig::default()
        };
        let r = cfg.parsed_receivers().unwrap();
        let labels: Vec<String> = r.iter().map(|r| r.label()).collect();
        assert_eq!(labels, vec!["mmse-dfe/decision", "zf-dfe/genie", "mfb", "zf-le"]);
    }
}
