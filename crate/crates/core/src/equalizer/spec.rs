use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Regularizer added to ZF denominators unless configured otherwise.
pub const DEFAULT_ZF_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Conventional,
    WidelyLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Zf,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    Le,
    Dfe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum FeedbackMode {
    /// Feedback uses the transmitted symbols.
    #[serde(rename = "genie")]
    Genie,
    /// Feedback uses past decisions; the wrap-around tail is seeded from the
    /// companion LE's decisions.
    #[default]
    #[serde(rename = "decision")]
    DecisionDirected,
}

impl FeedbackMode {
    pub fn name(self) -> &'static str {
        match self {
            FeedbackMode::Genie => "genie",
            FeedbackMode::DecisionDirected => "decision",
        }
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "genie" | "ideal" => Ok(FeedbackMode::Genie),
            "decision" | "decision-directed" => Ok(FeedbackMode::DecisionDirected),
            other => Err(Error::invalid(format!("unknown feedback mode {other:?}; expected genie or decision"))),
        }
    }
}

/// Which of the eight receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReceiverKind {
    pub family: Family,
    pub criterion: Criterion,
    pub structure: Structure,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 8] = {
        use Criterion::*;
        use Family::*;
        use Structure::*;
        [
            ReceiverKind { family: Conventional, criterion: Zf, structure: Le },
            ReceiverKind { family: Conventional, criterion: Mmse, structure: Le },
            ReceiverKind { family: Conventional, criterion: Zf, structure: Dfe },
            ReceiverKind { family: Conventional, criterion: Mmse, structure: Dfe },
            ReceiverKind { family: WidelyLinear, criterion: Zf, structure: Le },
            ReceiverKind { family: WidelyLinear, criterion: Mmse, structure: Le },
            ReceiverKind { family: WidelyLinear, criterion: Zf, structure: Dfe },
            ReceiverKind { family: WidelyLinear, criterion: Mmse, structure: Dfe },
        ]
    };

    pub fn name(self) -> &'static str {
        use Criterion::*;
        use Family::*;
        use Structure::*;
        match (self.family, self.criterion, self.structure) {
            (Conventional, Zf, Le) => "zf-le",
            (Conventional, Mmse, Le) => "mmse-le",
            (Conventional, Zf, Dfe) => "zf-dfe",
            (Conventional, Mmse, Dfe) => "mmse-dfe",
            (WidelyLinear, Zf, Le) => "wl-zf-le",
            (WidelyLinear, Mmse, Le) => "wl-mmse-le",
            (WidelyLinear, Zf, Dfe) => "wl-zf-dfe",
            (WidelyLinear, Mmse, Dfe) => "wl-mmse-dfe",
        }
    }

    pub fn is_dfe(self) -> bool {
        self.structure == Structure::Dfe
    }

    pub fn is_wl(self) -> bool {
        self.family == Family::WidelyLinear
    }

    /// The linear receiver with the same family and criterion.
    pub fn linear(self) -> Self {
        Self { structure: Structure::Le, ..self }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    /// Accepts the canonical names with an optional `conv-` prefix.
    fn from_str(s: &str) -> crate::Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let name = lower.strip_prefix("conv-").unwrap_or(&lower);
        ReceiverKind::ALL.into_iter().find(|k| k.name() == name).ok_or_else(|| {
            let names: Vec<_> = ReceiverKind::ALL.iter().map(|k| k.name()).collect();
            Error::invalid(format!("unknown receiver {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// A fully parameterized receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSpec {
    pub kind: ReceiverKind,
    /// Feedback filter length `L`; ignored for linear receivers.
    pub fbf_len: usize,
    pub feedback: FeedbackMode,
    pub zf_epsilon: f64,
}

impl ReceiverSpec {
    pub fn new(kind: ReceiverKind, fbf_len: usize, feedback: FeedbackMode) -> Self {
        Self { kind, fbf_len, feedback, zf_epsilon: DEFAULT_ZF_EPSILON }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.kind.is_dfe() && self.fbf_len == 0 {
            return Err(Error::invalid(format!("{} needs a feedback length of at least 1", self.kind)));
        }
        if !(self.zf_epsilon >= 0.0) || !self.zf_epsilon.is_finite() {
            return Err(Error::invalid(format!("zf_epsilon must be finite and >= 0, got {}", self.zf_epsilon)));
        }
        Ok(())
    }

    /// Receiver name, with the feedback mode appended for DFEs.
    pub fn label(&self) -> String {
        if self.kind.is_dfe() {
            format!("{}/{}", self.kind, self.feedback.name())
        } else {
            self.kind.name().to_string()
        }
    }
}
