use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Hydration class. The declaration order is the class order used for
/// tie-breaking in every classifier; `Dehydrated` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Hydrated,
    Dehydrated,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Hydrated, Label::Dehydrated];

    pub fn index(self) -> usize {
        match self {
            Label::Hydrated => 0,
            Label::Dehydrated => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Hydrated
        } else {
            Label::Dehydrated
        }
    }

    /// `+1` for the positive (dehydrated) class, `-1` otherwise.
    pub fn sign(self) -> f64 {
        match self {
            Label::Hydrated => -1.0,
            Label::Dehydrated => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hydrated => "hydrated",
            Label::Dehydrated => "dehydrated",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hydrated" => Ok(Label::Hydrated),
            "dehydrated" => Ok(Label::Dehydrated),
            other => Err(Error::Input(format!("unknown label `{other}`"))),
        }
    }
}
