use std::fmt;
use std::str::FromStr;

use crate::Error;

/// A non-negative extent that may be unbounded: word lookahead, chunk size,
/// guardband width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Limit {
    Finite(usize),
    Infinite,
}

impl Limit {
    pub fn is_finite(self) -> bool {
        matches!(self, Limit::Finite(_))
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Limit::Finite(n) => Some(n),
            Limit::Infinite => None,
        }
    }

    /// `base + self`, saturating to `usize::MAX` when unbounded.
    pub fn offset(self, base: usize) -> usize {
        match self {
            Limit::Finite(n) => base.saturating_add(n),
            Limit::Infinite => usize::MAX,
        }
    }

    /// True when `value` lies within `base + self`.
    pub fn admits(self, value: usize, base: usize) -> bool {
        value <= self.offset(base)
    }
}

impl From<usize> for Limit {
    fn from(n: usize) -> Self {
        Limit::Finite(n)
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::Finite(n) => write!(f, "{n}"),
            Limit::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Limit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "unbounded" | "∞" => Ok(Limit::Infinite),
            other => other
                .parse::<usize>()
                .map(Limit::Finite)
                .map_err(|_| Error::Config(format!("expected a count or `inf`, got `{other}`"))),
        }
    }
}
