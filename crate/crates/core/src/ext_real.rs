//! Extended reals: a finite value or a signed infinity that can be matched on.

use std::fmt;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
    NegInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    /// Infinity carrying the sign of `sign`.
    pub fn signed_inf(sign: f64) -> Self {
        if sign < 0.0 {
            ExtReal::NegInf
        } else {
            ExtReal::PosInf
        }
    }

    /// Lossy conversion to an IEEE double, for callers that want one.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::NegInf => f64::NEG_INFINITY,
        }
    }

    /// Text form used in tables: 17 significant digits, or `inf` / `-inf`.
    pub fn to_table_string(self) -> String {
        match self {
            ExtReal::Finite(v) => format_sig17(v),
            ExtReal::PosInf => "inf".to_string(),
            ExtReal::NegInf => "-inf".to_string(),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_table_string())
    }
}

/// Finite values serialize as JSON numbers, infinities as the strings "inf"/"-inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => serializer.serialize_f64(*v),
            ExtReal::PosInf => serializer.serialize_str("inf"),
            ExtReal::NegInf => serializer.serialize_str("-inf"),
        }
    }
}

/// Scientific notation with 17 significant digits; round-trips every f64.
pub fn format_sig17(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}
