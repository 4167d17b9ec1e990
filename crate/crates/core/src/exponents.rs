//! Critical dimension, integrability exponents `q0`, `q1` and the critical power `m_cs`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::nonlinearity::validate_np;

/// Relative tolerance for deciding `n == critical_dimension(p)`.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A real number or `+∞`. Serializes as a JSON number or the string `"+inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInfinity => None,
        }
    }

    /// Lossy conversion for arithmetic.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInfinity => f.write_str("+inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::PosInfinity => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtendedReal::Finite(v)),
            Repr::Str(s) if s == "+inf" => Ok(ExtendedReal::PosInfinity),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"+inf\", got {s:?}"))),
        }
    }
}

/// Position of `n` relative to the critical dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Below the critical dimension: semi-stable solutions are bounded.
    A,
    /// At the critical dimension: logarithmic growth.
    B,
    /// Above the critical dimension: power-law singularities.
    C,
}

/// `p + 4p/(p-1)`.
pub fn critical_dimension(p: f64) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("exponent p must be > 1, got {p}")));
    }
    Ok(p + 4.0 * p / (p - 1.0))
}

fn regime_of(n: f64, p: f64) -> Result<Regime> {
    validate_np(n, p)?;
    let c = critical_dimension(p)?;
    Ok(if (n - c).abs() <= BOUNDARY_TOL * c {
        Regime::B
    } else if n < c {
        Regime::A
    } else {
        Regime::C
    })
}

/// Right side of the defining formula for `1/q_k`.
fn q_reciprocal(n: f64, p: f64, k: u8) -> f64 {
    1.0 / p - 2.0 / (n * p) * ((n - 1.0) / (p - 1.0)).sqrt() + (k as f64 - 1.0) / n - 2.0 / (n * p)
}

/// `q_k` together with a flag set when the formula's reciprocal was `<= 0`
/// above the critical dimension.
pub fn q_exponent_flagged(n: f64, p: f64, k: u8) -> Result<(ExtendedReal, bool)> {
    if k > 1 {
        return Err(Error::InvalidArgument(format!("k must be 0 or 1, got {k}")));
    }
    match regime_of(n, p)? {
        Regime::A => Ok((ExtendedReal::PosInfinity, false)),
        // The reciprocal vanishes exactly for k = 0 and equals 1/n for k = 1.
        Regime::B => Ok((if k == 0 { ExtendedReal::PosInfinity } else { ExtendedReal::Finite(n) }, false)),
        Regime::C => {
            let rec = q_reciprocal(n, p, k);
            if rec <= 0.0 {
                Ok((ExtendedReal::PosInfinity, true))
            } else {
                Ok((ExtendedReal::Finite(1.0 / rec), false))
            }
        }
    }
}

/// `q_k(n, p)` for `k ∈ {0, 1}`.
pub fn q_exponent(n: f64, p: f64, k: u8) -> Result<ExtendedReal> {
    q_exponent_flagged(n, p, k).map(|(q, _)| q)
}

/// Critical power exponent `m_cs(n, p)` for `f(u) = (1+u)^m`.
pub fn m_cs(n: f64, p: f64) -> Result<ExtendedReal> {
    if regime_of(n, p)? != Regime::C {
        return Ok(ExtendedReal::PosInfinity);
    }
    let num = (p - 1.0) * n - 2.0 * ((p - 1.0) * (n - 1.0)).sqrt() + 2.0 - p;
    let den = n - (p + 2.0) - 2.0 * ((n - 1.0) / (p - 1.0)).sqrt();
    Ok(ExtendedReal::Finite(num / den))
}

/// Relative mismatch `|n (m_cs - (p-1))/p - q0| / q0`.
pub fn consistency_q0_mcs(n: f64, p: f64) -> Result<f64> {
    if regime_of(n, p)? != Regime::C {
        return Err(Error::RegimeMismatch(format!(
            "n = {n} is not above the critical dimension {}",
            critical_dimension(p)?
        )));
    }
    let m = m_cs(n, p)?.to_f64();
    let q0 = q_exponent(n, p, 0)?.to_f64();
    Ok((n * (m - (p - 1.0)) / p - q0).abs() / q0)
}

/// Regime and a plain-text summary of the applicable regularity statement.
pub fn classify_regime(n: f64, p: f64) -> Result<(Regime, String)> {
    let regime = regime_of(n, p)?;
    let c = critical_dimension(p)?;
    let summary = match regime {
        Regime::A => format!("n = {n} < {c}: u is bounded, |u|_inf <= C |u|_W1p"),
        Regime::B => format!("n = {n} = {c}: u(r) <= C |u|_W1p (|log r| + 1); u in L^q for all q < inf"),
        Regime::C => {
            let q0 = q_exponent(n, p, 0)?;
            let q1 = q_exponent(n, p, 1)?;
            let a = singular_power(n, p);
            format!(
                "n = {n} > {c}: u(r) <= C |u|_W1p r^-{a} (|log r|^(1/p) + 1); u in L^q for q < q0 = {q0}, \
                 u in W^(1,q) for q < q1 = {q1}"
            )
        }
    };
    Ok((regime, summary))
}

/// Exponent `(1/p)(n - 2√((n-1)/(p-1)) - p - 2)` of the pointwise bound on `u`.
pub fn singular_power(n: f64, p: f64) -> f64 {
    (n - 2.0 * ((n - 1.0) / (p - 1.0)).sqrt() - p - 2.0) / p
}

/// Exponent `(1/p)(n - 2√((n-1)/(p-1)) - 2)` of the pointwise bound on `|u_r|`.
pub fn gradient_power(n: f64, p: f64) -> f64 {
    (n - 2.0 * ((n - 1.0) / (p - 1.0)).sqrt() - 2.0) / p
}

/// Everything the exponent formulas say about one `(n, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub n: f64,
    pub p: f64,
    pub critical_dimension: f64,
    pub q0: ExtendedReal,
    pub q1: ExtendedReal,
    pub m_cs: ExtendedReal,
    pub regime: Regime,
    pub summary: String,
    pub non_integer_dimension: bool,
    /// Set when a defining reciprocal was `<= 0` and the exponent was taken as `+∞`.
    pub nonpositive_reciprocal: bool,
}

pub fn exponent_report(n: f64, p: f64) -> Result<ExponentReport> {
    let (regime, summary) = classify_regime(n, p)?;
    let (q0, f0) = q_exponent_flagged(n, p, 0)?;
    let (q1, f1) = q_exponent_flagged(n, p, 1)?;
    Ok(ExponentReport {
        n,
        p,
        critical_dimension: critical_dimension(p)?,
        q0,
        q1,
        m_cs: m_cs(n, p)?,
        regime,
        summary,
        non_integer_dimension: n.fract() != 0.0,
        nonpositive_reciprocal: f0 || f1,
    })
}
