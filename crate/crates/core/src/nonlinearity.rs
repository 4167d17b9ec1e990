//! Reaction terms `g = λ f` and problem instances.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Shape of `f`, before the multiplicative parameter is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `f(u) = e^u`
    Exponential,
    /// `f(u) = (1 + u)^m`
    Power { m: f64 },
    /// Table of `(t, f(t), f'(t))`, interpolated by monotone cubic Hermite splines.
    Tabulated { table: Table },
}

/// Tabulated function with monotonicity-preserving cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64, f64)>", into = "Vec<(f64, f64, f64)>")]
pub struct Table {
    t: Vec<f64>,
    f: Vec<f64>,
    slope: Vec<f64>,
    raw_slope: Vec<f64>,
}

impl Table {
    pub fn new(nodes: Vec<(f64, f64, f64)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(invalid("table needs at least two nodes"));
        }
        if nodes.iter().any(|(a, b, c)| !(a.is_finite() && b.is_finite() && c.is_finite())) {
            return Err(invalid("table entries must be finite"));
        }
        if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("table abscissae must be strictly increasing"));
        }
        let t: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let f: Vec<f64> = nodes.iter().map(|n| n.1).collect();
        let raw_slope: Vec<f64> = nodes.iter().map(|n| n.2).collect();
        let slope = fritsch_carlson(&t, &f, &raw_slope);
        Ok(Self { t, f, slope, raw_slope })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    fn locate(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(Error::OutsideTable { t: x, lo, hi });
        }
        let k = self.t.partition_point(|&ti| ti <= x);
        Ok(k.clamp(1, self.t.len() - 1) - 1)
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        let k = self.locate(x)?;
        let h = self.t[k + 1] - self.t[k];
        let s = (x - self.t[k]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        Ok(h00 * self.f[k] + h * h10 * self.slope[k] + h01 * self.f[k + 1] + h * h11 * self.slope[k + 1])
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        let k = self.locate(x)?;
        let h = self.t[k + 1] - self.t[k];
        let s = (x - self.t[k]) / h;
        let d00 = 6.0 * s * (s - 1.0) / h;
        let d10 = (1.0 - s) * (1.0 - 3.0 * s);
        let d01 = -d00;
        let d11 = s * (3.0 * s - 2.0);
        Ok(d00 * self.f[k] + d10 * self.slope[k] + d01 * self.f[k + 1] + d11 * self.slope[k + 1])
    }

    pub fn is_increasing(&self) -> bool {
        self.f.windows(2).all(|w| w[1] > w[0])
    }
}

impl TryFrom<Vec<(f64, f64, f64)>> for Table {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64, f64)>) -> Result<Self> {
        Table::new(v)
    }
}

impl From<Table> for Vec<(f64, f64, f64)> {
    fn from(t: Table) -> Self {
        t.t.iter()
            .zip(&t.f)
            .zip(&t.raw_slope)
            .map(|((a, b), c)| (*a, *b, *c))
            .collect()
    }
}

/// Limits the supplied node slopes so each Hermite segment stays monotone.
fn fritsch_carlson(t: &[f64], f: &[f64], given: &[f64]) -> Vec<f64> {
    let n = t.len();
    let secant: Vec<f64> = (0..n - 1).map(|k| (f[k + 1] - f[k]) / (t[k + 1] - t[k])).collect();
    let mut m = given.to_vec();
    for i in 0..n {
        let left = if i > 0 { Some(secant[i - 1]) } else { None };
        let right = secant.get(i).copied();
        for d in [left, right].into_iter().flatten() {
            if d == 0.0 || d.signum() != m[i].signum() {
                m[i] = 0.0;
            }
        }
    }
    for k in 0..n - 1 {
        let d = secant[k];
        if d == 0.0 {
            continue;
        }
        let (a, b) = (m[k] / d, m[k + 1] / d);
        let norm = a.hypot(b);
        if norm > 3.0 {
            let tau = 3.0 / norm;
            m[k] = tau * a * d;
            m[k + 1] = tau * b * d;
        }
    }
    m
}

/// The reaction term `g(u) = λ f(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    #[serde(flatten)]
    pub kind: NonlinearityKind,
    /// The multiplicative parameter λ.
    pub lambda: f64,
}

impl NonlinearitySpec {
    pub fn exponential(lambda: f64) -> Self {
        Self { kind: NonlinearityKind::Exponential, lambda }
    }

    pub fn power(m: f64, lambda: f64) -> Self {
        Self { kind: NonlinearityKind::Power { m }, lambda }
    }

    pub fn tabulated(nodes: Vec<(f64, f64, f64)>, lambda: f64) -> Result<Self> {
        Ok(Self { kind: NonlinearityKind::Tabulated { table: Table::new(nodes)? }, lambda })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { kind: self.kind.clone(), lambda }
    }

    /// `f(u)` without the parameter.
    pub fn shape(&self, u: f64) -> Result<f64> {
        let v = match &self.kind {
            NonlinearityKind::Exponential => u.exp(),
            NonlinearityKind::Power { m } => {
                if 1.0 + u < 0.0 {
                    return Err(Error::Evaluation(u));
                }
                (1.0 + u).powf(*m)
            }
            NonlinearityKind::Tabulated { table } => table.value(u)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(u))
        }
    }

    /// `f'(u)` without the parameter.
    pub fn shape_derivative(&self, u: f64) -> Result<f64> {
        let v = match &self.kind {
            NonlinearityKind::Exponential => u.exp(),
            NonlinearityKind::Power { m } => {
                if 1.0 + u < 0.0 {
                    return Err(Error::Evaluation(u));
                }
                if *m == 0.0 {
                    0.0
                } else {
                    m * (1.0 + u).powf(m - 1.0)
                }
            }
            NonlinearityKind::Tabulated { table } => table.derivative(u)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(u))
        }
    }

    /// `g(u) = λ f(u)`.
    pub fn value(&self, u: f64) -> Result<f64> {
        if self.lambda == 0.0 {
            return Ok(0.0);
        }
        Ok(self.lambda * self.shape(u)?)
    }

    /// `g'(u) = λ f'(u)`.
    pub fn derivative(&self, u: f64) -> Result<f64> {
        if self.lambda == 0.0 {
            return Ok(0.0);
        }
        Ok(self.lambda * self.shape_derivative(u)?)
    }

    /// An antiderivative `G` of `g`, when one is known in closed form.
    pub fn antiderivative(&self) -> Result<impl Fn(f64) -> f64 + '_> {
        let lambda = self.lambda;
        let m = match &self.kind {
            NonlinearityKind::Exponential => None,
            NonlinearityKind::Power { m } => Some(*m),
            NonlinearityKind::Tabulated { .. } => return Err(Error::MissingAntiderivative),
        };
        Ok(move |u: f64| match m {
            None => lambda * u.exp(),
            Some(m) if (m + 1.0).abs() < 1e-300 => lambda * (1.0 + u).ln(),
            Some(m) => lambda * (1.0 + u).powf(m + 1.0) / (m + 1.0),
        })
    }

    /// Checks `f(0) > 0` and `f` increasing, as required by the extremal problem.
    /// Power nonlinearities must also have `m > p - 1`.
    pub fn check_extremal(&self, p: f64) -> Result<()> {
        match &self.kind {
            NonlinearityKind::Exponential => Ok(()),
            NonlinearityKind::Power { m } => {
                if *m > p - 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("power nonlinearity needs m > p - 1 = {}, got {m}", p - 1.0)))
                }
            }
            NonlinearityKind::Tabulated { table } => {
                if table.range().0 > 0.0 {
                    return Err(invalid("table must cover t = 0"));
                }
                if !table.is_increasing() {
                    return Err(invalid("tabulated f must be increasing"));
                }
                if table.value(0.0)? <= 0.0 {
                    return Err(invalid("tabulated f must satisfy f(0) > 0"));
                }
                Ok(())
            }
        }
    }
}

/// `-Δ_p u = g(u)` in the unit ball of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: f64,
    pub p: f64,
    pub nonlinearity: NonlinearitySpec,
}

impl ProblemSpec {
    pub fn new(n: f64, p: f64, nonlinearity: NonlinearitySpec) -> Result<Self> {
        validate_np(n, p)?;
        if !(nonlinearity.lambda >= 0.0) || !nonlinearity.lambda.is_finite() {
            return Err(invalid(format!("lambda must be >= 0, got {}", nonlinearity.lambda)));
        }
        Ok(Self { n, p, nonlinearity })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { nonlinearity: self.nonlinearity.with_lambda(lambda), ..self.clone() }
    }

    pub fn lambda(&self) -> f64 {
        self.nonlinearity.lambda
    }

    /// Real dimensions are admitted; reports flag them.
    pub fn integer_dimension(&self) -> bool {
        self.n.fract() == 0.0
    }
}

pub(crate) fn validate_np(n: f64, p: f64) -> Result<()> {
    if !(n >= 1.0) || !n.is_finite() {
        return Err(invalid(format!("dimension n must be >= 1, got {n}")));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid(format!("exponent p must be > 1, got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_table() -> Table {
        let nodes = (0..=40)
            .map(|i| {
                let t = i as f64 * 0.25;
                (t, t.exp(), t.exp())
            })
            .collect();
        Table::new(nodes).unwrap()
    }

    #[test]
    fn table_reproduces_nodes_and_interpolates() {
        let t = exp_table();
        assert_relative_eq!(t.value(2.0).unwrap(), 2f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(t.value(2.1).unwrap(), 2.1f64.exp(), max_relative = 1e-4);
        assert_relative_eq!(t.derivative(2.1).unwrap(), 2.1f64.exp(), max_relative = 1e-2);
    }

    #[test]
    fn table_rejects_out_of_range() {
        let t = exp_table();
        assert!(matches!(t.value(-0.1), Err(Error::OutsideTable { .. })));
        assert!(matches!(t.value(10.5), Err(Error::OutsideTable { .. })));
    }

    #[test]
    fn table_requires_increasing_abscissae() {
        assert!(Table::new(vec![(0.0, 1.0, 0.0), (0.0, 2.0, 0.0)]).is_err());
        assert!(Table::new(vec![(0.0, 1.0, 0.0)]).is_err());
    }

    #[test]
    fn monotone_data_gives_monotone_interpolant() {
        // Wild slopes that would overshoot without limiting.
        let t = Table::new(vec![(0.0, 0.0, 50.0), (1.0, 1.0, 50.0), (2.0, 1.0, 0.0), (3.0, 2.0, -5.0)])
            .unwrap();
        let mut prev = t.value(0.0).unwrap();
        for i in 1..=300 {
            let v = t.value(i as f64 * 0.01).unwrap();
            assert!(v >= prev - 1e-12, "not monotone at {}", i as f64 * 0.01);
            prev = v;
        }
    }

    #[test]
    fn power_and_exponential() {
        let g = NonlinearitySpec::power(5.0, 6.25);
        assert_relative_eq!(g.value(1.0).unwrap(), 6.25 * 32.0);
        assert_relative_eq!(g.derivative(1.0).unwrap(), 6.25 * 5.0 * 16.0);
        assert!(g.value(-2.0).is_err());
        let e = NonlinearitySpec::exponential(2.0);
        assert_relative_eq!(e.value(1.0).unwrap(), 2.0 * 1f64.exp());
        assert!(e.value(800.0).is_err());
        let zero = NonlinearitySpec::exponential(0.0);
        assert_eq!(zero.value(800.0).unwrap(), 0.0);
    }

    #[test]
    fn antiderivatives_differentiate_back() {
        for g in [NonlinearitySpec::exponential(3.0), NonlinearitySpec::power(2.5, 1.5)] {
            let big_g = g.antiderivative().unwrap();
            let h = 1e-6;
            let fd = (big_g(0.7 + h) - big_g(0.7 - h)) / (2.0 * h);
            assert_relative_eq!(fd, g.value(0.7).unwrap(), max_relative = 1e-8);
        }
        let tab = NonlinearitySpec { kind: NonlinearityKind::Tabulated { table: exp_table() }, lambda: 1.0 };
        assert!(matches!(tab.antiderivative().err(), Some(Error::MissingAntiderivative)));
    }

    #[test]
    fn extremal_hypotheses() {
        assert!(NonlinearitySpec::power(0.5, 1.0).check_extremal(2.0).is_err());
        assert!(NonlinearitySpec::power(1.5, 1.0).check_extremal(2.0).is_ok());
        let decreasing = NonlinearitySpec::tabulated(vec![(0.0, 2.0, -1.0), (1.0, 1.0, -1.0)], 1.0).unwrap();
        assert!(decreasing.check_extremal(2.0).is_err());
    }

    #[test]
    fn problem_validation() {
        let g = NonlinearitySpec::exponential(1.0);
        assert!(ProblemSpec::new(2.0, 1.0, g.clone()).is_err());
        assert!(ProblemSpec::new(0.5, 2.0, g.clone()).is_err());
        assert!(ProblemSpec::new(2.0, 2.0, g.with_lambda(-1.0)).is_err());
        let s = ProblemSpec::new(2.5, 2.0, g).unwrap();
        assert!(!s.integer_dimension());
    }
}
