use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Radial test functions vanishing at `r = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctionFamily {
    Zero,
    /// `ε^-α - 1` for `r <= ε`, `r^-α - 1` beyond.
    PowerCutoff { alpha: f64, eps: f64 },
    /// `r η(r)`.
    RScaled { inner: Box<TestFunctionFamily> },
    /// `sin(jπ log r / log r_trunc)` on `[r_trunc, 1]`, zero below.
    SineModes { j: u32, r_trunc: f64 },
    /// Piecewise linear in `r` through `(nodes, values)`, zero outside.
    Nodal { nodes: Vec<f64>, values: Vec<f64> },
}

impl TestFunctionFamily {
    pub fn power_cutoff(alpha: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) || !alpha.is_finite() {
            return Err(invalid(format!("power cutoff needs 0 < eps < 1, got alpha = {alpha}, eps = {eps}")));
        }
        Ok(Self::PowerCutoff { alpha, eps })
    }

    pub fn sine(j: u32, r_trunc: f64) -> Result<Self> {
        if j == 0 || !(r_trunc > 0.0 && r_trunc < 1.0) {
            return Err(invalid(format!("sine mode needs j >= 1 and 0 < r_trunc < 1, got {j}, {r_trunc}")));
        }
        Ok(Self::SineModes { j, r_trunc })
    }

    pub fn r_scaled(inner: Self) -> Self {
        Self::RScaled { inner: Box::new(inner) }
    }

    /// A hat or any other P1 function; must vanish at both ends.
    pub fn nodal(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(invalid("nodal function needs matching nodes and values"));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) || nodes[0] <= 0.0 || nodes[nodes.len() - 1] > 1.0 {
            return Err(invalid("nodal function needs increasing nodes in (0, 1]"));
        }
        if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
            return Err(invalid("nodal function must vanish at its end nodes"));
        }
        Ok(Self::Nodal { nodes, values })
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::PowerCutoff { alpha, eps } => r.max(*eps).powf(-alpha) - 1.0,
            Self::RScaled { inner } => r * inner.value(r),
            Self::SineModes { j, r_trunc } => {
                if r < *r_trunc || r > 1.0 {
                    0.0
                } else {
                    (*j as f64 * std::f64::consts::PI * r.ln() / r_trunc.ln()).sin()
                }
            }
            Self::Nodal { nodes, values } => match cell(nodes, r) {
                Some(k) => {
                    let t = (r - nodes[k]) / (nodes[k + 1] - nodes[k]);
                    values[k] + t * (values[k + 1] - values[k])
                }
                None => 0.0,
            },
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::PowerCutoff { alpha, eps } => {
                if r <= *eps {
                    0.0
                } else {
                    -alpha * r.powf(-alpha - 1.0)
                }
            }
            Self::RScaled { inner } => inner.value(r) + r * inner.derivative(r),
            Self::SineModes { j, r_trunc } => {
                if r < *r_trunc || r > 1.0 {
                    0.0
                } else {
                    let k = *j as f64 * std::f64::consts::PI / r_trunc.ln();
                    (k * r.ln()).cos() * k / r
                }
            }
            Self::Nodal { nodes, values } => match cell(nodes, r) {
                Some(k) => (values[k + 1] - values[k]) / (nodes[k + 1] - nodes[k]),
                None => 0.0,
            },
        }
    }

    /// The function vanishes on `(0, support_start)`.
    pub fn support_start(&self) -> f64 {
        match self {
            Self::Zero => 1.0,
            Self::PowerCutoff { .. } => 0.0,
            Self::RScaled { inner } => inner.support_start(),
            Self::SineModes { r_trunc, .. } => *r_trunc,
            Self::Nodal { nodes, .. } => nodes[0],
        }
    }

    /// Radii where the function or its derivative has a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Zero => vec![],
            Self::PowerCutoff { eps, .. } => vec![*eps],
            Self::RScaled { inner } => inner.breakpoints(),
            Self::SineModes { r_trunc, .. } => vec![*r_trunc],
            Self::Nodal { nodes, .. } => nodes.clone(),
        }
    }

    /// True for P1 functions, which are integrated on their own nodes.
    pub fn is_piecewise_linear(&self) -> bool {
        matches!(self, Self::Nodal { .. })
    }
}

fn cell(nodes: &[f64], r: f64) -> Option<usize> {
    if r < nodes[0] || r > nodes[nodes.len() - 1] {
        return None;
    }
    let k = nodes.partition_point(|&x| x <= r);
    Some(k.clamp(1, nodes.len() - 1) - 1)
}
