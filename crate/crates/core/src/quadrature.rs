//! Half-line quadrature on `[-L, 0]` with nodes commensurate with the master grid.

use std::fmt;

use crate::error::{Error, Result};

/// Weights for `N + 1` equispaced nodes with spacing `h`.
pub trait QuadratureRule: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    /// Smallest interval count the rule accepts.
    fn min_intervals(&self) -> usize;
    fn weights(&self, intervals: usize, h: f64) -> Vec<f64>;
}

/// Composite trapezoid: `h/2` at the ends, `h` inside. Second order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Trapezoid;

impl QuadratureRule for Trapezoid {
    fn name(&self) -> &'static str {
        "trapezoid"
    }

    fn min_intervals(&self) -> usize {
        1
    }

    fn weights(&self, intervals: usize, h: f64) -> Vec<f64> {
        let mut w = vec![h; intervals + 1];
        w[0] = 0.5 * h;
        w[intervals] = 0.5 * h;
        w
    }
}

/// Trapezoid with Gregory end corrections built from forward/backward
/// differences up to `order`. Same interior weights, high-order ends.
#[derive(Debug, Clone, Copy)]
pub struct Gregory {
    order: usize,
}

pub const DEFAULT_GREGORY_ORDER: usize = 8;

impl Gregory {
    pub fn new(order: usize) -> Self {
        Self { order }
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

impl Default for Gregory {
    fn default() -> Self {
        Self::new(DEFAULT_GREGORY_ORDER)
    }
}

/// Taylor coefficients of `u / ln(1 + u)`: 1, 1/2, -1/12, 1/24, -19/720, ...
fn gregory_coefficients(count: usize) -> Vec<f64> {
    let a: Vec<f64> = (0..count)
        .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / (k + 1) as f64)
        .collect();
    let mut b = vec![0.0; count];
    b[0] = 1.0;
    for k in 1..count {
        b[k] = -(1..=k).map(|j| a[j] * b[k - j]).sum::<f64>();
    }
    b
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl QuadratureRule for Gregory {
    fn name(&self) -> &'static str {
        "gregory"
    }

    fn min_intervals(&self) -> usize {
        2 * self.order.max(1)
    }

    fn weights(&self, intervals: usize, h: f64) -> Vec<f64> {
        let mut w = Trapezoid.weights(intervals, h);
        let b = gregory_coefficients(self.order + 2);
        for k in 1..=self.order {
            let c = h * b[k + 1];
            for j in 0..=k {
                let alt = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                let d = c * alt * binomial(k, j);
                // forward differences at the left end
                w[j] -= d;
                // backward differences at the right end
                w[intervals - j] -= d;
            }
        }
        w
    }
}

type Factory = fn() -> Box<dyn QuadratureRule>;

const RULES: &[(&str, Factory)] = &[
    ("trapezoid", || Box::new(Trapezoid)),
    ("gregory", || Box::new(Gregory::default())),
];

pub fn rule_names() -> impl Iterator<Item = &'static str> {
    RULES.iter().map(|(n, _)| *n)
}

/// Looks a rule up by its scenario name.
pub fn rule_by_name(name: &str) -> Result<Box<dyn QuadratureRule>> {
    RULES.iter().find(|(n, _)| *n == name).map(|(_, f)| f()).ok_or_else(|| {
        Error::InvalidGrid(format!(
            "unknown quadrature rule '{name}' (known: {})",
            rule_names().collect::<Vec<_>>().join(", ")
        ))
    })
}

/// Nodes `xi_j = -L + j h`, `j = 0..=N`, and weights of the chosen rule.
/// `h` is an exact multiple `stride` of the master spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    length: f64,
    intervals: usize,
    stride: usize,
    rule: &'static str,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Smallest interval count accepted by [`make_quadrature`].
pub const MIN_INTERVALS: usize = 4;

/// Trapezoid grid on `[-L, 0]` with `N` intervals.
pub fn make_quadrature(length: f64, intervals: usize, master_spacing: f64) -> Result<QuadratureGrid> {
    make_quadrature_with(length, intervals, master_spacing, &Trapezoid)
}

pub fn make_quadrature_with(
    length: f64,
    intervals: usize,
    master_spacing: f64,
    rule: &dyn QuadratureRule,
) -> Result<QuadratureGrid> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "truncation length must be positive, got {length}"
        )));
    }
    let min = MIN_INTERVALS.max(rule.min_intervals());
    if intervals < min {
        return Err(Error::InvalidGrid(format!(
            "{} quadrature needs at least {min} intervals, got {intervals}",
            rule.name()
        )));
    }
    if !(master_spacing > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "master spacing must be positive, got {master_spacing}"
        )));
    }
    let h = length / intervals as f64;
    let ratio = h / master_spacing;
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-9 * stride {
        return Err(Error::InvalidGrid(format!(
            "quadrature spacing {h} is not an integer multiple of the master spacing {master_spacing}"
        )));
    }
    let nodes = (0..=intervals).map(|j| -length + j as f64 * h).collect();
    Ok(QuadratureGrid {
        length,
        intervals,
        stride: stride as usize,
        rule: rule.name(),
        nodes,
        weights: rule.weights(intervals, h),
    })
}

impl QuadratureGrid {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.intervals as f64
    }

    /// `h / h_x`.
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn rule(&self) -> &'static str {
        self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the node `xi = 0`.
    pub fn origin(&self) -> usize {
        self.intervals
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
