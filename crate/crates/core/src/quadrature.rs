//! One-dimensional rules and their tensor products on a box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::SpatialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Midpoint,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: Rule,
    pub points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: Rule::GaussLegendre,
            points: 16,
        }
    }
}

impl QuadratureSpec {
    pub fn gauss(points: usize) -> Self {
        Self {
            rule: Rule::GaussLegendre,
            points,
        }
    }

    pub fn midpoint(points: usize) -> Self {
        Self {
            rule: Rule::Midpoint,
            points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let min = match self.rule {
            Rule::GaussLegendre => 2,
            Rule::Midpoint => 8,
        };
        if self.points < min {
            return Err(Error::Config(format!(
                "{:?} rule needs at least {min} points per axis",
                self.rule
            )));
        }
        Ok(())
    }

    /// Largest `|κ|` along an axis of half-width `w` that keeps at least four
    /// nodes per oscillation period of `e^{iκx}`.
    pub fn oscillation_cap(&self, half_width: f64) -> f64 {
        self.points as f64 * std::f64::consts::PI / (4.0 * half_width)
    }

    /// Nodes and weights on `[-1, 1]`.
    pub fn reference(&self) -> (Vec<f64>, Vec<f64>) {
        match self.rule {
            Rule::GaussLegendre => gauss_legendre(self.points),
            Rule::Midpoint => {
                let n = self.points;
                let h = 2.0 / n as f64;
                ((0..n).map(|i| -1.0 + (i as f64 + 0.5) * h).collect(), vec![h; n])
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Per-axis nodes and weights mapped to a box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRule {
    pub nodes: [Vec<f64>; 3],
    pub weights: [Vec<f64>; 3],
}

impl BoxRule {
    pub fn new(spec: &QuadratureSpec, center: [f64; 3], half_widths: [f64; 3]) -> Result<Self> {
        spec.validate()?;
        let (x, w) = spec.reference();
        let map = |a: usize| -> (Vec<f64>, Vec<f64>) {
            (
                x.iter().map(|&u| center[a] + half_widths[a] * u).collect(),
                w.iter().map(|&v| v * half_widths[a]).collect(),
            )
        };
        let (n0, w0) = map(0);
        let (n1, w1) = map(1);
        let (n2, w2) = map(2);
        Ok(Self {
            nodes: [n0, n1, n2],
            weights: [w0, w1, w2],
        })
    }

    pub fn for_grid(spec: &QuadratureSpec, grid: &SpatialGrid) -> Result<Self> {
        Self::new(spec, grid.center, grid.half_widths)
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().map(|v| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node and weight for a flat row-major index.
    pub fn point(&self, flat: usize) -> ([f64; 3], f64) {
        let n1 = self.nodes[1].len();
        let n2 = self.nodes[2].len();
        let k = flat % n2;
        let j = (flat / n2) % n1;
        let i = flat / (n1 * n2);
        (
            [self.nodes[0][i], self.nodes[1][j], self.nodes[2][k]],
            self.weights[0][i] * self.weights[1][j] * self.weights[2][k],
        )
    }

    pub fn integrate<T, F>(&self, f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: Fn(&[f64; 3]) -> T,
    {
        let mut acc = T::default();
        for n in 0..self.len() {
            let (x, w) = self.point(n);
            acc = acc + f(&x) * w;
        }
        acc
    }
}
