//! Per-frequency linear algebra: the three shear/gradient combinations, the
//! two-frequency split, the `r`-sweep polynomial fit and scalar least squares.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::tensor::TIComponents;

/// Transform values of `C1212 + C1313`, `C1111 − 2C1133 + 4C1313 + C3333`
/// and `C1111 − 2C1133 − 4C1313 + C3333` at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComboTriple {
    pub g1: Complex64,
    pub g2: Complex64,
    pub g3: Complex64,
}

/// `(c1313, m1 = C1111 − C1122, m2 = C1111 − 2C1133 + C3333)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComboSolution {
    pub c1313: Complex64,
    pub m1: Complex64,
    pub m2: Complex64,
}

pub fn combo_solve(g: &ComboTriple) -> ComboSolution {
    let c1313 = (g.g2 - g.g3) / 8.0;
    ComboSolution {
        c1313,
        m1: (g.g1 - c1313) * 2.0,
        m2: (g.g2 + g.g3) / 2.0,
    }
}

pub fn combo_forward(x: &ComboSolution) -> ComboTriple {
    ComboTriple {
        g1: x.m1 / 2.0 + x.c1313,
        g2: x.m2 + x.c1313 * 4.0,
        g3: x.m2 - x.c1313 * 4.0,
    }
}

/// Solve with the `2m1 − m2` combination in place of `g2`, as available at
/// positive frequency.
pub fn combo_solve_with_r9(g1: Complex64, g9: Complex64, g3: Complex64) -> ComboSolution {
    let c1313 = (g1 * 4.0 - g9 - g3) / 8.0;
    ComboSolution {
        c1313,
        m1: (g1 - c1313) * 2.0,
        m2: g3 + c1313 * 4.0,
    }
}

/// Coordinates used by the reconstruction: `c1313`, `m1`, `m2`,
/// `cdiff = C1133 − C1111` and `c1111`.
pub const BASIS_NAMES: [&str; 5] = ["c1313", "m1", "m2", "cdiff", "c1111"];

/// TI components → reconstruction coordinates.
pub fn to_basis(p: &[f64; 5]) -> [f64; 5] {
    let [c1111, c1122, c1133, c1313, c3333] = *p;
    [c1313, c1111 - c1122, c1111 - 2.0 * c1133 + c3333, c1133 - c1111, c1111]
}

/// Reconstruction coordinates → TI components.
pub fn from_basis<T>(b: &[T; 5]) -> [T; 5]
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let [c1313, m1, m2, cdiff, c1111] = *b;
    [c1111, c1111 - m1, c1111 + cdiff, c1313, m2 + c1111 + cdiff * 2.0]
}

/// Coefficients over the TI components → coefficients over the
/// reconstruction coordinates (`K_basis = Tᵀ K_components`).
pub fn coeffs_to_basis(k: &[Complex64; 5]) -> [Complex64; 5] {
    let [k1111, k1122, k1133, k1313, k3333] = *k;
    [k1313, -k1122, k3333, k1133 + k3333 * 2.0, k1111 + k1122 + k1133 + k3333]
}

pub fn components_from_basis(b: &[f64; 5]) -> TIComponents {
    TIComponents::from_array(from_basis(b))
}

/// Solves `[w1², 1; w2², 1]·(A, B) = (gA, gB)`.
pub fn two_frequency_split(ga: Complex64, gb: Complex64, w1: f64, w2: f64) -> Result<(Complex64, Complex64)> {
    let det = w1 * w1 - w2 * w2;
    if !(w1 > 0.0 && w2 > 0.0) {
        return Err(Error::Precondition("frequencies must be positive".into()));
    }
    if det.abs() <= 1e-12 * (w1 * w1).max(w2 * w2) {
        return Err(Error::Singular("the two frequencies coincide".into()));
    }
    let a = (ga - gb) / det;
    let b = ga - a * (w1 * w1);
    Ok((a, b))
}

/// Least-squares fit of `y(r) ≈ Σ_p a_p r^p` over the given powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub powers: Vec<i32>,
    pub coeffs: Vec<Complex64>,
    /// Relative residual `‖Va − y‖/‖y‖` (0 for zero data).
    pub residual: f64,
    /// 2-norm condition number of the scaled design matrix.
    pub condition: f64,
}

impl PolyFit {
    pub fn coeff(&self, p: i32) -> Complex64 {
        self.powers
            .iter()
            .position(|&q| q == p)
            .map_or(ZERO, |i| self.coeffs[i])
    }
}

/// Fits on `r/r_max` for conditioning and rescales the coefficients.
pub fn fit_powers(r: &[f64], y: &[Complex64], powers: &[i32]) -> Result<PolyFit> {
    if r.len() != y.len() || r.len() < powers.len() {
        return Err(Error::Precondition(format!(
            "need at least {} samples for the fit, got {}",
            powers.len(),
            r.len()
        )));
    }
    let rmax = r.iter().cloned().fold(0.0, f64::max);
    if !(rmax > 0.0) {
        return Err(Error::Precondition("sweep needs positive r".into()));
    }
    let n = r.len();
    let m = powers.len();
    let v = DMatrix::<f64>::from_fn(n, m, |i, j| (r[i] / rmax).powi(powers[j]));
    let svd = v.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > 1e12 {
        return Err(Error::Singular(format!("sweep design condition {condition:e}")));
    }
    let yr = DVector::from_iterator(n, y.iter().map(|z| z.re));
    let yi = DVector::from_iterator(n, y.iter().map(|z| z.im));
    let ar = svd.solve(&yr, 0.0).map_err(|e| Error::Singular(e.to_string()))?;
    let ai = svd.solve(&yi, 0.0).map_err(|e| Error::Singular(e.to_string()))?;
    let coeffs: Vec<Complex64> = (0..m)
        .map(|j| Complex64::new(ar[j], ai[j]) / rmax.powi(powers[j]))
        .collect();
    let ynorm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut res = 0.0;
    for i in 0..n {
        let fit: Complex64 = (0..m).map(|j| coeffs[j] * r[i].powi(powers[j])).sum();
        res += (fit - y[i]).norm_sqr();
    }
    let residual = if ynorm > 0.0 { res.sqrt() / ynorm } else { 0.0 };
    Ok(PolyFit {
        powers: powers.to_vec(),
        coeffs,
        residual,
        condition,
    })
}

/// The sweep basis `{r⁴, r³, r², r, 1}`.
pub const SWEEP_POWERS: [i32; 5] = [4, 3, 2, 1, 0];

pub fn fit_sweep(r: &[f64], y: &[Complex64]) -> Result<PolyFit> {
    fit_powers(r, y, &SWEEP_POWERS)
}

/// Scalar least squares `min_x Σ |a_j x − y_j|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarFit {
    pub value: Complex64,
    pub residual: f64,
    /// Euclidean norm of the regressors; small values signal a weak equation.
    pub regressor_norm: f64,
}

pub fn scalar_lsq(a: &[Complex64], y: &[Complex64]) -> Result<ScalarFit> {
    if a.len() != y.len() || a.is_empty() {
        return Err(Error::Precondition("scalar fit needs matching nonempty data".into()));
    }
    let den: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    if !(den > 0.0) {
        return Err(Error::Singular("all regressors vanish".into()));
    }
    let num: Complex64 = a.iter().zip(y).map(|(ai, yi)| ai.conj() * yi).sum();
    let x = num / den;
    let ynorm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let res = a
        .iter()
        .zip(y)
        .map(|(ai, yi)| (ai * x - yi).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(ScalarFit {
        value: x,
        residual: if ynorm > 0.0 { res / ynorm } else { 0.0 },
        regressor_norm: den.sqrt(),
    })
}
