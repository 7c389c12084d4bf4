//! Elastic tensors, the transversely isotropic (TI) parametrization, and
//! perturbation fields sampled on a box grid.
//!
//! The symmetry axis of every TI object in this crate is `x3`. A general
//! known axis is handled by rotating inputs beforehand.

use nalgebra::{Matrix6, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{rotation_x3, transpose, CMat3, Mat3, Vec3, ZERO};

/// Homogeneous isotropic background `(λ⁰, μ⁰, ρ⁰)` at angular frequency `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicBackground {
    pub lambda0: f64,
    pub mu0: f64,
    pub rho0: f64,
    pub omega: f64,
}

impl Default for IsotropicBackground {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            mu0: 1.0,
            rho0: 1.0,
            omega: 0.0,
        }
    }
}

impl IsotropicBackground {
    pub fn new(lambda0: f64, mu0: f64, rho0: f64, omega: f64) -> Result<Self> {
        let bg = Self {
            lambda0,
            mu0,
            rho0,
            omega,
        };
        bg.validate()?;
        Ok(bg)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.lambda0, self.mu0, self.rho0, self.omega]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidBackground("non-finite parameter".into()));
        }
        if self.mu0 <= 0.0 || 3.0 * self.lambda0 + 2.0 * self.mu0 <= 0.0 {
            return Err(Error::InvalidBackground(format!(
                "Lamé parameters must satisfy mu0 > 0 and 3 lambda0 + 2 mu0 > 0 (got {}, {})",
                self.lambda0, self.mu0
            )));
        }
        if self.rho0 <= 0.0 {
            return Err(Error::InvalidBackground("rho0 must be positive".into()));
        }
        if self.omega < 0.0 {
            return Err(Error::InvalidBackground("omega must be non-negative".into()));
        }
        Ok(())
    }

    /// Same medium at another frequency.
    pub fn at_omega(&self, omega: f64) -> Self {
        Self { omega, ..*self }
    }

    /// Shear wave number squared, `ω²ρ⁰/μ⁰`.
    pub fn ks2(&self) -> f64 {
        self.omega * self.omega * self.rho0 / self.mu0
    }

    /// Compressional wave number squared, `ω²ρ⁰/(λ⁰+2μ⁰)`.
    pub fn kp2(&self) -> f64 {
        self.omega * self.omega * self.rho0 / (self.lambda0 + 2.0 * self.mu0)
    }

    /// Same background up to a relative tolerance.
    pub fn matches(&self, other: &Self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        close(self.lambda0, other.lambda0)
            && close(self.mu0, other.mu0)
            && close(self.rho0, other.rho0)
            && close(self.omega, other.omega)
    }
}

#[inline]
fn idx(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 3 + j) * 3 + k) * 3 + l
}

/// Full rank-4 tensor with minor and major symmetry.
///
/// Every write goes through all eight symmetry images, so the symmetry holds
/// bitwise for any tensor this type hands out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StiffnessTensor {
    c: [f64; 81],
}

impl Default for StiffnessTensor {
    fn default() -> Self {
        Self::zero()
    }
}

impl StiffnessTensor {
    pub fn zero() -> Self {
        Self { c: [0.0; 81] }
    }

    /// Builds a tensor by evaluating `f` once per symmetry class at its
    /// canonical representative.
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in i..3 {
                for k in 0..3 {
                    for l in k..3 {
                        if (i, j) <= (k, l) {
                            t.set(i, j, k, l, f(i, j, k, l));
                        }
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c[idx(i, j, k, l)]
    }

    /// Writes `v` to `(i,j,k,l)` and all its symmetry images.
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        for (a, b) in [(i, j), (j, i)] {
            for (p, q) in [(k, l), (l, k)] {
                self.c[idx(a, b, p, q)] = v;
                self.c[idx(p, q, a, b)] = v;
            }
        }
    }

    /// Components in one-based notation, e.g. `voigt(1, 2, 1, 2)` is `C1212`.
    pub fn comp(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.get(i - 1, j - 1, k - 1, l - 1)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.c
            .iter()
            .zip(other.c.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `Q_ip Q_jq Q_kr Q_ls C_pqrs`; rejects `Q` unless `QᵀQ = I` to 1e-10.
    pub fn rotate(&self, q: &Mat3) -> Result<Self> {
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| q[k][i] * q[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((s - target).abs());
            }
        }
        if dev > 1e-10 {
            return Err(Error::NotOrthogonal(dev));
        }
        // Contract one index at a time: 4 * 3^5 operations.
        let mut a = self.c;
        for axis in 0..4 {
            let mut b = [0.0; 81];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            let mut s = 0.0;
                            for p in 0..3 {
                                let (src, w) = match axis {
                                    0 => (idx(p, j, k, l), q[i][p]),
                                    1 => (idx(i, p, k, l), q[j][p]),
                                    2 => (idx(i, j, p, l), q[k][p]),
                                    _ => (idx(i, j, k, p), q[l][p]),
                                };
                                s += w * a[src];
                            }
                            b[idx(i, j, k, l)] = s;
                        }
                    }
                }
            }
            a = b;
        }
        Ok(Self::from_fn(|i, j, k, l| a[idx(i, j, k, l)]))
    }

    /// `Σ C_ijkl G_ij H_kl`.
    pub fn contract(&self, g: &CMat3, h: &CMat3) -> Complex64 {
        let mut acc = ZERO;
        for i in 0..3 {
            for j in 0..3 {
                let gij = g[i][j];
                if gij == ZERO {
                    continue;
                }
                let mut inner = ZERO;
                for k in 0..3 {
                    for l in 0..3 {
                        let cv = self.c[idx(i, j, k, l)];
                        if cv != 0.0 {
                            inner += h[k][l] * cv;
                        }
                    }
                }
                acc += gij * inner;
            }
        }
        acc
    }

    /// Minimum of `ε ↦ C_ijkl ε_ij ε_kl` over unit-Frobenius symmetric `ε`.
    ///
    /// Uses the orthonormal (Mandel) 6×6 representation, where the
    /// off-diagonal basis elements carry a factor `1/√2`.
    pub fn positivity_margin(&self) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        let pairs = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
        let weight = |a: usize| if a < 3 { 1.0 } else { s2 };
        let m = Matrix6::from_fn(|a, b| {
            let (i, j) = pairs[a];
            let (k, l) = pairs[b];
            weight(a) * weight(b) * self.get(i, j, k, l)
        });
        let eig = SymmetricEigen::new(m);
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Invariance under the three coordinate reflections and a sample of
    /// rotations about `x3` (twelve angles, including `π/2`).
    pub fn check_ti_invariance(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        let mut qs: Vec<Mat3> = (0..3)
            .map(|a| {
                let mut q = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                q[a][a] = -1.0;
                q
            })
            .collect();
        for k in 1..=12 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 12.0 + 0.05 * (k % 3) as f64;
            qs.push(rotation_x3(theta));
        }
        qs.push(rotation_x3(std::f64::consts::FRAC_PI_2));
        qs.iter().all(|q| match self.rotate(q) {
            Ok(r) => r.max_abs_diff(self) <= tol * scale,
            Err(_) => false,
        })
    }
}

/// The five independent components of a TI tensor with axis `x3`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TIComponents {
    pub c1111: f64,
    pub c1122: f64,
    pub c1133: f64,
    pub c1313: f64,
    pub c3333: f64,
}

impl TIComponents {
    pub const NAMES: [&'static str; 5] = ["c1111", "c1122", "c1133", "c1313", "c3333"];

    pub fn new(c1111: f64, c1122: f64, c1133: f64, c1313: f64, c3333: f64) -> Self {
        Self {
            c1111,
            c1122,
            c1133,
            c1313,
            c3333,
        }
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.c1111, self.c1122, self.c1133, self.c1313, self.c3333]
    }

    /// `C1212 = (C1111 − C1122)/2`.
    pub fn c1212(&self) -> f64 {
        0.5 * (self.c1111 - self.c1122)
    }

    /// Expands to the full tensor using the four TI linear relations.
    pub fn expand(&self) -> StiffnessTensor {
        let mut t = StiffnessTensor::zero();
        t.set(0, 0, 0, 0, self.c1111);
        t.set(1, 1, 1, 1, self.c1111);
        t.set(2, 2, 2, 2, self.c3333);
        t.set(0, 0, 1, 1, self.c1122);
        t.set(0, 0, 2, 2, self.c1133);
        t.set(1, 1, 2, 2, self.c1133);
        t.set(0, 1, 0, 1, self.c1212());
        t.set(0, 2, 0, 2, self.c1313);
        t.set(1, 2, 1, 2, self.c1313);
        t
    }
}

pub fn ti_expand(p: TIComponents) -> StiffnessTensor {
    p.expand()
}

/// `λ δ_ij δ_kl + μ (δ_ik δ_jl + δ_il δ_jk)`.
pub fn isotropic_expand(lambda: f64, mu: f64) -> StiffnessTensor {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    StiffnessTensor::from_fn(|i, j, k, l| lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k)))
}

/// Isotropic Lamé pair written as TI components.
pub fn isotropic_components(lambda: f64, mu: f64) -> TIComponents {
    TIComponents::new(lambda + 2.0 * mu, lambda, lambda, mu, lambda + 2.0 * mu)
}

pub fn rotate_tensor(c: &StiffnessTensor, q: &Mat3) -> Result<StiffnessTensor> {
    c.rotate(q)
}

pub fn rotate_tensor_back(c: &StiffnessTensor, q: &Mat3) -> Result<StiffnessTensor> {
    c.rotate(&transpose(q))
}

/// Axis-aligned box with a regular node lattice (endpoints included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub center: Vec3,
    pub half_widths: Vec3,
    pub nodes: [usize; 3],
}

impl Default for SpatialGrid {
    fn default() -> Self {
        Self::unit_cube(16)
    }
}

impl SpatialGrid {
    pub fn new(center: Vec3, half_widths: Vec3, nodes: [usize; 3]) -> Result<Self> {
        let g = Self {
            center,
            half_widths,
            nodes,
        };
        g.validate()?;
        Ok(g)
    }

    /// Unit cube centred at the origin with `n` nodes per axis.
    pub fn unit_cube(n: usize) -> Self {
        Self {
            center: [0.0; 3],
            half_widths: [0.5; 3],
            nodes: [n; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_widths.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Config("grid half-widths must be positive".into()));
        }
        if self.nodes.iter().any(|&n| n < 2) {
            return Err(Error::Config("grid needs at least 2 nodes per axis".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_widths[axis] / (self.nodes[axis] - 1) as f64
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        self.center[axis] - self.half_widths[axis] + i as f64 * self.spacing(axis)
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nodes[1] + j) * self.nodes[2] + k
    }

    pub fn point(&self, flat: usize) -> Vec3 {
        let k = flat % self.nodes[2];
        let j = (flat / self.nodes[2]) % self.nodes[1];
        let i = flat / (self.nodes[1] * self.nodes[2]);
        [self.axis_coord(0, i), self.axis_coord(1, j), self.axis_coord(2, k)]
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..3).all(|a| (x[a] - self.center[a]).abs() <= self.half_widths[a] * (1.0 + 1e-12))
    }

    /// Trilinear interpolation of node values; zero outside the box.
    pub fn interpolate(&self, values: &[f64], x: &Vec3) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let u = (x[a] - (self.center[a] - self.half_widths[a])) / self.spacing(a);
            let i = (u.floor().max(0.0) as usize).min(self.nodes[a] - 2);
            base[a] = i;
            frac[a] = (u - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let o = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let mut w = 1.0;
            for a in 0..3 {
                w *= if o[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += w * values[self.flat(base[0] + o[0], base[1] + o[1], base[2] + o[2])];
            }
        }
        acc
    }
}

/// Nodal samples of the five TI stiffness components.
#[derive(Debug, Clone, PartialEq)]
pub struct TIPerturbationField {
    pub grid: SpatialGrid,
    pub values: Vec<TIComponents>,
}

impl TIPerturbationField {
    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            values: vec![TIComponents::default(); grid.len()],
        }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(Vec3) -> TIComponents) -> Self {
        let values = (0..grid.len()).map(|n| f(grid.point(n))).collect();
        Self { grid, values }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.values.len() != self.grid.len() {
            return Err(Error::Mismatch("stiffness value count does not match grid".into()));
        }
        if self.values.iter().any(|v| v.to_array().iter().any(|x| !x.is_finite())) {
            return Err(Error::Precondition("non-finite stiffness value".into()));
        }
        Ok(())
    }

    pub fn component(&self, which: usize) -> Vec<f64> {
        self.values.iter().map(|v| v.to_array()[which]).collect()
    }
}

/// Nodal samples of `δρ = diag(ρ11, ρ11, ρ33)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPerturbationField {
    pub grid: SpatialGrid,
    pub rho11: Vec<f64>,
    pub rho33: Vec<f64>,
}

impl DensityPerturbationField {
    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            rho11: vec![0.0; grid.len()],
            rho33: vec![0.0; grid.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.rho11.len() != self.grid.len() || self.rho33.len() != self.grid.len() {
            return Err(Error::Mismatch("density value count does not match grid".into()));
        }
        if self.rho11.iter().chain(&self.rho33).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("non-finite density value".into()));
        }
        Ok(())
    }
}

/// Number of scalar perturbation channels: five stiffness components then
/// `ρ11`, `ρ33`.
pub const N_CHANNELS: usize = 7;
pub const CHANNEL_NAMES: [&str; N_CHANNELS] = ["c1111", "c1122", "c1133", "c1313", "c3333", "rho11", "rho33"];

/// Anything that can be sampled pointwise as the seven perturbation channels.
pub trait PerturbationSource: Sync {
    fn sample(&self, x: &Vec3) -> [f64; N_CHANNELS];
}

/// Grid-backed perturbation evaluated by trilinear interpolation.
#[derive(Debug, Clone)]
pub struct GridPerturbation {
    pub stiffness: TIPerturbationField,
    pub density: Option<DensityPerturbationField>,
    channels: Vec<Vec<f64>>,
}

impl GridPerturbation {
    pub fn new(stiffness: TIPerturbationField, density: Option<DensityPerturbationField>) -> Result<Self> {
        stiffness.validate()?;
        let mut channels: Vec<Vec<f64>> = (0..5).map(|c| stiffness.component(c)).collect();
        if let Some(d) = &density {
            d.validate()?;
            if d.grid != stiffness.grid {
                return Err(Error::Mismatch("density and stiffness grids differ".into()));
            }
            channels.push(d.rho11.clone());
            channels.push(d.rho33.clone());
        }
        Ok(Self {
            stiffness,
            density,
            channels,
        })
    }
}

impl PerturbationSource for GridPerturbation {
    fn sample(&self, x: &Vec3) -> [f64; N_CHANNELS] {
        let g = &self.stiffness.grid;
        let mut out = [0.0; N_CHANNELS];
        for (c, vals) in self.channels.iter().enumerate() {
            out[c] = g.interpolate(vals, x);
        }
        out
    }
}

/// Spatially constant perturbation (used with the closed-form oracle).
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantPerturbation {
    pub stiffness: TIComponents,
    pub density: Option<(f64, f64)>,
}

impl PerturbationSource for ConstantPerturbation {
    fn sample(&self, _x: &Vec3) -> [f64; N_CHANNELS] {
        let s = self.stiffness.to_array();
        let (r11, r33) = self.density.unwrap_or((0.0, 0.0));
        [s[0], s[1], s[2], s[3], s[4], r11, r33]
    }
}
