//! Fourier grids of the reconstruction coordinates, infill of masked modes
//! and the inverse transform onto a spatial grid.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::plan::mirror_mode;
use super::stages::N_UNKNOWNS;
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::tensor::SpatialGrid;

/// Values on the full half-shifted mode cube `−n/2 ≤ m_a < n/2`, at
/// frequencies `dxi·(m + ½)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboGrid {
    pub n: usize,
    pub dxi: f64,
    pub values: Vec<[Complex64; N_UNKNOWNS]>,
    pub known: Vec<bool>,
}

impl ComboGrid {
    pub fn zeros(n: usize, dxi: f64) -> Self {
        Self {
            n,
            dxi,
            values: vec![[ZERO; N_UNKNOWNS]; n * n * n],
            known: vec![false; n * n * n],
        }
    }

    fn half(&self) -> i32 {
        (self.n / 2) as i32
    }

    pub fn flat(&self, m: [i32; 3]) -> usize {
        let n = self.n as i32;
        let o = self.half();
        (((m[0] + o) * n + (m[1] + o)) * n + (m[2] + o)) as usize
    }

    pub fn index(&self, flat: usize) -> [i32; 3] {
        let n = self.n;
        let o = self.half();
        [
            (flat / (n * n)) as i32 - o,
            ((flat / n) % n) as i32 - o,
            (flat % n) as i32 - o,
        ]
    }

    pub fn contains(&self, m: [i32; 3]) -> bool {
        m.iter().all(|v| *v >= -self.half() && *v < self.half())
    }

    /// Stores a value and its conjugate at the mirrored mode.
    pub fn set_pair(&mut self, m: [i32; 3], v: [Complex64; N_UNKNOWNS]) {
        let a = self.flat(m);
        let b = self.flat(mirror_mode(m));
        self.values[a] = v;
        self.values[b] = v.map(|z| z.conj());
        self.known[a] = true;
        self.known[b] = true;
    }

    pub fn get(&self, m: [i32; 3]) -> [Complex64; N_UNKNOWNS] {
        self.values[self.flat(m)]
    }

    /// Largest `|F(m) − conj F(−m)|` relative to the largest value.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for f in 0..self.values.len() {
            let g = self.flat(mirror_mode(self.index(f)));
            for u in 0..N_UNKNOWNS {
                worst = worst.max((self.values[f][u] - self.values[g][u].conj()).norm());
                scale = scale.max(self.values[f][u].norm());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Fills every unknown mode by a local quadratic least-squares fit over
    /// the known modes within a Chebyshev radius of two, keeping conjugate
    /// symmetry. Returns the number of filled modes.
    pub fn infill(&mut self) -> Result<usize> {
        let missing: Vec<usize> = (0..self.values.len()).filter(|&f| !self.known[f]).collect();
        let mut filled = Vec::new();
        for &f in &missing {
            let m = self.index(f);
            let mirror = mirror_mode(m);
            if m > mirror && !self.known[self.flat(mirror)] {
                continue;
            }
            filled.push((m, self.local_fit(m)?));
        }
        let count = missing.len();
        for (m, v) in filled {
            self.set_pair(m, v);
        }
        Ok(count)
    }

    fn local_fit(&self, m: [i32; 3]) -> Result<[Complex64; N_UNKNOWNS]> {
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        for radius in 2..=3 {
            rows.clear();
            vals.clear();
            for di in -radius..=radius {
                for dj in -radius..=radius {
                    for dk in -radius..=radius {
                        let q = [m[0] + di, m[1] + dj, m[2] + dk];
                        if !self.contains(q) || !self.known[self.flat(q)] {
                            continue;
                        }
                        let (x, y, z) = (di as f64, dj as f64, dk as f64);
                        rows.push([1.0, x, y, z, x * x, x * y, x * z, y * y, y * z, z * z]);
                        vals.push(self.get(q));
                    }
                }
            }
            if rows.len() >= 20 {
                break;
            }
        }
        if rows.len() < 10 {
            return Err(Error::Singular(format!("too few known neighbours around {m:?}")));
        }
        let a = DMatrix::from_fn(rows.len(), 10, |i, j| rows[i][j]);
        let svd = a.svd(true, true);
        let mut out = [ZERO; N_UNKNOWNS];
        for u in 0..N_UNKNOWNS {
            let re = DVector::from_iterator(rows.len(), vals.iter().map(|v| v[u].re));
            let im = DVector::from_iterator(rows.len(), vals.iter().map(|v| v[u].im));
            let cr = svd.solve(&re, 1e-10).map_err(|e| Error::Singular(e.to_string()))?;
            let ci = svd.solve(&im, 1e-10).map_err(|e| Error::Singular(e.to_string()))?;
            out[u] = Complex64::new(cr[0], ci[0]);
        }
        Ok(out)
    }

    /// `f(x) = L⁻³ Σ_m F(ξ_m) e^{iξ_m·x}` on the grid for each unknown.
    /// Also returns the largest imaginary part relative to the largest real
    /// part.
    pub fn inverse(&self, grid: &SpatialGrid) -> (Vec<Vec<f64>>, f64) {
        let n = self.n;
        let period = 2.0 * std::f64::consts::PI / self.dxi;
        let norm = period.powi(-3);
        let phases: Vec<Vec<Complex64>> = (0..3)
            .map(|a| {
                let mut v = Vec::with_capacity(grid.nodes[a] * n);
                for i in 0..grid.nodes[a] {
                    let x = grid.axis_coord(a, i);
                    for k in 0..n {
                        let xi = self.dxi * (k as f64 - self.half() as f64 + 0.5);
                        v.push(Complex64::from_polar(1.0, xi * x));
                    }
                }
                v
            })
            .collect();
        let [nx, ny, nz] = grid.nodes;
        let mut out = vec![vec![0.0; grid.len()]; N_UNKNOWNS];
        let mut imag = 0.0f64;
        let mut real = 0.0f64;
        for u in 0..N_UNKNOWNS {
            // Contract the last axis, then the middle, then the first.
            let mut t1 = vec![ZERO; n * n * nz];
            for a in 0..n * n {
                for iz in 0..nz {
                    let ph = &phases[2][iz * n..(iz + 1) * n];
                    let mut acc = ZERO;
                    for k in 0..n {
                        acc += self.values[a * n + k][u] * ph[k];
                    }
                    t1[a * nz + iz] = acc;
                }
            }
            let mut t2 = vec![ZERO; n * ny * nz];
            for i in 0..n {
                for iy in 0..ny {
                    let ph = &phases[1][iy * n..(iy + 1) * n];
                    for iz in 0..nz {
                        let mut acc = ZERO;
                        for j in 0..n {
                            acc += t1[(i * n + j) * nz + iz] * ph[j];
                        }
                        t2[(i * ny + iy) * nz + iz] = acc;
                    }
                }
            }
            for ix in 0..nx {
                let ph = &phases[0][ix * n..(ix + 1) * n];
                for iy in 0..ny {
                    for iz in 0..nz {
                        let mut acc = ZERO;
                        for i in 0..n {
                            acc += t2[(i * ny + iy) * nz + iz] * ph[i];
                        }
                        let v = acc * norm;
                        out[u][grid.flat(ix, iy, iz)] = v.re;
                        imag = imag.max(v.im.abs());
                        real = real.max(v.re.abs());
                    }
                }
            }
        }
        (out, if real > 0.0 { imag / real } else { 0.0 })
    }
}

/// Inverse transform of the three tier-one grids into spatial
/// `c1313`, `m1` and `m2` fields.
pub fn stage3_combo_fields(grid: &ComboGrid, spatial: &SpatialGrid) -> [Vec<f64>; 3] {
    let (mut f, _) = grid.inverse(spatial);
    f.truncate(3);
    let m2 = f.pop().expect("three fields");
    let m1 = f.pop().expect("three fields");
    let c1313 = f.pop().expect("three fields");
    [c1313, m1, m2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn filled(n: usize, f: impl Fn([f64; 3]) -> Complex64) -> ComboGrid {
        let mut g = ComboGrid::zeros(n, std::f64::consts::PI);
        for flat in 0..g.values.len() {
            let m = g.index(flat);
            let v = f(m.map(|v| v as f64 + 0.5));
            g.values[flat] = [v; N_UNKNOWNS];
            g.known[flat] = true;
        }
        g
    }

    #[test]
    fn index_round_trip() {
        let g = ComboGrid::zeros(6, 1.0);
        for f in 0..g.values.len() {
            assert_eq!(g.flat(g.index(f)), f);
            assert!(g.contains(mirror_mode(g.index(f))));
        }
    }

    #[test]
    fn zero_grid_gives_zero_fields() {
        let g = ComboGrid::zeros(6, std::f64::consts::PI);
        let fields = stage3_combo_fields(&g, &SpatialGrid::unit_cube(5));
        assert!(fields.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn spike_gives_plane_wave() {
        let mut g = ComboGrid::zeros(6, std::f64::consts::PI);
        let amp = c(0.6, -0.3);
        g.set_pair([1, 0, 2], [amp; N_UNKNOWNS]);
        let sp = SpatialGrid::unit_cube(6);
        let (f, imag) = g.inverse(&sp);
        assert!(imag < 1e-14);
        for n in 0..sp.len() {
            let x = sp.point(n);
            let arg = std::f64::consts::PI * (1.5 * x[0] + 0.5 * x[1] + 2.5 * x[2]);
            let want = 2.0 * (amp * Complex64::from_polar(1.0, arg)).re / 8.0;
            assert!((f[0][n] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn infill_reproduces_quadratics_and_keeps_symmetry() {
        let q = |m: [f64; 3]| c(1.0 + 0.2 * m[0] * m[0] - 0.1 * m[1] * m[2], 0.3 * m[0]);
        let mut g = filled(8, q);
        for m in [[0, 0, 0], [-1, -1, -1], [0, 0, 1], [-1, -1, -2], [2, -1, 0]] {
            let f = g.flat(m);
            g.known[f] = false;
            g.values[f] = [ZERO; N_UNKNOWNS];
        }
        assert_eq!(g.infill().unwrap(), 5);
        for m in [[0, 0, 1], [2, -1, 0], [-3, 0, -1]] {
            let want = q(m.map(|v| v as f64 + 0.5));
            assert!((g.get(m)[0] - want).norm() < 1e-10);
        }
        assert!(g.symmetry_defect() < 1e-14);
    }
}
