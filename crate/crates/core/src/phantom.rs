//! Smooth compactly supported synthetic perturbations.

use serde::{Deserialize, Serialize};

use crate::linalg::Vec3;
use crate::tensor::{
    DensityPerturbationField, PerturbationSource, SpatialGrid, TIComponents, TIPerturbationField, N_CHANNELS,
};

/// `A·exp(1 − 1/(1 − ρ²))` for `ρ < 1`, zero outside, where
/// `ρ² = Σ ((x_a − c_a)/w_a)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec3,
    pub radii: Vec3,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: Vec3, radius: f64, amplitude: f64) -> Self {
        Self {
            center,
            radii: [radius; 3],
            amplitude,
        }
    }

    #[inline]
    pub fn eval(&self, x: &Vec3) -> f64 {
        let mut rho2 = 0.0;
        for a in 0..3 {
            let u = (x[a] - self.center[a]) / self.radii[a];
            rho2 += u * u;
        }
        if rho2 >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - rho2)).exp()
        }
    }

    /// Support lies inside the closed box.
    pub fn inside(&self, grid: &SpatialGrid) -> bool {
        (0..3).all(|a| (self.center[a] - grid.center[a]).abs() + self.radii[a] <= grid.half_widths[a])
    }
}

/// Sums of bumps per channel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Phantom {
    pub c1111: Vec<Bump>,
    pub c1122: Vec<Bump>,
    pub c1133: Vec<Bump>,
    pub c1313: Vec<Bump>,
    pub c3333: Vec<Bump>,
    pub rho11: Vec<Bump>,
    pub rho33: Vec<Bump>,
}

impl Phantom {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn channel(&self, ch: usize) -> &Vec<Bump> {
        match ch {
            0 => &self.c1111,
            1 => &self.c1122,
            2 => &self.c1133,
            3 => &self.c1313,
            4 => &self.c3333,
            5 => &self.rho11,
            _ => &self.rho33,
        }
    }

    pub fn channel_mut(&mut self, ch: usize) -> &mut Vec<Bump> {
        match ch {
            0 => &mut self.c1111,
            1 => &mut self.c1122,
            2 => &mut self.c1133,
            3 => &mut self.c1313,
            4 => &mut self.c3333,
            5 => &mut self.rho11,
            _ => &mut self.rho33,
        }
    }

    /// Five stiffness fields with distinct centres, radii and amplitudes.
    pub fn default_ti() -> Self {
        Self {
            c1111: vec![
                Bump::new([0.05, -0.03, 0.02], 0.38, 1.0),
                Bump::new([-0.12, 0.10, -0.08], 0.22, 0.35),
            ],
            c1122: vec![Bump::new([-0.08, 0.06, 0.04], 0.34, 0.45)],
            c1133: vec![
                Bump::new([0.10, 0.04, -0.06], 0.32, 0.55),
                Bump::new([-0.10, -0.10, 0.12], 0.2, -0.2),
            ],
            c1313: vec![Bump::new([0.0, -0.08, 0.10], 0.30, 0.3)],
            c3333: vec![
                Bump::new([-0.04, 0.08, -0.05], 0.36, 0.85),
                Bump::new([0.14, -0.12, 0.1], 0.2, 0.25),
            ],
            rho11: Vec::new(),
            rho33: Vec::new(),
        }
    }

    /// Stiffness as in [`Phantom::default_ti`] plus both density fields.
    pub fn default_with_density() -> Self {
        let mut p = Self::default_ti();
        p.rho11 = vec![Bump::new([0.06, 0.05, -0.04], 0.33, 0.6)];
        p.rho33 = vec![
            Bump::new([-0.07, -0.02, 0.06], 0.35, 0.5),
            Bump::new([0.12, 0.12, -0.1], 0.2, 0.2),
        ];
        p
    }

    /// Isotropic perturbation `λ δδ + μ(δδ + δδ)` written in TI channels.
    pub fn isotropic(lambda: &[Bump], mu: &[Bump]) -> Self {
        let scaled = |bs: &[Bump], k: f64| -> Vec<Bump> {
            bs.iter()
                .map(|b| Bump {
                    amplitude: b.amplitude * k,
                    ..*b
                })
                .collect()
        };
        let mut p2 = scaled(lambda, 1.0);
        p2.extend(scaled(mu, 2.0));
        Self {
            c1111: p2.clone(),
            c1122: scaled(lambda, 1.0),
            c1133: scaled(lambda, 1.0),
            c1313: scaled(mu, 1.0),
            c3333: p2,
            rho11: Vec::new(),
            rho33: Vec::new(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for ch in 0..N_CHANNELS {
            for b in out.channel_mut(ch) {
                b.amplitude *= k;
            }
        }
        out
    }

    pub fn has_density(&self) -> bool {
        !self.rho11.is_empty() || !self.rho33.is_empty()
    }

    /// Largest total absolute amplitude over channels.
    pub fn scale(&self) -> f64 {
        (0..N_CHANNELS)
            .map(|ch| self.channel(ch).iter().map(|b| b.amplitude.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn inside(&self, grid: &SpatialGrid) -> bool {
        (0..N_CHANNELS).all(|ch| self.channel(ch).iter().all(|b| b.inside(grid)))
    }

    pub fn eval_channel(&self, ch: usize, x: &Vec3) -> f64 {
        self.channel(ch).iter().map(|b| b.eval(x)).sum()
    }

    pub fn stiffness_field(&self, grid: &SpatialGrid) -> TIPerturbationField {
        TIPerturbationField::from_fn(*grid, |x| {
            TIComponents::new(
                self.eval_channel(0, &x),
                self.eval_channel(1, &x),
                self.eval_channel(2, &x),
                self.eval_channel(3, &x),
                self.eval_channel(4, &x),
            )
        })
    }

    pub fn density_field(&self, grid: &SpatialGrid) -> DensityPerturbationField {
        let pts: Vec<Vec3> = (0..grid.len()).map(|n| grid.point(n)).collect();
        DensityPerturbationField {
            grid: *grid,
            rho11: pts.iter().map(|x| self.eval_channel(5, x)).collect(),
            rho33: pts.iter().map(|x| self.eval_channel(6, x)).collect(),
        }
    }
}

impl PerturbationSource for Phantom {
    fn sample(&self, x: &Vec3) -> [f64; N_CHANNELS] {
        let mut out = [0.0; N_CHANNELS];
        for (ch, v) in out.iter_mut().enumerate() {
            *v = self.eval_channel(ch, x);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compact_and_peaks_at_centre() {
        let b = Bump::new([0.1, 0.0, 0.0], 0.2, 2.0);
        assert!((b.eval(&[0.1, 0.0, 0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(b.eval(&[0.31, 0.0, 0.0]), 0.0);
        assert!(b.eval(&[0.29, 0.0, 0.0]) > 0.0);
    }

    #[test]
    fn default_phantoms_fit_in_unit_cube() {
        let g = SpatialGrid::unit_cube(16);
        assert!(Phantom::default_ti().inside(&g));
        assert!(Phantom::default_with_density().inside(&g));
        assert!(!Phantom::default_ti().has_density());
    }

    #[test]
    fn isotropic_phantom_channels() {
        let lam = [Bump::new([0.0; 3], 0.3, 1.0)];
        let mu = [Bump::new([0.05, 0.0, 0.0], 0.25, 0.5)];
        let p = Phantom::isotropic(&lam, &mu);
        let x = [0.02, 0.01, -0.03];
        let (l, m) = (lam[0].eval(&x), mu[0].eval(&x));
        let s = p.sample(&x);
        assert!((s[0] - (l + 2.0 * m)).abs() < 1e-15);
        assert!((s[1] - l).abs() < 1e-15);
        assert!((s[3] - m).abs() < 1e-15);
        assert!((s[4] - s[0]).abs() < 1e-15);
    }
}
