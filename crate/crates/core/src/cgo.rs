//! Complex geometrical optics (CGO) solutions of the isotropic Navier system
//! `μ⁰Δu + (λ⁰+μ⁰)∇∇·u + ω²ρ⁰u = 0`.
//!
//! Every solution has the form `U(x) e^{ζ·x}` with `U` either constant or
//! affine in `x`. All derivatives are evaluated in closed form. Phases obey
//! `ζ·ζ = −k²` for the relevant wave number (`k = 0` at zero frequency).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, cadd, cdot, cdot_real, cnorm, cscale, csqrt_real, csub, cvec, dot, mat_cvec, mat_vec, norm, outer, re,
    rotation_x3, scale, CMat3, CVec3, Vec3, I, ZERO,
};
use crate::tensor::IsotropicBackground;

/// The six pair families used by the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// Divergence-free shear pair with amplitude `(0,1,0)`.
    AShear,
    /// `ζ e^{ζ·x}` pair with the `β`, `r` phases.
    BGradient,
    /// Gradient solution against an affine-amplitude solution (zero frequency).
    CAffineRight,
    /// Two affine-amplitude solutions (zero frequency).
    DAffineBoth,
    /// Divergence-free pair with the `ϑ` amplitudes on the shear phases.
    ETheta,
    /// Compressional gradient solution against a shear solution, sharing the
    /// combined phase `2i(s,0,t)`.
    FGradTheta,
}

impl PairKind {
    pub const ALL: [PairKind; 6] = [
        PairKind::AShear,
        PairKind::BGradient,
        PairKind::CAffineRight,
        PairKind::DAffineBoth,
        PairKind::ETheta,
        PairKind::FGradTheta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PairKind::AShear => "a_shear",
            PairKind::BGradient => "b_gradient",
            PairKind::CAffineRight => "c_affine_right",
            PairKind::DAffineBoth => "d_affine_both",
            PairKind::ETheta => "e_theta",
            PairKind::FGradTheta => "f_grad_theta",
        }
    }

    /// Affine amplitudes only exist at zero frequency.
    pub fn zero_frequency_only(self) -> bool {
        matches!(self, PairKind::CAffineRight | PairKind::DAffineBoth)
    }

    pub fn uses_r(self) -> bool {
        matches!(
            self,
            PairKind::BGradient | PairKind::CAffineRight | PairKind::DAffineBoth | PairKind::FGradTheta
        )
    }
}

/// One pair selection: frequency-plane node `(s, t)`, rotation `φ` about
/// `x3`, large parameter `r`, family and frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub s: f64,
    pub t: f64,
    pub phi: f64,
    #[serde(default)]
    pub r: f64,
    pub kind: PairKind,
    #[serde(default)]
    pub omega: f64,
}

impl PairConfig {
    pub fn new(kind: PairKind, s: f64, t: f64, phi: f64, r: f64, omega: f64) -> Self {
        Self {
            s,
            t,
            phi,
            r,
            kind,
            omega,
        }
    }

    /// Frequency `ξ` at which the pair product samples the Fourier transform,
    /// `ξ = −2(s cos φ, s sin φ, t)`.
    pub fn xi(&self) -> Vec3 {
        let (sn, cs) = self.phi.sin_cos();
        [-2.0 * self.s * cs, -2.0 * self.s * sn, -2.0 * self.t]
    }
}

/// Amplitude of a CGO solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    Constant(CVec3),
    /// `(b·x) ζ̂ + c` with `ζ̂ = ζ/|ζ|`.
    Affine {
        b: Vec3,
        c: Vec3,
        unit_phase: CVec3,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgoSolution {
    pub phase: CVec3,
    pub amplitude: Amplitude,
    pub background: IsotropicBackground,
}

fn node_radius(s: f64, t: f64) -> Result<f64> {
    let d2 = s * s + t * t;
    if !(d2 > 0.0) || !d2.is_finite() {
        return Err(Error::DegenerateNode { s, t });
    }
    Ok(d2.sqrt())
}

/// `𝔎 = √(1 − k_s²/d²)`, rejecting the closed evanescent disk.
fn shear_factor(s: f64, t: f64, bg: &IsotropicBackground) -> Result<f64> {
    let d = node_radius(s, t)?;
    let k2 = bg.ks2();
    if d * d <= k2 {
        return Err(Error::Evanescent { d2: d * d, k2 });
    }
    Ok((1.0 - k2 / (d * d)).sqrt())
}

/// Shear phases `ζ⁽¹'²⁾ = i(s,0,t) ± 𝔎(−t,0,s)` and amplitude `a = (0,1,0)`.
pub fn phase_pair_a(s: f64, t: f64, bg: &IsotropicBackground) -> Result<(CVec3, CVec3, CVec3)> {
    let kk = shear_factor(s, t, bg)?;
    let z1 = [c(-kk * t, s), ZERO, c(kk * s, t)];
    let z2 = [c(kk * t, s), ZERO, c(-kk * s, t)];
    let a = [ZERO, c(1.0, 0.0), ZERO];
    Ok((z1, z2, a))
}

/// `β = √(r²/d² − 1 + k_p²/d²)`, principal branch.
pub fn beta(s: f64, t: f64, r: f64, bg: &IsotropicBackground) -> Result<Complex64> {
    let d = node_radius(s, t)?;
    let d2 = d * d;
    Ok(csqrt_real(r * r / d2 - 1.0 + bg.kp2() / d2))
}

/// Compressional phases `(is − iβt, r, it + iβs)` and `(is + iβt, −r, it − iβs)`.
pub fn phase_pair_b(s: f64, t: f64, r: f64, bg: &IsotropicBackground) -> Result<(CVec3, CVec3)> {
    if !(r >= 0.0) {
        return Err(Error::Precondition(format!("r must be non-negative, got {r}")));
    }
    let b = beta(s, t, r, bg)?;
    let ib = I * b;
    let z1 = [c(0.0, s) - ib * t, c(r, 0.0), c(0.0, t) + ib * s];
    let z2 = [c(0.0, s) + ib * t, c(-r, 0.0), c(0.0, t) - ib * s];
    Ok((z1, z2))
}

/// Divergence-free amplitudes `ϑ⁽¹'²⁾ = i(s,0,t)𝔎 ± (−t,0,s)` matching the
/// shear phases.
pub fn amplitude_theta(s: f64, t: f64, bg: &IsotropicBackground) -> Result<(CVec3, CVec3)> {
    let kk = shear_factor(s, t, bg)?;
    let th1 = [c(-t, kk * s), ZERO, c(s, kk * t)];
    let th2 = [c(t, kk * s), ZERO, c(-s, kk * t)];
    Ok((th1, th2))
}

/// Affine amplitude data `b = (λ⁰+μ⁰) Re ζ̂`, `c = −(λ⁰+3μ⁰)/|ζ| Re ζ̂` for a
/// null phase at zero frequency.
pub fn affine_amplitude(zeta: &CVec3, bg: &IsotropicBackground) -> Result<(Vec3, Vec3)> {
    if bg.omega != 0.0 {
        return Err(Error::Precondition(
            "affine amplitudes exist only at zero frequency".into(),
        ));
    }
    let n = cnorm(zeta);
    if !(n > 0.0) {
        return Err(Error::Precondition("phase has zero length".into()));
    }
    let zz = cdot(zeta, zeta);
    if zz.norm() > 1e-10 * n * n {
        return Err(Error::Precondition(format!("affine amplitude needs ζ·ζ = 0, got {zz}")));
    }
    let rh = scale(&re(zeta), 1.0 / n);
    Ok((
        scale(&rh, bg.lambda0 + bg.mu0),
        scale(&rh, -(bg.lambda0 + 3.0 * bg.mu0) / n),
    ))
}

/// Mixed compressional/shear pair with combined phase `2i(s,0,t)`.
///
/// `ζ⁽¹⁾ = i(1+γ)η + iβ(−t,0,s) + r e₂` with `ζ⁽¹⁾·ζ⁽¹⁾ = −k_p²`, and
/// `ζ⁽²⁾ = i(1−γ)η − iβ(−t,0,s) − r e₂` with `ζ⁽²⁾·ζ⁽²⁾ = −k_s²`, where
/// `η = (s,0,t)`, `γ = (k_p² − k_s²)/(4d²)` and
/// `β² = (r² + k_p² − (1+γ)²d²)/d²`. The shear amplitude is
/// `ϑ⁽²⁾ = ζ⁽²⁾ − (k_s²/r) e₂`, orthogonal to `ζ⁽²⁾`.
pub fn phase_pair_mixed(s: f64, t: f64, r: f64, bg: &IsotropicBackground) -> Result<(CVec3, CVec3, CVec3)> {
    let d = node_radius(s, t)?;
    if !(r > 0.0) {
        return Err(Error::Precondition(format!("mixed pair needs r > 0, got {r}")));
    }
    let d2 = d * d;
    let (ks2, kp2) = (bg.ks2(), bg.kp2());
    let gamma = (kp2 - ks2) / (4.0 * d2);
    let b = csqrt_real((r * r + kp2 - (1.0 + gamma).powi(2) * d2) / d2);
    let ib = I * b;
    let (p, m) = (1.0 + gamma, 1.0 - gamma);
    let z1 = [c(0.0, p * s) - ib * t, c(r, 0.0), c(0.0, p * t) + ib * s];
    let z2 = [c(0.0, m * s) + ib * t, c(-r, 0.0), c(0.0, m * t) - ib * s];
    let th2 = [z2[0], z2[1] - ks2 / r, z2[2]];
    Ok((z1, z2, th2))
}

impl CgoSolution {
    pub fn constant(phase: CVec3, a: CVec3, background: IsotropicBackground) -> Self {
        Self {
            phase,
            amplitude: Amplitude::Constant(a),
            background,
        }
    }

    /// Affine-amplitude solution with the canonical `b`, `c`.
    pub fn affine(phase: CVec3, background: IsotropicBackground) -> Result<Self> {
        let (b, cc) = affine_amplitude(&phase, &background)?;
        let n = cnorm(&phase);
        Ok(Self {
            phase,
            amplitude: Amplitude::Affine {
                b,
                c: cc,
                unit_phase: cscale(&phase, c(1.0 / n, 0.0)),
            },
            background,
        })
    }

    #[inline]
    pub fn exponential(&self, x: &Vec3) -> Complex64 {
        cdot_real(&self.phase, x).exp()
    }

    /// Displacement amplitude as `U₀ + Σ_m x_m U₁[m]`.
    pub fn amplitude_poly(&self) -> (CVec3, [CVec3; 3]) {
        match self.amplitude {
            Amplitude::Constant(a) => (a, [[ZERO; 3]; 3]),
            Amplitude::Affine { b, c, unit_phase } => (
                cvec(c),
                [
                    cscale(&unit_phase, b[0].into()),
                    cscale(&unit_phase, b[1].into()),
                    cscale(&unit_phase, b[2].into()),
                ],
            ),
        }
    }

    /// Gradient amplitude `∂_i u_j / e^{ζ·x}` as `G₀ + Σ_m x_m G₁[m]`.
    pub fn gradient_poly(&self) -> (CMat3, [CMat3; 3]) {
        let z = &self.phase;
        match self.amplitude {
            Amplitude::Constant(a) => (outer(z, &a), [[[ZERO; 3]; 3]; 3]),
            Amplitude::Affine { b, c: cc, unit_phase } => {
                let g0 = crate::linalg::mat_add(&outer(&cvec(b), &unit_phase), &outer(z, &cvec(cc)));
                let zz = outer(z, &unit_phase);
                let g1 = [
                    crate::linalg::mat_scale(&zz, b[0].into()),
                    crate::linalg::mat_scale(&zz, b[1].into()),
                    crate::linalg::mat_scale(&zz, b[2].into()),
                ];
                (g0, g1)
            }
        }
    }

    fn amplitude_at(&self, x: &Vec3) -> CVec3 {
        match self.amplitude {
            Amplitude::Constant(a) => a,
            Amplitude::Affine { b, c: cc, unit_phase } => cadd(&cscale(&unit_phase, dot(&b, x).into()), &cvec(cc)),
        }
    }

    pub fn eval_displacement(&self, x: &Vec3) -> CVec3 {
        cscale(&self.amplitude_at(x), self.exponential(x))
    }

    pub fn eval_gradient(&self, x: &Vec3) -> CMat3 {
        let e = self.exponential(x);
        let (g0, g1) = self.gradient_poly();
        let mut g = g0;
        for (m, gm) in g1.iter().enumerate() {
            if x[m] == 0.0 {
                continue;
            }
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] += gm[i][j] * x[m];
                }
            }
        }
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v *= e;
            }
        }
        g
    }

    pub fn eval_divergence(&self, x: &Vec3) -> Complex64 {
        let g = self.eval_gradient(x);
        g[0][0] + g[1][1] + g[2][2]
    }

    /// `μ⁰Δu + (λ⁰+μ⁰)∇∇·u + ω²ρ⁰u` in closed form.
    pub fn navier_residual(&self, x: &Vec3) -> CVec3 {
        let bg = &self.background;
        let z = &self.phase;
        let zz = cdot(z, z);
        let e = self.exponential(x);
        let w2r = bg.omega * bg.omega * bg.rho0;
        let (lap, graddiv) = match self.amplitude {
            Amplitude::Constant(a) => (cscale(&a, zz), cscale(z, cdot(z, &a))),
            Amplitude::Affine { b, c: cc, unit_phase } => {
                let bc = cvec(b);
                let bx = dot(&b, x);
                let amp = cadd(&cscale(&unit_phase, bx.into()), &cvec(cc));
                let lap = cadd(&cscale(&unit_phase, cdot(&bc, z) * 2.0), &cscale(&amp, zz));
                let zu = cdot(z, &unit_phase);
                let inner = cdot(&bc, &unit_phase) + cdot(&cvec(cc), z) + zu * bx;
                (lap, cadd(&cscale(&bc, zu), &cscale(z, inner)))
            }
        };
        let amp = self.amplitude_at(x);
        let mut out = [ZERO; 3];
        for i in 0..3 {
            out[i] = (lap[i] * bg.mu0 + graddiv[i] * (bg.lambda0 + bg.mu0) + amp[i] * w2r) * e;
        }
        out
    }

    /// Magnitude against which the residual at `x` is judged:
    /// `max(λ⁰+2μ⁰, μ⁰)·max(|ζ|², k_s²)·|U(x)|·|e^{ζ·x}|`, with `|U|` including
    /// the derivative part of an affine amplitude.
    pub fn residual_scale(&self, x: &Vec3) -> f64 {
        let bg = &self.background;
        let n = cnorm(&self.phase);
        let amp = match self.amplitude {
            Amplitude::Constant(a) => cnorm(&a),
            Amplitude::Affine { b, c: cc, .. } => norm(&b) * (norm(x) + 1.0 / n.max(1e-300)) + norm(&cc),
        };
        let moduli = (bg.lambda0 + 2.0 * bg.mu0).abs().max(bg.mu0);
        moduli * (n * n).max(bg.ks2()) * amp * self.exponential(x).norm()
    }

    /// Rotates all vector data by the rotation about `x3` through `phi`.
    pub fn rotate_about_x3(&self, phi: f64) -> Self {
        let q = rotation_x3(phi);
        let amplitude = match self.amplitude {
            Amplitude::Constant(a) => Amplitude::Constant(mat_cvec(&q, &a)),
            Amplitude::Affine { b, c: cc, unit_phase } => Amplitude::Affine {
                b: mat_vec(&q, &b),
                c: mat_vec(&q, &cc),
                unit_phase: mat_cvec(&q, &unit_phase),
            },
        };
        Self {
            phase: mat_cvec(&q, &self.phase),
            amplitude,
            background: self.background,
        }
    }
}

/// Builds the `(u, v)` pair for a configuration. The configuration's `omega`
/// replaces the background's frequency.
pub fn build_pair(cfg: &PairConfig, bg: &IsotropicBackground) -> Result<(CgoSolution, CgoSolution)> {
    let bg = bg.at_omega(cfg.omega);
    bg.validate()?;
    let (s, t, r) = (cfg.s, cfg.t, cfg.r);
    if !s.is_finite() || !t.is_finite() || !r.is_finite() || !cfg.phi.is_finite() {
        return Err(Error::Precondition("non-finite pair configuration".into()));
    }
    if cfg.kind.zero_frequency_only() && bg.omega != 0.0 {
        return Err(Error::Precondition(format!(
            "{} pairs exist only at zero frequency",
            cfg.kind.name()
        )));
    }
    let (u, v) = match cfg.kind {
        PairKind::AShear => {
            let (z1, z2, a) = phase_pair_a(s, t, &bg)?;
            (CgoSolution::constant(z1, a, bg), CgoSolution::constant(z2, a, bg))
        }
        PairKind::BGradient => {
            let d = node_radius(s, t)?;
            if bg.omega > 0.0 && d * d <= bg.kp2() {
                return Err(Error::Evanescent {
                    d2: d * d,
                    k2: bg.kp2(),
                });
            }
            let (z1, z2) = phase_pair_b(s, t, r, &bg)?;
            (CgoSolution::constant(z1, z1, bg), CgoSolution::constant(z2, z2, bg))
        }
        PairKind::CAffineRight => {
            let (z1, z2) = phase_pair_b(s, t, r, &bg)?;
            (CgoSolution::constant(z1, z1, bg), CgoSolution::affine(z2, bg)?)
        }
        PairKind::DAffineBoth => {
            let (z1, z2) = phase_pair_b(s, t, r, &bg)?;
            (CgoSolution::affine(z1, bg)?, CgoSolution::affine(z2, bg)?)
        }
        PairKind::ETheta => {
            let (z1, z2, _) = phase_pair_a(s, t, &bg)?;
            let (th1, th2) = amplitude_theta(s, t, &bg)?;
            (CgoSolution::constant(z1, th1, bg), CgoSolution::constant(z2, th2, bg))
        }
        PairKind::FGradTheta => {
            if bg.omega > 0.0 {
                shear_factor(s, t, &bg)?;
            }
            let (z1, z2, th2) = phase_pair_mixed(s, t, r, &bg)?;
            (CgoSolution::constant(z1, z1, bg), CgoSolution::constant(z2, th2, bg))
        }
    };
    if cfg.phi == 0.0 {
        Ok((u, v))
    } else {
        Ok((u.rotate_about_x3(cfg.phi), v.rotate_about_x3(cfg.phi)))
    }
}

/// Sum of the two phases of a pair.
pub fn combined_phase(u: &CgoSolution, v: &CgoSolution) -> CVec3 {
    cadd(&u.phase, &v.phase)
}

/// `|a − b|` in the Hermitian norm.
pub fn cdist(a: &CVec3, b: &CVec3) -> f64 {
    cnorm(&csub(a, b))
}
