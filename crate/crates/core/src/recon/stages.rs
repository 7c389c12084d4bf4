//! Per-node stages.
//!
//! Unknowns are the transforms of the reconstruction coordinates
//! `[c1313, m1, m2, cdiff, c1111, rho11, rho33]`. Every stage after the first
//! two is an exact linear regression: the integrand of each pair is expanded
//! over these coordinates and monomials, the contributions of already known
//! quantities (including their moments) are subtracted, and the remaining
//! target coefficient is fitted by scalar least squares.

use num_complex::Complex64;

use crate::cgo::PairConfig;
use crate::combo::{
    coeffs_to_basis, combo_solve, combo_solve_with_r9, fit_sweep, scalar_lsq, two_frequency_split, ComboSolution,
    ComboTriple, PolyFit, ScalarFit,
};
use crate::dn_form::{PairIntegrand, N_MONO};
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::tensor::IsotropicBackground;

pub const N_UNKNOWNS: usize = 7;
pub const UNKNOWN_NAMES: [&str; N_UNKNOWNS] = ["c1313", "m1", "m2", "cdiff", "c1111", "rho11", "rho33"];
pub const U_C1313: usize = 0;
pub const U_M1: usize = 1;
pub const U_M2: usize = 2;
pub const U_CDIFF: usize = 3;
pub const U_C1111: usize = 4;
pub const U_RHO11: usize = 5;
pub const U_RHO33: usize = 6;

/// `k[u][mono]` multiplies `∫ f_u x^α e^{−iξ·x} dx`.
pub type BasisCoeffs = [[Complex64; N_MONO]; N_UNKNOWNS];

pub fn basis_integrand(cfg: &PairConfig, bg: &IsotropicBackground) -> Result<BasisCoeffs> {
    let it = PairIntegrand::from_config(cfg, bg)?;
    let mut out = [[ZERO; N_MONO]; N_UNKNOWNS];
    for k in 0..N_MONO {
        let st: [Complex64; 5] = std::array::from_fn(|ch| it.coeffs[ch][k]);
        let b = coeffs_to_basis(&st);
        for u in 0..5 {
            out[u][k] = b[u];
        }
        out[U_RHO11][k] = it.coeffs[5][k];
        out[U_RHO33][k] = it.coeffs[6][k];
    }
    Ok(out)
}

/// Moments of the known unknowns at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownMoments {
    pub m: BasisCoeffs,
    pub known: [bool; N_UNKNOWNS],
}

impl Default for KnownMoments {
    fn default() -> Self {
        Self {
            m: [[ZERO; N_MONO]; N_UNKNOWNS],
            known: [false; N_UNKNOWNS],
        }
    }
}

impl KnownMoments {
    /// Marks `u` known with only its plain transform.
    pub fn set_value(&mut self, u: usize, v: Complex64) {
        self.m[u] = [ZERO; N_MONO];
        self.m[u][0] = v;
        self.known[u] = true;
    }

    pub fn set_moments(&mut self, u: usize, m: [Complex64; N_MONO]) {
        self.m[u] = m;
        self.known[u] = true;
    }

    pub fn values(&self) -> [Complex64; N_UNKNOWNS] {
        std::array::from_fn(|u| self.m[u][0])
    }
}

/// Regresses `target` on pair values after removing every known
/// contribution. Coefficients on unknowns that are neither known nor the
/// target must vanish, and so must the target's moment coefficients.
pub fn exact_regression(
    cfgs: &[PairConfig],
    values: &[Complex64],
    bg: &IsotropicBackground,
    known: &KnownMoments,
    target: usize,
) -> Result<ScalarFit> {
    let mut a = Vec::with_capacity(cfgs.len());
    let mut y = Vec::with_capacity(cfgs.len());
    for (cfg, v) in cfgs.iter().zip(values) {
        let k = basis_integrand(cfg, bg)?;
        let scale = k.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let mut rhs = *v;
        for u in 0..N_UNKNOWNS {
            if u == target {
                if k[u][1..].iter().any(|z| z.norm() > 1e-12 * scale) {
                    return Err(Error::Precondition(format!(
                        "{} enters a {} pair through its moments",
                        UNKNOWN_NAMES[u],
                        cfg.kind.name()
                    )));
                }
                continue;
            }
            if known.known[u] {
                for (c, m) in k[u].iter().zip(&known.m[u]) {
                    rhs -= c * m;
                }
            } else if k[u].iter().any(|z| z.norm() > 1e-12 * scale) {
                return Err(Error::Precondition(format!(
                    "{} is unknown but enters a {} pair",
                    UNKNOWN_NAMES[u],
                    cfg.kind.name()
                )));
            }
        }
        a.push(k[target][0]);
        y.push(rhs);
    }
    scalar_lsq(&a, &y)
}

/// Static shear pair: `A = −(s² + t²)·g1`.
pub fn stage1_shear_combo(a: Complex64, s: f64, t: f64) -> Result<Complex64> {
    let d2 = s * s + t * t;
    if !(d2 > 0.0) {
        return Err(Error::DegenerateNode { s, t });
    }
    Ok(a / (-d2))
}

/// Shear pairs at two frequencies: returns `g1` and the `ω²` part.
pub fn stage1_shear_split(a: [Complex64; 2], omegas: [f64; 2], s: f64, t: f64) -> Result<(Complex64, Complex64)> {
    let (w2part, w0part) = two_frequency_split(a[0], a[1], omegas[0], omegas[1])?;
    Ok((stage1_shear_combo(w0part, s, t)?, w2part))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCombos {
    pub g2: Complex64,
    pub g3: Complex64,
    pub fit: PolyFit,
}

fn s4_over_d4(s: f64, t: f64) -> Result<f64> {
    let d2 = s * s + t * t;
    let q = (s * s / d2).powi(2);
    if !(q > 1e-8) {
        return Err(Error::Singular(format!("s⁴/d⁴ = {q:e} at (s, t) = ({s}, {t})")));
    }
    Ok(q)
}

/// Static gradient pairs: `g2` from the `r = 0` pair, `g3` from the `r⁴`
/// coefficient of the sweep.
pub fn stage2_gradient_combos(
    degenerate: Complex64,
    r: &[f64],
    sweep: &[Complex64],
    s: f64,
    t: f64,
) -> Result<GradientCombos> {
    let d2 = s * s + t * t;
    let fit = fit_sweep(r, sweep)?;
    let g3 = fit.coeff(4) / s4_over_d4(s, t)?;
    Ok(GradientCombos {
        g2: degenerate / (d2 * d2),
        g3,
        fit,
    })
}

/// Tier-one combinations at one static satellite.
pub fn static_tier1(
    shear: Complex64,
    degenerate: Complex64,
    r: &[f64],
    sweep: &[Complex64],
    s: f64,
    t: f64,
) -> Result<(ComboSolution, PolyFit)> {
    let g1 = stage1_shear_combo(shear, s, t)?;
    let gc = stage2_gradient_combos(degenerate, r, sweep, s, t)?;
    Ok((
        combo_solve(&ComboTriple {
            g1,
            g2: gc.g2,
            g3: gc.g3,
        }),
        gc.fit,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositiveTier1 {
    pub combos: ComboSolution,
    pub g1: Complex64,
    pub g3: Complex64,
    pub g9: Complex64,
    pub fits: [PolyFit; 2],
}

/// Tier one from positive-frequency data: `g1` by the two-frequency split
/// of the shear pairs, `g3` from the `r⁴` coefficients and `2m1 − m2` from
/// the `ω⁰` part of the `r²` coefficients.
pub fn positive_tier1(
    shear: [Complex64; 2],
    r: [&[f64]; 2],
    sweeps: [&[Complex64]; 2],
    omegas: [f64; 2],
    s: f64,
    t: f64,
) -> Result<PositiveTier1> {
    let (g1, _) = stage1_shear_split(shear, omegas, s, t)?;
    let f0 = fit_sweep(r[0], sweeps[0])?;
    let f1 = fit_sweep(r[1], sweeps[1])?;
    let p4 = (f0.coeff(4) + f1.coeff(4)) * 0.5;
    let g3 = p4 / s4_over_d4(s, t)?;
    let (_, b2) = two_frequency_split(f0.coeff(2), f1.coeff(2), omegas[0], omegas[1])?;
    let g9 = b2 / (2.0 * s * s);
    Ok(PositiveTier1 {
        combos: combo_solve_with_r9(g1, g9, g3),
        g1,
        g3,
        g9,
        fits: [f0, f1],
    })
}

/// `ĉ_diff` from right-affine (static) or gradient/ϑ (positive frequency)
/// pairs once the tier-one quantities are known.
pub fn stage4_cdiff(
    cfgs: &[PairConfig],
    values: &[Complex64],
    bg: &IsotropicBackground,
    known: &KnownMoments,
) -> Result<ScalarFit> {
    exact_regression(cfgs, values, bg, known, U_CDIFF)
}

/// `ĉ1111` from doubly affine (static) or short-sweep gradient (positive
/// frequency) pairs once everything else is known.
pub fn stage5_c1111(
    cfgs: &[PairConfig],
    values: &[Complex64],
    bg: &IsotropicBackground,
    known: &KnownMoments,
) -> Result<ScalarFit> {
    exact_regression(cfgs, values, bg, known, U_C1111)
}

/// `ρ̂11` from the shear pairs and `ρ̂33` from the ϑ pairs.
pub fn stage_density(
    shear: (&[PairConfig], &[Complex64]),
    theta: (&[PairConfig], &[Complex64]),
    bg: &IsotropicBackground,
    known: &KnownMoments,
) -> Result<(ScalarFit, ScalarFit)> {
    let rho11 = exact_regression(shear.0, shear.1, bg, known, U_RHO11)?;
    let mut k = *known;
    k.set_value(U_RHO11, rho11.value);
    let rho33 = exact_regression(theta.0, theta.1, bg, &k, U_RHO33)?;
    Ok((rho11, rho33))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgo::PairKind;
    use crate::linalg::c;

    fn bg() -> IsotropicBackground {
        IsotropicBackground::new(1.0, 1.0, 1.0, 0.0).unwrap()
    }

    /// Synthetic values `K·F` for a constant-amplitude pair.
    fn value(cfg: &PairConfig, f: &[Complex64; N_UNKNOWNS]) -> Complex64 {
        let k = basis_integrand(cfg, &bg()).unwrap();
        (0..N_UNKNOWNS).map(|u| k[u][0] * f[u]).sum()
    }

    fn truth() -> [Complex64; N_UNKNOWNS] {
        [
            c(0.3, -0.1),
            c(-0.2, 0.4),
            c(0.7, 0.05),
            c(0.11, -0.3),
            c(-0.5, 0.2),
            c(0.25, 0.15),
            c(-0.35, 0.1),
        ]
    }

    #[test]
    fn zero_data_gives_zero() {
        assert_eq!(stage1_shear_combo(ZERO, 1.0, 2.0).unwrap(), ZERO);
        let r = [8.0, 11.0, 16.0, 22.0, 32.0];
        let g = stage2_gradient_combos(ZERO, &r, &[ZERO; 5], 1.0, 0.5).unwrap();
        assert_eq!((g.g2, g.g3), (ZERO, ZERO));
    }

    #[test]
    fn static_tier1_recovers_combinations() {
        let f = truth();
        let (s, t): (f64, f64) = (1.7, -0.9);
        let d = s.hypot(t);
        let r: Vec<f64> = [8.0, 11.0, 16.0, 22.0, 32.0, 45.0, 64.0, 90.0]
            .iter()
            .map(|x| x * d.max(1.0))
            .collect();
        let cfg = |k, r| PairConfig::new(k, s, t, 0.4, r, 0.0);
        let sweep: Vec<_> = r.iter().map(|&ri| value(&cfg(PairKind::BGradient, ri), &f)).collect();
        let (x, fit) = static_tier1(
            value(&cfg(PairKind::AShear, 0.0), &f),
            value(&cfg(PairKind::BGradient, 0.0), &f),
            &r,
            &sweep,
            s,
            t,
        )
        .unwrap();
        assert!(fit.residual < 1e-12);
        assert!((x.c1313 - f[0]).norm() < 1e-9);
        assert!((x.m1 - f[1]).norm() < 1e-9);
        assert!((x.m2 - f[2]).norm() < 1e-9);
    }

    #[test]
    fn positive_frequency_chain_recovers_everything() {
        let f = truth();
        let (s, t, phi): (f64, f64, f64) = (2.3, 1.7, -0.6);
        let omegas = [1.0, 2.0];
        let d = s.hypot(t);
        let r: Vec<f64> = [8.0, 11.0, 16.0, 22.0, 32.0, 45.0, 64.0, 90.0]
            .iter()
            .map(|x| x * d)
            .collect();
        let small: Vec<f64> = [0.25, 0.5, 1.0, 1.5].iter().map(|x| x * d).collect();
        let mk = |k, r, w| PairConfig::new(k, s, t, phi, r, w);
        let shear = omegas.map(|w| value(&mk(PairKind::AShear, 0.0, w), &f));
        let sw: Vec<Vec<Complex64>> = omegas
            .iter()
            .map(|&w| r.iter().map(|&ri| value(&mk(PairKind::BGradient, ri, w), &f)).collect())
            .collect();
        let t1 = positive_tier1(shear, [&r, &r], [&sw[0], &sw[1]], omegas, s, t).unwrap();
        assert!((t1.combos.c1313 - f[0]).norm() < 1e-8);
        assert!((t1.combos.m1 - f[1]).norm() < 1e-8);
        assert!((t1.combos.m2 - f[2]).norm() < 1e-8);

        let mut known = KnownMoments::default();
        known.set_value(U_C1313, t1.combos.c1313);
        known.set_value(U_M1, t1.combos.m1);
        known.set_value(U_M2, t1.combos.m2);
        let a_cfg: Vec<_> = omegas.iter().map(|&w| mk(PairKind::AShear, 0.0, w)).collect();
        let e_cfg: Vec<_> = omegas.iter().map(|&w| mk(PairKind::ETheta, 0.0, w)).collect();
        let a_val: Vec<_> = a_cfg.iter().map(|c| value(c, &f)).collect();
        let e_val: Vec<_> = e_cfg.iter().map(|c| value(c, &f)).collect();
        let (r11, r33) = stage_density((&a_cfg, &a_val), (&e_cfg, &e_val), &bg(), &known).unwrap();
        assert!((r11.value - f[5]).norm() < 1e-8);
        assert!((r33.value - f[6]).norm() < 1e-8);
        known.set_value(U_RHO11, r11.value);
        known.set_value(U_RHO33, r33.value);

        let f_cfg: Vec<_> = omegas
            .iter()
            .flat_map(|&w| small.iter().map(move |&ri| (ri, w)))
            .map(|(ri, w)| mk(PairKind::FGradTheta, ri, w))
            .collect();
        let f_val: Vec<_> = f_cfg.iter().map(|c| value(c, &f)).collect();
        let cd = stage4_cdiff(&f_cfg, &f_val, &bg(), &known).unwrap();
        assert!((cd.value - f[3]).norm() < 1e-7, "{:?}", cd);
        known.set_value(U_CDIFF, cd.value);

        let b_cfg: Vec<_> = omegas
            .iter()
            .flat_map(|&w| small.iter().map(move |&ri| (ri, w)))
            .map(|(ri, w)| mk(PairKind::BGradient, ri, w))
            .collect();
        let b_val: Vec<_> = b_cfg.iter().map(|c| value(c, &f)).collect();
        let c1 = stage5_c1111(&b_cfg, &b_val, &bg(), &known).unwrap();
        assert!((c1.value - f[4]).norm() < 1e-5, "{:?}", c1);
    }

    #[test]
    fn unknown_contribution_is_refused() {
        let cfg = PairConfig::new(PairKind::BGradient, 1.0, 1.0, 0.0, 2.0, 1.0);
        let known = KnownMoments::default();
        let err = exact_regression(&[cfg], &[ZERO], &bg(), &known, U_C1111);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }
}
