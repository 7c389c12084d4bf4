//! The linearized Dirichlet-to-Neumann bilinear form
//! `∫ δC_ijkl ∂_i u_j ∂_k v_l − ω² δρ_ik u_i v_k dx` for CGO pairs.
//!
//! For a pair `(u, v)` the integrand is a polynomial of degree at most two in
//! `x` times the bounded exponential `e^{(ζ⁽¹⁾+ζ⁽²⁾)·x}`. [`PairIntegrand`]
//! stores that polynomial per perturbation channel, and [`MomentTable`] holds
//! the matching weighted Fourier moments of the perturbation, so a form value
//! is a short dot product. [`bilinear_form_source`] is the direct pointwise
//! route and is kept independent of that factorization.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgo::{build_pair, CgoSolution, PairConfig};
use crate::error::{Error, Result};
use crate::linalg::{c, cdot_real, CMat3, CVec3, Vec3, ZERO};
use crate::quadrature::{BoxRule, QuadratureSpec};
use crate::tensor::{
    DensityPerturbationField, GridPerturbation, IsotropicBackground, PerturbationSource, SpatialGrid, TIComponents,
    TIPerturbationField, N_CHANNELS,
};

/// Number of monomials `x^α` with `|α| ≤ 2`.
pub const N_MONO: usize = 10;

/// Exponents of the monomials in storage order: `1, x₁, x₂, x₃, x₁², x₁x₂,
/// x₁x₃, x₂², x₂x₃, x₃²`.
pub const MONOMIALS: [[usize; 3]; N_MONO] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [1, 1, 0],
    [1, 0, 1],
    [0, 2, 0],
    [0, 1, 1],
    [0, 0, 2],
];

#[inline]
pub fn linear_index(m: usize) -> usize {
    1 + m
}

#[inline]
pub fn quadratic_index(m: usize, n: usize) -> usize {
    let (a, b) = if m <= n { (m, n) } else { (n, m) };
    match (a, b) {
        (0, 0) => 4,
        (0, 1) => 5,
        (0, 2) => 6,
        (1, 1) => 7,
        (1, 2) => 8,
        _ => 9,
    }
}

pub fn monomial_degree(k: usize) -> usize {
    MONOMIALS[k].iter().sum()
}

/// Coefficients of the five TI components in `Σ C_ijkl G_ij H_kl` for a TI
/// tensor with axis `x3`.
pub fn ti_contract_coeffs(g: &CMat3, h: &CMat3) -> [Complex64; 5] {
    let x1212 = (g[0][1] + g[1][0]) * (h[0][1] + h[1][0]);
    [
        g[0][0] * h[0][0] + g[1][1] * h[1][1] + x1212 * 0.5,
        g[0][0] * h[1][1] + g[1][1] * h[0][0] - x1212 * 0.5,
        g[0][0] * h[2][2] + g[2][2] * h[0][0] + g[1][1] * h[2][2] + g[2][2] * h[1][1],
        (g[0][2] + g[2][0]) * (h[0][2] + h[2][0]) + (g[1][2] + g[2][1]) * (h[1][2] + h[2][1]),
        g[2][2] * h[2][2],
    ]
}

fn density_coeffs(u: &CVec3, v: &CVec3, omega: f64) -> [Complex64; 2] {
    let w2 = -omega * omega;
    [(u[0] * v[0] + u[1] * v[1]) * w2, u[2] * v[2] * w2]
}

/// Polynomial-in-`x` integrand of a pair, per perturbation channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PairIntegrand {
    /// `coeffs[ch][k]` multiplies `∫ f_ch(x) x^{α_k} e^{κ·x} dx`.
    pub coeffs: [[Complex64; N_MONO]; N_CHANNELS],
    /// Combined phase `κ = ζ⁽¹⁾ + ζ⁽²⁾`.
    pub exponent: CVec3,
    pub omega: f64,
    /// Highest monomial degree present (0, 1 or 2).
    pub order: usize,
}

impl PairIntegrand {
    pub fn new(u: &CgoSolution, v: &CgoSolution) -> Result<Self> {
        if !u.background.matches(&v.background) {
            return Err(Error::Mismatch("pair solutions use different backgrounds".into()));
        }
        let omega = u.background.omega;
        let (gu0, gu1) = u.gradient_poly();
        let (gv0, gv1) = v.gradient_poly();
        let (uu0, uu1) = u.amplitude_poly();
        let (vv0, vv1) = v.amplitude_poly();
        let lin_u = gu1.iter().any(|g| g.iter().flatten().any(|z| *z != ZERO));
        let lin_v = gv1.iter().any(|g| g.iter().flatten().any(|z| *z != ZERO));
        let mut coeffs = [[ZERO; N_MONO]; N_CHANNELS];
        let mut add = |k: usize, g: &CMat3, h: &CMat3, a: &CVec3, b: &CVec3| {
            let st = ti_contract_coeffs(g, h);
            for ch in 0..5 {
                coeffs[ch][k] += st[ch];
            }
            if omega != 0.0 {
                let dn = density_coeffs(a, b, omega);
                coeffs[5][k] += dn[0];
                coeffs[6][k] += dn[1];
            }
        };
        add(0, &gu0, &gv0, &uu0, &vv0);
        if lin_v {
            for m in 0..3 {
                add(linear_index(m), &gu0, &gv1[m], &uu0, &vv1[m]);
            }
        }
        if lin_u {
            for m in 0..3 {
                add(linear_index(m), &gu1[m], &gv0, &uu1[m], &vv0);
            }
        }
        if lin_u && lin_v {
            for m in 0..3 {
                for n in 0..3 {
                    add(quadratic_index(m, n), &gu1[m], &gv1[n], &uu1[m], &vv1[n]);
                }
            }
        }
        let order = match (lin_u, lin_v) {
            (true, true) => 2,
            (false, false) => 0,
            _ => 1,
        };
        Ok(Self {
            coeffs,
            exponent: crate::linalg::cadd(&u.phase, &v.phase),
            omega,
            order,
        })
    }

    pub fn from_config(cfg: &PairConfig, bg: &IsotropicBackground) -> Result<Self> {
        let (u, v) = build_pair(cfg, bg)?;
        Self::new(&u, &v)
    }

    /// Frequency `ξ` with `e^{κ·x} = e^{−iξ·x}`; fails if `κ` has a real part.
    pub fn xi(&self) -> Result<Vec3> {
        let scale = 1.0 + self.exponent.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if self.exponent.iter().any(|z| z.re.abs() > 1e-9 * scale) {
            return Err(Error::Precondition("pair exponent is not purely imaginary".into()));
        }
        Ok([-self.exponent[0].im, -self.exponent[1].im, -self.exponent[2].im])
    }

    /// Dot product with a moment table.
    pub fn apply(&self, table: &MomentTable) -> Result<Complex64> {
        if table.order < self.order {
            return Err(Error::Precondition(format!(
                "moment table of order {} cannot serve an integrand of order {}",
                table.order, self.order
            )));
        }
        let mut acc = ZERO;
        for ch in 0..N_CHANNELS {
            for k in 0..N_MONO {
                let a = self.coeffs[ch][k];
                if a != ZERO {
                    acc += a * table.m[ch][k];
                }
            }
        }
        Ok(acc)
    }

    /// Constant-monomial coefficient of each channel.
    pub fn constant_part(&self) -> [Complex64; N_CHANNELS] {
        let mut out = [ZERO; N_CHANNELS];
        for ch in 0..N_CHANNELS {
            out[ch] = self.coeffs[ch][0];
        }
        out
    }
}

/// Perturbation channels sampled at the nodes of a box rule.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub rule: BoxRule,
    /// `values[ch][flat]`, flat index row-major over the rule's nodes.
    pub values: Vec<Vec<f64>>,
    active: [bool; N_CHANNELS],
}

impl SampledField {
    pub fn new(source: &dyn PerturbationSource, rule: BoxRule) -> Self {
        let samples: Vec<[f64; N_CHANNELS]> = (0..rule.len())
            .into_par_iter()
            .map(|n| source.sample(&rule.point(n).0))
            .collect();
        let mut values = vec![vec![0.0; rule.len()]; N_CHANNELS];
        for (n, s) in samples.iter().enumerate() {
            for ch in 0..N_CHANNELS {
                values[ch][n] = s[ch];
            }
        }
        let mut active = [false; N_CHANNELS];
        for ch in 0..N_CHANNELS {
            active[ch] = values[ch].iter().any(|v| *v != 0.0);
        }
        Self { rule, values, active }
    }

    pub fn on_grid(source: &dyn PerturbationSource, grid: &SpatialGrid, quad: &QuadratureSpec) -> Result<Self> {
        Ok(Self::new(source, BoxRule::for_grid(quad, grid)?))
    }

    pub fn is_active(&self, ch: usize) -> bool {
        self.active[ch]
    }
}

/// Moments `∫ f_ch(x) x^α e^{−iξ·x} dx` for `|α| ≤ order`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub xi: Vec3,
    pub order: usize,
    pub m: [[Complex64; N_MONO]; N_CHANNELS],
}

impl MomentTable {
    /// Separable evaluation: contracts one axis at a time.
    pub fn compute(field: &SampledField, xi: Vec3, order: usize) -> Self {
        let order = order.min(2);
        let p = order + 1;
        let rule = &field.rule;
        let n = [rule.nodes[0].len(), rule.nodes[1].len(), rule.nodes[2].len()];
        // e[a][i * p + α] = w_i x_i^α e^{−iξ_a x_i}
        let e: Vec<Vec<Complex64>> = (0..3)
            .map(|a| {
                let mut v = Vec::with_capacity(n[a] * p);
                for i in 0..n[a] {
                    let x = rule.nodes[a][i];
                    let base = Complex64::from_polar(rule.weights[a][i], -xi[a] * x);
                    let mut pw = 1.0;
                    for _ in 0..p {
                        v.push(base * pw);
                        pw *= x;
                    }
                }
                v
            })
            .collect();
        let mut m = [[ZERO; N_MONO]; N_CHANNELS];
        let mut t1 = vec![ZERO; n[0] * n[1] * p];
        let mut t2 = vec![ZERO; n[0] * p * p];
        for ch in 0..N_CHANNELS {
            if !field.active[ch] {
                continue;
            }
            let f = &field.values[ch];
            for i in 0..n[0] {
                for j in 0..n[1] {
                    let row = &f[(i * n[1] + j) * n[2]..(i * n[1] + j + 1) * n[2]];
                    for a3 in 0..p {
                        let mut acc = ZERO;
                        for (k, fv) in row.iter().enumerate() {
                            acc += e[2][k * p + a3] * *fv;
                        }
                        t1[(i * n[1] + j) * p + a3] = acc;
                    }
                }
            }
            for i in 0..n[0] {
                for a2 in 0..p {
                    for a3 in 0..p {
                        let mut acc = ZERO;
                        for j in 0..n[1] {
                            acc += e[1][j * p + a2] * t1[(i * n[1] + j) * p + a3];
                        }
                        t2[(i * p + a2) * p + a3] = acc;
                    }
                }
            }
            for (k, mono) in MONOMIALS.iter().enumerate() {
                if mono.iter().sum::<usize>() > order {
                    continue;
                }
                let mut acc = ZERO;
                for i in 0..n[0] {
                    acc += e[0][i * p + mono[0]] * t2[(i * p + mono[1]) * p + mono[2]];
                }
                m[ch][k] = acc;
            }
        }
        Self { xi, order, m }
    }

    /// Plain transform values `F[f_ch](ξ)`.
    pub fn transforms(&self) -> [Complex64; N_CHANNELS] {
        let mut out = [ZERO; N_CHANNELS];
        for ch in 0..N_CHANNELS {
            out[ch] = self.m[ch][0];
        }
        out
    }
}

/// Direct quadrature of the form for an arbitrary perturbation source,
/// evaluating the full stiffness tensor at every node.
pub fn bilinear_form_source(
    source: &dyn PerturbationSource,
    grid: &SpatialGrid,
    u: &CgoSolution,
    v: &CgoSolution,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    if !u.background.matches(&v.background) {
        return Err(Error::Mismatch("pair solutions use different backgrounds".into()));
    }
    let rule = BoxRule::for_grid(quad, grid)?;
    let omega = u.background.omega;
    let kappa = crate::linalg::cadd(&u.phase, &v.phase);
    let (gu0, gu1) = u.gradient_poly();
    let (gv0, gv1) = v.gradient_poly();
    let (au0, au1) = u.amplitude_poly();
    let (av0, av1) = v.amplitude_poly();
    let at = |g0: &CMat3, g1: &[CMat3; 3], x: &Vec3| {
        let mut g = *g0;
        for m in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] += g1[m][i][j] * x[m];
                }
            }
        }
        g
    };
    let atv = |a0: &CVec3, a1: &[CVec3; 3], x: &Vec3| {
        let mut a = *a0;
        for m in 0..3 {
            for i in 0..3 {
                a[i] += a1[m][i] * x[m];
            }
        }
        a
    };
    let total: Complex64 = (0..rule.len())
        .into_par_iter()
        .map(|n| {
            let (x, w) = rule.point(n);
            let ch = source.sample(&x);
            let tensor = TIComponents::new(ch[0], ch[1], ch[2], ch[3], ch[4]).expand();
            let mut val = tensor.contract(&at(&gu0, &gu1, &x), &at(&gv0, &gv1, &x));
            if omega != 0.0 {
                let uu = atv(&au0, &au1, &x);
                let vv = atv(&av0, &av1, &x);
                let rho = [ch[5], ch[5], ch[6]];
                let mut dens = ZERO;
                for i in 0..3 {
                    dens += uu[i] * vv[i] * rho[i];
                }
                val -= dens * (omega * omega);
            }
            val * cdot_real(&kappa, &x).exp() * w
        })
        .sum();
    Ok(total)
}

/// Form value for nodal fields, interpolated trilinearly.
pub fn bilinear_form(
    dc: &TIPerturbationField,
    drho: Option<&DensityPerturbationField>,
    u: &CgoSolution,
    v: &CgoSolution,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    let src = GridPerturbation::new(dc.clone(), drho.cloned())?;
    bilinear_form_source(&src, &dc.grid, u, v, quad)
}

/// `∫_{c−w}^{c+w} x^n e^{−iξx} dx` for `n ≤ 2`, with a series near `ξ = 0`.
pub fn box_moment_1d(xi: f64, center: f64, half_width: f64, n: usize) -> Complex64 {
    let k = -xi;
    let w = half_width;
    // j_p = ∫_{−w}^{w} y^p e^{iky} dy
    let j = |p: usize| -> Complex64 {
        let kw = k * w;
        if kw.abs() < 0.5 {
            let mut acc = ZERO;
            let mut term = c(1.0, 0.0);
            for q in 0..40 {
                if q > 0 {
                    term *= c(0.0, k) / q as f64;
                }
                if (p + q).is_multiple_of(2) {
                    acc += term * (2.0 * w.powi((p + q + 1) as i32) / (p + q + 1) as f64);
                }
            }
            acc
        } else {
            let (sn, cs) = kw.sin_cos();
            match p {
                0 => c(2.0 * sn / k, 0.0),
                1 => c(0.0, 2.0 * (sn / (k * k) - w * cs / k)),
                _ => c(
                    2.0 * (w * w * sn / k + 2.0 * w * cs / (k * k) - 2.0 * sn / (k * k * k)),
                    0.0,
                ),
            }
        }
    };
    let phase = c(0.0, k * center).exp();
    let val = match n {
        0 => j(0),
        1 => j(1) + j(0) * center,
        _ => j(2) + j(1) * (2.0 * center) + j(0) * (center * center),
    };
    phase * val
}

/// Exact moment table of a spatially constant perturbation on a box.
pub fn constant_moments(p: &TIComponents, rho: Option<(f64, f64)>, grid: &SpatialGrid, xi: Vec3) -> MomentTable {
    let mut one = [ZERO; N_MONO];
    for (k, mono) in MONOMIALS.iter().enumerate() {
        let mut v = c(1.0, 0.0);
        for a in 0..3 {
            v *= box_moment_1d(xi[a], grid.center[a], grid.half_widths[a], mono[a]);
        }
        one[k] = v;
    }
    let vals = p.to_array();
    let (r11, r33) = rho.unwrap_or((0.0, 0.0));
    let scal = [vals[0], vals[1], vals[2], vals[3], vals[4], r11, r33];
    let mut m = [[ZERO; N_MONO]; N_CHANNELS];
    for ch in 0..N_CHANNELS {
        for k in 0..N_MONO {
            m[ch][k] = one[k] * scal[ch];
        }
    }
    MomentTable { xi, order: 2, m }
}

/// Closed-form form value for a constant perturbation on the box.
pub fn constant_oracle(
    p: &TIComponents,
    rho: Option<(f64, f64)>,
    u: &CgoSolution,
    v: &CgoSolution,
    grid: &SpatialGrid,
) -> Result<Complex64> {
    let integrand = PairIntegrand::new(u, v)?;
    let xi = integrand.xi()?;
    integrand.apply(&constant_moments(p, rho, grid, xi))
}

/// A computed (or failed) form value tagged with its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormValue {
    #[serde(flatten)]
    pub config: PairConfig,
    #[serde(with = "complex_pair")]
    pub value: Complex64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [v.re, v.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

fn xi_key(xi: &Vec3) -> [u64; 3] {
    // Normalise −0.0 so that equal frequencies share a key.
    [
        (xi[0] + 0.0).to_bits(),
        (xi[1] + 0.0).to_bits(),
        (xi[2] + 0.0).to_bits(),
    ]
}

/// Evaluates every configuration of a plan against sampled fields.
///
/// Configurations are grouped by frequency so that each moment table is
/// computed once; groups run in parallel. The output follows plan order and
/// failed entries are flagged rather than aborting the batch.
pub fn synthesize_sampled(field: &SampledField, bg: &IsotropicBackground, plan: &[PairConfig]) -> Vec<FormValue> {
    let prepared: Vec<Result<PairIntegrand>> = plan
        .par_iter()
        .map(|cfg| {
            let it = PairIntegrand::from_config(cfg, bg)?;
            it.xi()?;
            Ok(it)
        })
        .collect();
    let mut groups: BTreeMap<[u64; 3], (Vec3, usize, Vec<usize>)> = BTreeMap::new();
    for (i, p) in prepared.iter().enumerate() {
        if let Ok(it) = p {
            let xi = it.xi().expect("checked above");
            let e = groups.entry(xi_key(&xi)).or_insert((xi, 0, Vec::new()));
            e.1 = e.1.max(it.order);
            e.2.push(i);
        }
    }
    let groups: Vec<_> = groups.into_values().collect();
    let computed: Vec<Vec<(usize, Result<Complex64>)>> = groups
        .par_iter()
        .map(|(xi, order, members)| {
            let table = MomentTable::compute(field, *xi, *order);
            members
                .iter()
                .map(|&i| {
                    let it = prepared[i].as_ref().expect("grouped entries are valid");
                    (i, it.apply(&table))
                })
                .collect()
        })
        .collect();
    let mut values: Vec<Option<Result<Complex64>>> = (0..plan.len()).map(|_| None).collect();
    for group in computed {
        for (i, v) in group {
            values[i] = Some(v);
        }
    }
    plan.iter()
        .zip(prepared)
        .zip(values)
        .map(|((cfg, prep), val)| {
            let res = match (prep, val) {
                (Err(e), _) => Err(e),
                (Ok(_), Some(v)) => v,
                (Ok(_), None) => Err(Error::Precondition("entry was not evaluated".into())),
            };
            match res {
                Ok(v) if v.re.is_finite() && v.im.is_finite() => FormValue {
                    config: *cfg,
                    value: v,
                    ok: true,
                    error: None,
                },
                Ok(_) => FormValue {
                    config: *cfg,
                    value: ZERO,
                    ok: false,
                    error: Some("non-finite value".into()),
                },
                Err(e) => FormValue {
                    config: *cfg,
                    value: ZERO,
                    ok: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Samples the source on the quadrature nodes of the grid's box, then
/// evaluates the plan.
pub fn synthesize_data(
    source: &dyn PerturbationSource,
    grid: &SpatialGrid,
    bg: &IsotropicBackground,
    plan: &[PairConfig],
    quad: &QuadratureSpec,
) -> Result<Vec<FormValue>> {
    let field = SampledField::on_grid(source, grid, quad)?;
    Ok(synthesize_sampled(&field, bg, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgo::PairKind;
    use crate::linalg::I;
    use crate::tensor::{ti_expand, ConstantPerturbation};

    fn bg0() -> IsotropicBackground {
        IsotropicBackground::new(1.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn ti_coefficients_match_full_contraction() {
        let mut g = [[ZERO; 3]; 3];
        let mut h = [[ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = c(0.3 * i as f64 - 0.7 * j as f64 + 0.1, (i * j) as f64 * 0.2 - 0.4);
                h[i][j] = c((i + 2 * j) as f64 * 0.17 - 0.5, 0.3 - (2 * i + j) as f64 * 0.11);
            }
        }
        for k in 0..5 {
            let mut a = [0.0; 5];
            a[k] = 1.0;
            let full = ti_expand(TIComponents::from_array(a)).contract(&g, &h);
            assert!((full - ti_contract_coeffs(&g, &h)[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn box_moments_match_quadrature() {
        let (x, w) = crate::quadrature::gauss_legendre(40);
        for &xi in &[0.0, 1e-4, 0.3, 4.0, 17.0] {
            for n in 0..3 {
                let (cen, hw) = (0.2, 0.45);
                let q: Complex64 = x
                    .iter()
                    .zip(&w)
                    .map(|(u, wt)| {
                        let y = cen + hw * u;
                        c(0.0, -xi * y).exp() * y.powi(n as i32) * (wt * hw)
                    })
                    .sum();
                assert!((q - box_moment_1d(xi, cen, hw, n)).norm() < 1e-13, "xi={xi} n={n}");
            }
        }
        // A full period integrates to zero.
        assert!(box_moment_1d(2.0 * std::f64::consts::PI, 0.0, 0.5, 0).norm() < 1e-15);
        assert!((box_moment_1d(0.0, 0.0, 0.5, 0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn shear_pair_constant_identity() {
        let grid = SpatialGrid::unit_cube(8);
        let p = TIComponents::new(1.3, 0.4, 0.2, 0.7, 2.0);
        let (s, t) = (1.1, -0.6);
        let cfg = PairConfig::new(PairKind::AShear, s, t, 0.0, 0.0, 0.0);
        let (u, v) = build_pair(&cfg, &bg0()).unwrap();
        let got = constant_oracle(&p, None, &u, &v, &grid).unwrap();
        let fbox: Complex64 = (0..3).map(|a| box_moment_1d(cfg.xi()[a], 0.0, 0.5, 0)).product();
        let expect = fbox * (-(s * s + t * t) * (p.c1212() + p.c1313));
        assert!((got - expect).norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn quadrature_matches_oracle_and_fast_path() {
        let grid = SpatialGrid::unit_cube(8);
        let p = TIComponents::new(1.3, 0.4, 0.2, 0.7, 2.0);
        let src = ConstantPerturbation {
            stiffness: p,
            density: Some((0.3, -0.8)),
        };
        let quad = QuadratureSpec::gauss(16);
        let field = SampledField::on_grid(&src, &grid, &quad).unwrap();
        for (kind, omega) in [
            (PairKind::BGradient, 0.0),
            (PairKind::CAffineRight, 0.0),
            (PairKind::DAffineBoth, 0.0),
            (PairKind::ETheta, 1.0),
            (PairKind::FGradTheta, 2.0),
        ] {
            let cfg = PairConfig::new(kind, 1.4, 2.1, 0.7, 3.0, omega);
            let bg = bg0().at_omega(omega);
            let (u, v) = build_pair(&cfg, &bg).unwrap();
            let oracle = constant_oracle(&p, Some((0.3, -0.8)), &u, &v, &grid).unwrap();
            let direct = bilinear_form_source(&src, &grid, &u, &v, &quad).unwrap();
            let fast = synthesize_sampled(&field, &bg, &[cfg])[0].value;
            let scale = oracle.norm().max(1e-12);
            assert!((direct - oracle).norm() < 1e-8 * scale, "{kind:?}");
            assert!((fast - direct).norm() < 1e-10 * scale, "{kind:?}");
        }
    }

    #[test]
    fn zero_and_empty_plans() {
        let grid = SpatialGrid::unit_cube(4);
        let quad = QuadratureSpec::gauss(6);
        let zero = ConstantPerturbation::default();
        assert!(synthesize_data(&zero, &grid, &bg0(), &[], &quad).unwrap().is_empty());
        let cfg = PairConfig::new(PairKind::AShear, 1.0, 0.5, 0.0, 0.0, 0.0);
        let out = synthesize_data(&zero, &grid, &bg0(), &[cfg], &quad).unwrap();
        assert!(out[0].ok && out[0].value == ZERO);
    }

    #[test]
    fn failed_entries_are_flagged() {
        let grid = SpatialGrid::unit_cube(4);
        let quad = QuadratureSpec::gauss(6);
        let src = ConstantPerturbation::default();
        let bad = PairConfig::new(PairKind::CAffineRight, 1.0, 0.5, 0.0, 1.0, 1.0);
        let good = PairConfig::new(PairKind::AShear, 1.0, 0.5, 0.0, 0.0, 0.0);
        let out = synthesize_data(&src, &grid, &bg0(), &[bad, good], &quad).unwrap();
        assert!(!out[0].ok && out[0].error.is_some());
        assert!(out[1].ok);
    }

    #[test]
    fn moment_table_first_moment_is_derivative() {
        let grid = SpatialGrid::unit_cube(4);
        let p = TIComponents::new(1.0, 0.0, 0.0, 0.0, 0.0);
        let xi = [1.3, -0.4, 2.2];
        let h = 1e-5;
        let m = constant_moments(&p, None, &grid, xi);
        for a in 0..3 {
            let mut xp = xi;
            let mut xm = xi;
            xp[a] += h;
            xm[a] -= h;
            let d = (constant_moments(&p, None, &grid, xp).m[0][0] - constant_moments(&p, None, &grid, xm).m[0][0])
                / (2.0 * h);
            assert!((m.m[0][linear_index(a)] - I * d).norm() < 1e-8);
        }
    }

    #[test]
    fn form_value_json_shape() {
        let fv = FormValue {
            config: PairConfig::new(PairKind::BGradient, 1.0, 2.0, 0.5, 8.0, 0.0),
            value: c(1.5, -2.0),
            ok: true,
            error: None,
        };
        let js = serde_json::to_string(&fv).unwrap();
        assert!(js.contains("\"value\":[1.5,-2.0]"));
        assert!(js.contains("\"kind\":\"b_gradient\""));
        let back: FormValue = serde_json::from_str(&js).unwrap();
        assert_eq!(back, fv);
    }
}
