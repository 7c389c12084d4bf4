//! Staged reconstruction from pair data.
//!
//! Static data: at every node and each of its satellites the shear and
//! gradient pairs give `c1313`, `m1`, `m2`; differences over the satellites
//! give their moments, which are removed from the right-affine pairs to get
//! `cdiff` at the node and its six nearest satellites, and from the doubly
//! affine pairs to get `c1111`.
//!
//! Two-frequency data: every pair is constant-amplitude, so each node is
//! solved on its own, adding `rho11` from the shear pairs and `rho33` from
//! the ϑ pairs.

pub mod grid;
pub mod plan;
pub mod stages;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cgo::PairConfig;
use crate::combo::{from_basis, to_basis};
use crate::config::Medium;
use crate::dn_form::{linear_index, quadratic_index, FormValue, MomentTable, SampledField, N_MONO};
use crate::error::{Error, Result};
use crate::linalg::{I, ZERO};
use crate::tensor::{DensityPerturbationField, IsotropicBackground, SpatialGrid, TIComponents, TIPerturbationField};

pub use grid::{stage3_combo_fields, ComboGrid};
pub use plan::{
    plan_frequencies, FreqNode, FrequencyPlan, MaskReason, MaskedNode, PlanSpec, StaticLayout, TwoFrequencyLayout,
};
pub use stages::{
    basis_integrand, exact_regression, positive_tier1, stage1_shear_combo, stage1_shear_split, stage2_gradient_combos,
    stage4_cdiff, stage5_c1111, stage_density, static_tier1, KnownMoments, N_UNKNOWNS, UNKNOWN_NAMES,
};

use plan::{sat_double, sat_pair, sat_single, N_AFFINE_POSITIONS, N_SATELLITES};
use stages::{U_C1111, U_C1313, U_CDIFF, U_M1, U_M2, U_RHO11, U_RHO33};

/// Flagged-node fraction above which a run is marked low-confidence.
pub const LOW_CONFIDENCE_FRACTION: f64 = 0.2;

/// Residual statistics of one stage over all solved nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: String,
    pub max_residual: f64,
    pub mean_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconDiagnostics {
    pub omegas: Vec<f64>,
    pub modes_total: usize,
    pub nodes_planned: usize,
    pub nodes_solved: usize,
    pub masked: BTreeMap<String, usize>,
    /// Masked and flagged modes of the full grid, counted with mirrors.
    pub masked_fraction: f64,
    pub flagged_nodes: usize,
    pub flagged_fraction: f64,
    pub flag_messages: Vec<String>,
    pub low_confidence: bool,
    pub max_fit_condition: f64,
    pub stages: Vec<StageStats>,
    pub infilled_modes: usize,
    pub symmetry_defect: f64,
    pub max_imaginary_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub stiffness: TIPerturbationField,
    pub density: Option<DensityPerturbationField>,
    /// Spectrum after infill.
    pub spectrum: ComboGrid,
    /// Modes that were solved from data rather than filled in.
    pub measured: Vec<bool>,
    pub diagnostics: ReconDiagnostics,
}

#[derive(Debug, Clone, Copy)]
struct NodeSolution {
    values: [Complex64; N_UNKNOWNS],
    condition: f64,
    /// Residuals of the tier-one fit and of the later regressions.
    residuals: [f64; 5],
}

const STAGE_NAMES: [&str; 5] = [
    "shear-gradient sweep fit",
    "cdiff regression",
    "c1111 regression",
    "rho11 regression",
    "rho33 regression",
];

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

fn same_config(a: &PairConfig, b: &PairConfig) -> bool {
    a.kind == b.kind
        && close(a.s, b.s)
        && close(a.t, b.t)
        && close(a.phi, b.phi)
        && close(a.r, b.r)
        && close(a.omega, b.omega)
}

/// Moments of `f` at satellite `pos` (the node or `±h e_m`) from satellite
/// differences, using `F[x_m f] = i ∂_m F` and `F[x_m x_n f] = −∂_m ∂_n F`.
/// Second moments are produced at the node only when `second` is set.
fn fd_moments(f: &dyn Fn(usize) -> Complex64, pos: usize, h: f64, second: bool) -> [Complex64; N_MONO] {
    let mut out = [ZERO; N_MONO];
    out[0] = f(pos);
    let mut grad = [ZERO; 3];
    if pos == 0 {
        for m in 0..3 {
            grad[m] = (f(sat_single(m, true)) - f(sat_single(m, false))) / (2.0 * h);
        }
        if second {
            for m in 0..3 {
                let d2 = (f(sat_single(m, true)) - f(0) * 2.0 + f(sat_single(m, false))) / (h * h);
                out[quadratic_index(m, m)] = -d2;
                for n in m + 1..3 {
                    let d = (f(sat_pair(m, n, true, true))
                        - f(sat_pair(m, n, true, false))
                        - f(sat_pair(m, n, false, true))
                        + f(sat_pair(m, n, false, false)))
                        / (4.0 * h * h);
                    out[quadratic_index(m, n)] = -d;
                }
            }
        }
    } else {
        let m0 = (pos - 1) / 2;
        let positive = (pos - 1).is_multiple_of(2);
        for m in 0..3 {
            grad[m] = if m == m0 {
                if positive {
                    (f(sat_double(m, true)) - f(0)) / (2.0 * h)
                } else {
                    (f(0) - f(sat_double(m, false))) / (2.0 * h)
                }
            } else {
                (f(sat_pair(m0, m, positive, true)) - f(sat_pair(m0, m, positive, false))) / (2.0 * h)
            };
        }
    }
    for m in 0..3 {
        out[linear_index(m)] = I * grad[m];
    }
    out
}

fn solve_static(
    plan: &FrequencyPlan,
    cfgs: &[PairConfig],
    vals: &[Complex64],
    bg: &IsotropicBackground,
) -> Result<NodeSolution> {
    let lay = StaticLayout::new(&plan.spec);
    let h = plan.spec.h;
    let r: Vec<f64> = cfgs[lay.sweep(0)].iter().map(|c| c.r).collect();
    let mut tier = [[ZERO; 3]; N_SATELLITES];
    let mut condition = 0.0f64;
    let mut fit_res = 0.0f64;
    for (q, slot) in tier.iter_mut().enumerate() {
        let c = &cfgs[lay.shear(q)];
        let (x, fit) = static_tier1(
            vals[lay.shear(q)],
            vals[lay.degenerate(q)],
            &r,
            &vals[lay.sweep(q)],
            c.s,
            c.t,
        )?;
        *slot = [x.c1313, x.m1, x.m2];
        condition = condition.max(fit.condition);
        fit_res = fit_res.max(fit.residual);
    }
    let tier_known = |pos: usize, second: bool| {
        let mut k = KnownMoments::default();
        for u in [U_C1313, U_M1, U_M2] {
            k.set_moments(u, fd_moments(&|q| tier[q][u], pos, h, second));
        }
        k
    };
    let mut cdiff = [ZERO; N_AFFINE_POSITIONS];
    let mut cdiff_res = 0.0f64;
    for (p, slot) in cdiff.iter_mut().enumerate() {
        let range = lay.affine_right(p);
        let fit = stage4_cdiff(&cfgs[range.clone()], &vals[range], bg, &tier_known(p, false))?;
        *slot = fit.value;
        cdiff_res = cdiff_res.max(fit.residual);
    }
    let mut known = tier_known(0, true);
    known.set_moments(U_CDIFF, fd_moments(&|q| cdiff[q], 0, h, false));
    let range = lay.affine_both();
    let c1111 = stage5_c1111(&cfgs[range.clone()], &vals[range], bg, &known)?;
    let mut values = known.values();
    values[U_C1111] = c1111.value;
    Ok(NodeSolution {
        values,
        condition,
        residuals: [fit_res, cdiff_res, c1111.residual, 0.0, 0.0],
    })
}

fn gather(
    cfgs: &[PairConfig],
    vals: &[Complex64],
    ranges: impl IntoIterator<Item = std::ops::Range<usize>>,
) -> (Vec<PairConfig>, Vec<Complex64>) {
    let mut c = Vec::new();
    let mut v = Vec::new();
    for r in ranges {
        c.extend_from_slice(&cfgs[r.clone()]);
        v.extend_from_slice(&vals[r]);
    }
    (c, v)
}

fn solve_two_frequency(
    plan: &FrequencyPlan,
    node: &FreqNode,
    cfgs: &[PairConfig],
    vals: &[Complex64],
    bg: &IsotropicBackground,
) -> Result<NodeSolution> {
    let lay = TwoFrequencyLayout::new(&plan.spec);
    let omegas = [plan.spec.omegas[0], plan.spec.omegas[1]];
    let r: [Vec<f64>; 2] = [0, 1].map(|w| cfgs[lay.sweep(w)].iter().map(|c| c.r).collect());
    let t1 = positive_tier1(
        [vals[lay.shear(0)], vals[lay.shear(1)]],
        [&r[0], &r[1]],
        [&vals[lay.sweep(0)], &vals[lay.sweep(1)]],
        omegas,
        node.s,
        node.t,
    )?;
    let mut known = KnownMoments::default();
    known.set_value(U_C1313, t1.combos.c1313);
    known.set_value(U_M1, t1.combos.m1);
    known.set_value(U_M2, t1.combos.m2);
    let shear = gather(cfgs, vals, [0, 1].map(|w| lay.shear(w)..lay.shear(w) + 1));
    let theta = gather(cfgs, vals, [0, 1].map(|w| lay.theta(w)..lay.theta(w) + 1));
    let (rho11, rho33) = stage_density((&shear.0, &shear.1), (&theta.0, &theta.1), bg, &known)?;
    known.set_value(U_RHO11, rho11.value);
    known.set_value(U_RHO33, rho33.value);
    let gt = gather(cfgs, vals, [0, 1].map(|w| lay.grad_theta(w)));
    let cdiff = stage4_cdiff(&gt.0, &gt.1, bg, &known)?;
    known.set_value(U_CDIFF, cdiff.value);
    let sg = gather(cfgs, vals, [0, 1].map(|w| lay.small_gradient(w)));
    let c1111 = stage5_c1111(&sg.0, &sg.1, bg, &known)?;
    let mut values = known.values();
    values[U_C1111] = c1111.value;
    let fit_res = t1.fits.iter().map(|f| f.residual).fold(0.0, f64::max);
    let condition = t1.fits.iter().map(|f| f.condition).fold(0.0, f64::max);
    Ok(NodeSolution {
        values,
        condition,
        residuals: [fit_res, cdiff.residual, c1111.residual, rho11.residual, rho33.residual],
    })
}

/// Runs every stage on a data bundle laid out by `plan` and inverts the
/// resulting spectra onto `spatial`.
pub fn reconstruct(
    data: &[FormValue],
    plan: &FrequencyPlan,
    medium: &Medium,
    spatial: &SpatialGrid,
) -> Result<Reconstruction> {
    spatial.validate()?;
    if data.len() != plan.configs.len() {
        return Err(Error::Mismatch(format!(
            "bundle has {} entries, plan expects {}",
            data.len(),
            plan.configs.len()
        )));
    }
    if let Some(i) = (0..data.len()).find(|&i| !same_config(&data[i].config, &plan.configs[i])) {
        return Err(Error::Mismatch(format!("bundle entry {i} does not match the plan")));
    }
    let bg = medium.background(0.0)?;
    let is_static = plan.spec.is_static();
    let values: Vec<Complex64> = data.iter().map(|d| d.value).collect();

    let solved: Vec<Result<NodeSolution>> = plan
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, node)| {
            let range = plan.block_range(i);
            if let Some(bad) = data[range.clone()].iter().find(|d| !d.ok) {
                return Err(Error::Precondition(format!(
                    "failed data entry: {}",
                    bad.error.as_deref().unwrap_or("unknown error")
                )));
            }
            let (c, v) = (&plan.configs[range.clone()], &values[range]);
            if is_static {
                solve_static(plan, c, v, &bg)
            } else {
                solve_two_frequency(plan, node, c, v, &bg)
            }
        })
        .collect();

    let mut spectrum = ComboGrid::zeros(plan.n, plan.dxi);
    let mut flag_messages = Vec::new();
    let mut flagged = 0;
    let mut condition = 0.0f64;
    let mut res_sum = [0.0; 5];
    let mut res_max = [0.0f64; 5];
    for (node, sol) in plan.nodes.iter().zip(&solved) {
        match sol {
            Ok(s) if s.values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                spectrum.set_pair(node.index, s.values);
                condition = condition.max(s.condition);
                for k in 0..5 {
                    res_sum[k] += s.residuals[k];
                    res_max[k] = res_max[k].max(s.residuals[k]);
                }
            }
            other => {
                flagged += 1;
                if flag_messages.len() < 20 {
                    let msg = match other {
                        Err(e) => e.to_string(),
                        Ok(_) => "non-finite solution".to_string(),
                    };
                    flag_messages.push(format!("{:?}: {msg}", node.index));
                }
            }
        }
    }
    let nodes_solved = plan.nodes.len() - flagged;
    if nodes_solved == 0 {
        return Err(Error::Singular("no node could be solved".into()));
    }
    let measured = spectrum.known.clone();
    let infilled = spectrum.infill()?;
    let (fields, imag) = spectrum.inverse(spatial);

    let comps = (0..spatial.len())
        .map(|n| {
            let b: [f64; 5] = std::array::from_fn(|u| fields[u][n]);
            TIComponents::from_array(from_basis(&b))
        })
        .collect();
    let stiffness = TIPerturbationField {
        grid: *spatial,
        values: comps,
    };
    let density = (!is_static).then(|| DensityPerturbationField {
        grid: *spatial,
        rho11: fields[U_RHO11].clone(),
        rho33: fields[U_RHO33].clone(),
    });

    let used_stages: &[usize] = if is_static { &[0, 1, 2] } else { &[0, 3, 4, 1, 2] };
    let stages = used_stages
        .iter()
        .map(|&k| StageStats {
            stage: STAGE_NAMES[k].to_string(),
            max_residual: res_max[k],
            mean_residual: res_sum[k] / nodes_solved as f64,
        })
        .collect();
    let mut masked = BTreeMap::new();
    for m in &plan.masked {
        let key = serde_json::to_value(m.reason)?.as_str().unwrap_or_default().to_string();
        *masked.entry(key).or_insert(0) += 1;
    }
    let total = plan.total_modes();
    let flagged_fraction = flagged as f64 / plan.nodes.len() as f64;
    let diagnostics = ReconDiagnostics {
        omegas: plan.spec.omegas.clone(),
        modes_total: total,
        nodes_planned: plan.nodes.len(),
        nodes_solved,
        masked,
        masked_fraction: infilled as f64 / total as f64,
        flagged_nodes: flagged,
        flagged_fraction,
        flag_messages,
        low_confidence: flagged_fraction > LOW_CONFIDENCE_FRACTION,
        max_fit_condition: condition,
        stages,
        infilled_modes: infilled,
        symmetry_defect: spectrum.symmetry_defect(),
        max_imaginary_ratio: imag,
    };
    Ok(Reconstruction {
        stiffness,
        density,
        spectrum,
        measured,
        diagnostics,
    })
}

/// Transforms of the reconstruction coordinates of the sampled fields at
/// every planned node, from the same quadrature that produced the data.
pub fn truth_spectrum(field: &SampledField, plan: &FrequencyPlan) -> Vec<[Complex64; N_UNKNOWNS]> {
    plan.nodes
        .par_iter()
        .map(|node| {
            let f = MomentTable::compute(field, node.xi, 0).transforms();
            let st: [Complex64; 5] = std::array::from_fn(|ch| f[ch]);
            let b = to_basis_complex(&st);
            let mut out = [ZERO; N_UNKNOWNS];
            out[..5].copy_from_slice(&b);
            out[U_RHO11] = f[5];
            out[U_RHO33] = f[6];
            out
        })
        .collect()
}

fn to_basis_complex(p: &[Complex64; 5]) -> [Complex64; 5] {
    let re = to_basis(&p.map(|z| z.re));
    let im = to_basis(&p.map(|z| z.im));
    std::array::from_fn(|u| Complex64::new(re[u], im[u]))
}

/// Relative spectral error per unknown over the solved nodes:
/// `(Σ|F̂ − F|² / Σ|F|²)^{1/2}`, with the absolute error when the truth is
/// zero.
pub fn spectral_errors(
    rec: &Reconstruction,
    plan: &FrequencyPlan,
    truth: &[[Complex64; N_UNKNOWNS]],
) -> [f64; N_UNKNOWNS] {
    let mut num = [0.0; N_UNKNOWNS];
    let mut den = [0.0; N_UNKNOWNS];
    for (node, t) in plan.nodes.iter().zip(truth) {
        let f = rec.spectrum.flat(node.index);
        if !rec.measured[f] {
            continue;
        }
        let v = rec.spectrum.values[f];
        for u in 0..N_UNKNOWNS {
            num[u] += (v[u] - t[u]).norm_sqr();
            den[u] += t[u].norm_sqr();
        }
    }
    std::array::from_fn(|u| {
        if den[u] > 0.0 {
            (num[u] / den[u]).sqrt()
        } else {
            num[u].sqrt()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn fd_moments_of_linear_and_quadratic_spectra() {
        let h = 0.01;
        let offs = plan::satellite_offsets();
        // F(ξ) = a + b·ξ + ξᵀQξ with ξ measured from the node.
        let b = [c(0.3, 0.1), c(-0.2, 0.0), c(0.0, 0.7)];
        let q = [[0.5, 0.1, -0.2], [0.1, -0.3, 0.4], [-0.2, 0.4, 0.25]];
        let f = |k: usize| {
            let x = offs[k].map(|o| o * h);
            let mut v = c(1.0, -1.0);
            for m in 0..3 {
                v += b[m] * x[m];
                for n in 0..3 {
                    v += c(q[m][n] * x[m] * x[n], 0.0);
                }
            }
            v
        };
        let m0 = fd_moments(&f, 0, h, true);
        for m in 0..3 {
            assert!((m0[linear_index(m)] - I * b[m]).norm() < 1e-12);
            for n in 0..3 {
                assert!((m0[quadratic_index(m, n)] + c(2.0 * q[m][n], 0.0)).norm() < 1e-9);
            }
        }
        // At +h e_1 the gradient is b + 2Q(h e_1).
        let m1 = fd_moments(&f, sat_single(1, true), h, false);
        for m in 0..3 {
            let want = b[m] + c(2.0 * q[m][1] * h, 0.0);
            assert!((m1[linear_index(m)] - I * want).norm() < 1e-12);
        }
    }
}
