//! Frequency sampling, masking and the per-node pair layout.
//!
//! Nodes sit on the half-shifted grid `ξ = (2π/L)(m + ½)`, `−n/2 ≤ m_a < n/2`,
//! where `L` is the box width. The grid is symmetric under `ξ → −ξ`, never
//! touches `ξ = 0` or the `ξ⊥ = 0` line, and its inverse transform is the
//! anti-periodic extension of the field, which agrees with the field on the
//! box because the support is inside. Only the half `m_1 ≥ 0` is sampled;
//! the other half follows from conjugate symmetry.
//!
//! Every node owns one contiguous block of pair configurations. In the static
//! layout the block holds, for each of 25 satellite frequencies around the
//! node, one shear pair, one degenerate gradient pair and the `r`-sweep of
//! gradient pairs; then a short sweep of right-affine pairs at the first seven
//! satellites and a short sweep of doubly affine pairs at the node itself.
//! In the two-frequency layout the block holds, per frequency, one shear
//! pair, the gradient `r`-sweep, one ϑ pair, a short sweep of gradient/ϑ pairs
//! and a short sweep of gradient pairs.

use serde::{Deserialize, Serialize};

use crate::cgo::{PairConfig, PairKind};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::tensor::IsotropicBackground;

/// Satellites per static node.
pub const N_SATELLITES: usize = 25;
/// Satellites that carry a right-affine sweep: the node and `±h e_m`.
pub const N_AFFINE_POSITIONS: usize = 7;

/// Index of the satellite at `σ h e_m`.
pub fn sat_single(m: usize, positive: bool) -> usize {
    1 + 2 * m + usize::from(!positive)
}

/// Index of the satellite at `2σ h e_m`.
pub fn sat_double(m: usize, positive: bool) -> usize {
    7 + 2 * m + usize::from(!positive)
}

/// Index of the satellite at `σ_m h e_m + σ_n h e_n` for `m ≠ n`.
pub fn sat_pair(m: usize, n: usize, pos_m: bool, pos_n: bool) -> usize {
    let (a, b, pa, pb) = if m < n {
        (m, n, pos_m, pos_n)
    } else {
        (n, m, pos_n, pos_m)
    };
    let p = a + b - 1;
    13 + 4 * p + 2 * usize::from(!pa) + usize::from(!pb)
}

/// Satellite offsets in units of `h`.
pub fn satellite_offsets() -> [[f64; 3]; N_SATELLITES] {
    let mut out = [[0.0; 3]; N_SATELLITES];
    for m in 0..3 {
        for pos in [true, false] {
            let sg = if pos { 1.0 } else { -1.0 };
            out[sat_single(m, pos)][m] = sg;
            out[sat_double(m, pos)][m] = 2.0 * sg;
            for n in m + 1..3 {
                for pn in [true, false] {
                    let q = sat_pair(m, n, pos, pn);
                    out[q][m] = sg;
                    out[q][n] = if pn { 1.0 } else { -1.0 };
                }
            }
        }
    }
    out
}

/// `(s, t, φ)` with `ξ = −2(s cos φ, s sin φ, t)`.
pub fn node_params(xi: &Vec3) -> (f64, f64, f64) {
    let s = 0.5 * xi[0].hypot(xi[1]);
    let t = -0.5 * xi[2];
    let phi = if s > 0.0 { (-xi[1]).atan2(-xi[0]) } else { 0.0 };
    (s, t, phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskReason {
    #[serde(rename = "step4-singular")]
    Step4Singular,
    Evanescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqNode {
    pub index: [i32; 3],
    pub xi: Vec3,
    pub s: f64,
    pub t: f64,
    pub phi: f64,
}

/// Frequency of mode `m` on the half-shifted grid.
pub fn mode_frequency(m: [i32; 3], dxi: f64) -> Vec3 {
    m.map(|v| dxi * (v as f64 + 0.5))
}

/// Mode whose frequency is the negative of that of `m`.
pub fn mirror_mode(m: [i32; 3]) -> [i32; 3] {
    m.map(|v| -v - 1)
}

impl FreqNode {
    fn new(index: [i32; 3], dxi: f64) -> Self {
        let xi = mode_frequency(index, dxi);
        let (s, t, phi) = node_params(&xi);
        Self { index, xi, s, t, phi }
    }

    pub fn d(&self) -> f64 {
        self.s.hypot(self.t)
    }

    /// Scale applied to the configured sweeps.
    pub fn r_scale(&self) -> f64 {
        self.d().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedNode {
    pub index: [i32; 3],
    pub reason: MaskReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSpec {
    pub freq_n: usize,
    pub period: f64,
    pub omegas: Vec<f64>,
    pub r_sweep: Vec<f64>,
    pub small_sweep: Vec<f64>,
    pub h: f64,
    pub s_min_factor: f64,
    /// Largest admissible `|ξ_a|`.
    pub kappa_cap: f64,
}

impl PlanSpec {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let grid = cfg.grid();
        let hw = grid.half_widths.iter().cloned().fold(0.0, f64::max);
        Self {
            freq_n: cfg.freq_n,
            period: 2.0 * hw,
            omegas: cfg.omegas.clone(),
            r_sweep: cfg.r_sweep.clone(),
            small_sweep: cfg.small_sweep.clone(),
            h: cfg.satellite_h,
            s_min_factor: cfg.s_min_factor,
            kappa_cap: cfg.quadrature.oscillation_cap(hw),
        }
    }

    pub fn is_static(&self) -> bool {
        self.omegas == [0.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub spec: PlanSpec,
    /// Modes per axis.
    pub n: usize,
    /// Frequency spacing `2π/L`.
    pub dxi: f64,
    pub s_min: f64,
    pub nodes: Vec<FreqNode>,
    pub masked: Vec<MaskedNode>,
    pub block: usize,
    pub configs: Vec<PairConfig>,
}

pub fn plan_frequencies(spec: &PlanSpec, medium: &crate::config::Medium) -> Result<FrequencyPlan> {
    if spec.freq_n < 8 || !spec.freq_n.is_multiple_of(2) {
        return Err(Error::Precondition("frequency grid needs an even N ≥ 8".into()));
    }
    let two = spec.omegas.len() == 2 && spec.omegas.iter().all(|w| *w > 0.0);
    if !spec.is_static() && !two {
        return Err(Error::Precondition(
            "plans need omegas [0] or two positive frequencies".into(),
        ));
    }
    if two && spec.omegas[0] == spec.omegas[1] {
        return Err(Error::Precondition("the two frequencies coincide".into()));
    }
    let half = (spec.freq_n / 2) as i32;
    let dxi = 2.0 * std::f64::consts::PI / spec.period;
    let reach = dxi * (half as f64 - 0.5) + if spec.is_static() { 2.0 * spec.h } else { 0.0 };
    if reach >= spec.kappa_cap {
        return Err(Error::Precondition(format!(
            "largest frequency {reach:.3} exceeds the quadrature cap {:.3}",
            spec.kappa_cap
        )));
    }
    let ks2_max = spec
        .omegas
        .iter()
        .map(|w| medium.background(*w).map(|b| b.ks2()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let s_min = spec.s_min_factor * dxi;
    let mut nodes = Vec::new();
    let mut masked = Vec::new();
    for i in 0..half {
        for j in -half..half {
            for k in -half..half {
                let index = [i, j, k];
                let node = FreqNode::new(index, dxi);
                let d2 = node.s * node.s + node.t * node.t;
                let reason = if d2 <= ks2_max * (1.0 + 1e-9) {
                    Some(MaskReason::Evanescent)
                } else if node.s < s_min {
                    Some(MaskReason::Step4Singular)
                } else {
                    None
                };
                match reason {
                    Some(reason) => masked.push(MaskedNode { index, reason }),
                    None => nodes.push(node),
                }
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::Precondition("every frequency node is masked".into()));
    }
    let mut configs = Vec::new();
    let mut block = 0;
    for node in &nodes {
        let start = configs.len();
        if spec.is_static() {
            static_block(spec, node, &mut configs);
        } else {
            two_frequency_block(spec, node, &mut configs);
        }
        block = configs.len() - start;
    }
    Ok(FrequencyPlan {
        spec: spec.clone(),
        n: spec.freq_n,
        dxi,
        s_min,
        nodes,
        masked,
        block,
        configs,
    })
}

fn static_block(spec: &PlanSpec, node: &FreqNode, out: &mut Vec<PairConfig>) {
    let scale = node.r_scale();
    let offs = satellite_offsets();
    let sat: Vec<(f64, f64, f64)> = offs
        .iter()
        .map(|o| {
            node_params(&[
                node.xi[0] + spec.h * o[0],
                node.xi[1] + spec.h * o[1],
                node.xi[2] + spec.h * o[2],
            ])
        })
        .collect();
    for &(s, t, phi) in &sat {
        out.push(PairConfig::new(PairKind::AShear, s, t, phi, 0.0, 0.0));
        out.push(PairConfig::new(PairKind::BGradient, s, t, phi, 0.0, 0.0));
        for r in &spec.r_sweep {
            out.push(PairConfig::new(PairKind::BGradient, s, t, phi, r * scale, 0.0));
        }
    }
    for &(s, t, phi) in &sat[..N_AFFINE_POSITIONS] {
        for r in &spec.small_sweep {
            out.push(PairConfig::new(PairKind::CAffineRight, s, t, phi, r * scale, 0.0));
        }
    }
    for r in &spec.small_sweep {
        out.push(PairConfig::new(
            PairKind::DAffineBoth,
            node.s,
            node.t,
            node.phi,
            r * scale,
            0.0,
        ));
    }
}

fn two_frequency_block(spec: &PlanSpec, node: &FreqNode, out: &mut Vec<PairConfig>) {
    let scale = node.r_scale();
    let (s, t, phi) = (node.s, node.t, node.phi);
    for &w in &spec.omegas {
        out.push(PairConfig::new(PairKind::AShear, s, t, phi, 0.0, w));
        for r in &spec.r_sweep {
            out.push(PairConfig::new(PairKind::BGradient, s, t, phi, r * scale, w));
        }
        out.push(PairConfig::new(PairKind::ETheta, s, t, phi, 0.0, w));
        for r in &spec.small_sweep {
            out.push(PairConfig::new(PairKind::FGradTheta, s, t, phi, r * scale, w));
        }
        for r in &spec.small_sweep {
            out.push(PairConfig::new(PairKind::BGradient, s, t, phi, r * scale, w));
        }
    }
}

/// Offsets of each group inside a node block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StaticLayout {
    pub n_r: usize,
    pub n_small: usize,
}

impl StaticLayout {
    pub fn new(spec: &PlanSpec) -> Self {
        Self {
            n_r: spec.r_sweep.len(),
            n_small: spec.small_sweep.len(),
        }
    }

    fn per_satellite(&self) -> usize {
        2 + self.n_r
    }

    pub fn shear(&self, q: usize) -> usize {
        q * self.per_satellite()
    }

    pub fn degenerate(&self, q: usize) -> usize {
        q * self.per_satellite() + 1
    }

    pub fn sweep(&self, q: usize) -> std::ops::Range<usize> {
        let a = q * self.per_satellite() + 2;
        a..a + self.n_r
    }

    pub fn affine_right(&self, p: usize) -> std::ops::Range<usize> {
        let a = N_SATELLITES * self.per_satellite() + p * self.n_small;
        a..a + self.n_small
    }

    pub fn affine_both(&self) -> std::ops::Range<usize> {
        let a = N_SATELLITES * self.per_satellite() + N_AFFINE_POSITIONS * self.n_small;
        a..a + self.n_small
    }

    pub fn len(&self) -> usize {
        self.affine_both().end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoFrequencyLayout {
    pub n_r: usize,
    pub n_small: usize,
}

impl TwoFrequencyLayout {
    pub fn new(spec: &PlanSpec) -> Self {
        Self {
            n_r: spec.r_sweep.len(),
            n_small: spec.small_sweep.len(),
        }
    }

    fn per_omega(&self) -> usize {
        2 + self.n_r + 2 * self.n_small
    }

    pub fn shear(&self, w: usize) -> usize {
        w * self.per_omega()
    }

    pub fn sweep(&self, w: usize) -> std::ops::Range<usize> {
        let a = w * self.per_omega() + 1;
        a..a + self.n_r
    }

    pub fn theta(&self, w: usize) -> usize {
        w * self.per_omega() + 1 + self.n_r
    }

    pub fn grad_theta(&self, w: usize) -> std::ops::Range<usize> {
        let a = w * self.per_omega() + 2 + self.n_r;
        a..a + self.n_small
    }

    pub fn small_gradient(&self, w: usize) -> std::ops::Range<usize> {
        let a = w * self.per_omega() + 2 + self.n_r + self.n_small;
        a..a + self.n_small
    }

    pub fn len(&self) -> usize {
        2 * self.per_omega()
    }
}

impl FrequencyPlan {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        plan_frequencies(&PlanSpec::from_config(cfg), &cfg.background)
    }

    pub fn block_range(&self, node: usize) -> std::ops::Range<usize> {
        node * self.block..(node + 1) * self.block
    }

    /// All modes of the full symmetric grid.
    pub fn total_modes(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn masked_count(&self, reason: MaskReason) -> usize {
        self.masked.iter().filter(|m| m.reason == reason).count()
    }

    pub fn backgrounds(&self, medium: &crate::config::Medium) -> Result<Vec<IsotropicBackground>> {
        self.spec.omegas.iter().map(|w| medium.background(*w)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Medium;

    fn spec(n: usize, omegas: Vec<f64>) -> PlanSpec {
        let mut cfg = ExperimentConfig {
            freq_n: n,
            omegas,
            ..ExperimentConfig::default()
        };
        cfg.r_sweep = vec![8.0, 11.0, 16.0, 22.0, 32.0];
        cfg.small_sweep = vec![0.5, 1.0];
        PlanSpec::from_config(&cfg)
    }

    #[test]
    fn satellites_are_distinct_and_indexed() {
        let offs = satellite_offsets();
        for a in 0..N_SATELLITES {
            for b in 0..a {
                assert_ne!(offs[a], offs[b]);
            }
        }
        assert_eq!(offs[0], [0.0; 3]);
        assert_eq!(offs[sat_pair(2, 0, false, true)], [1.0, 0.0, -1.0]);
        assert_eq!(offs[sat_double(1, false)], [0.0, -2.0, 0.0]);
    }

    #[test]
    fn node_params_reproduce_frequency() {
        for xi in [[1.0, -2.0, 0.5], [-3.0, 0.2, -1.0], [0.0, 0.0, 2.0]] {
            let (s, t, phi) = node_params(&xi);
            let back = PairConfig::new(PairKind::AShear, s, t, phi, 0.0, 0.0).xi();
            for a in 0..3 {
                assert!((back[a] - xi[a]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn static_plan_counts() {
        let p = plan_frequencies(&spec(8, vec![0.0]), &Medium::default()).unwrap();
        assert_eq!(p.total_modes(), 512);
        assert!(p.masked.is_empty());
        assert_eq!(p.nodes.len(), 256);
        assert_eq!(p.block, StaticLayout::new(&p.spec).len());
        assert_eq!(p.configs.len(), p.nodes.len() * p.block);
        let lay = StaticLayout::new(&p.spec);
        let blk = &p.configs[p.block_range(5)];
        assert_eq!(blk[lay.shear(3)].kind, PairKind::AShear);
        assert_eq!(blk[lay.degenerate(3)].r, 0.0);
        assert_eq!(blk[lay.affine_right(6).start].kind, PairKind::CAffineRight);
        assert_eq!(blk[lay.affine_both().end - 1].kind, PairKind::DAffineBoth);
    }

    #[test]
    fn every_mode_reached_once() {
        let p = plan_frequencies(&spec(8, vec![0.0]), &Medium::default()).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for node in &p.nodes {
            assert!(seen.insert(node.index));
            assert!(seen.insert(mirror_mode(node.index)));
            let back = PairConfig::new(PairKind::AShear, node.s, node.t, node.phi, 0.0, 0.0).xi();
            let xi = mode_frequency(node.index, p.dxi);
            for a in 0..3 {
                assert!((back[a] - xi[a]).abs() < 1e-12);
            }
        }
        assert_eq!(seen.len(), p.total_modes());
    }

    #[test]
    fn narrow_band_masked() {
        let mut sp = spec(8, vec![0.0]);
        sp.s_min_factor = 0.4;
        let p = plan_frequencies(&sp, &Medium::default()).unwrap();
        // |m_1 + ½| = |m_2 + ½| = ½ in the half m_1 ≥ 0: two columns of 8.
        assert_eq!(p.masked_count(MaskReason::Step4Singular), 16);
        assert!(p.nodes.iter().all(|n| n.s >= p.s_min));
    }

    #[test]
    fn evanescent_nodes_masked() {
        let medium = Medium {
            rho0: 4.0,
            ..Medium::default()
        };
        let p = plan_frequencies(&spec(8, vec![1.0, 2.0]), &medium).unwrap();
        // k_s² = 16 at ω = 2 removes the eight innermost modes, four per half.
        assert_eq!(p.masked_count(MaskReason::Evanescent), 4);
        for n in &p.nodes {
            assert!(n.s * n.s + n.t * n.t > 16.0);
        }
        assert_eq!(p.block, TwoFrequencyLayout::new(&p.spec).len());
        let lay = TwoFrequencyLayout::new(&p.spec);
        let blk = &p.configs[p.block_range(0)];
        assert_eq!(blk[lay.theta(1)].kind, PairKind::ETheta);
        assert_eq!(blk[lay.theta(1)].omega, 2.0);
        assert_eq!(blk[lay.grad_theta(0).start].kind, PairKind::FGradTheta);
    }

    #[test]
    fn planned_pairs_are_constructible() {
        let medium = Medium::default();
        for omegas in [vec![0.0], vec![1.0, 2.0]] {
            let p = plan_frequencies(&spec(8, omegas), &medium).unwrap();
            let bg = medium.background(0.0).unwrap();
            for cfg in &p.configs {
                crate::cgo::build_pair(cfg, &bg).unwrap();
            }
        }
    }

    #[test]
    fn rejects_frequencies_beyond_cap() {
        let mut s = spec(8, vec![0.0]);
        s.kappa_cap = 5.0;
        assert!(plan_frequencies(&s, &Medium::default()).is_err());
    }
}
