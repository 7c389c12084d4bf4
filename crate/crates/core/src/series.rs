//! Truncated Laurent series in the large parameter `r`, and the expansions
//! of the compressional pair-product coefficients built from them.

use num_complex::Complex64;
use serde::Serialize;

use crate::cgo::{build_pair, PairConfig, PairKind};
use crate::dn_form::PairIntegrand;
use crate::error::{Error, Result};
use crate::linalg::{c, ZERO};
use crate::tensor::{IsotropicBackground, N_CHANNELS};

/// `Σ_p a_p r^p` known exactly above an optional tail power.
///
/// `tail = Some(q)` means the series stands for `Σ_{p>q} a_p r^p + O(r^q)`;
/// no coefficient at or below `q` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSeries {
    min_power: i32,
    coeffs: Vec<Complex64>,
    tail: Option<i32>,
}

impl LaurentSeries {
    pub fn zero() -> Self {
        Self {
            min_power: 0,
            coeffs: Vec::new(),
            tail: None,
        }
    }

    pub fn monomial(a: Complex64, p: i32) -> Self {
        Self {
            min_power: p,
            coeffs: vec![a],
            tail: None,
        }
        .normalized()
    }

    pub fn constant(a: f64) -> Self {
        Self::monomial(c(a, 0.0), 0)
    }

    /// Builds from `(power, coefficient)` terms; repeated powers accumulate.
    pub fn from_terms(terms: &[(i32, Complex64)]) -> Self {
        terms
            .iter()
            .fold(Self::zero(), |acc, &(p, a)| acc.add(&Self::monomial(a, p)))
    }

    pub fn with_tail(mut self, tail: Option<i32>) -> Self {
        self.tail = tail;
        self.normalized()
    }

    pub fn tail(&self) -> Option<i32> {
        self.tail
    }

    pub fn is_exact(&self) -> bool {
        self.tail.is_none()
    }

    pub fn coeff(&self, p: i32) -> Complex64 {
        let k = p - self.min_power;
        if k < 0 || k as usize >= self.coeffs.len() {
            ZERO
        } else {
            self.coeffs[k as usize]
        }
    }

    /// Highest power with a nonzero coefficient.
    pub fn max_power(&self) -> Option<i32> {
        self.coeffs
            .iter()
            .rposition(|a| *a != ZERO)
            .map(|k| k as i32 + self.min_power)
    }

    pub fn min_power(&self) -> Option<i32> {
        self.coeffs
            .iter()
            .position(|a| *a != ZERO)
            .map(|k| k as i32 + self.min_power)
    }

    /// Nonzero `(power, coefficient)` pairs in increasing power.
    pub fn terms(&self) -> Vec<(i32, Complex64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != ZERO)
            .map(|(k, a)| (k as i32 + self.min_power, *a))
            .collect()
    }

    fn normalized(mut self) -> Self {
        if let Some(q) = self.tail {
            let cut = (q + 1 - self.min_power).max(0) as usize;
            if cut > 0 {
                let cut = cut.min(self.coeffs.len());
                self.coeffs.drain(..cut);
                self.min_power = q + 1;
            }
        }
        while self.coeffs.last() == Some(&ZERO) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|a| **a == ZERO).count();
        if lead == self.coeffs.len() {
            self.coeffs.clear();
            self.min_power = 0;
        } else if lead > 0 {
            self.coeffs.drain(..lead);
            self.min_power += lead as i32;
        }
        self
    }

    fn join_tail(a: Option<i32>, b: Option<i32>) -> Option<i32> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => Some(x.max(y)),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let terms_a = self.terms();
        let terms_b = other.terms();
        let all: Vec<i32> = terms_a.iter().chain(&terms_b).map(|t| t.0).collect();
        let (lo, hi) = match (all.iter().min(), all.iter().max()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => {
                return Self {
                    min_power: 0,
                    coeffs: Vec::new(),
                    tail: Self::join_tail(self.tail, other.tail),
                }
            }
        };
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for (p, a) in terms_a.into_iter().chain(terms_b) {
            coeffs[(p - lo) as usize] += a;
        }
        Self {
            min_power: lo,
            coeffs,
            tail: Self::join_tail(self.tail, other.tail),
        }
        .normalized()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn scale(&self, k: Complex64) -> Self {
        if k == ZERO {
            return Self {
                min_power: 0,
                coeffs: Vec::new(),
                tail: self.tail,
            };
        }
        Self {
            min_power: self.min_power,
            coeffs: self.coeffs.iter().map(|a| a * k).collect(),
            tail: self.tail,
        }
        .normalized()
    }

    /// Product; the tail is the larger of `tail_a + max_power(b)` and
    /// `tail_b + max_power(a)` (and `tail_a + tail_b`).
    pub fn mul(&self, other: &Self) -> Self {
        let ta = self.terms();
        let tb = other.terms();
        let mut tail = None;
        if let Some(qa) = self.tail {
            let hb = other.max_power().unwrap_or(i32::MIN / 4);
            let cand = other.tail.map_or(qa + hb, |qb| (qa + hb).max(qa + qb));
            tail = Self::join_tail(tail, Some(cand));
        }
        if let Some(qb) = other.tail {
            let ha = self.max_power().unwrap_or(i32::MIN / 4);
            tail = Self::join_tail(tail, Some(qb + ha));
        }
        if ta.is_empty() || tb.is_empty() {
            return Self {
                min_power: 0,
                coeffs: Vec::new(),
                tail,
            };
        }
        let lo = ta[0].0 + tb[0].0;
        let hi = ta.last().unwrap().0 + tb.last().unwrap().0;
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for (pa, a) in &ta {
            for (pb, b) in &tb {
                coeffs[(pa + pb - lo) as usize] += a * b;
            }
        }
        Self {
            min_power: lo,
            coeffs,
            tail,
        }
        .normalized()
    }

    pub fn powi(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Drops every power below `min`, recording the highest dropped nonzero
    /// power as the tail.
    pub fn truncate(&self, min: i32) -> Self {
        let dropped = self.terms().into_iter().filter(|(p, _)| *p < min).map(|(p, _)| p).max();
        let kept: Vec<(i32, Complex64)> = self.terms().into_iter().filter(|(p, _)| *p >= min).collect();
        let mut out = Self::from_terms(&kept);
        out.tail = Self::join_tail(self.tail, dropped);
        out.normalized()
    }

    pub fn eval(&self, r: f64) -> Complex64 {
        self.terms()
            .into_iter()
            .map(|(p, a)| a * r.powi(p))
            .fold(ZERO, |acc, v| acc + v)
    }
}

/// `β = √(r²/d² − 1 + k²/d²)` expanded as
/// `(r/d) Σ_n binom(1/2, n) ((k² − d²)/r²)^n` with `terms` terms.
pub fn beta_series(s: f64, t: f64, k: f64, terms: usize) -> Result<LaurentSeries> {
    let d2 = s * s + t * t;
    if !(d2 > 0.0) {
        return Err(Error::DegenerateNode { s, t });
    }
    if terms < 3 {
        return Err(Error::Precondition("beta series needs at least 3 terms".into()));
    }
    let d = d2.sqrt();
    let x = k * k - d2;
    if x == 0.0 {
        return Ok(LaurentSeries::monomial(c(1.0 / d, 0.0), 1));
    }
    let mut out = LaurentSeries::zero();
    let mut binom = 1.0;
    for n in 0..terms {
        if n > 0 {
            binom *= (0.5 - (n as f64 - 1.0)) / n as f64;
        }
        let p = 1 - 2 * n as i32;
        out = out.add(&LaurentSeries::monomial(c(binom * x.powi(n as i32) / d, 0.0), p));
    }
    Ok(out.with_tail(Some(1 - 2 * terms as i32)))
}

/// Full-tensor component carried by one expansion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbol {
    C1111,
    C2222,
    C3333,
    C1122,
    /// `C1133`, also standing for its image `C3311`.
    C1133,
    C2233,
    C1212,
    C1313,
    C2323,
    Rho11,
    Rho33,
}

impl Symbol {
    /// Coefficients over the seven channels (`c1111, c1122, c1133, c1313,
    /// c3333, rho11, rho33`) after the TI linear relations.
    pub fn channels(self) -> [f64; N_CHANNELS] {
        let mut v = [0.0; N_CHANNELS];
        match self {
            Symbol::C1111 | Symbol::C2222 => v[0] = 1.0,
            Symbol::C3333 => v[4] = 1.0,
            Symbol::C1122 => v[1] = 1.0,
            Symbol::C1133 | Symbol::C2233 => v[2] = 1.0,
            Symbol::C1212 => {
                v[0] = 0.5;
                v[1] = -0.5;
            }
            Symbol::C1313 | Symbol::C2323 => v[3] = 1.0,
            Symbol::Rho11 => v[5] = 1.0,
            Symbol::Rho33 => v[6] = 1.0,
        }
        v
    }

    pub fn is_density(self) -> bool {
        matches!(self, Symbol::Rho11 | Symbol::Rho33)
    }
}

/// One term of the compressional pair-product expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTerm {
    pub name: &'static str,
    pub symbol: Symbol,
    /// Series of the term's coefficient; density terms exclude the `ω²`
    /// prefactor.
    pub series: LaurentSeries,
}

/// Expansion of the compressional pair product at a node.
#[derive(Debug, Clone, PartialEq)]
pub struct PairExpansion {
    pub s: f64,
    pub t: f64,
    pub omega: f64,
    pub terms: Vec<ExpansionTerm>,
}

impl PairExpansion {
    pub fn term(&self, name: &str) -> Option<&ExpansionTerm> {
        self.terms.iter().find(|t| t.name == name)
    }

    /// Coefficient of `r^p` over the seven channels, density terms weighted
    /// by `ω²`.
    pub fn channel_coeffs(&self, p: i32) -> [Complex64; N_CHANNELS] {
        let w2 = self.omega * self.omega;
        let mut out = [ZERO; N_CHANNELS];
        for term in &self.terms {
            let a = term.series.coeff(p) * if term.symbol.is_density() { w2 } else { 1.0 };
            for (ch, k) in term.symbol.channels().iter().enumerate() {
                out[ch] += a * *k;
            }
        }
        out
    }

    /// The whole expansion collapsed to channels, as one series per channel.
    pub fn channel_series(&self) -> Vec<LaurentSeries> {
        let w2 = self.omega * self.omega;
        (0..N_CHANNELS)
            .map(|ch| {
                self.terms.iter().fold(LaurentSeries::zero(), |acc, term| {
                    let k = term.symbol.channels()[ch] * if term.symbol.is_density() { w2 } else { 1.0 };
                    if k == 0.0 {
                        let tail = Self::merge(acc.tail(), term.series.tail());
                        acc.with_tail(tail)
                    } else {
                        acc.add(&term.series.scale(c(k, 0.0)))
                    }
                })
            })
            .collect()
    }

    fn merge(a: Option<i32>, b: Option<i32>) -> Option<i32> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => Some(x.max(y)),
        }
    }
}

/// Expands the nine stiffness terms and three density terms of the
/// compressional pair `u = ζ⁽¹⁾e^{ζ⁽¹⁾·x}`, `v = ζ⁽²⁾e^{ζ⁽²⁾·x}` in powers of
/// `r`, with `β` entering only through its own series.
pub fn pair_product_expansion(
    kind: PairKind,
    s: f64,
    t: f64,
    bg: &IsotropicBackground,
    beta_terms: usize,
) -> Result<PairExpansion> {
    if kind != PairKind::BGradient {
        return Err(Error::Precondition(format!(
            "expansion is implemented for the compressional pair only, not {}",
            kind.name()
        )));
    }
    let beta = beta_series(s, t, bg.kp2().sqrt(), beta_terms)?;
    let k = |v: f64| LaurentSeries::constant(v);
    let r = LaurentSeries::monomial(c(1.0, 0.0), 1);
    let r2 = r.mul(&r);
    let bs = beta.scale(c(s, 0.0));
    let bt = beta.scale(c(t, 0.0));
    let s_m_bt = k(s).sub(&bt);
    let s_p_bt = k(s).add(&bt);
    let t_m_bs = k(t).sub(&bs);
    let t_p_bs = k(t).add(&bs);
    let b2 = beta.mul(&beta);
    let sq = |a: &LaurentSeries| a.mul(a);
    let terms = vec![
        ExpansionTerm {
            name: "I1",
            symbol: Symbol::C1111,
            series: sq(&s_m_bt).mul(&sq(&s_p_bt)),
        },
        ExpansionTerm {
            name: "I2",
            symbol: Symbol::C2222,
            series: r2.mul(&r2),
        },
        ExpansionTerm {
            name: "I3",
            symbol: Symbol::C3333,
            series: sq(&t_p_bs).mul(&sq(&t_m_bs)),
        },
        ExpansionTerm {
            name: "I4",
            symbol: Symbol::C1122,
            series: k(s * s).add(&b2.scale(c(t * t, 0.0))).mul(&r2).scale(c(-2.0, 0.0)),
        },
        ExpansionTerm {
            name: "I5",
            symbol: Symbol::C1133,
            series: sq(&s_m_bt).mul(&sq(&t_m_bs)).add(&sq(&t_p_bs).mul(&sq(&s_p_bt))),
        },
        ExpansionTerm {
            name: "I6",
            symbol: Symbol::C2233,
            series: k(t * t).add(&b2.scale(c(s * s, 0.0))).mul(&r2).scale(c(-2.0, 0.0)),
        },
        ExpansionTerm {
            name: "I7",
            symbol: Symbol::C1212,
            series: k(s * s).sub(&b2.scale(c(t * t, 0.0))).mul(&r2).scale(c(4.0, 0.0)),
        },
        ExpansionTerm {
            name: "I8",
            symbol: Symbol::C1313,
            series: k(s * s)
                .sub(&b2.scale(c(t * t, 0.0)))
                .mul(&k(t * t).sub(&b2.scale(c(s * s, 0.0))))
                .scale(c(4.0, 0.0)),
        },
        ExpansionTerm {
            name: "I9",
            symbol: Symbol::C2323,
            series: k(t * t).sub(&b2.scale(c(s * s, 0.0))).mul(&r2).scale(c(4.0, 0.0)),
        },
        ExpansionTerm {
            name: "J1",
            symbol: Symbol::Rho11,
            series: s_m_bt.mul(&s_p_bt),
        },
        ExpansionTerm {
            name: "J2",
            symbol: Symbol::Rho11,
            series: r2.clone(),
        },
        ExpansionTerm {
            name: "J3",
            symbol: Symbol::Rho33,
            series: t_m_bs.mul(&t_p_bs),
        },
    ];
    Ok(PairExpansion {
        s,
        t,
        omega: bg.omega,
        terms,
    })
}

/// Series of the cdiff-coefficient `μ⁰(t + βs)²` of the gradient/affine pair
/// at zero frequency.
pub fn affine_pair_cdiff_series(s: f64, t: f64, bg: &IsotropicBackground, beta_terms: usize) -> Result<LaurentSeries> {
    let beta = beta_series(s, t, 0.0, beta_terms)?;
    let a = LaurentSeries::constant(t).add(&beta.scale(c(s, 0.0)));
    Ok(a.mul(&a).scale(c(bg.mu0, 0.0)))
}

/// Deviation between an exact function of `r` and a truncated series, with
/// the observed decay order on successive doublings.
#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub r_values: Vec<f64>,
    pub deviations: Vec<f64>,
    /// Highest power dropped by the truncation (the predicted order).
    pub predicted_order: Option<i32>,
    /// `log₂(dev(2r)/dev(r))` for consecutive doublings present in `r_values`.
    pub fitted_orders: Vec<f64>,
    pub max_deviation: f64,
    /// Every deviation is at rounding level, so no order can be fitted.
    pub at_rounding: bool,
    /// All fitted orders within ±20% of the prediction (or the deviation is
    /// at rounding level when nothing was dropped).
    pub pass: bool,
}

/// Compares `exact(r)` against `series` truncated at `keep_min`. Deviations
/// below `1e-12 · rounding_scale · r^rounding_power` count as rounding, where
/// the power is that of the largest terms entering the exact value.
pub fn tail_order_check(
    exact: impl Fn(f64) -> Result<Complex64>,
    series: &LaurentSeries,
    keep_min: i32,
    r_values: &[f64],
    rounding_scale: f64,
    rounding_power: i32,
) -> Result<TailReport> {
    if r_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("r values must be increasing".into()));
    }
    let truncated = series.truncate(keep_min);
    // Highest dropped power with a coefficient above rounding noise, else
    // the order of the series' own remainder.
    // Sizes are compared at the smallest r of the sweep.
    let r0 = r_values.first().copied().unwrap_or(1.0);
    let terms = series.terms();
    let size = |p: i32, a: Complex64| a.norm() * r0.powi(p);
    let largest = terms.iter().map(|(p, a)| size(*p, *a)).fold(0.0, f64::max);
    let predicted = terms
        .iter()
        .filter(|(p, a)| *p < keep_min && size(*p, *a) > 1e-9 * largest)
        .map(|(p, _)| *p)
        .max()
        .or(truncated.tail());
    let mut deviations = Vec::with_capacity(r_values.len());
    for &r in r_values {
        deviations.push((exact(r)? - truncated.eval(r)).norm());
    }
    let mut fitted = Vec::new();
    for (i, &r) in r_values.iter().enumerate() {
        if let Some(j) = r_values.iter().position(|&q| (q - 2.0 * r).abs() < 1e-9 * r) {
            if deviations[i] > 0.0 && deviations[j] > 0.0 {
                fitted.push((deviations[j] / deviations[i]).log2());
            }
        }
    }
    let max_deviation = deviations.iter().cloned().fold(0.0, f64::max);
    let at_rounding = r_values
        .iter()
        .zip(&deviations)
        .all(|(r, d)| *d <= 1e-12 * rounding_scale * r.powi(rounding_power));
    let pass = match predicted {
        _ if at_rounding => true,
        None => false,
        Some(q) => {
            let q = q as f64;
            !fitted.is_empty()
                && fitted.iter().all(|f| {
                    if q == 0.0 {
                        f.abs() <= 0.2
                    } else {
                        (f - q).abs() <= 0.2 * q.abs()
                    }
                })
        }
    };
    Ok(TailReport {
        r_values: r_values.to_vec(),
        deviations,
        predicted_order: predicted,
        fitted_orders: fitted,
        max_deviation,
        at_rounding,
        pass,
    })
}

/// Checks the expansion of a pair family against its exact pair-product
/// coefficients, channel by channel, at the given `r` values.
///
/// The compressional family is compared on all seven channels; the
/// gradient/affine family on its `C1133 − C1111` coefficient. The series is
/// truncated at `keep_min` before comparison.
pub fn exact_vs_series_check(
    kind: PairKind,
    s: f64,
    t: f64,
    bg: &IsotropicBackground,
    r_values: &[f64],
    keep_min: i32,
) -> Result<Vec<TailReport>> {
    let d = (s * s + t * t).sqrt();
    if r_values.iter().any(|&r| !(r > d)) {
        return Err(Error::Precondition(format!("all r values must exceed d = {d}")));
    }
    match kind {
        PairKind::BGradient => {
            let exp = pair_product_expansion(kind, s, t, bg, 6)?;
            let series = exp.channel_series();
            let mut reports = Vec::new();
            for ch in 0..N_CHANNELS {
                if ch >= 5 && bg.omega == 0.0 {
                    continue;
                }
                let exact = |r: f64| -> Result<Complex64> {
                    let cfg = PairConfig::new(kind, s, t, 0.0, r, bg.omega);
                    let it = PairIntegrand::from_config(&cfg, bg)?;
                    Ok(it.coeffs[ch][0])
                };
                let scale = (1.0 + d).powi(4);
                reports.push(tail_order_check(exact, &series[ch], keep_min, r_values, scale, 4)?);
            }
            Ok(reports)
        }
        PairKind::CAffineRight => {
            if bg.omega != 0.0 {
                return Err(Error::Precondition("affine pairs need zero frequency".into()));
            }
            let series = affine_pair_cdiff_series(s, t, bg, 6)?;
            let exact = |r: f64| -> Result<Complex64> {
                let cfg = PairConfig::new(kind, s, t, 0.0, r, 0.0);
                let (u, v) = build_pair(&cfg, bg)?;
                // cdiff coefficient: tr(G)H33 + G33 tr(H) with the
                // isotropic-λ part removed; here div u = 0.
                let (gu, _) = u.gradient_poly();
                let (gv, _) = v.gradient_poly();
                let tr_v = gv[0][0] + gv[1][1] + gv[2][2];
                let tr_u = gu[0][0] + gu[1][1] + gu[2][2];
                Ok(tr_u * gv[2][2] + gu[2][2] * tr_v)
            };
            let scale = (1.0 + d).powi(2);
            Ok(vec![tail_order_check(exact, &series, keep_min, r_values, scale, 2)?])
        }
        other => Err(Error::Precondition(format!(
            "no expansion available for {}",
            other.name()
        ))),
    }
}
