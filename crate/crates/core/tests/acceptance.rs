//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

#![allow(clippy::needless_range_loop)]

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use elastic_cgo::cgo::{build_pair, Amplitude, CgoSolution, PairConfig, PairKind};
use elastic_cgo::combo::{combo_forward, combo_solve, two_frequency_split, ComboTriple};
use elastic_cgo::config::ExperimentConfig;
use elastic_cgo::dn_form::{bilinear_form_source, constant_oracle, synthesize_data, FormValue};
use elastic_cgo::phantom::{Bump, Phantom};
use elastic_cgo::pipeline;
use elastic_cgo::quadrature::QuadratureSpec;
use elastic_cgo::recon::{FrequencyPlan, TwoFrequencyLayout};
use elastic_cgo::report::ErrorReport;
use elastic_cgo::series::{exact_vs_series_check, pair_product_expansion};
use elastic_cgo::tensor::{ti_expand, ConstantPerturbation, IsotropicBackground, TIComponents};
use elastic_cgo::verify::cmd_verify_cgo;

struct Ledger {
    lines: Vec<(usize, bool, String)>,
}

/// Writes past the test harness capture so the lines reach the run log.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

impl Ledger {
    fn record(&mut self, n: usize, pass: bool, what: String) {
        emit(&format!("{} #{n} {what}", if pass { "PASS" } else { "FAIL" }));
        self.lines.push((n, pass, what));
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `∫_{[−½,½]³} e^{−iξ·x} dx`.
fn unit_box_transform(xi: [f64; 3]) -> f64 {
    xi.iter()
        .map(|&k| {
            if k.abs() < 1e-12 {
                1.0
            } else {
                (k / 2.0).sin() / (k / 2.0)
            }
        })
        .product()
}

fn random_ti(rng: &mut ChaCha8Rng) -> TIComponents {
    TIComponents::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

fn random_pair(rng: &mut ChaCha8Rng, kind: PairKind, omega: f64, d_max: f64) -> PairConfig {
    let s = rng.gen_range(0.2..d_max * 0.7);
    let t = rng.gen_range(-d_max * 0.7..d_max * 0.7);
    let d: f64 = (s * s + t * t).sqrt().max(1.0);
    let r = if kind.uses_r() {
        d * rng.gen_range(2.0..10.0)
    } else {
        0.0
    };
    PairConfig::new(kind, s, t, rng.gen_range(0.0..std::f64::consts::TAU), r, omega)
}

/// Closed form of a constant-amplitude pair against a constant perturbation
/// on the unit cube: `(C:∇u:∇v − ω² δρ u·v)` times the box transform.
fn constant_amplitude_oracle(
    p: &TIComponents,
    rho: (f64, f64),
    u: &CgoSolution,
    v: &CgoSolution,
    omega: f64,
) -> Option<Complex64> {
    let (Amplitude::Constant(a), Amplitude::Constant(b)) = (u.amplitude, v.amplitude) else {
        return None;
    };
    let t = ti_expand(*p);
    let mut acc = c(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    acc += u.phase[i] * a[j] * v.phase[k] * b[l] * t.get(i, j, k, l);
                }
            }
        }
    }
    acc -= (a[0] * b[0] + a[1] * b[1]) * (omega * omega * rho.0) + a[2] * b[2] * (omega * omega * rho.1);
    let xi = [0, 1, 2].map(|m| -(u.phase[m] + v.phase[m]).im);
    Some(acc * unit_box_transform(xi))
}

fn round_trip(cfg: &ExperimentConfig) -> (ErrorReport, f64, Vec<FormValue>) {
    let data = pipeline::forward(cfg).expect("forward");
    assert!(data.iter().all(|d| d.ok), "forward produced failed entries");
    let rec = pipeline::reconstruct_bundle(cfg, &data).expect("reconstruct");
    let truth = pipeline::truth_fields(cfg).unwrap();
    let got = pipeline::reconstruction_fields(&rec).unwrap();
    let report = ErrorReport::compare(&truth, &got).unwrap();
    (report, rec.diagnostics.masked_fraction, data)
}

fn zero_run_max(cfg: &ExperimentConfig, data: &[FormValue]) -> f64 {
    let zero: Vec<FormValue> = data
        .iter()
        .map(|d| FormValue {
            value: c(0.0, 0.0),
            ..d.clone()
        })
        .collect();
    let rec = pipeline::reconstruct_bundle(cfg, &zero).unwrap();
    let f = pipeline::reconstruction_fields(&rec).unwrap();
    f.data.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
}

fn criterion_1(led: &mut Ledger) {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::two_frequency();
    let rep = cmd_verify_cgo(&cfg).unwrap();
    let worst = rep.checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let families: std::collections::BTreeSet<_> = rep
        .checks
        .iter()
        .map(|c| c.name.split(' ').nth(2).unwrap().to_string())
        .collect();
    // Independent check of the constant-amplitude members:
    // μ(ζ·ζ)a + (λ+μ)ζ(ζ·a) + ω²ρa = 0.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut own = 0.0f64;
    for omega in [0.0, 1.0, 2.0] {
        let bg = IsotropicBackground::new(1.0, 1.0, 1.0, omega).unwrap();
        for kind in [
            PairKind::AShear,
            PairKind::BGradient,
            PairKind::ETheta,
            PairKind::FGradTheta,
        ] {
            for _ in 0..20 {
                let Ok((u, v)) = build_pair(&random_pair(&mut rng, kind, omega, 8.0), &bg) else {
                    continue;
                };
                for w in [u, v] {
                    let Amplitude::Constant(a) = w.amplitude else { continue };
                    let z = w.phase;
                    let zz: Complex64 = (0..3).map(|m| z[m] * z[m]).sum();
                    let za: Complex64 = (0..3).map(|m| z[m] * a[m]).sum();
                    let zn: f64 = (0..3).map(|m| z[m].norm_sqr()).sum();
                    let an: f64 = (0..3).map(|m| a[m].norm_sqr()).sum::<f64>().sqrt();
                    for m in 0..3 {
                        let r = a[m] * zz + z[m] * za * 2.0 + a[m] * (omega * omega);
                        own = own.max(r.norm() / (3.0 * zn.max(omega * omega) * an));
                    }
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    led.record(
        1,
        rep.pass && families.len() == 6 && worst <= 1e-9 && own <= 1e-9 && secs < 10.0,
        format!(
            "CGO residuals: {} families, omega in {{0,1,2}}, max relative residual {worst:.2e} \
             (independent {own:.2e}), {} evanescent nodes skipped, {secs:.2}s",
            families.len(),
            rep.skipped_evanescent
        ),
    );
}

fn criterion_2(led: &mut Ledger) {
    let t0 = Instant::now();
    let grid = ExperimentConfig::default().grid();
    let quad = QuadratureSpec::gauss(16);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    let mut own_worst = 0.0f64;
    let mut n = 0;
    while n < 50 {
        let kind = PairKind::ALL[n % 6];
        let omega = if kind.zero_frequency_only() {
            0.0
        } else {
            [0.0, 1.0, 2.0][n % 3]
        };
        let bg = IsotropicBackground::new(1.0, 1.0, 1.0, omega).unwrap();
        let Ok((u, v)) = build_pair(&random_pair(&mut rng, kind, omega, 3.5), &bg) else {
            continue;
        };
        let p = random_ti(&mut rng);
        let rho = if omega > 0.0 {
            (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            (0.0, 0.0)
        };
        let src = ConstantPerturbation {
            stiffness: p,
            density: Some(rho),
        };
        let quad_val = bilinear_form_source(&src, &grid, &u, &v, &quad).unwrap();
        let oracle = match constant_amplitude_oracle(&p, rho, &u, &v, omega) {
            Some(o) => {
                let lib = constant_oracle(&p, Some(rho), &u, &v, &grid).unwrap();
                own_worst = own_worst.max((lib - o).norm() / o.norm());
                o
            }
            None => constant_oracle(&p, Some(rho), &u, &v, &grid).unwrap(),
        };
        worst = worst.max((quad_val - oracle).norm() / oracle.norm());
        n += 1;
    }
    let secs = t0.elapsed().as_secs_f64();
    led.record(
        2,
        worst <= 1e-6 && own_worst <= 1e-10 && secs < 60.0,
        format!(
            "oracle equivalence: 50 configs, 16 Gauss points, max |quad - oracle|/|oracle| {worst:.2e} \
             (library closed form vs test closed form {own_worst:.2e}), {secs:.2}s"
        ),
    );
}

fn criterion_3(led: &mut Ledger) {
    let cfg = ExperimentConfig::default();
    let grid = cfg.grid();
    let bg = IsotropicBackground::new(1.0, 1.0, 1.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let s = rng.gen_range(0.2..5.0);
        let t = rng.gen_range(-5.0..5.0);
        let p = random_ti(&mut rng);
        let (u, v) = build_pair(&PairConfig::new(PairKind::AShear, s, t, 0.0, 0.0, 0.0), &bg).unwrap();
        let got = bilinear_form_source(
            &ConstantPerturbation {
                stiffness: p,
                density: None,
            },
            &grid,
            &u,
            &v,
            &cfg.quadrature,
        )
        .unwrap();
        let c1212 = 0.5 * (p.c1111 - p.c1122);
        let want = -(s * s + t * t) * (c1212 + p.c1313) * unit_box_transform([-2.0 * s, 0.0, -2.0 * t]);
        worst = worst.max((got - want).norm() / want.abs());
    }
    led.record(
        3,
        worst <= 1e-8,
        format!("shear-pair identity -(s^2+t^2)(c1212+c1313) F[box]: max relative deviation {worst:.2e}"),
    );
}

/// Closed-form large-r coefficients `(r⁴, r²)` of the twelve terms, written
/// out by hand independently of the series engine.
fn closed_forms(s: f64, t: f64, k2: f64) -> [(&'static str, f64, f64); 12] {
    let d2 = s * s + t * t;
    let d4 = d2 * d2;
    let (s2, t2) = (s * s, t * t);
    [
        ("I1", t2 * t2 / d4, 2.0 * (k2 - d2) * t2 * t2 / d4 - 2.0 / d2 * t2 * s2),
        ("I2", 1.0, 0.0),
        ("I3", s2 * s2 / d4, 2.0 * (k2 - d2) * s2 * s2 / d4 - 2.0 / d2 * t2 * s2),
        ("I4", -2.0 * t2 / d2, 2.0 * ((d2 - k2) / d2 * t2 - s2)),
        (
            "I5",
            2.0 * t2 * s2 / d4,
            2.0 / d2 * (s2 * s2 + t2 * t2 + 2.0 * t2 * s2 + 2.0 * t2 * s2 * k2 / d2),
        ),
        ("I6", -2.0 * s2 / d2, 2.0 * ((d2 - k2) / d2 * s2 - t2)),
        ("I7", -4.0 * t2 / d2, 4.0 * ((d2 - k2) / d2 * t2 + s2)),
        (
            "I8",
            4.0 * t2 * s2 / d4,
            4.0 * (-2.0 * t2 * s2 * (d2 - k2) / d4 - (t2 * t2 + s2 * s2) / d2),
        ),
        ("I9", -4.0 * s2 / d2, 4.0 * ((d2 - k2) / d2 * s2 + t2)),
        ("J1", 0.0, -t2 / d2),
        ("J2", 0.0, 1.0),
        ("J3", 0.0, -s2 / d2),
    ]
}

fn criterion_4(led: &mut Ledger) {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst = 0.0f64;
    let mut tails_ok = true;
    let mut tail_worst = 0.0f64;
    for n in 0..50 {
        let omega = rng.gen_range(0.0..2.0);
        let bg = IsotropicBackground::new(1.0, 1.0, 1.0, omega).unwrap();
        let (s, t) = loop {
            let s: f64 = rng.gen_range(0.3..5.0);
            let t: f64 = rng.gen_range(-5.0..5.0);
            if s * s + t * t > 1.5 * bg.kp2() + 0.25 {
                break (s, t);
            }
        };
        let exp = pair_product_expansion(PairKind::BGradient, s, t, &bg, 6).unwrap();
        for (name, r4, r2) in closed_forms(s, t, bg.kp2()) {
            let term = exp.term(name).unwrap();
            let d2 = s * s + t * t;
            worst = worst.max((term.series.coeff(4) - r4).norm() / r4.abs().max(1e-3));
            worst = worst.max((term.series.coeff(2) - r2).norm() / r2.abs().max(1e-3 * d2));
        }
        if n % 5 == 0 {
            let s: f64 = rng.gen_range(1.0..4.0);
            let t: f64 = rng.gen_range(1.0..4.0);
            let rs: Vec<f64> = [32.0, 64.0, 128.0, 256.0].iter().map(|k| k * s.hypot(t)).collect();
            let bg0 = IsotropicBackground::new(1.0, 1.0, 1.0, 0.0).unwrap();
            let mut reps = exact_vs_series_check(PairKind::BGradient, s, t, &bg, &rs, 2).unwrap();
            reps.extend(exact_vs_series_check(PairKind::CAffineRight, s, t, &bg0, &rs, 2).unwrap());
            for rep in reps {
                tails_ok &= rep.pass;
                if let (false, Some(q)) = (rep.at_rounding, rep.predicted_order) {
                    for f in &rep.fitted_orders {
                        tail_worst = tail_worst.max((f - q as f64).abs() / (q as f64).abs().max(1.0));
                    }
                }
            }
        }
    }
    led.record(
        4,
        worst <= 1e-12 && tails_ok && tail_worst <= 0.2,
        format!(
            "asymptotics: 12 r^4/r^2 coefficients at 50 nodes, max relative deviation {worst:.2e}; \
             remainder orders within {:.1}% of prediction",
            100.0 * tail_worst
        ),
    );
}

fn criterion_5(led: &mut Ledger) {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut round = 0.0f64;
    for _ in 0..200 {
        let z = |rng: &mut ChaCha8Rng| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let g = ComboTriple {
            g1: z(&mut rng),
            g2: z(&mut rng),
            g3: z(&mut rng),
        };
        let b = combo_forward(&combo_solve(&g));
        round = round.max((b.g1 - g.g1).norm().max((b.g2 - g.g2).norm()).max((b.g3 - g.g3).norm()));
    }
    // Channel order: c1111, c1122, c1133, c1313, c3333, rho11, rho33.
    let mut r4 = 0.0f64;
    let mut r2 = 0.0f64;
    for _ in 0..50 {
        let omega = rng.gen_range(0.0..2.0);
        let s: f64 = rng.gen_range(0.5..4.0);
        let t: f64 = rng.gen_range(-4.0..4.0);
        let bg = IsotropicBackground::new(1.0, 1.0, 1.0, omega).unwrap();
        if s * s + t * t <= bg.kp2() {
            continue;
        }
        let exp = pair_product_expansion(PairKind::BGradient, s, t, &bg, 6).unwrap();
        let d2 = s * s + t * t;
        let scale = |p: i32| exp.terms.iter().map(|t| t.series.coeff(p).norm()).fold(0.0, f64::max);
        let k4 = s.powi(4) / (d2 * d2);
        for (ch, w) in [1.0, 0.0, -2.0, -4.0, 1.0, 0.0, 0.0].iter().enumerate() {
            r4 = r4.max((exp.channel_coeffs(4)[ch] - w * k4).norm() / scale(4));
        }
        let bg0 = IsotropicBackground::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let e0 = pair_product_expansion(PairKind::BGradient, s, t, &bg0, 6).unwrap();
        let sc0 = e0.terms.iter().map(|t| t.series.coeff(2).norm()).fold(0.0, f64::max);
        for (ch, w) in [1.0, -2.0, 2.0, 0.0, -1.0, 0.0, 0.0].iter().enumerate() {
            r2 = r2.max((e0.channel_coeffs(2)[ch] - w * 2.0 * s * s).norm() / sc0);
        }
    }
    led.record(
        5,
        round <= 1e-14 && r4 <= 1e-12 && r2 <= 1e-12,
        format!(
            "combination algebra: round trip {round:.2e}; r^4 part vs c1111-2c1133-4c1313+c3333 {r4:.2e}; \
             zero-frequency r^2 part vs c1111-2c1122+2c1133-c3333 {r2:.2e}"
        ),
    );
}

fn max_l2(r: &ErrorReport, names: &[&str]) -> f64 {
    names.iter().map(|n| r.row(n).unwrap().rel_l2).fold(0.0, f64::max)
}

const STIFFNESS: [&str; 5] = ["c1111", "c1122", "c1133", "c1313", "c3333"];

fn criterion_6(led: &mut Ledger) {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::default();
    assert_eq!((cfg.spatial_n, cfg.freq_n, cfg.r_sweep.len()), (16, 16, 8));
    let (rep, masked, data) = round_trip(&cfg);
    let worst = max_l2(&rep, &STIFFNESS);
    let zero = zero_run_max(&cfg, &data);
    let scale = cfg.phantom.scale();
    let secs = t0.elapsed().as_secs_f64();
    let per: Vec<String> = STIFFNESS
        .iter()
        .map(|n| format!("{n} {:.2}%", 100.0 * rep.row(n).unwrap().rel_l2))
        .collect();
    led.record(
        6,
        worst <= 0.05 && zero <= 1e-6 * scale && secs < 1800.0,
        format!(
            "static reconstruction 16^3/16^3: {} (masked fraction {masked:.3}); zero data max {zero:.1e}; {secs:.0}s",
            per.join(", ")
        ),
    );
}

fn criterion_7(led: &mut Ledger) {
    let cfg = ExperimentConfig {
        freq_n: 8,
        ..ExperimentConfig::default()
    };
    let error_field = |phantom: Phantom| -> Vec<f64> {
        let cfg = ExperimentConfig { phantom, ..cfg.clone() };
        let data = pipeline::forward(&cfg).unwrap();
        let rec = pipeline::reconstruct_bundle(&cfg, &data).unwrap();
        let got = pipeline::reconstruction_fields(&rec).unwrap();
        let truth = pipeline::truth_fields(&cfg).unwrap();
        got.data
            .iter()
            .flatten()
            .zip(truth.data.iter().flatten())
            .map(|(a, b)| a - b)
            .collect()
    };
    let e1 = error_field(cfg.phantom.clone());
    let e2 = error_field(cfg.phantom.scaled(2.0));
    let num: f64 = e1
        .iter()
        .zip(&e2)
        .map(|(a, b)| (b - 2.0 * a).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = e1.iter().map(|a| (2.0 * a).powi(2)).sum::<f64>().sqrt();
    let lin = num / den;
    let zero = error_field(Phantom::zero());
    let zmax = zero.iter().map(|v| v.abs()).fold(0.0, f64::max);
    led.record(
        7,
        lin <= 1e-10 && zmax == 0.0,
        format!(
            "linearity: doubling the phantom doubles the error field to {lin:.2e}; zero phantom output max {zmax:.1e}"
        ),
    );
}

fn criterion_8(led: &mut Ledger) {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::two_frequency();
    let (rep, masked, data) = round_trip(&cfg);
    let stiff = max_l2(&rep, &STIFFNESS);
    let dens = max_l2(&rep, &["rho11", "rho33"]);
    // Split shear data at the two frequencies, then predict a third.
    let plan = FrequencyPlan::from_config(&cfg).unwrap();
    let lay = TwoFrequencyLayout::new(&plan.spec);
    let third = 1.5;
    let mut cfgs = Vec::new();
    let mut pieces = Vec::new();
    for node in (0..plan.nodes.len()).step_by(37) {
        let base = plan.block_range(node).start;
        let (a1, a2) = (&data[base + lay.shear(0)], &data[base + lay.shear(1)]);
        let (w2, w0) = two_frequency_split(a1.value, a2.value, cfg.omegas[0], cfg.omegas[1]).unwrap();
        pieces.push((w2, w0));
        cfgs.push(PairConfig {
            omega: third,
            ..a1.config
        });
    }
    let bg = cfg.background.background(0.0).unwrap();
    let at_third = synthesize_data(&cfg.phantom, &cfg.grid(), &bg, &cfgs, &cfg.quadrature).unwrap();
    let split = at_third
        .iter()
        .zip(&pieces)
        .map(|(v, (w2, w0))| (v.value - (w2 * third * third + w0)).norm() / v.value.norm())
        .fold(0.0, f64::max);
    let secs = t0.elapsed().as_secs_f64();
    led.record(
        8,
        dens <= 0.10 && stiff <= 0.05 && split <= 1e-10,
        format!(
            "two-frequency reconstruction: density max L2 {:.2}% (rho11 {:.2}%, rho33 {:.2}%), stiffness max {:.2}%, \
             masked fraction {masked:.3}; split residual at a third frequency {split:.1e}; {secs:.0}s",
            100.0 * dens,
            100.0 * rep.row("rho11").unwrap().rel_l2,
            100.0 * rep.row("rho33").unwrap().rel_l2,
            100.0 * stiff
        ),
    );
}

fn criterion_9(led: &mut Ledger) {
    let cfg = ExperimentConfig::two_frequency();
    let mu = [Bump::new([0.0, 0.05, -0.05], 0.3, 0.5)];
    let pa = Phantom::isotropic(&[Bump::new([0.1, 0.0, 0.0], 0.3, 0.8)], &mu);
    let pb = Phantom::isotropic(&[Bump::new([-0.1, 0.1, 0.05], 0.25, -0.4)], &mu);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut worst = 0.0f64;
    let mut count = 0;
    for omega in [0.0, 1.0, 2.0] {
        let bg = IsotropicBackground::new(1.0, 1.0, 1.0, omega).unwrap();
        let plan: Vec<PairConfig> = (0..40)
            .map(|n| {
                random_pair(
                    &mut rng,
                    if n % 2 == 0 { PairKind::AShear } else { PairKind::ETheta },
                    omega,
                    8.0,
                )
            })
            .filter(|p| build_pair(p, &bg).is_ok())
            .collect();
        let da = synthesize_data(&pa, &cfg.grid(), &bg, &plan, &cfg.quadrature).unwrap();
        let db = synthesize_data(&pb, &cfg.grid(), &bg, &plan, &cfg.quadrature).unwrap();
        for (a, b) in da.iter().zip(&db) {
            worst = worst.max((a.value - b.value).norm() / a.value.norm());
            count += 1;
        }
    }
    led.record(
        9,
        worst <= 1e-10 && count > 100,
        format!("lambda blindness: {count} divergence-free pair values, max relative difference {worst:.2e}"),
    );
}

#[test]
fn acceptance() {
    let mut led = Ledger { lines: Vec::new() };
    criterion_1(&mut led);
    criterion_2(&mut led);
    criterion_3(&mut led);
    criterion_4(&mut led);
    criterion_5(&mut led);
    criterion_6(&mut led);
    criterion_7(&mut led);
    criterion_8(&mut led);
    criterion_9(&mut led);
    let failed: Vec<usize> = led.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    emit(&format!(
        "{} of {} criteria pass",
        led.lines.len() - failed.len(),
        led.lines.len()
    ));
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
