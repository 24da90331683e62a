//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p qsky --test acceptance`. The process exits
//! non-zero when any criterion fails.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qsky::biphoton::{
    apply_isotropic_noise, contrast_to_purity, contrast_to_purity_qubit, pure_state, purity,
    purity_from_weight, weight_from_purity,
};
use qsky::lgmodes::coeff_field;
use qsky::pipeline::{analytic_point, tomographic_point};
use qsky::stokesfield::{projection_pair, stokes_field, StokesAxis};
use qsky::tomography::{
    average_quantum_contrast, concurrence, fidelity, mle_reconstruct, mle_reconstruct_from,
    noise_rate_for_contrast, noise_rate_for_weight, peak_quantum_contrast, settings_36,
    simulate_counts, CountModel, LikelihoodObjective, MleOptions, Sampling,
};
use qsky::topology::{
    convergence_scan, residuals_decreasing, skyrmion_number_analytic, skyrmion_number_at,
};
use qsky::{DensityMatrix4, GridSpec, HybridStateSpec, Mat4};

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, title: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome {
        id,
        title,
        pass,
        detail,
    }
}

/// Specs covering N ∈ {-3, -2, -1, 1, 2, 3}.
fn topological_specs() -> Vec<HybridStateSpec> {
    [(0, 1), (0, 2), (0, 3), (0, -1), (0, -2), (0, -3)]
        .into_iter()
        .map(|(a, b)| HybridStateSpec::new(a, b))
        .collect()
}

fn p_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

fn criterion_1() -> Outcome {
    let grid = GridSpec::new(5.0, 256).unwrap();
    let mut worst_invariance: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut signs = Vec::new();
    let mut ok = true;
    for spec in topological_specs() {
        let analytic = skyrmion_number_analytic(&spec).unwrap();
        signs.push(analytic);
        let n1 = skyrmion_number_at(&spec, 1.0, &grid).unwrap().n;
        for p in p_grid() {
            let t = Instant::now();
            let r = skyrmion_number_at(&spec, p, &grid).unwrap();
            slowest = slowest.max(t.elapsed().as_secs_f64());
            worst_invariance = worst_invariance.max((r.n - n1).abs());
            let res = (r.n - f64::from(analytic)).abs();
            worst_residual = worst_residual.max(res);
            ok &= r.rounded == i64::from(analytic);
        }
    }
    signs.sort();
    ok &= signs == vec![-3, -2, -1, 1, 2, 3];
    ok &= worst_invariance < 1e-6 && worst_residual < 1e-2 && slowest < 5.0;
    // anchor point: purity 0.45 on the (0,3) state
    let p_anchor = weight_from_purity(0.45, 2).unwrap();
    let anchor = skyrmion_number_at(&HybridStateSpec::new(0, 3), p_anchor, &grid).unwrap();
    outcome(
        "1",
        "topological invariance",
        ok,
        format!(
            "N in {signs:?}; max |N(p)-N(1)| = {worst_invariance:.1e}, max |N - N_analytic| = {worst_residual:.1e}, \
             slowest point {slowest:.2} s; (0,3) at purity 0.45: N = {:.5}",
            anchor.n
        ),
    )
}

fn criterion_2() -> Outcome {
    let grid = GridSpec::new(5.0, 256).unwrap();
    let mut ok = true;
    let mut values = Vec::new();
    for spec in topological_specs() {
        let r = skyrmion_number_at(&spec, 0.0, &grid).unwrap();
        ok &= r.n == 0.0 && r.masked_fraction == 1.0;
        values.push(r.n);
    }
    outcome(
        "2",
        "collapse at p = 0",
        ok,
        format!("N = {values:?}, every field fully masked = {ok}"),
    )
}

fn criterion_3a() -> Outcome {
    let g1 = contrast_to_purity(1.0, 2).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..=20_000 {
        let qc = 10f64.powf(3.0 * k as f64 / 20_000.0);
        worst = worst.max(
            (contrast_to_purity(qc, 2).unwrap() - contrast_to_purity_qubit(qc).unwrap()).abs(),
        );
    }
    outcome(
        "3a",
        "purity-contrast closed forms",
        g1 == 0.25 && worst < 1e-12,
        format!(
            "gamma(Qc=1) = {g1}, max deviation between the two forms on [1, 1e3] = {worst:.1e}"
        ),
    )
}

fn criterion_3b() -> Outcome {
    let spec = HybridStateSpec::new(0, 1);
    let pure = pure_state(&spec).unwrap();
    let options = MleOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for qc in [2.24, 32.3] {
        let target = noise_rate_for_contrast(qc, 1e5, 25e-9).unwrap();
        let results: Vec<(f64, f64, f64)> = (0..100u64)
            .into_par_iter()
            .map(|seed| {
                let model = CountModel::default()
                    .with_noise_rate(target.noise_rate)
                    .with_sampling(Sampling::Poisson, seed);
                let rec = simulate_counts(&pure, &settings_36(), &model).unwrap();
                let q = average_quantum_contrast(&rec).unwrap().value;
                let peak = peak_quantum_contrast(&rec).unwrap().value;
                let fit = mle_reconstruct(&rec, &options).unwrap();
                (purity(&fit.rho), q, peak)
            })
            .collect();
        let mean_gamma = results.iter().map(|r| r.0).sum::<f64>() / results.len() as f64;
        let mean_q = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
        let mean_peak = results.iter().map(|r| r.2).sum::<f64>() / results.len() as f64;
        let expected = contrast_to_purity(qc, 2).unwrap();
        let hit = (mean_gamma - expected).abs() <= 0.05;
        ok &= hit;
        parts.push(format!(
            "Qc {qc}: measured {mean_q:.3}, reconstructed gamma {mean_gamma:.4} vs {expected:.4} ({}), \
             peak-setting contrast {mean_peak:.3} maps to gamma {:.4}",
            if hit { "within 0.05" } else { "outside 0.05" },
            contrast_to_purity(mean_peak, 2).unwrap()
        ));
    }
    outcome(
        "3b",
        "tomographic purity-contrast loop",
        ok,
        parts.join("; "),
    )
}

fn criterion_4() -> Outcome {
    let pure = pure_state(&HybridStateSpec::new(0, 1)).unwrap();
    let mut worst = [0.0f64; 3];
    for k in 0..=100 {
        let p = k as f64 / 100.0;
        let rho = apply_isotropic_noise(&pure, p).unwrap();
        let c = concurrence(&rho).unwrap();
        let f = fidelity(&rho, &pure).unwrap();
        let g = purity(&rho);
        worst[0] = worst[0].max((c - (0.0f64).max((3.0 * p - 1.0) / 2.0)).abs());
        worst[1] = worst[1].max((f - (p + (1.0 - p) / 4.0)).abs());
        worst[2] = worst[2].max((g - purity_from_weight(p, 2)).abs());
    }
    let mixed = apply_isotropic_noise(&pure, 0.0).unwrap();
    let triple = (
        concurrence(&mixed).unwrap(),
        fidelity(&mixed, &pure).unwrap(),
        purity(&mixed),
    );
    let endpoint = triple.0.abs() < 1e-10
        && (triple.1 - 0.25).abs() < 1e-10
        && (triple.2 - 0.25).abs() < 1e-10;
    outcome(
        "4",
        "witness decay",
        worst.iter().all(|&w| w < 1e-10) && endpoint,
        format!(
            "max deviation C {:.1e}, F {:.1e}, gamma {:.1e}; p = 0 gives (C, F, gamma) = ({:.1e}, {:.12}, {:.12})",
            worst[0], worst[1], worst[2], triple.0, triple.1, triple.2
        ),
    )
}

fn criterion_5() -> Outcome {
    let spec = HybridStateSpec::new(0, 3).with_delta(0.7);
    let grid = GridSpec::new(5.0, 256).unwrap();
    let coeffs = coeff_field(&spec, &grid).unwrap();
    let pure = pure_state(&spec).unwrap();
    let pure_field = stokes_field(&pure, &coeffs, &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_diff: f64 = 0.0;
    let mut worst_share: f64 = 0.0;
    for p in [0.2, 0.6] {
        let rho = apply_isotropic_noise(&pure, p).unwrap();
        for _ in 0..1000 {
            let point = (
                rng.random_range(0..grid.samples),
                rng.random_range(0..grid.samples),
            );
            for axis in StokesAxis::ALL {
                let noisy = projection_pair(&rho, &coeffs, point, axis).unwrap();
                let clean = projection_pair(&pure, &coeffs, point, axis).unwrap();
                let s_pure = pure_field.vector(point.0, point.1)[axis.index() - 1];
                worst_diff = worst_diff.max((noisy.difference() - p * s_pure).abs());
                // strip the signal p·I_pure from each projection
                let share_plus = noisy.plus - p * clean.plus;
                let share_minus = noisy.minus - p * clean.minus;
                let expected = (1.0 - p) / 2.0;
                worst_share = worst_share
                    .max((share_plus - share_minus).abs())
                    .max((share_plus - expected).abs())
                    .max((noisy.noise_share - expected).abs());
            }
        }
    }
    outcome(
        "5",
        "projection-pair noise rejection",
        worst_diff < 1e-12 && worst_share < 1e-12,
        format!("max |I+ - I- - p S_i| = {worst_diff:.1e}, max noise-share mismatch = {worst_share:.1e}"),
    )
}

fn criterion_6() -> Outcome {
    let options = MleOptions::default();
    // deterministic counts for a partially mixed state
    let spec = HybridStateSpec::new(0, 2).with_delta(1.1);
    let pure = pure_state(&spec).unwrap();
    let target = noise_rate_for_weight(0.8, 1e5, 25e-9).unwrap();
    let model = CountModel::default().with_noise_rate(target.noise_rate);
    let rec = simulate_counts(&pure, &settings_36(), &model).unwrap();
    let truth = apply_isotropic_noise(&pure, 0.8).unwrap();
    let fit = mle_reconstruct(&rec, &options).unwrap();
    let cold = mle_reconstruct_from(&rec, &DensityMatrix4::maximally_mixed(), &options).unwrap();
    let det_err = fit
        .rho
        .frobenius_distance(&truth)
        .max(cold.rho.frobenius_distance(&truth));

    // Poisson counts of the pure state, 1e5 pairs per setting
    let bell = pure_state(&HybridStateSpec::new(0, 1)).unwrap();
    let mut fids: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let model = CountModel::default().with_sampling(Sampling::Poisson, seed);
            let rec = simulate_counts(&bell, &settings_36(), &model).unwrap();
            let fit = mle_reconstruct(&rec, &options).unwrap();
            fidelity(&fit.rho, &bell).unwrap()
        })
        .collect();
    fids.sort_by(f64::total_cmp);
    let median = 0.5 * (fids[49] + fids[50]);

    // analytic gradient against central differences
    let objective = LikelihoodObjective::new(&rec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let eps = 1e-6;
    let mut worst_rel: f64 = 0.0;
    for _ in 0..20 {
        let l = Mat4::identity()
            + Mat4::from_fn(|_, _| {
                Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))
            });
        let g = objective.gradient(&l);
        let mut err = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                    let mut e = Mat4::zeros();
                    e[(r, c)] = unit * eps;
                    let fd = (objective.value(&(l + e)) - objective.value(&(l - e))) / (2.0 * eps);
                    let an = if unit.re == 1.0 {
                        g[(r, c)].re
                    } else {
                        g[(r, c)].im
                    };
                    err += (fd - an).powi(2);
                }
            }
        }
        worst_rel = worst_rel.max(err.sqrt() / g.norm());
    }
    outcome(
        "6",
        "reconstruction quality",
        det_err < 1e-6 && median > 0.99 && worst_rel < 1e-6,
        format!(
            "deterministic Frobenius error {det_err:.1e} ({} iterations from the maximally mixed start); Poisson median fidelity {median:.5} \
             (min {:.5}); gradient max relative error {worst_rel:.1e}",
            cold.iterations, fids[0]
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let specs = [(0, 1), (0, 2), (0, 3), (1, 2), (0, -3), (3, 1)];
    for (a, b) in specs {
        let spec = HybridStateSpec::new(a, b);
        let rows = convergence_scan(&spec, 1.0, 5.0, &[64, 128, 256]).unwrap();
        let mono = residuals_decreasing(&rows) == Some(true);
        let last = rows[2].residual;
        ok &= mono && last < 1e-3;
        parts.push(format!(
            "({a},{b}) residuals {:.1e}/{:.1e}/{:.1e}",
            rows[0].residual, rows[1].residual, last
        ));
    }
    // waist doubling on a fixed 256² window of half-width 10
    let wide = GridSpec::new(10.0, 256).unwrap();
    let base = GridSpec::new(5.0, 256).unwrap();
    let mut worst_scale: f64 = 0.0;
    for (a, b) in [(0, 1), (0, 3)] {
        let spec = HybridStateSpec::new(a, b);
        let w1 = skyrmion_number_at(&spec, 1.0, &wide).unwrap().n;
        let w2 = skyrmion_number_at(&spec.with_waist(2.0), 1.0, &wide)
            .unwrap()
            .n;
        let h1 = skyrmion_number_at(&spec, 1.0, &base).unwrap().n;
        worst_scale = worst_scale.max((w1 - w2).abs()).max((h1 - w1).abs());
    }
    ok &= worst_scale < 1e-3;
    parts.push(format!(
        "max change under waist or half-width doubling {worst_scale:.1e}"
    ));
    outcome("7", "convergence and quantization", ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let spec = HybridStateSpec::new(0, 1);
    let grid = GridSpec::new(5.0, 256).unwrap();
    let p = weight_from_purity(0.80, 2).unwrap();
    let analytic = analytic_point(&spec, p, &grid).unwrap();
    let model = CountModel::default().with_sampling(Sampling::Poisson, 80);
    let tomo = tomographic_point(&spec, p, &grid, &model, &MleOptions::default()).unwrap();
    let inside = |n: f64| (0.95..=1.05).contains(&n);
    outcome(
        "8",
        "experimental-value sanity at purity 0.80",
        inside(analytic.skyrmion.n) && inside(tomo.skyrmion.n),
        format!(
            "p = {p:.4}: analytic N = {:.5}, tomographic (Poisson) N = {:.5} with reconstructed purity {:.4}",
            analytic.skyrmion.n, tomo.skyrmion.n, tomo.witnesses.purity
        ),
    )
}

fn main() {
    let criteria: [fn() -> Outcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3a,
        criterion_3b,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
    ];
    let mut failed = 0;
    for run in criteria {
        let t = Instant::now();
        let o = run();
        println!(
            "acceptance {:<3} {:<40} {}  [{:.1} s] {}",
            o.id,
            o.title,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
