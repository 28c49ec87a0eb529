//! Acceptance suite: one line per criterion. Runs without the test harness
//! so the table is always printed; the process fails on any FAIL that is
//! not listed in `DOCUMENTED`.

use std::f64::consts::TAU;
use std::time::Instant;

use giantatom::dynamics::{default_step, evolve_dde, revival_peaks, series_rotating, series_trace, Frame};
use giantatom::fit::{
    additive_noise, fit_spectrum, fit_velocity, multiplicative_noise, synthetic_ridge, synthetic_spectrum,
    ParamMask,
};
use giantatom::model::{drive_for_max_reflection, gamma_eff, GiantAtomParams, Window};
use giantatom::nonmarkov::{blp_measure, trace_distance};
use giantatom::presets;
use giantatom::scattering::{argmin, local_minima, saw_coefficients, scatter_map, FrequencyAxis, ScatterKind};
use giantatom::spectrum::{comb_period, fft_spectrum, ift_spectrum, spectral_peaks, spectrum_closed, DetuningGrid};
use giantatom::units::hz_to_angular as w;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose failure is a known property of the tabulated data.
/// A2's printed γT of 1.4 cannot come from its printed γ = 4.4 MHz and
/// T = 46 ns, whatever the rounding.
const DOCUMENTED: &[u32] = &[3];

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn series_dde_equivalence() -> Outcome {
    let start = Instant::now();
    // deviation relative to the trace's own scale; pointwise ratios are
    // also reported but blow up where |a_e| passes near zero
    let mut worst: f64 = 0.0;
    let mut pointwise: f64 = 0.0;
    for name in presets::NAMES {
        let p = presets::params(name).unwrap();
        let tr = evolve_dde(&p, 5.0 * p.delay_t, default_step(&p)).unwrap();
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (k, v) in tr.values.iter().enumerate() {
            let s = series_rotating(&p, tr.time(k)).unwrap();
            diff = diff.max((v - s).norm());
            scale = scale.max(s.norm());
            pointwise = pointwise.max((v - s).norm() / s.norm().max(1e-12));
        }
        worst = worst.max(diff / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs < 10.0,
        format!("max rel deviation {worst:.2e} over 5 presets (pointwise {pointwise:.1e}), {secs:.2} s"),
    )
}

fn small_atom_limit() -> Outcome {
    let p = GiantAtomParams::new(w(2.3e9), w(5e6), 0.0).unwrap().with_gamma_res(w(1e6));
    let rate = 2.0 * p.gamma + p.gamma_res;
    let t_end = 5.0 / rate;
    let mut worst: f64 = 0.0;
    let series = series_trace(&p, t_end, 1e-3 / rate, Frame::Rotating).unwrap();
    let dde = evolve_dde(&p, t_end, 1.0 / (60.0 * (p.gamma + p.gamma_res))).unwrap();
    for tr in [&series, &dde] {
        for (k, v) in tr.values.iter().enumerate() {
            let e = (-rate * tr.time(k)).exp();
            worst = worst.max((v.norm() - e).abs() / e);
        }
    }
    outcome(worst <= 1e-9, format!("max rel deviation {worst:.2e} (series and DDE)"))
}

fn table_consistency() -> Outcome {
    // the product of two-digit γ and T, each uncertain by half a unit in
    // its last digit, must reach the printed γT's rounding interval
    let mut bad = Vec::new();
    let mut parts = Vec::new();
    for pr in presets::all() {
        let p = &pr.params;
        let gamma_hz = p.gamma / TAU;
        let g_half = 0.05e6;
        let t_half = 0.5e-9;
        let lo = TAU * (gamma_hz - g_half) * (p.delay_t - t_half);
        let hi = TAU * (gamma_hz + g_half) * (p.delay_t + t_half);
        let printed = pr.gamma_t_printed;
        let ok = hi >= printed - 0.05 && lo <= printed + 0.05;
        parts.push(format!("{} {:.3}/{}", pr.name, p.gamma_t(), printed));
        if !ok {
            bad.push(format!("{} in [{lo:.3}, {hi:.3}]", pr.name));
        }
    }
    let mut detail = parts.join(", ");
    if !bad.is_empty() {
        detail.push_str(&format!("; inconsistent: {}", bad.join(", ")));
    }
    outcome(bad.is_empty(), detail)
}

fn fourier_bridge() -> Outcome {
    let p = presets::params("B1").unwrap();
    // the slowest pole decays at about 2e6 /s, so 60T leaves < 1e-8
    let tr = evolve_dde(&p, 60.0 * p.delay_t, default_step(&p)).unwrap();
    let f = fft_spectrum(&tr).unwrap();
    let closed = spectrum_closed(&p, &f.grid()).unwrap();
    let half = w(40e6);
    let peak = (0..f.len())
        .filter(|&k| f.detuning(k).abs() <= half)
        .map(|k| closed.s0[k])
        .fold(0.0, f64::max);
    let (mut acc, mut n) = (0.0, 0.0);
    for k in 0..f.len() {
        if f.detuning(k).abs() <= half {
            acc += (f.s0[k] - closed.s0[k]).powi(2);
            n += 1.0;
        }
    }
    let rms = (acc / n).sqrt() / peak;
    // near resonance the Lamb shift pulls neighbouring peaks together,
    // so the comb period is read over the whole transformed band
    let top = f.s0.iter().cloned().fold(0.0, f64::max);
    let pos: Vec<f64> = spectral_peaks(&f)
        .into_iter()
        .filter(|&(_, h)| h >= 1e-3 * top)
        .map(|(d, _)| d)
        .collect();
    let period = comb_period(&pos).unwrap_or(f64::NAN);
    let ratio = period * p.delay_t / TAU;
    let local: Vec<f64> = spectral_peaks(&f)
        .into_iter()
        .filter(|&(d, _)| d.abs() <= half)
        .map(|(d, _)| d)
        .collect();
    let local_ratio = comb_period(&local).unwrap_or(f64::NAN) * p.delay_t / TAU;
    outcome(
        rms <= 1e-3 && (ratio - 1.0).abs() <= 0.02,
        format!(
            "normalized RMS {rms:.2e}; spacing·T = {ratio:.4} over {} peaks ({local_ratio:.4} within ±40 MHz)",
            pos.len()
        ),
    )
}

fn ift_revivals() -> Outcome {
    let p = presets::params("B1").unwrap();
    let start = Instant::now();
    let grid = DetuningGrid::centered(w(1.2e9), 12_001).unwrap();
    let tr = ift_spectrum(&spectrum_closed(&p, &grid).unwrap()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let oracle = revival_peaks(&series_trace(&p, 4.0 * p.delay_t, p.delay_t / 512.0, Frame::Rotating).unwrap());
    let found: Vec<(f64, f64)> = revival_peaks(&tr)
        .into_iter()
        .filter(|&(t, _)| t <= 4.0 * p.delay_t)
        .collect();
    // each revival must show up as an IFT maximum of comparable height,
    // not just as ringing near the right time
    let matched = oracle
        .iter()
        .filter(|(t0, h0)| {
            found
                .iter()
                .any(|(t, h)| (t - t0).abs() <= 0.2 * p.delay_t && rel(*h, *h0) <= 0.1)
        })
        .count();
    outcome(
        matched >= 2 && secs < 5.0,
        format!(
            "{matched} of {} oracle revivals matched within 0.2T and 10 % height, {secs:.2} s",
            oracle.len()
        ),
    )
}

fn scattering_unitarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_u: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    let mut roots_checked = 0;
    for k in 0..10_000 {
        let p = GiantAtomParams::new(
            w(rng.random_range(2.2e9..2.4e9)),
            w(rng.random_range(0.1e6..20e6)),
            rng.random_range(0.0..300e-9),
        )
        .unwrap();
        let wd = p.omega01 + w(rng.random_range(-50e6..50e6));
        let (t, r) = saw_coefficients(&p, wd);
        worst_u = worst_u.max((t.norm_sqr() + r.norm_sqr() - 1.0).abs());
        if k % 50 == 0 {
            let roots = drive_for_max_reflection(&p, p.omega01, Window::around(p.omega01, w(30e6))).unwrap();
            for root in roots {
                // below this the nearest double to the root leaves
                // |t| ≈ ε·ω(1 + γT)/Γ above 1e-10
                if gamma_eff(&p, root) > 1e-2 * p.gamma {
                    worst_t = worst_t.max(saw_coefficients(&p, root).0.norm());
                    roots_checked += 1;
                }
            }
        }
    }
    outcome(
        worst_u <= 1e-12 && worst_t <= 1e-10 && roots_checked > 0,
        format!("max ||r|²+|t|²−1| {worst_u:.1e}; max |t| {worst_t:.1e} on {roots_checked} roots"),
    )
}

fn reflection_locus() -> Outcome {
    let p = presets::params("A4").unwrap();
    let d = FrequencyAxis::linspace(p.omega01 - w(7e6), p.omega01 + w(7e6), 1401).unwrap();
    let a = FrequencyAxis::linspace(p.omega01 - w(10e6), p.omega01 + w(10e6), 101).unwrap();
    let m = scatter_map(&p, &d, &a, ScatterKind::SawTransmission, false).unwrap();
    let window = Window::new(d.at(0), d.at(d.len - 1));
    let (mut checked, mut missed) = (0, 0);
    for i in 0..m.rows() {
        let row = m.row_power(i);
        let dips = local_minima(&row);
        let roots = drive_for_max_reflection(&p, a.at(i), window).unwrap();
        if let Some(best) = argmin(&row) {
            if !roots.is_empty() && !roots.iter().any(|r| (r - d.at(best)).abs() <= d.step) {
                missed += 1;
            }
        }
        for r in roots {
            if gamma_eff(&p, r) < 0.2 * p.gamma {
                continue;
            }
            checked += 1;
            if !dips.iter().any(|&k| (d.at(k) - r).abs() <= d.step) {
                missed += 1;
            }
        }
    }
    let wide_d = FrequencyAxis::linspace(p.omega01 - w(14e6), p.omega01 + w(14e6), 2801).unwrap();
    let wide_a = FrequencyAxis::linspace(p.omega01 - w(60e6), p.omega01 + w(60e6), 2401).unwrap();
    let wide = scatter_map(&p, &wide_d, &wide_a, ScatterKind::SawTransmission, false).unwrap();
    let spacing = comb_period(&wide.extinction_maxima()).unwrap_or(f64::NAN) / TAU;
    let target = 1.0 / p.delay_t;
    outcome(
        missed == 0 && checked > 100 && rel(spacing, target) <= 0.05,
        format!(
            "{checked} roots, {missed} misses; dip spacing {:.3} MHz vs 1/T {:.3} MHz",
            spacing / 1e6,
            target / 1e6
        ),
    )
}

fn gate_map_structure() -> Outcome {
    let mut counts = Vec::new();
    let mut ratios = Vec::new();
    for name in ["A1", "A2", "A3"] {
        let p = presets::params(name).unwrap();
        let period_hz = 1.0 / p.delay_t;
        // period over five fringes; the atom axis keeps every column's line
        // inside the window
        let half = (2.5 * period_hz).max(15e6);
        let d = FrequencyAxis::linspace(p.omega01 - w(half), p.omega01 + w(half), (2.0 * half / 0.1e6) as usize + 1)
            .unwrap();
        // lines cut off unevenly at the atom-axis edges tilt the column
        // loss, so the axis reaches a gigahertz past the drive span
        let ah = half + 1e9;
        let a = FrequencyAxis::linspace(p.omega01 - w(ah), p.omega01 + w(ah), (2.0 * ah / 0.5e6) as usize + 1).unwrap();
        let m = scatter_map(&p, &d, &a, ScatterKind::GateReflection, false).unwrap();
        let pos = m.extinction_maxima();
        ratios.push(comb_period(&pos).unwrap_or(f64::NAN) * p.delay_t / TAU);
        let span = w(15e6);
        counts.push(pos.iter().filter(|&&x| (x - w(2.3e9)).abs() <= span).count());
    }
    let period_ok = ratios.iter().all(|r| (r - 1.0).abs() <= 0.02);
    let monotone = counts.windows(2).all(|c| c[1] > c[0]);
    outcome(
        period_ok && monotone,
        format!(
            "period·T A1/A2/A3 = {:.4}/{:.4}/{:.4}; fringes in 30 MHz = {}/{}/{}",
            ratios[0], ratios[1], ratios[2], counts[0], counts[1], counts[2]
        ),
    )
}

fn velocity_extraction() -> Outcome {
    let l = 550e-6;
    let v = 2906.0;
    let p = presets::params("A3").unwrap().with_delay(l / v);
    let ridge = synthetic_ridge(&p, p.omega01 - w(15e6), p.omega01 + w(15e6), 121);
    let clean = fit_velocity(&ridge, l, 3000.0).unwrap().velocity.unwrap();
    let noisy_y = additive_noise(&ridge.iter().map(|d| d.1).collect::<Vec<_>>(), 0.005 * p.gamma, 42);
    let noisy: Vec<(f64, f64)> = ridge.iter().zip(noisy_y).map(|(d, y)| (d.0, y)).collect();
    let rough = fit_velocity(&noisy, l, 3000.0).unwrap().velocity.unwrap();
    outcome(
        rel(clean, v) <= 1e-3 && rel(rough, v) <= 1e-2,
        format!("noiseless {clean:.2} m/s, 0.5 % noise {rough:.2} m/s"),
    )
}

fn spectrum_round_trip() -> Outcome {
    let p = presets::params("B1").unwrap();
    let clean = synthetic_spectrum(&p, p.omega01 - w(40e6), p.omega01 + w(40e6), 801).unwrap();
    let vals: Vec<f64> = clean.iter().map(|d| d.1).collect();
    let data: Vec<(f64, f64)> = clean
        .iter()
        .zip(multiplicative_noise(&vals, 0.01, 42))
        .map(|(d, v)| (d.0, v))
        .collect();
    let mut init = p.clone();
    init.gamma *= 1.1;
    init.gamma_res *= 0.9;
    init.delay_t *= 0.97;
    init.omega01 += w(0.3e6);
    let free = fit_spectrum(&data, &init, ParamMask::all()).unwrap();
    let mut mask = ParamMask::all();
    mask.delay_t = false;
    let small = fit_spectrum(&data, &init.clone().with_delay(0.0), mask).unwrap();
    let eg = rel(free.params.gamma, p.gamma);
    let et = rel(free.params.delay_t, p.delay_t);
    let degrade = small.residual_norm / free.residual_norm;
    outcome(
        eg <= 0.05 && et <= 0.05 && degrade >= 5.0,
        format!("γ off {:.2} %, T off {:.2} %; T = 0 residual ×{degrade:.1}", 100.0 * eg, 100.0 * et),
    )
}

fn non_markovianity() -> Outcome {
    let small = GiantAtomParams::new(w(2.3e9), w(5e6), 0.0).unwrap();
    let rate = 2.0 * small.gamma;
    let zero = blp_measure(&trace_distance(&series_trace(&small, 10.0 / rate, 1e-3 / rate, Frame::Rotating).unwrap()));
    let mut parts = Vec::new();
    let mut ok = zero == 0.0;
    let mut worst_drift: f64 = 0.0;
    for pr in presets::all() {
        let p = &pr.params;
        let blp = |div: f64| {
            blp_measure(&trace_distance(
                &series_trace(p, 10.0 * p.delay_t, p.delay_t / div, Frame::Rotating).unwrap(),
            ))
        };
        let base = blp(256.0);
        for div in [512.0, 1024.0, 2048.0] {
            worst_drift = worst_drift.max((blp(div) - base).abs());
        }
        if pr.gamma_t_printed >= 0.8 && base <= 0.0 {
            ok = false;
        }
        parts.push(format!("{} {base:.3e}", pr.name));
    }
    ok &= worst_drift <= 1e-4;
    outcome(
        ok,
        format!("T = 0: {zero}; {}; refinement drift {worst_drift:.1e}", parts.join(", ")),
    )
}

fn subexponential_envelope() -> Outcome {
    let t = 190e-9;
    let p = GiantAtomParams::new(w(2.3e9), 7.0 / t, t).unwrap();
    let tr = evolve_dde(&p, 5.0 * t, default_step(&p)).unwrap();
    let peaks = revival_peaks(&tr);
    let ratios: Vec<f64> = peaks.windows(2).take(3).map(|w| w[1].1 / w[0].1).collect();
    let ok = peaks.len() >= 4 && ratios.windows(2).all(|r| r[1] > r[0]);
    outcome(
        ok,
        format!(
            "height ratios {}",
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, Check); 12] = [
        (1, "series/DDE equivalence", series_dde_equivalence),
        (2, "small-atom limit", small_atom_limit),
        (3, "table γT consistency", table_consistency),
        (4, "Fourier bridge", fourier_bridge),
        (5, "IFT revivals", ift_revivals),
        (6, "scattering unitarity", scattering_unitarity),
        (7, "reflection locus", reflection_locus),
        (8, "gate-map structure", gate_map_structure),
        (9, "velocity extraction", velocity_extraction),
        (10, "spectrum fit round trip", spectrum_round_trip),
        (11, "non-Markovianity", non_markovianity),
        (12, "subexponential envelope", subexponential_envelope),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, name, check) in criteria {
        let o = check();
        let tag = match (o.pass, DOCUMENTED.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented)",
            (false, false) => "FAIL",
        };
        if o.pass {
            passed += 1;
        } else if !DOCUMENTED.contains(&id) {
            unexpected.push(id);
        }
        println!("criterion {id:>2} {tag:<17} {name}: {}", o.detail);
    }
    println!("{passed}/12 passed");
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
