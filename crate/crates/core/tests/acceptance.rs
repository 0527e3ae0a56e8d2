//! Acceptance criteria A1-A7. Each test prints one `[Ax] PASS|FAIL` line;
//! run with `cargo test -p absorb-sim --test acceptance -- --nocapture`.

#![allow(clippy::excessive_precision)]

use std::sync::OnceLock;

use absorb_sim::cli::{self, Preset, RunArgs};
use absorb_sim::config::{Algorithm, SimulationConfig, TimeSeriesResult, Vec3};
use absorb_sim::engine::{self, run_step, run_trials, Decision, TrialState, TrialsResult};
use absorb_sim::rng::make_stream;
use absorb_sim::{math, stats};

/// Molecules per trial for the fig3/fig4 presets.
const SCALED_N: usize = 100_000;
/// Relative tolerance against the closed form (A1, A2, A4).
const REL_TOL: f64 = 0.05;
/// Binomial sigmas (A1, A3).
const BINOMIAL_SIGMAS: f64 = 3.0;
/// RMC/APMC ratio band for t >= 10 s (A4).
const RATIO_BAND: (f64, f64) = (1.6, 2.4);
const RATIO_FROM_T: f64 = 10.0;
/// Standard errors by which RMC must exceed the analytic increment (A5).
const A5_STANDARD_ERRORS: f64 = 4.0;
/// Time the A5 step must cover; steps cover ((k-1) dt, k dt].
const A5_TIME: f64 = 1.0;
/// Chi-square significance and sample size per distance (A6).
const A6_ALPHA: f64 = 0.001;
const A6_DRAWS: usize = 100_000;
const A6_BINS: usize = 10;
/// erfc absolute error budget (A7).
const ERFC_TOL: f64 = 1e-12;

fn report(id: &str, pass: bool, detail: String) {
    println!("[{id}] {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id} failed: {detail}");
}

fn preset_run(preset: Preset, algorithm: Algorithm, n: Option<usize>) -> TrialsResult {
    let mut config = preset.config();
    config.algorithm = algorithm;
    if let Some(n) = n {
        config.num_molecules = n;
    }
    run_trials(&config).expect("simulation runs")
}

fn fig3a(algorithm: Algorithm) -> &'static TimeSeriesResult {
    static SMC: OnceLock<TimeSeriesResult> = OnceLock::new();
    static RMC: OnceLock<TimeSeriesResult> = OnceLock::new();
    static APMC: OnceLock<TimeSeriesResult> = OnceLock::new();
    let cell = match algorithm {
        Algorithm::Smc => &SMC,
        Algorithm::Rmc => &RMC,
        Algorithm::Apmc => &APMC,
        Algorithm::Sc => unreachable!(),
    };
    cell.get_or_init(|| preset_run(Preset::Fig3a, algorithm, Some(SCALED_N)).mean)
}

#[test]
fn a1_apmc_matches_analysis_for_small_receiver() {
    let ts = preset_run(Preset::Fig3b, Algorithm::Apmc, Some(SCALED_N)).mean;
    let p = ts.analytic_at(10.0).unwrap();
    assert!((p - 0.0072637).abs() < 1e-6);
    let sim = ts.fraction_at(10.0).unwrap();
    let tol = (BINOMIAL_SIGMAS * stats::binomial_sigma(p, SCALED_N)).max(REL_TOL * p);
    report(
        "A1",
        (sim - p).abs() <= tol,
        format!("fig3b APMC fraction at t=10 s {sim:.6} vs analytic {p:.7}, |diff| {:.2e} <= {tol:.2e}", (sim - p).abs()),
    );
}

#[test]
fn a2_rmc_matches_analysis_for_large_receiver() {
    let ts = fig3a(Algorithm::Rmc);
    let p = ts.analytic_at(10.0).unwrap();
    assert!((p - 0.33280).abs() < 1e-5);
    let sim = ts.fraction_at(10.0).unwrap();
    let rel = (sim - p).abs() / p;
    report(
        "A2",
        rel <= REL_TOL,
        format!("fig3a RMC fraction at t=10 s {sim:.5} vs analytic {p:.5}, relative error {rel:.4} <= {REL_TOL}"),
    );
}

#[test]
fn a3_smc_underestimates_and_apmc_overestimates() {
    let smc = fig3a(Algorithm::Smc).fraction_at(10.0).unwrap();
    let apmc = fig3a(Algorithm::Apmc).fraction_at(10.0).unwrap();
    let p = fig3a(Algorithm::Apmc).analytic_at(10.0).unwrap();
    let sigma = stats::binomial_sigma(p, SCALED_N);
    let below = (p - smc) / sigma;
    let above = (apmc - p) / sigma;
    report(
        "A3",
        below > BINOMIAL_SIGMAS && above > BINOMIAL_SIGMAS,
        format!("fig3a at t=10 s: SMC {smc:.5} is {below:.1} sigma below, APMC {apmc:.5} is {above:.1} sigma above analytic {p:.5}"),
    );
}

#[test]
fn a4_rmc_doubles_apmc_at_large_step() {
    let rmc = preset_run(Preset::Fig4b, Algorithm::Rmc, Some(SCALED_N)).mean;
    let apmc = preset_run(Preset::Fig4b, Algorithm::Apmc, Some(SCALED_N)).mean;
    let mut ratio_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut worst_rel: f64 = 0.0;
    let mut pass = true;
    let mut checked = 0;
    for i in 0..apmc.len() {
        if apmc.time[i] < RATIO_FROM_T - 1e-9 {
            continue;
        }
        checked += 1;
        let ratio = rmc.fraction[i] / apmc.fraction[i];
        let rel = (apmc.fraction[i] - apmc.analytic_fraction[i]).abs() / apmc.analytic_fraction[i];
        ratio_range = (ratio_range.0.min(ratio), ratio_range.1.max(ratio));
        worst_rel = worst_rel.max(rel);
        pass &= (RATIO_BAND.0..=RATIO_BAND.1).contains(&ratio) && rel <= REL_TOL;
    }
    assert_eq!(checked, 99);
    report(
        "A4",
        pass,
        format!(
            "fig4b, {checked} points with t >= 10 s: RMC/APMC in [{:.3}, {:.3}] (band {RATIO_BAND:?}), worst APMC relative error {worst_rel:.4} <= {REL_TOL}",
            ratio_range.0, ratio_range.1
        ),
    );
}

fn fig5(algorithm: Algorithm) -> &'static TrialsResult {
    static RMC: OnceLock<TrialsResult> = OnceLock::new();
    static APMC: OnceLock<TrialsResult> = OnceLock::new();
    let cell = if algorithm == Algorithm::Rmc { &RMC } else { &APMC };
    cell.get_or_init(|| preset_run(Preset::Fig5, algorithm, None))
}

/// Step k with (k-1) dt < t <= k dt.
fn step_covering(t: f64, dt: f64) -> usize {
    (t / dt - 1e-9).ceil() as usize
}

#[test]
fn a5_rmc_overestimates_early_step() {
    let rmc = &fig5(Algorithm::Rmc).distribution;
    let apmc = &fig5(Algorithm::Apmc).distribution;
    assert_eq!((rmc.num_trials(), rmc.num_molecules), (1000, 1000));
    let k = step_covering(A5_TIME, rmc.time_step);
    assert_eq!(k, 2);
    let analytic = rmc.analytic_increments[k - 1];
    assert!((analytic - 33.03803175812585).abs() < 1e-9);
    let excess = (rmc.mean(k) - analytic) / rmc.standard_error(k);
    let rmc_gap = (rmc.mean(k) - analytic).abs();
    let apmc_gap = (apmc.mean(k) - analytic).abs();
    report(
        "A5",
        excess > A5_STANDARD_ERRORS && apmc_gap < rmc_gap,
        format!(
            "fig5 step {k} ({:.1}, {:.1}] s: analytic {analytic:.3}, RMC mean {:.3} ({excess:.1} SE above), APMC mean {:.3}; |APMC-analytic| {apmc_gap:.3} vs |RMC-analytic| {rmc_gap:.3}",
            rmc.time_at(k - 1),
            rmc.time_at(k),
            rmc.mean(k),
            apmc.mean(k),
        ),
    );
}

#[test]
fn a6_apmc_single_step_frequency_fits_closed_form() {
    let config = SimulationConfig {
        algorithm: Algorithm::Apmc,
        num_molecules: A6_DRAWS,
        num_steps: 1,
        trials: 1,
        ..Preset::Fig5.config()
    };
    let geometry = config.geometry();
    let width = 4.0 * (4.0 * config.diffusion_coefficient * config.time_step).sqrt();
    let mut hits = Vec::new();
    let mut probs = Vec::new();
    for b in 0..A6_BINS {
        let d_j = (config.receiver_radius + width * b as f64 / (A6_BINS - 1) as f64).max(config.receiver_radius);
        // random directions around the receiver center
        let mut dir_stream = make_stream(config.seed, 1_000 + b as u64, 0);
        let positions: Vec<Vec3> = (0..A6_DRAWS)
            .map(|_| {
                let v = engine::brownian_step(Vec3::ZERO, 0.5, 1.0, &mut dir_stream);
                let mut p = geometry.center + v * (d_j / v.norm());
                while geometry.distance_to_center(p) < config.receiver_radius {
                    p = p + (p - geometry.center) * 1e-15;
                }
                p
            })
            .collect();
        let mut state = TrialState::from_positions(positions.iter().copied(), config.seed, b as u64);
        run_step(&mut state, Algorithm::Apmc, &config, &geometry).unwrap();
        hits.push(state.newly_absorbed);
        let expected: f64 = positions
            .iter()
            .map(|&p| {
                math::pr_apmc(geometry.distance_to_center(p), config.receiver_radius, config.diffusion_coefficient, config.time_step)
                    .unwrap()
            })
            .sum::<f64>()
            / A6_DRAWS as f64;
        probs.push(expected);
    }
    let test = stats::bernoulli_chi_square(&hits, &[A6_DRAWS as u64; A6_BINS], &probs, A6_ALPHA);
    report(
        "A6",
        test.passes(),
        format!(
            "chi-square {:.2} on {} dof, critical {:.2} at alpha {A6_ALPHA} (p = {:.3})",
            test.statistic, test.degrees_of_freedom, test.critical_value, test.p_value
        ),
    );
}

// 40-digit mpmath values.
const ERFC_REFERENCE: &[(f64, f64)] = &[
    (-3.0, 1.999977909503001414558627),
    (-0.3, 1.328626759459127427638914),
    (0.0, 1.0),
    (0.15, 0.8320040285726365052297905),
    (0.2475, 0.7263252965915345822093671),
    (0.5, 0.4795001221869534623172533),
    (1.0, 0.1572992070502851306587794),
    (1.7, 0.01620954140922543637375741),
    (2.5, 0.0004069520174449589395642157),
    (3.5, 0.0000007430983723414127455236838),
    (4.5, 1.96616044154288747627916e-10),
    (6.0, 2.151973671249891311659335e-17),
];

#[test]
fn a7_invariant_suite() {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        println!("    {name}: {}", if ok { "ok" } else { "FAILED" });
        if !ok {
            failures.push(name.to_string());
        }
    };

    let worst_erfc = ERFC_REFERENCE
        .iter()
        .map(|&(x, e)| (math::erfc(x) - e).abs())
        .fold(0.0, f64::max);
    check(&format!("erfc max error {worst_erfc:.1e} <= {ERFC_TOL:e}"), worst_erfc <= ERFC_TOL);

    let cfg = Preset::Fig5.config();
    let (r, dif, dt) = (cfg.receiver_radius, cfg.diffusion_coefficient, cfg.time_step);
    check("pr_apmc(d = r_r) = 1", math::pr_apmc(r, r, dif, dt).unwrap() == 1.0);
    let cross_path = (0..200).all(|i| {
        let d = r * (1.0 + i as f64 * 0.05);
        let a = math::pr_apmc(d, r, dif, dt).unwrap();
        let b = math::analytic_fraction(dt, r, d, dif);
        (a - b).abs() <= f64::EPSILON * a
    });
    check("pr_apmc equals analytic_fraction(dt) to machine precision", cross_path);

    // count conservation and monotone cumulative absorption, every algorithm
    let mut conserved = true;
    let mut monotone = true;
    for alg in Algorithm::ALL {
        let config = SimulationConfig {
            algorithm: alg,
            num_molecules: 20_000,
            num_steps: 40,
            ..Preset::Fig4a.config()
        };
        let geometry = config.geometry();
        let mut state = TrialState::release(&config, 0);
        let mut prev = 0;
        for _ in 0..config.num_steps {
            run_step(&mut state, alg, &config, &geometry).unwrap();
            let absorbed = state.molecules.iter().filter(|m| !m.is_free()).count();
            conserved &= absorbed + state.free_count() == config.num_molecules
                && absorbed as u64 == state.cumulative_absorbed;
            monotone &= state.cumulative_absorbed >= prev;
            prev = state.cumulative_absorbed;
        }
        let mean = run_trials(&SimulationConfig { trials: 4, num_molecules: 2000, ..config }).unwrap().mean;
        monotone &= mean.fraction.windows(2).all(|w| w[1] >= w[0]);
    }
    check("count conservation (free + absorbed = N)", conserved);
    check("monotone cumulative absorption", monotone);

    // SC dominates SMC on identical sampled endpoints
    let geometry = cfg.geometry();
    let mut stream = make_stream(7, 0, 0);
    let mut dominated = true;
    let mut smc_hits = 0;
    for _ in 0..200_000 {
        let p0 = loop {
            let p = engine::brownian_step(geometry.center, dif, 2.0, &mut stream);
            if !geometry.contains(p) {
                break p;
            }
        };
        let p1 = engine::brownian_step(p0, dif, dt, &mut stream);
        if engine::decide_smc(p0, p1, &geometry) == Decision::Absorbed {
            smc_hits += 1;
            dominated &= engine::decide_sc(p0, p1, &geometry) == Decision::Absorbed;
        }
    }
    check(&format!("SC absorbs whenever SMC does ({smc_hits} SMC hits)"), dominated && smc_hits > 100);

    // 1 vs 4 workers, bit-identical
    let config = SimulationConfig {
        num_molecules: 20_000,
        trials: 3,
        ..Preset::Fig4a.config()
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let invariant = Algorithm::ALL.iter().all(|&alg| {
        let c = SimulationConfig { algorithm: alg, ..config };
        one.install(|| run_trials(&c)).unwrap() == four.install(|| run_trials(&c)).unwrap()
    });
    check("thread-count invariance (1 vs 4 workers)", invariant);

    // Same seed, byte-identical CSV files
    let dir = tempfile::tempdir().unwrap();
    let csv_run = |sub: &str, workers: usize| {
        let args = RunArgs {
            preset: Some(Preset::Fig5),
            trials: Some(20),
            scale_n: Some(500),
            seed: Some(2024),
            workers: Some(workers),
            out: dir.path().join(sub),
            ..Default::default()
        };
        let plan = args.resolve().unwrap();
        let report = cli::execute(&plan).unwrap();
        assert!(report.all_succeeded());
        report
            .files
            .iter()
            .map(|f| std::fs::read(f).unwrap())
            .collect::<Vec<_>>()
    };
    let first = csv_run("a", 1);
    check(
        "seed reproducibility (byte-identical CSVs)",
        first == csv_run("b", 1) && first == csv_run("c", 3) && first.len() == 5,
    );

    report(
        "A7",
        failures.is_empty(),
        if failures.is_empty() {
            "all invariants hold".to_string()
        } else {
            format!("failed: {}", failures.join("; "))
        },
    );
}
