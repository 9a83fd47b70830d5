//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use auxsic_core::experiments::{run_experiment, Experiment, ExperimentConfig, ExperimentOutput};
use auxsic_core::impairments::adc::{quantize, AdcConfig};
use auxsic_core::impairments::noise::{add_gaussian_noise, NoiseConfig};
use auxsic_core::ofdm::{OfdmGrid, OfdmParams, SymbolKind};
use auxsic_core::rng::{rng_from_seed, TrialSeeds};
use auxsic_core::scenario::{ChannelKnowledge, Impairments, ScenarioConfig};
use auxsic_core::signal::{linear_to_db, ComplexSignal};
use auxsic_core::sim::{measure_residual_si, run_both, PreparedScenario, Runner};
use auxsic_core::transceiver::{Transceiver, TransceiverConfig};
use auxsic_core::Complex64;

const SEED: u64 = 20240;

struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, passed: bool, detail: String) {
        println!("{id} {} {detail}", if passed { "PASS" } else { "FAIL" });
        self.lines.push((id.into(), passed, detail));
    }
}

fn run(exp: Experiment, sweep: Option<Vec<f64>>, trials: usize, workers: usize) -> ExperimentOutput {
    let mut cfg = ExperimentConfig::new(exp);
    cfg.seed = SEED;
    cfg.trials = trials;
    if let Some(s) = sweep {
        cfg.sweep = s;
    }
    run_experiment(&cfg, &Runner::new(workers).unwrap()).unwrap()
}

fn rows_where<'a>(out: &'a ExperimentOutput, col: &str, value: &str) -> Vec<&'a Vec<String>> {
    let c = out.table.column(col).unwrap();
    out.table.rows.iter().filter(|r| r[c] == value).collect()
}

fn cell(out: &ExperimentOutput, row: &[String], col: &str) -> f64 {
    row[out.table.column(col).unwrap()].parse().unwrap()
}

fn c1_quantization_floor(rep: &mut Report) {
    // The converter sees the transmitter output at its own full scale.
    let cfg = TransceiverConfig::typical(20.0, -5.0);
    let trx = Transceiver::new(cfg).unwrap();
    let params = OfdmParams::default();
    let mut acc = 0.0;
    let blocks = 16;
    for b in 0..blocks {
        let grid = OfdmGrid::random_qpsk(params, vec![SymbolKind::Data; 64], &mut rng_from_seed(b));
        let tx = trx.transmit(&grid, 1000 + b).unwrap();
        let q = quantize(&tx.signal, &AdcConfig::bits(14), 0.0).unwrap();
        let err: f64 = q
            .signal
            .samples()
            .iter()
            .zip(tx.signal.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / tx.signal.len() as f64;
        acc += err / 2.0 / (q.full_scale * q.full_scale) / blocks as f64;
    }
    let dbfs = linear_to_db(acc);
    rep.record(
        "C1",
        (dbfs + 90.0).abs() <= 1.0,
        format!("quantization floor {dbfs:.2} dBFS (target -90 +/- 1)"),
    );
}

fn c2_noise_operating_points(rep: &mut Report) {
    let n = 1_000_000;
    let silent = ComplexSignal::from_samples(vec![Complex64::new(0.0, 0.0); n]);
    let mut ok = true;
    let mut detail = Vec::new();
    for (input, target) in [(-25.0, -90.0), (-5.0, -72.0)] {
        let (noisy, _) = add_gaussian_noise(&silent, &NoiseConfig::ni5791(), input, 77).unwrap();
        let measured = linear_to_db(noisy.power());
        ok &= (measured - target).abs() <= 0.3;
        detail.push(format!("{measured:.2} dBm at {input} dBm (target {target})"));
    }
    rep.record("C2", ok, format!("noise {}", detail.join(", ")));
}

fn c3_c4_phase_noise(rep: &mut Report) {
    let out = run(Experiment::Fig4, None, 500, 0);
    let res = out.table.values("residual_dbm");
    let bound = out.table.values("upper_bound_dbm");
    let within = res.iter().zip(&bound).all(|(r, b)| r <= &(b + 1.0));
    let margin = res.iter().zip(&bound).map(|(r, b)| b - r).fold(f64::INFINITY, f64::min);
    rep.record(
        "C3",
        within && margin >= 10.0,
        format!("phase-noise residual within bound: {within}, smallest margin below bound {margin:.1} dB (need >= 10)"),
    );

    let mut ordered = true;
    let mut detail = Vec::new();
    for p in out.table.values("nlos_power_dbm").iter().step_by(3) {
        let rows = rows_where(&out, "nlos_power_dbm", &format!("{p:.4}"));
        let med = |m: &str| {
            let r = rows.iter().find(|r| r[1] == m).unwrap();
            cell(&out, r, "median_residual_dbm")
        };
        let (b, c, d) = (med("B"), med("C"), med("D"));
        ordered &= d < c && c < b;
        detail.push(format!("{p}: B {b:.1} C {c:.1} D {d:.1}"));
    }
    rep.record(
        "C4",
        ordered,
        format!("median D < C < B at equal diffuse power [{}]", detail.join("; ")),
    );
}

fn c5_estimation_penalty(rep: &mut Report) {
    let out = run(Experiment::Fig5a, None, 500, 0);
    let mut ok = true;
    let mut worst1 = (f64::INFINITY, f64::NEG_INFINITY);
    let mut worst4 = f64::NEG_INFINITY;
    for r in &out.table.rows {
        let d = cell(&out, r, "degradation_db");
        match r[1].as_str() {
            "1" => {
                ok &= (d - 3.0).abs() <= 1.0;
                worst1 = (worst1.0.min(d), worst1.1.max(d));
            }
            "4" => {
                ok &= d <= 1.5;
                worst4 = worst4.max(d);
            }
            _ => {}
        }
    }
    rep.record(
        "C5",
        ok,
        format!(
            "M=1 penalty {:.2}..{:.2} dB (target 3 +/- 1), M=4 penalty <= {:.2} dB (need <= 1.5)",
            worst1.0, worst1.1, worst4
        ),
    );
}

fn c6_fading_penalty(rep: &mut Report) {
    let out = run(Experiment::Fig5b, Some(vec![-5.0]), 500, 0);
    let d: Vec<f64> = out.table.values("degradation_db");
    let ok = (5.0..=8.0).contains(&d[2]) && d[0] < d[1] && d[1] < d[2];
    rep.record(
        "C6",
        ok,
        format!(
            "held-channel penalty at -5 dBm input: 50 {:.2}, 100 {:.2}, 150 {:.2} dB (150 in 5..8, increasing)",
            d[0], d[1], d[2]
        ),
    );
}

fn c7_nonlinearity(rep: &mut Report) {
    let mut s = ScenarioConfig::scenario1(20.0);
    s.impairments = Impairments::typical().lna_only();
    s.channel_knowledge = ChannelKnowledge::Perfect;
    s.doppler_hz = 0.0;
    let prepared = PreparedScenario::new(&s).unwrap();
    let truth = prepared.transceiver().lna_nonlinearity().alpha3();
    let mut worst = 0.0f64;
    for t in 0..8 {
        let o = prepared.run_trial(&TrialSeeds::new(SEED, t)).unwrap();
        let est = o.alpha3_hat.expect("suppression enabled");
        worst = worst.max((est - truth).norm() / truth.norm());
    }
    let exact = worst <= 1e-6;

    let out = run(Experiment::Fig6, None, 500, 0);
    let improvement = out
        .table
        .values("improvement_db")
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut gap, mut at) = (0.0f64, f64::NAN);
    for r in &out.table.rows {
        let d = cell(&out, r, "distortion_power_dbm");
        let g = (cell(&out, r, "with_suppression_dbm") - cell(&out, r, "linear_receiver_dbm")).abs();
        if d <= -45.0 && g > gap {
            (gap, at) = (g, d);
        }
    }
    rep.record(
        "C7",
        exact && improvement >= 20.0 && gap <= 1.5,
        format!(
            "noise-free alpha3 relative error {worst:.1e} (need <= 1e-6), best improvement {improvement:.1} dB (need >= 20), \
             gap to linear receiver at <= -45 dBm {gap:.2} dB at {at} dBm (need <= 1.5)"
        ),
    );
}

fn c8_overall_floor(rep: &mut Report) {
    let runner = Runner::new(0).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for s in [ScenarioConfig::scenario2(20.0), ScenarioConfig::scenario3(20.0)] {
        let r = measure_residual_si(&s, 500, SEED, &runner).unwrap();
        let above = r.residual_si_dbm - r.noise_floor_dbm;
        ok &= (2.0..=4.5).contains(&above);
        detail.push(format!("{} {above:.2} dB", s.name));
    }
    rep.record(
        "C8",
        ok,
        format!(
            "residual above noise floor at 20 dBm: {} (need 2..4.5)",
            detail.join(", ")
        ),
    );
}

fn c9_rate_table(rep: &mut Report) {
    let out = run(Experiment::Table1, None, 500, 0);
    let gain = out.table.values("average_rate_gain_pct");
    let reference = out.table.values("reference_gain_pct");
    let mut ok = out.all_passed();
    let mut cells = Vec::new();
    for (i, r) in out.table.rows.iter().enumerate() {
        let (g, p) = (gain[i], reference[i]);
        let good = (g - p).abs() <= 10.0 && g.signum() == p.signum();
        ok &= good;
        cells.push(format!(
            "{}@{} {} {:+.1} ({:+.0}){}",
            r[0],
            r[2],
            r[3],
            g,
            p,
            if good { "" } else { "*" }
        ));
    }
    rep.record(
        "C9",
        ok,
        format!(
            "rate gains vs reference, * marks misses; dominance {}: {}",
            out.all_passed(),
            cells.join(", ")
        ),
    );
}

fn c10_exact_cancellation(rep: &mut Report) {
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for s in ScenarioConfig::builtins(20.0) {
        let mut s = s.variant(Impairments::none(), 5.0);
        s.channel_knowledge = ChannelKnowledge::Perfect;
        let (p, _) = run_both(&s, 20, SEED, &Runner::new(0).unwrap()).unwrap();
        let rel = p.residual_relative_db();
        worst = worst.max(rel);
        ok &= rel < -250.0;
    }
    rep.record(
        "C10",
        ok,
        format!("impairment-free residual {worst:.1} dB relative to SI (need < -250)"),
    );
}

fn c11_determinism(rep: &mut Report) {
    let mut ok = true;
    for (exp, sweep) in [(Experiment::Fig4, vec![-25.0]), (Experiment::Fig7(1), vec![10.0])] {
        let a = run(exp, Some(sweep.clone()), 24, 1).table.to_csv_bytes().unwrap();
        let b = run(exp, Some(sweep), 24, 4).table.to_csv_bytes().unwrap();
        ok &= a == b;
    }
    rep.record("C11", ok, "CSV byte-identical with 1 and 4 workers".into());
}

#[test]
fn acceptance() {
    println!();
    let mut rep = Report { lines: Vec::new() };
    c1_quantization_floor(&mut rep);
    c2_noise_operating_points(&mut rep);
    c3_c4_phase_noise(&mut rep);
    c5_estimation_penalty(&mut rep);
    c6_fading_penalty(&mut rep);
    c7_nonlinearity(&mut rep);
    c8_overall_floor(&mut rep);
    c9_rate_table(&mut rep);
    c10_exact_cancellation(&mut rep);
    c11_determinism(&mut rep);
    let failed: Vec<&str> = rep.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        rep.lines.len() - failed.len(),
        rep.lines.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
