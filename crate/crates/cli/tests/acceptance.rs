//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are still executed and reported,
//! but do not fail the target; see the README for the analysis.

use std::io::Cursor;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempora::checkpoint::sha256_hex;
use tempora::data::{
    chronological_split, generate_synthetic, ingest_reader, make_windows, Feature, HeaderMapping, SeriesFrame,
    SyntheticWeatherSpec, HOURS_PER_YEAR,
};
use tempora::evaluate::{evaluate_model, mae, max_error, rmse};
use tempora::layers::{DenseLayer, Layer};
use tempora::oracle::{lstm_equivalence, run_gradient_suite};
use tempora::training::{
    build_model, detect_overfitting, train_with, ExperimentConfig, ExperimentData, L2Coefficients, LossHistory,
    OverfitRule, Preset, Scale,
};
use tempora::{Activation, Matrix, SequenceBatch, SequentialModel};
use tempora_cli::REFERENCE_DATA_SEED;

const KNOWN_UNATTAINABLE: &[u32] = &[9];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

type Check = fn(&mut Shared) -> Outcome;

/// Trained desk-scale runs shared by the ordering and regularization checks.
#[derive(Default)]
struct Shared {
    frame: Option<SeriesFrame>,
    runs: Vec<(String, f64, f64)>,
}

impl Shared {
    fn frame(&mut self) -> &SeriesFrame {
        self.frame.get_or_insert_with(|| {
            generate_synthetic(&SyntheticWeatherSpec::reference(Scale::Desk.synthetic_years(), REFERENCE_DATA_SEED)).unwrap()
        })
    }

    /// Returns (rmse, final val-train gap) for a labelled config, training it once.
    fn run(&mut self, label: &str, config: ExperimentConfig) -> (f64, f64) {
        if let Some((_, r, g)) = self.runs.iter().find(|(l, ..)| l == label) {
            return (*r, *g);
        }
        let t0 = Instant::now();
        let data = ExperimentData::prepare(self.frame(), &config).unwrap();
        let outcome = train_with(build_model(&config).unwrap(), &config, &data.train, &data.test, |_, _, _| {}).unwrap();
        let report = evaluate_model(&outcome.model, &data.test, &data.stats, label).unwrap();
        let gap = outcome.history.final_gap().unwrap();
        eprintln!("  trained {label} in {:.1}s: rmse {:.3} gap {gap:.5}", t0.elapsed().as_secs_f64(), report.rmse);
        self.runs.push((label.to_string(), report.rmse, gap));
        (report.rmse, gap)
    }
}

fn desk(preset: Preset) -> ExperimentConfig {
    Scale::Desk.apply(preset.config())
}

fn gradients(_: &mut Shared) -> Outcome {
    let t0 = Instant::now();
    let suite = run_gradient_suite(20, 1e-5, None).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let worst = suite.reports.iter().map(|r| r.max_rel()).fold(0.0, f64::max);
    Outcome::new(
        suite.passes() && secs < 30.0,
        format!("{} configurations, worst relative error {worst:.2e}, {secs:.2}s", suite.reports.len()),
    )
}

fn oracle(_: &mut Shared) -> Outcome {
    let t0 = Instant::now();
    let r = lstm_equivalence(100, 11).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    Outcome::new(
        r.configs == 100 && r.max_abs_diff <= 1e-12 && secs < 5.0,
        format!("{} configurations, max |diff| {:.2e}, {secs:.3}s", r.configs, r.max_abs_diff),
    )
}

fn xor(_: &mut Shared) -> Outcome {
    let m = |rows: &[&[f64]]| Matrix::from_rows(rows).unwrap();
    let hidden = DenseLayer::new(m(&[&[1.0, 1.0], &[1.0, 1.0]]), m(&[&[-1.5, -0.5]]), Activation::Step).unwrap();
    let output = DenseLayer::new(m(&[&[-1.0], &[1.0]]), m(&[&[-0.5]]), Activation::Step).unwrap();
    let model = SequentialModel::new(vec![Layer::Dense(hidden), Layer::Dense(output)]).unwrap();
    let mut seen = Vec::new();
    let mut pass = true;
    for (a, b, want) in [(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.0, 0.0, 1.0), (0.0, 1.0, 1.0)] {
        let got = model.forward(&SequenceBatch::single(&m(&[&[a, b]]))).unwrap().as_slice()[0];
        pass &= got == want;
        seen.push(format!("({a},{b})->{got}"));
    }
    Outcome::new(pass, seen.join(" "))
}

fn metrics(_: &mut Shared) -> Outcome {
    let (p, a) = ([1.0, 3.0], [0.0, 0.0]);
    let mut pass = rmse(&p, &a).unwrap() == 5f64.sqrt() && mae(&p, &a).unwrap() == 2.0 && max_error(&p, &a).unwrap() == 3.0;
    pass &= rmse(&a, &a).unwrap() == 0.0 && mae(&a, &a).unwrap() == 0.0 && max_error(&a, &a).unwrap() == 0.0;
    let shifted = [2.5, 2.5];
    pass &= rmse(&shifted, &a).unwrap() == 2.5 && mae(&shifted, &a).unwrap() == 2.5;

    // Errors in z-space scale by std once mapped back to physical units.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..48);
        let (mean, std) = (rng.random_range(-20.0..30.0), rng.random_range(0.1..15.0));
        let zp: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let za: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let phys = |z: &[f64]| z.iter().map(|v| v * std + mean).collect::<Vec<_>>();
        let (pp, pa) = (phys(&zp), phys(&za));
        for (f, name) in [(rmse as fn(&[f64], &[f64]) -> _, "rmse"), (mae, "mae"), (max_error, "me")] {
            let lhs = f(&pp, &pa).unwrap();
            let rhs = std * f(&zp, &za).unwrap();
            let err = (lhs - rhs).abs();
            assert!(err.is_finite(), "{name}");
            worst = worst.max(err);
        }
    }
    pass &= worst <= 1e-9;
    Outcome::new(pass, format!("hand examples exact; z-score equivariance worst {worst:.1e} over 500 samples"))
}

fn ordering(s: &mut Shared) -> Outcome {
    let t0 = Instant::now();
    let r1 = s.run("run1", desk(Preset::Run1SevenDay)).0;
    let r2 = s.run("run2", desk(Preset::Run2OneDay)).0;
    let r3 = s.run("run3", desk(Preset::Run3TwelveHour)).0;
    let gap_12 = (r1 - r2) / r1;
    let gap_23 = (r2 - r3) / r2;
    let secs = t0.elapsed().as_secs_f64();
    let pass = r3 < r2 && r2 < r1 && gap_12 >= 0.05 && gap_23 >= 0.05 && secs <= 900.0;
    let ten = if gap_12 >= 0.10 && gap_23 >= 0.10 { "also" } else { "not" };
    Outcome::new(
        pass,
        format!(
            "{} synthetic years: rmse run3 {r3:.3} < run2 {r2:.3} < run1 {r1:.3}; relative gaps {:.0}% and {:.0}% ({ten} >= 10%), {secs:.0}s",
            Scale::Desk.synthetic_years(),
            gap_23 * 100.0,
            gap_12 * 100.0
        ),
    )
}

fn regularization(s: &mut Shared) -> Outcome {
    let g2 = s.run("run2", desk(Preset::Run2OneDay)).1;
    let g3 = s.run("run3", desk(Preset::Run3TwelveHour)).1;
    let mut ablation = desk(Preset::Run3TwelveHour);
    ablation.l2 = L2Coefficients::default();
    let g0 = s.run("run3 lambda=0", ablation).1;
    Outcome::new(
        g3 < g2 && g3 < g0,
        format!("final val-train gap: run3 {g3:.5} < run2 {g2:.5}; lambda 0.005 {g3:.5} < lambda 0 {g0:.5}"),
    )
}

fn detector(_: &mut Shared) -> Outcome {
    let overfit = LossHistory::from_pairs(
        &[1.10, 0.92, 0.81, 0.74, 0.69, 0.65, 0.62, 0.60, 0.59, 0.58],
        &[1.05, 0.90, 0.86, 0.80, 0.77, 0.75, 0.73, 0.72, 0.71, 0.70],
    )
    .unwrap();
    let converged = LossHistory::from_pairs(
        &[0.60, 0.45, 0.38, 0.33, 0.30, 0.28, 0.27, 0.265, 0.26, 0.26],
        &[0.55, 0.44, 0.37, 0.33, 0.30, 0.28, 0.27, 0.262, 0.26, 0.26],
    )
    .unwrap();
    let a = detect_overfitting(&overfit, OverfitRule::default()).unwrap();
    let b = detect_overfitting(&converged, OverfitRule::default()).unwrap();
    Outcome::new(
        a.overfitting && !b.overfitting,
        format!(
            "0.58/0.70 history flagged: {} (ratio {:.2}); 0.26/0.26 history flagged: {}",
            a.overfitting, a.final_ratio, b.overfitting
        ),
    )
}

fn determinism(_: &mut Shared) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    // Different pool sizes on purpose: the reduction order must not depend on them.
    for (run, threads) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_tempora"))
            .args(["train", "--preset", "run2-1day", "--seed", "7", "--scale", "desk", "--out"])
            .arg(&out)
            .env("TEMPORA_THREADS", threads)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap();
        if !status.status.success() {
            return Outcome::new(false, format!("train exited with {}", status.status));
        }
        let hash = |rel: &str| sha256_hex(&std::fs::read(out.join(rel)).unwrap());
        digests.push((hash("reports/loss_run2-1day.csv"), hash("checkpoint.json")));
    }
    let same = digests[0] == digests[1];
    Outcome::new(
        same,
        format!("loss csv {} / checkpoint {} (1 vs 2 worker threads)", &digests[0].0[..12], &digests[0].1[..12]),
    )
}

fn pipeline(_: &mut Shared) -> Outcome {
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let base = generate_synthetic(&SyntheticWeatherSpec::reference(1, 1)).unwrap();
    let mut counts_ok = true;
    for _ in 0..200 {
        let h = rng.random_range(1..200);
        let k = rng.random_range(1..200);
        let l = rng.random_range(1..(h + k + 400));
        let frame = base.slice(0, l);
        let got = make_windows(&frame, &[Feature::Temp], h, k);
        counts_ok &= match got {
            Ok(ds) => l >= h + k && ds.len() == l - h - k + 1,
            Err(_) => l < h + k,
        };
    }
    notes.push(format!("window counts {}", if counts_ok { "ok" } else { "WRONG" }));

    let csv = "datetime,temp,hum\n2020-01-01 00:00,1.5,N/A\n\n , \n2020-01-01 01:00,NA,80\n2020-01-01 02:00,2.0,\n";
    let (frame, report) = ingest_reader(Cursor::new(csv), Path::new("fixture.csv"), &HeaderMapping::default()).unwrap();
    let fixtures_ok = frame.len() == 3 && report.replaced == 3 && report.empty_rows_removed == 2;
    notes.push(format!("fixtures: {} rows, {} replaced, {} empty removed", frame.len(), report.replaced, report.empty_rows_removed));

    let nine = generate_synthetic(&SyntheticWeatherSpec::reference(9, REFERENCE_DATA_SEED)).unwrap();
    let (train, _) = chronological_split(&nine, 0.78).unwrap();
    let mark = 7 * HOURS_PER_YEAR;
    let offset = train.len() as i64 - mark as i64;
    let split_ok = offset.abs() <= 1;
    notes.push(format!("0.78 boundary at row {} vs 7-year mark {mark} ({offset:+} h)", train.len()));
    Outcome::new(counts_ok && fixtures_ok && split_ok, notes.join("; "))
}

fn main() {
    let criteria: [(u32, &str, Check); 9] = [
        (1, "gradient check", gradients),
        (2, "scalar oracle equivalence", oracle),
        (3, "XOR threshold network", xor),
        (4, "metric definitions", metrics),
        (5, "accuracy ordering", ordering),
        (6, "regularization effect", regularization),
        (7, "overfitting detector", detector),
        (8, "determinism", determinism),
        (9, "data pipeline", pipeline),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut shared = Shared::default();
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let outcome = check(&mut shared);
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        let note = if !outcome.pass && KNOWN_UNATTAINABLE.contains(&id) { " (known, see README)" } else { "" };
        println!("[{tag}] {id}. {name}: {}{note}", outcome.detail);
        if !outcome.pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("acceptance failures: {unexpected:?}");
        std::process::exit(1);
    }
}
