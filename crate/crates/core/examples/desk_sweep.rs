//! Trains the three presets plus an unregularized run 3 at desk scale and
//! prints RMSE and the final val−train gap for each.
//!
//! cargo run --release -p tempora --example desk_sweep -- [years] [seed]

use std::time::Instant;

use tempora::data::{generate_synthetic, SyntheticWeatherSpec};
use tempora::evaluate::evaluate_model;
use tempora::training::{build_model, train_with, ExperimentData, L2Coefficients, Preset, Scale};

fn main() -> tempora::Result<()> {
    let mut args = std::env::args().skip(1);
    let years: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let frame = generate_synthetic(&SyntheticWeatherSpec::reference(years, 2003))?;

    let mut runs: Vec<_> = Preset::ALL.iter().map(|p| (p.name().to_string(), Scale::Desk.apply(p.config()))).collect();
    let mut ablation = Scale::Desk.apply(Preset::Run3TwelveHour.config());
    ablation.l2 = L2Coefficients::default();
    runs.push(("run3-12hour l2=0".into(), ablation));

    println!("{:<18} {:>8} {:>8} {:>8} {:>10} {:>7}", "run", "rmse", "mae", "me", "gap", "secs");
    for (name, mut config) in runs {
        config.seed = seed;
        let t0 = Instant::now();
        let data = ExperimentData::prepare(&frame, &config)?;
        let out = train_with(build_model(&config)?, &config, &data.train, &data.test, |_, _, _| {})?;
        let r = evaluate_model(&out.model, &data.test, &data.stats, &name)?;
        let gap = out.history.final_gap().unwrap_or(f64::NAN);
        println!("{name:<18} {:>8.3} {:>8.3} {:>8.3} {gap:>10.5} {:>7.1}", r.rmse, r.mae, r.me, t0.elapsed().as_secs_f64());
    }
    Ok(())
}
