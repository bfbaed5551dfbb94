use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use tempora::checkpoint::{sha256_hex, Checkpoint};
use tempora::data::{
    chronological_split, generate_synthetic, ingest_csv, parse_datetime, write_csv, HeaderMapping, IngestReport,
    NormalizationStats, SeriesFrame, SyntheticWeatherSpec, HOURS_PER_YEAR,
};
use tempora::evaluate::{emit_forecast_plot, emit_loss_plot, evaluate_model, forecast_at, AccuracyReport};
use tempora::layers::ParamKind;
use tempora::oracle::{lstm_equivalence, run_gradient_suite, CheckKind, Fault};
use tempora::training::{build_model, train_with, ExperimentData, Override};

use crate::args::{CheckArgs, DataArgs, EvaluateArgs, ForecastArgs, PrepareArgs, TrainArgs};
use crate::manifest::{DataSource, RunManifest};
use crate::CliError;

const CALENDAR: &str = "365-day years; leap days are not generated";

/// A loaded series plus how to get it again.
pub struct LoadedData {
    pub frame: SeriesFrame,
    pub source: DataSource,
    pub report: Option<IngestReport>,
}

pub fn synthetic_spec(arg: &str, seed: u64) -> Result<SyntheticWeatherSpec, CliError> {
    if let Ok(years) = arg.trim().parse::<usize>() {
        if years == 0 {
            return Err(CliError::Usage("--synthetic needs at least one year".into()));
        }
        return Ok(SyntheticWeatherSpec::reference(years, seed));
    }
    let text = fs::read_to_string(arg).map_err(|e| CliError::Usage(format!("--synthetic {arg}: {e}")))?;
    Ok(serde_json::from_str(&text).map_err(tempora::Error::from)?)
}

pub fn load_source(source: &DataSource) -> Result<LoadedData, CliError> {
    match source {
        DataSource::Csv { path, .. } => {
            let bytes = fs::read(path).map_err(|e| tempora::Error::Data(format!("cannot read {}: {e}", path.display())))?;
            let (frame, report) = ingest_csv(path, &HeaderMapping::default())?;
            Ok(LoadedData {
                frame,
                source: DataSource::Csv {
                    path: path.clone(),
                    sha256: sha256_hex(&bytes),
                },
                report: Some(report),
            })
        }
        DataSource::Synthetic { spec, .. } => Ok(LoadedData {
            frame: generate_synthetic(spec)?,
            source: source.clone(),
            report: None,
        }),
    }
}

/// Resolves `--data` / `--synthetic`, falling back to `default` when neither is given.
pub fn load_data(args: &DataArgs, default: Option<DataSource>) -> Result<LoadedData, CliError> {
    let source = match (&args.data, &args.synthetic) {
        (Some(path), _) => DataSource::Csv {
            path: path.clone(),
            sha256: String::new(),
        },
        (None, Some(s)) => DataSource::Synthetic {
            spec: synthetic_spec(s, args.data_seed)?,
            calendar: CALENDAR.into(),
        },
        (None, None) => default.ok_or_else(|| CliError::Usage("no data given: pass --data <csv> or --synthetic <years>".into()))?,
    };
    load_source(&source)
}

pub fn prepare(args: &PrepareArgs) -> Result<(), CliError> {
    let loaded = load_data(&args.data, None)?;
    fs::create_dir_all(&args.out)?;
    let (train, _) = chronological_split(&loaded.frame, args.train_fraction)?;
    let stats = NormalizationStats::fit(&train)?;
    let data_path = args.out.join("data.csv");
    write_csv(&loaded.frame, fs::File::create(&data_path)?)?;
    fs::write(args.out.join("stats.json"), serde_json::to_string_pretty(&stats).map_err(tempora::Error::from)? + "\n")?;

    let report = loaded.report.unwrap_or_default();
    println!("rows: {}", loaded.frame.len());
    println!("replaced: {}", report.replaced);
    println!("empty rows removed: {}", report.empty_rows_removed);
    if report.filled_gaps.is_empty() {
        println!("gaps: none");
    }
    for (after, hours) in &report.filled_gaps {
        println!("gap: {hours} hours forward-filled after {after}");
    }
    if let DataSource::Synthetic { spec, .. } = &loaded.source {
        println!("synthetic: {} days ({} years of {} hours), seed {}", spec.days, spec.days / 365, HOURS_PER_YEAR, spec.seed);
    }
    println!("stats: {} (sha256 {})", args.out.join("stats.json").display(), stats.hash());
    println!("data: {}", data_path.display());
    Ok(())
}

fn rel_hash(out: &Path, rel: &str) -> Result<(String, String), CliError> {
    Ok((rel.to_string(), sha256_hex(&fs::read(out.join(rel))?)))
}

pub fn train(args: &TrainArgs) -> Result<RunManifest, CliError> {
    let (manifest, loaded) = match &args.manifest {
        Some(path) => {
            let previous = RunManifest::load(path)?;
            let loaded = load_source(&previous.data)?;
            if let (DataSource::Csv { sha256: want, .. }, DataSource::Csv { sha256: got, .. }) = (&previous.data, &loaded.source) {
                if want != got {
                    return Err(CliError::Replay(format!("data file hash {got} differs from the recorded {want}")));
                }
            }
            (previous, loaded)
        }
        None => {
            let mut config = args.scale.apply(args.preset.config());
            let mut overrides = Vec::new();
            if let Some(path) = &args.config {
                let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                overrides = config.apply_overrides(&text)?;
            }
            if let Some(seed) = args.seed {
                config.seed = seed;
                overrides.push(Override {
                    key: "seed".into(),
                    value: seed.to_string(),
                });
            }
            config.validate()?;
            let default = DataSource::Synthetic {
                spec: SyntheticWeatherSpec::reference(args.scale.synthetic_years(), args.data.data_seed),
                calendar: CALENDAR.into(),
            };
            let loaded = load_data(&args.data, Some(default))?;
            let manifest = RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").into(),
                preset: Some(args.preset.name().into()),
                scale: args.scale,
                overrides,
                seed: config.seed,
                config,
                data: loaded.source.clone(),
                out_dir: args.out.clone(),
                artifacts: BTreeMap::new(),
            };
            (manifest, loaded)
        }
    };

    let out = args.out.clone();
    let config = &manifest.config;
    let reports = out.join("reports");
    fs::create_dir_all(&reports)?;
    let data = ExperimentData::prepare(&loaded.frame, config)?;
    info!(
        "{}: {} training and {} validation windows, {} parameters",
        config.name,
        data.train.len(),
        data.test.len(),
        build_model(config)?.parameter_count()
    );
    let outcome = train_with(build_model(config)?, config, &data.train, &data.test, |epoch, t, v| {
        eprintln!("epoch {epoch}/{}  train_mse {t:.6}  val_mse {v:.6}", config.epochs);
    })?;

    let checkpoint = Checkpoint::new(config.clone(), data.stats.clone(), outcome.model)?;
    checkpoint.save(&out.join("checkpoint.json"))?;
    let loss_csv = format!("reports/loss_{}.csv", config.name);
    let loss_svg = format!("reports/loss_{}.svg", config.name);
    fs::write(out.join(&loss_csv), outcome.history.to_csv_string())?;
    emit_loss_plot(&outcome.history, &format!("MSE loss, {}", config.name), &out.join(&loss_svg))?;

    let mut artifacts = BTreeMap::new();
    for rel in ["checkpoint.json", &loss_csv, &loss_svg] {
        let (k, v) = rel_hash(&out, rel)?;
        artifacts.insert(k, v);
    }
    let replay = args.manifest.is_some();
    let recorded = manifest.artifacts.clone();
    let manifest = RunManifest {
        artifacts,
        out_dir: out.clone(),
        ..manifest
    };
    manifest.save(&out.join("manifest.json"))?;

    println!("checkpoint: {} (sha256 {})", out.join("checkpoint.json").display(), manifest.artifacts["checkpoint.json"]);
    println!("loss history: {}", out.join(&loss_csv).display());
    if let Some(gap) = outcome.history.final_gap() {
        println!(
            "final mse: train {:.6}, validation {:.6}",
            outcome.history.train_mse.last().unwrap_or(&f64::NAN),
            outcome.history.val_mse.last().unwrap_or(&f64::NAN)
        );
        println!("final gap (val - train): {gap:.6}");
    }
    if replay {
        let differing: Vec<&String> = recorded.iter().filter(|(k, v)| manifest.artifacts.get(*k) != Some(v)).map(|(k, _)| k).collect();
        if !differing.is_empty() {
            return Err(CliError::Replay(format!("artifacts differ: {differing:?}")));
        }
        println!("replay: all {} recorded artifacts reproduced", recorded.len());
    }
    Ok(manifest)
}

fn checkpoint_context(path: &Path) -> Result<(Checkpoint, Option<DataSource>), CliError> {
    let checkpoint = Checkpoint::load(path)?;
    let beside = path.parent().map(|d| d.join("manifest.json")).filter(|p| p.exists());
    let default = match beside {
        Some(p) => Some(RunManifest::load(&p)?.data),
        None => None,
    };
    Ok((checkpoint, default))
}

fn check_features(checkpoint: &Checkpoint, frame: &SeriesFrame) -> Result<(), CliError> {
    let found = frame.features();
    let missing: Vec<_> = checkpoint.config.features.iter().filter(|f| !found.contains(f)).collect();
    if missing.is_empty() && frame.has(tempora::data::Feature::Temp) {
        return Ok(());
    }
    let names = |v: &[tempora::data::Feature]| v.iter().map(|f| f.name()).collect::<Vec<_>>().join(",");
    Err(tempora::Error::Data(format!(
        "incompatible feature set: checkpoint expects [{}] (plus temp) but the data provides [{}]",
        names(&checkpoint.config.features),
        names(&found)
    ))
    .into())
}

pub fn forecast(args: &ForecastArgs) -> Result<PathBuf, CliError> {
    let (checkpoint, default) = checkpoint_context(&args.checkpoint)?;
    let loaded = load_data(&args.data, default)?;
    check_features(&checkpoint, &loaded.frame)?;
    let frame = &loaded.frame;
    let config = &checkpoint.config;
    let origin = match &args.at {
        Some(text) => {
            let at = parse_datetime(text).ok_or_else(|| CliError::Usage(format!("cannot parse --at `{text}`")))?;
            frame.position(at).ok_or_else(|| {
                let (first, last) = (frame.timestamps().first(), frame.timestamps().last());
                tempora::Error::Data(format!("--at {at} is outside the data range {first:?} .. {last:?}"))
            })?
        }
        None => (frame.len() as f64 * config.train_fraction).floor() as usize,
    };
    let result = forecast_at(&checkpoint.model, frame, &config.features, config.history, &checkpoint.stats, origin)?;
    let svg = args
        .out
        .join("reports/plots")
        .join(format!("forecast_{}_{}.svg", config.name, result.origin.format("%Y%m%dT%H%M")));
    let csv = emit_forecast_plot(&result, &svg)?;
    println!("origin: {}", result.origin);
    println!("K: {}", result.horizon());
    println!("rmse: {:.4}  mae: {:.4}", result.rmse()?, tempora::evaluate::mae(&result.predicted, &result.actual)?);
    println!("plot: {}", svg.display());
    println!("series: {}", csv.display());
    Ok(svg)
}

pub fn evaluate(args: &EvaluateArgs) -> Result<AccuracyReport, CliError> {
    let (checkpoint, default) = checkpoint_context(&args.checkpoint)?;
    let loaded = load_data(&args.data, default)?;
    check_features(&checkpoint, &loaded.frame)?;
    let config = &checkpoint.config;
    let (_, test) = chronological_split(&loaded.frame, config.train_fraction)?;
    let z = checkpoint.stats.normalize(&test.select(&with_temp(&config.features))?)?;
    let windows = tempora::data::make_windows(&z, &config.features, config.history, config.horizon)?;
    let label = args.label.clone().unwrap_or_else(|| config.name.clone());
    let report = evaluate_model(&checkpoint.model, &windows, &checkpoint.stats, &label)?;

    // The single-window view matches a published forecast figure.
    let first = forecast_at(&checkpoint.model, &test, &config.features, config.history, &checkpoint.stats, config.history)?;
    let reports = args.out.join("reports");
    fs::create_dir_all(&reports)?;
    report.append_to(&reports.join("metrics.csv"))?;
    println!("{}", AccuracyReport::CSV_HEADER);
    println!("{}", report.csv_row());
    println!(
        "windows: {}; first window ({}): rmse {:.4}, mae {:.4}, me {:.4}",
        report.windows,
        first.origin,
        first.rmse()?,
        tempora::evaluate::mae(&first.predicted, &first.actual)?,
        tempora::evaluate::max_error(&first.predicted, &first.actual)?
    );
    Ok(report)
}

fn with_temp(features: &[tempora::data::Feature]) -> Vec<tempora::data::Feature> {
    let mut v = features.to_vec();
    if !v.contains(&tempora::data::Feature::Temp) {
        v.push(tempora::data::Feature::Temp);
    }
    v
}

pub fn parse_fault(text: &str) -> Result<Fault, CliError> {
    let (kind, param) = text
        .split_once('.')
        .ok_or_else(|| CliError::Usage(format!("fault `{text}` should look like lstm.recurrent")))?;
    let kind = match kind {
        "dense" => CheckKind::Dense,
        "simple_rnn" | "rnn" => CheckKind::SimpleRnn,
        "lstm" => CheckKind::Lstm,
        other => return Err(CliError::Usage(format!("unknown layer family `{other}`"))),
    };
    let param = match param {
        "kernel" => ParamKind::Kernel,
        "recurrent" => ParamKind::Recurrent,
        "bias" => ParamKind::Bias,
        other => return Err(CliError::Usage(format!("unknown parameter group `{other}`"))),
    };
    Ok(Fault { kind, param })
}

pub fn check(args: &CheckArgs) -> Result<(), CliError> {
    let fault = args.inject_fault.as_deref().map(parse_fault).transpose()?;
    let suite = run_gradient_suite(args.seeds, 1e-5, fault)?;
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    for r in &suite.reports {
        for e in &r.entries {
            let key = e.param.split_once('.').map_or(e.param.clone(), |(_, p)| p.to_string());
            let family = r.label.split(' ').next().unwrap_or("");
            let m = worst.entry(format!("{family:<10} {key}")).or_insert(0.0);
            *m = m.max(e.max_rel);
        }
    }
    println!("gradient check: {} configurations, eps 1e-5, tolerance {:e} relative", suite.reports.len(), suite.rel_tol);
    for (k, v) in &worst {
        println!("  {k:<36} max rel {v:.3e}");
    }
    let equiv = lstm_equivalence(100, 7)?;
    println!("scalar oracle: {} configurations, {} steps, max |diff| {:.3e}", equiv.configs, equiv.steps, equiv.max_abs_diff);

    let mut failures = Vec::new();
    for (label, e) in suite.failures() {
        failures.push(format!("{label}: {} max rel {:.3e} (analytic {:.6e}, numeric {:.6e})", e.param, e.max_rel, e.analytic, e.numeric));
    }
    if equiv.max_abs_diff > 1e-12 {
        failures.push(format!("lstm vs scalar oracle: max |diff| {:.3e}", equiv.max_abs_diff));
    }
    if failures.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Oracle(failures.join("\n")))
    }
}
