use std::f64::consts::{FRAC_PI_2, PI};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::frame::{Feature, SeriesFrame};
use crate::error::{Error, Result};

/// Synthetic years have 365 days; leap days are ignored.
pub const HOURS_PER_YEAR: usize = 365 * 24;

/// Parameters of the synthetic station.
///
/// Temperature is a seasonal plus a diurnal sinusoid plus an AR(1) anomaly,
/// so its predictability decays with lead time. The other measurements are
/// coupled to temperature and carry their own noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWeatherSpec {
    pub seed: u64,
    pub days: usize,
    pub start: NaiveDateTime,
    pub temp_base: f64,
    pub seasonal_amplitude: f64,
    /// Phase in radians at the first hour.
    pub seasonal_phase: f64,
    pub diurnal_amplitude: f64,
    pub diurnal_phase: f64,
    /// AR(1) coefficient of the temperature anomaly.
    pub temp_persistence: f64,
    /// Innovation std of the temperature anomaly.
    pub temp_noise: f64,
    pub hum_base: f64,
    /// Humidity change per °C of temperature above `temp_base`.
    pub hum_temp_coupling: f64,
    pub hum_noise: f64,
    pub airpr_base: f64,
    /// Pressure change per °C of temperature anomaly.
    pub airpr_temp_coupling: f64,
    pub airpr_noise: f64,
    pub solrad_peak: f64,
    /// Fraction of radiation removed at 100 % humidity.
    pub solrad_hum_coupling: f64,
    pub solrad_noise: f64,
    pub windvel_base: f64,
    pub windvel_noise: f64,
    /// Std of the hourly wind-direction step, in degrees.
    pub winddir_step: f64,
}

impl SyntheticWeatherSpec {
    /// The pinned station used for the experiment presets: start
    /// 2003-11-01 00:00, coldest hour in late January, warmest hour 15:00.
    pub fn reference(years: usize, seed: u64) -> Self {
        SyntheticWeatherSpec {
            seed,
            days: years * 365,
            start: NaiveDate::from_ymd_opt(2003, 11, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
            temp_base: 9.0,
            seasonal_amplitude: 9.0,
            seasonal_phase: 3.0 * FRAC_PI_2 - 2.0 * PI * (80.0 * 24.0) / HOURS_PER_YEAR as f64,
            diurnal_amplitude: 4.0,
            diurnal_phase: FRAC_PI_2 - 2.0 * PI * 15.0 / 24.0,
            temp_persistence: 0.97,
            temp_noise: 0.5,
            hum_base: 75.0,
            hum_temp_coupling: -2.0,
            hum_noise: 3.0,
            airpr_base: 1013.0,
            airpr_temp_coupling: -1.5,
            airpr_noise: 0.4,
            solrad_peak: 650.0,
            solrad_hum_coupling: 0.6,
            solrad_noise: 25.0,
            windvel_base: 3.0,
            windvel_noise: 0.6,
            winddir_step: 80.0,
        }
    }

    /// Noise-free, uncoupled variant: temperature is exactly the two-sinusoid sum.
    pub fn noiseless(mut self) -> Self {
        self.temp_noise = 0.0;
        self.hum_noise = 0.0;
        self.airpr_noise = 0.0;
        self.solrad_noise = 0.0;
        self.windvel_noise = 0.0;
        self.hum_temp_coupling = 0.0;
        self.airpr_temp_coupling = 0.0;
        self.solrad_hum_coupling = 0.0;
        self
    }

    pub fn hours(&self) -> usize {
        self.days * 24
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.days == 0 {
            problems.push("days must be positive".to_string());
        }
        for (name, v) in [
            ("temp_noise", self.temp_noise),
            ("hum_noise", self.hum_noise),
            ("airpr_noise", self.airpr_noise),
            ("solrad_noise", self.solrad_noise),
            ("windvel_noise", self.windvel_noise),
            ("winddir_step", self.winddir_step),
            ("solrad_peak", self.solrad_peak),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                problems.push(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.temp_persistence) {
            problems.push(format!("temp_persistence must lie in [0, 1), got {}", self.temp_persistence));
        }
        if !(0.0..=1.0).contains(&self.solrad_hum_coupling) {
            problems.push(format!("solrad_hum_coupling must lie in [0, 1], got {}", self.solrad_hum_coupling));
        }
        for (name, v) in [
            ("temp_base", self.temp_base),
            ("seasonal_amplitude", self.seasonal_amplitude),
            ("seasonal_phase", self.seasonal_phase),
            ("diurnal_amplitude", self.diurnal_amplitude),
            ("diurnal_phase", self.diurnal_phase),
            ("hum_base", self.hum_base),
            ("hum_temp_coupling", self.hum_temp_coupling),
            ("airpr_base", self.airpr_base),
            ("airpr_temp_coupling", self.airpr_temp_coupling),
            ("windvel_base", self.windvel_base),
        ] {
            if !v.is_finite() {
                problems.push(format!("{name} must be finite"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Deterministic part of the temperature at hour `t`.
    pub fn temp_cycle(&self, t: usize) -> f64 {
        let t = t as f64;
        self.temp_base
            + self.seasonal_amplitude * (2.0 * PI * t / HOURS_PER_YEAR as f64 + self.seasonal_phase).sin()
            + self.diurnal_amplitude * (2.0 * PI * t / 24.0 + self.diurnal_phase).sin()
    }
}

pub fn generate_synthetic(spec: &SyntheticWeatherSpec) -> Result<SeriesFrame> {
    spec.validate()?;
    let n = spec.hours();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };

    let mut cols: [Vec<f64>; 6] = Default::default();
    for c in cols.iter_mut() {
        c.reserve(n);
    }
    let (mut anomaly, mut hum_dev, mut pr_dev, mut wind_dev) = (0.0, 0.0, 0.0, 0.0);
    let mut dir: f64 = 180.0;
    for t in 0..n {
        anomaly = spec.temp_persistence * anomaly + spec.temp_noise * normal();
        hum_dev = 0.9 * hum_dev + spec.hum_noise * normal();
        pr_dev = 0.98 * pr_dev + spec.airpr_noise * normal();
        wind_dev = 0.9 * wind_dev + spec.windvel_noise * normal();
        dir = (dir + spec.winddir_step * normal()).rem_euclid(360.0);
        if dir >= 360.0 {
            dir = 0.0;
        }

        let temp = spec.temp_cycle(t) + anomaly;
        let hum = (spec.hum_base + spec.hum_temp_coupling * (temp - spec.temp_base) + hum_dev).clamp(0.0, 100.0);
        let airpr = spec.airpr_base + spec.airpr_temp_coupling * anomaly + pr_dev;
        let tf = t as f64;
        let daylight = (-(2.0 * PI * tf / 24.0).cos()).max(0.0);
        let season = 0.55 + 0.45 * (2.0 * PI * tf / HOURS_PER_YEAR as f64 + spec.seasonal_phase).sin();
        let clear = 1.0 - spec.solrad_hum_coupling * hum / 100.0;
        let solrad = (spec.solrad_peak * daylight * season * clear + spec.solrad_noise * daylight * normal()).max(0.0);
        let windvel = (spec.windvel_base + wind_dev).abs();

        for (c, v) in cols.iter_mut().zip([temp, hum, airpr, solrad, windvel, dir]) {
            c.push(v);
        }
    }
    let timestamps = (0..n).map(|t| spec.start + Duration::hours(t as i64)).collect();
    SeriesFrame::new(timestamps, Feature::ALL.into_iter().zip(cols).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::frame::feature_histogram;

    #[test]
    fn same_seed_same_frame() {
        let spec = SyntheticWeatherSpec::reference(1, 11);
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticWeatherSpec::reference(1, 12);
        assert_ne!(generate_synthetic(&spec).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn noiseless_temp_is_two_sinusoids() {
        let spec = SyntheticWeatherSpec::reference(1, 3).noiseless();
        let frame = generate_synthetic(&spec).unwrap();
        let temp = frame.column(Feature::Temp).unwrap();
        for (t, &v) in temp.iter().enumerate().step_by(97) {
            let tf = t as f64;
            let expect = 9.0
                + 9.0 * (2.0 * PI * tf / 8760.0 + spec.seasonal_phase).sin()
                + 4.0 * (2.0 * PI * tf / 24.0 + spec.diurnal_phase).sin();
            assert_eq!(v, expect);
        }
    }

    #[test]
    fn noiseless_year_mean_is_the_base() {
        let frame = generate_synthetic(&SyntheticWeatherSpec::reference(1, 3).noiseless()).unwrap();
        let temp = frame.column(Feature::Temp).unwrap();
        let mean = temp.iter().sum::<f64>() / temp.len() as f64;
        assert!((mean - 9.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn calendar_and_ranges() {
        let spec = SyntheticWeatherSpec::reference(2, 5);
        let frame = generate_synthetic(&spec).unwrap();
        assert_eq!(frame.len(), 2 * 8760);
        assert_eq!(frame.timestamps()[0].to_string(), "2003-11-01 00:00:00");
        frame.check_ranges().unwrap();
    }

    #[test]
    fn winddir_is_nearly_uniform() {
        let frame = generate_synthetic(&SyntheticWeatherSpec::reference(9, 2003)).unwrap();
        let h = feature_histogram(&frame, Feature::Winddir, 36).unwrap();
        let expect = frame.len() as f64 / 36.0;
        for &c in &h.counts {
            assert!((c as f64 - expect).abs() <= 5.0 * expect.sqrt(), "{c} vs {expect}");
        }
        assert_eq!(h.total(), frame.len());
    }

    #[test]
    fn invalid_specs_list_every_problem() {
        let mut spec = SyntheticWeatherSpec::reference(1, 0);
        spec.days = 0;
        spec.temp_noise = -1.0;
        spec.temp_persistence = 1.0;
        match generate_synthetic(&spec) {
            Err(Error::Config(p)) => assert_eq!(p.len(), 3),
            other => panic!("{other:?}"),
        }
    }
}
