use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use log::{info, warn};

use super::frame::{Feature, SeriesFrame};
use crate::error::{Error, Result};

/// Longest run of missing hours that is forward-filled rather than rejected.
pub const MAX_FILL_HOURS: i64 = 3;

const DATETIME_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
    "%d.%m.%Y %H:%M:%S",
    "%d.%m.%Y %H:%M",
    "%d/%m/%Y %H:%M",
];

/// Maps CSV header spellings onto features. Matching ignores case and
/// surrounding whitespace.
#[derive(Clone, Debug)]
pub struct HeaderMapping {
    datetime: Vec<String>,
    aliases: BTreeMap<String, Feature>,
}

impl Default for HeaderMapping {
    fn default() -> Self {
        let mut m = HeaderMapping {
            datetime: ["datetime", "date", "timestamp", "date_time", "time"].map(String::from).to_vec(),
            aliases: BTreeMap::new(),
        };
        for f in Feature::ALL {
            m = m.alias(f.name(), f);
        }
        for (name, f) in [
            ("temperature", Feature::Temp),
            ("humidity", Feature::Hum),
            ("pressure", Feature::Airpr),
            ("air_pressure", Feature::Airpr),
            ("solar_radiation", Feature::Solrad),
            ("wind_speed", Feature::Windvel),
            ("wind_velocity", Feature::Windvel),
            ("wind_direction", Feature::Winddir),
        ] {
            m = m.alias(name, f);
        }
        m
    }
}

impl HeaderMapping {
    pub fn alias(mut self, header: &str, feature: Feature) -> Self {
        self.aliases.insert(header.trim().to_lowercase(), feature);
        self
    }

    pub fn datetime_alias(mut self, header: &str) -> Self {
        self.datetime.push(header.trim().to_lowercase());
        self
    }

    fn resolve(&self, header: &str) -> Option<Column> {
        let key = header.trim().to_lowercase();
        if self.datetime.contains(&key) {
            Some(Column::Datetime)
        } else {
            self.aliases.get(&key).copied().map(Column::Feature)
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Column {
    Datetime,
    Feature(Feature),
}

/// What cleaning did to the input.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub rows: usize,
    /// "N/A" or blank cells replaced by 0.
    pub replaced: usize,
    pub empty_rows_removed: usize,
    /// Forward-filled gaps as (last timestamp before the gap, missing hours).
    pub filled_gaps: Vec<(NaiveDateTime, i64)>,
}

impl IngestReport {
    pub fn filled_hours(&self) -> i64 {
        self.filled_gaps.iter().map(|g| g.1).sum()
    }
}

pub fn ingest_csv(path: impl AsRef<Path>, mapping: &HeaderMapping) -> Result<(SeriesFrame, IngestReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    ingest_reader(file, path, mapping)
}

/// Parses and cleans CSV from any reader; `source` only labels errors.
pub fn ingest_reader<R: Read>(mut reader: R, source: &Path, mapping: &HeaderMapping) -> Result<(SeriesFrame, IngestReport)> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    // The csv reader skips blank lines without counting them, so keep a map
    // from its line numbers back to physical lines.
    let physical: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_end_matches('\r').is_empty())
        .map(|(i, _)| i + 1)
        .collect();
    let blank_lines = physical.last().map_or(0, |&last| last - physical.len());
    let line_of = |p: Option<&csv::Position>| p.map_or(0, |p| physical.get(p.line() as usize - 1).copied().unwrap_or(p.line() as usize));
    let parse_err = |row: usize, message: String| Error::Parse {
        path: PathBuf::from(source),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();

    let mut layout = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        let col = mapping.resolve(h).ok_or_else(|| Error::UnknownFeature(h.to_string()))?;
        if layout.contains(&col) {
            return Err(parse_err(1, format!("header `{h}` maps onto a column that is already present")));
        }
        layout.push(col);
    }
    let time_col = layout
        .iter()
        .position(|c| *c == Column::Datetime)
        .ok_or_else(|| parse_err(1, "no datetime column".into()))?;
    let features: Vec<(usize, Feature)> = layout
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            Column::Feature(f) => Some((i, *f)),
            Column::Datetime => None,
        })
        .collect();

    let mut report = IngestReport {
        empty_rows_removed: blank_lines,
        ..IngestReport::default()
    };
    let mut timestamps: Vec<NaiveDateTime> = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); features.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| parse_err(line_of(e.position()), e.to_string()))?;
        let row = line_of(record.position());
        if record.iter().all(str::is_empty) {
            report.empty_rows_removed += 1;
            continue;
        }
        if record.len() != layout.len() {
            return Err(parse_err(row, format!("expected {} fields, found {}", layout.len(), record.len())));
        }
        let at = parse_datetime(&record[time_col]).ok_or_else(|| parse_err(row, format!("unrecognized datetime `{}`", &record[time_col])))?;

        if let Some(&prev) = timestamps.last() {
            let step = at - prev;
            if step <= Duration::zero() {
                return Err(parse_err(row, format!("timestamp {at} does not follow {prev}")));
            }
            if step.num_seconds() % 3600 != 0 {
                return Err(parse_err(row, format!("timestamp {at} is not on the hourly grid of {prev}")));
            }
            let missing = step.num_hours() - 1;
            if missing > MAX_FILL_HOURS {
                return Err(Error::Gap {
                    after: prev.to_string(),
                    missing_hours: missing,
                    limit: MAX_FILL_HOURS,
                });
            }
            if missing > 0 {
                for k in 1..=missing {
                    timestamps.push(prev + Duration::hours(k));
                    for col in columns.iter_mut() {
                        let v = *col.last().expect("non-empty column");
                        col.push(v);
                    }
                }
                report.filled_gaps.push((prev, missing));
            }
        }
        timestamps.push(at);
        for (col, &(i, f)) in columns.iter_mut().zip(&features) {
            let cell = &record[i];
            let v = if cell.is_empty() || cell.eq_ignore_ascii_case("n/a") || cell.eq_ignore_ascii_case("na") {
                report.replaced += 1;
                0.0
            } else {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(row, format!("{f}: cannot parse `{cell}` as a number")))?
            };
            col.push(v);
        }
    }
    report.rows = timestamps.len();
    if report.replaced > 0 {
        warn!("replaced {} missing cells with 0", report.replaced);
    }
    for (after, n) in &report.filled_gaps {
        info!("forward-filled {n} missing hours after {after}");
    }
    let frame = SeriesFrame::new(timestamps, features.iter().map(|&(_, f)| f).zip(columns).collect())?;
    Ok((frame, report))
}

/// Accepts ISO-8601 (with `T` or a space, seconds optional), `dd.mm.yyyy HH:MM`
/// and `dd/mm/yyyy HH:MM`.
pub fn parse_datetime(s: &str) -> Option<NaiveDateTime> {
    DATETIME_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .or_else(|| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)))
}

/// Writes the frame in the canonical schema: `datetime` then the feature
/// columns, values rounded to 9 significant digits.
pub fn write_csv<W: Write>(frame: &SeriesFrame, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let features = frame.features();
    let mut header = vec!["datetime".to_string()];
    header.extend(features.iter().map(|f| f.name().to_string()));
    w.write_record(&header).map_err(csv_io_error)?;
    let cols: Vec<&[f64]> = features.iter().map(|&f| frame.column(f)).collect::<Result<_>>()?;
    let mut row = Vec::with_capacity(header.len());
    for (i, t) in frame.timestamps().iter().enumerate() {
        row.clear();
        row.push(t.format("%Y-%m-%dT%H:%M:%S").to_string());
        row.extend(cols.iter().map(|c| format_sig(c[i], 9)));
        w.write_record(&row).map_err(csv_io_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn format_sig(v: f64, digits: i32) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let decimals = (digits - 1 - v.abs().log10().floor() as i32).clamp(0, 17) as usize;
    let s = format!("{v:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}
