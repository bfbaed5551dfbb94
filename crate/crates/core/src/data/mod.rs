//! Weather series: CSV ingestion and cleaning, z-score normalization,
//! supervised windowing, chronological splitting and a synthetic generator.

mod csv_io;
mod frame;
mod normalize;
mod synthetic;
mod window;

pub use csv_io::{ingest_csv, ingest_reader, parse_datetime, write_csv, HeaderMapping, IngestReport, MAX_FILL_HOURS};
pub use frame::{feature_histogram, Feature, Histogram, SeriesFrame};
pub use normalize::NormalizationStats;
pub use synthetic::{generate_synthetic, SyntheticWeatherSpec, HOURS_PER_YEAR};
pub use window::{chronological_split, make_windows, WindowedDataset};
