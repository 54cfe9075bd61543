//! Mix-proportion samples, the built-in 34-row slump table, CSV interchange,
//! positional train/test splitting and opt-in min-max feature scaling.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt::sig6;

/// Number of input features per sample.
pub const N_FEATURES: usize = 8;

/// Column labels, in feature order (x1..x8).
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "cement",
    "fly_ash",
    "water",
    "sand",
    "stone",
    "water_reducer",
    "recycled_aggregate",
    "total_mass",
];

/// Label of the optional target column.
pub const TARGET_NAME: &str = "slump";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("unexpected column `{0}` in header")]
    UnknownColumn(String),
    #[error("duplicate column `{0}` in header")]
    DuplicateColumn(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: column `{column}`: cannot parse `{cell}` as a number")]
    NotNumeric {
        row: usize,
        column: String,
        cell: String,
    },
    #[error("row {row}: column `{column}`: value {value} is invalid ({reason})")]
    InvalidValue {
        row: usize,
        column: String,
        value: f64,
        reason: &'static str,
    },
    #[error("train size {n_train} out of range for a dataset of {len} samples (need 1 <= n_train < {len})")]
    SplitOutOfRange { n_train: usize, len: usize },
    #[error("cannot derive scaling parameters from an empty dataset")]
    EmptyTrain,
}

/// One concrete mix: eight component masses (kg/m³) and, when known, the
/// measured slump (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: [f64; N_FEATURES],
    pub slump: Option<f64>,
}

impl Sample {
    /// Checks the value invariants: features finite and non-negative, slump
    /// finite and positive.
    pub fn new(features: [f64; N_FEATURES], slump: Option<f64>) -> Result<Self, DatasetError> {
        let sample = Sample { features, slump };
        sample.validate(0)?;
        Ok(sample)
    }

    fn validate(&self, row: usize) -> Result<(), DatasetError> {
        for (value, name) in self.features.iter().zip(FEATURE_NAMES) {
            if !value.is_finite() || *value < 0.0 {
                return Err(DatasetError::InvalidValue {
                    row,
                    column: name.to_string(),
                    value: *value,
                    reason: "features must be finite and non-negative",
                });
            }
        }
        if let Some(s) = self.slump {
            if !s.is_finite() || s <= 0.0 {
                return Err(DatasetError::InvalidValue {
                    row,
                    column: TARGET_NAME.to_string(),
                    value: s,
                    reason: "slump must be finite and positive",
                });
            }
        }
        Ok(())
    }

    pub fn cement(&self) -> f64 {
        self.features[0]
    }
    pub fn fly_ash(&self) -> f64 {
        self.features[1]
    }
    pub fn water(&self) -> f64 {
        self.features[2]
    }
    pub fn sand(&self) -> f64 {
        self.features[3]
    }
    pub fn stone(&self) -> f64 {
        self.features[4]
    }
    pub fn water_reducer(&self) -> f64 {
        self.features[5]
    }
    pub fn recycled_aggregate(&self) -> f64 {
        self.features[6]
    }
    pub fn total_mass(&self) -> f64 {
        self.features[7]
    }
}

/// Ordered, immutable collection of samples. Row order is significant: it
/// fixes the sample index used by fitness and by the semantics vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    /// Original 1-based row numbers, carried through splits so reports can
    /// label test samples by their position in the source table.
    row_numbers: Vec<usize>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Self {
        let row_numbers = (1..=samples.len()).collect();
        Dataset {
            samples,
            row_numbers,
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_names(&self) -> [&'static str; N_FEATURES] {
        FEATURE_NAMES
    }

    /// 1-based row numbers in the table this dataset was cut from.
    pub fn row_numbers(&self) -> &[usize] {
        &self.row_numbers
    }

    pub fn has_targets(&self) -> bool {
        self.samples.iter().all(|s| s.slump.is_some())
    }

    /// Target vector, or `None` if any sample lacks a slump value.
    pub fn targets(&self) -> Option<Vec<f64>> {
        self.samples.iter().map(|s| s.slump).collect()
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.features[feature]).collect()
    }

    /// Writes the dataset as CSV. Values use the shortest decimal form that
    /// parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let with_target = self.has_targets() && !self.is_empty();
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
        if with_target {
            header.push(TARGET_NAME);
        }
        w.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> = s.features.iter().map(|v| format!("{v}")).collect();
            if with_target {
                rec.push(format!("{}", s.slump.unwrap_or_default()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), DatasetError> {
        self.write_csv(File::create(path)?)
    }

    /// Writes the dataset rounded to 6 significant digits, the precision used
    /// by every CSV report.
    pub fn write_csv_sig6<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let rounded = Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    features: s.features.map(|v| sig6(v).parse().unwrap_or(v)),
                    slump: s.slump.map(|v| sig6(v).parse().unwrap_or(v)),
                })
                .collect(),
            row_numbers: self.row_numbers.clone(),
        };
        rounded.write_csv(writer)
    }
}

/// Returns the 34 mixes of the recycled-aggregate slump table, in table order.
pub fn builtin_dataset() -> Dataset {
    #[rustfmt::skip]
    const ROWS: [[f64; 9]; 34] = [
        [450.0,   0.0, 180.0, 752.0, 1038.0, 9.9,    0.0, 2420.0, 156.0],
        [400.0,   0.0, 180.0, 769.0,  531.0, 8.4,  531.0, 2410.0, 136.0],
        [317.0,   0.0, 190.0, 787.0, 1086.0, 5.71,   0.0, 2380.0, 125.0],
        [222.0, 192.0, 185.0, 775.0, 1070.0, 7.4,    0.0, 2400.0, 105.0],
        [270.0, 234.0, 180.0, 752.0, 1038.0, 9.9,    0.0, 2420.0, 121.0],
        [333.0,  48.0, 185.0, 775.0,  535.0, 7.4,  535.0, 2400.0, 137.0],
        [254.0,  82.0, 190.0, 787.0,  543.0, 5.71, 543.0, 2380.0, 105.0],
        [333.0, 481.0, 185.0, 775.0, 1070.0, 7.4,    0.0, 2400.0, 150.0],
        [202.0, 175.0, 185.0, 785.0, 1084.0, 6.38,   0.0, 2390.0, 128.0],
        [360.0, 117.0, 180.0, 752.0, 1038.0, 9.9,    0.0, 2420.0, 143.0],
        [240.0, 208.0, 180.0, 769.0,  531.0, 8.4,  531.0, 2410.0, 124.0],
        [400.0,   0.0, 180.0, 769.0, 1061.0, 8.4,    0.0, 2410.0, 149.0],
        [336.0,   0.0, 185.0, 785.0, 1084.0, 6.38,   0.0, 2390.0, 136.0],
        [360.0, 117.0, 180.0, 752.0,  519.0, 9.9,  519.0, 2420.0, 134.0],
        [269.0,  87.0, 185.0, 785.0, 1084.0, 6.38,   0.0, 2390.0, 130.0],
        [202.0, 175.0, 185.0, 785.0,  542.0, 6.38, 542.0, 2390.0, 118.0],
        [296.0,  96.0, 185.0, 775.0,  535.0, 7.4,  535.0, 2400.0, 131.0],
        [370.0,   0.0, 185.0, 775.0, 1070.0, 7.4,    0.0, 2400.0, 150.0],
        [370.0,   0.0, 185.0, 775.0,  535.0, 7.4,  535.0, 2400.0, 138.0],
        [222.0, 192.0, 185.0, 775.0,  535.0, 7.4,  535.0, 2400.0, 120.0],
        [190.0, 165.0, 190.0, 787.0,  543.0, 5.71, 543.0, 2380.0, 105.0],
        [317.0,   0.0, 190.0, 787.0,  543.0, 5.71, 543.0, 2380.0, 108.0],
        [296.0,  96.0, 185.0, 775.0, 1070.0, 7.4,    0.0, 2400.0, 140.0],
        [320.0, 104.0, 180.0, 769.0, 1061.0, 8.4,    0.0, 2410.0, 132.0],
        [259.0, 144.0, 185.0, 775.0, 1070.0, 7.4,    0.0, 2400.0, 120.0],
        [269.0,  87.0, 185.0, 785.0,  542.0, 6.38, 542.0, 2390.0, 120.0],
        [336.0,   0.0, 185.0, 785.0,  542.0, 6.38, 542.0, 2390.0, 126.0],
        [190.0, 165.0, 190.0, 787.0, 1086.0, 5.71,   0.0, 2380.0, 121.0],
        [320.0, 104.0, 180.0, 769.0,  531.0, 8.4,  531.0, 2410.0, 129.0],
        [240.0, 208.0, 180.0, 769.0, 1061.0, 8.4,    0.0, 2410.0, 113.0],
        [259.0, 144.0, 185.0, 775.0,  535.0, 7.4,  535.0, 2400.0, 126.0],
        [450.0,   0.0, 180.0, 752.0,  519.0, 9.9,  519.0, 2420.0, 142.0],
        [270.0, 234.0, 180.0, 752.0,  519.0, 9.9,  519.0, 2420.0, 127.0],
        [254.0,  82.0, 190.0, 787.0, 1086.0, 5.71,   0.0, 2380.0, 123.0],
    ];
    Dataset::new(
        ROWS.iter()
            .map(|r| Sample {
                features: [r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7]],
                slump: Some(r[8]),
            })
            .collect(),
    )
}

/// Parses a dataset from CSV text. Columns are matched by header name, so
/// their order is free; the slump column is optional.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();

    let mut feature_pos = [usize::MAX; N_FEATURES];
    let mut target_pos = None;
    for (pos, name) in header.iter().enumerate() {
        if let Some(f) = FEATURE_NAMES.iter().position(|n| *n == name) {
            if feature_pos[f] != usize::MAX {
                return Err(DatasetError::DuplicateColumn(name.to_string()));
            }
            feature_pos[f] = pos;
        } else if name == TARGET_NAME {
            if target_pos.is_some() {
                return Err(DatasetError::DuplicateColumn(name.to_string()));
            }
            target_pos = Some(pos);
        } else {
            return Err(DatasetError::UnknownColumn(name.to_string()));
        }
    }
    if let Some(missing) = feature_pos.iter().position(|p| *p == usize::MAX) {
        return Err(DatasetError::MissingColumn(
            FEATURE_NAMES[missing].to_string(),
        ));
    }

    let parse = |record: &csv::StringRecord, pos: usize, row: usize, column: &str| {
        let cell = &record[pos];
        cell.parse::<f64>().map_err(|_| DatasetError::NotNumeric {
            row,
            column: column.to_string(),
            cell: cell.to_string(),
        })
    };

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // 1-based data row number; the header is not counted.
        let row = i + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(DatasetError::Arity {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut features = [0.0; N_FEATURES];
        for (f, &pos) in feature_pos.iter().enumerate() {
            features[f] = parse(&record, pos, row, FEATURE_NAMES[f])?;
        }
        let slump = match target_pos {
            Some(pos) => Some(parse(&record, pos, row, TARGET_NAME)?),
            None => None,
        };
        let sample = Sample { features, slump };
        sample.validate(row)?;
        samples.push(sample);
    }
    Ok(Dataset::new(samples))
}

pub fn load_csv(path: &Path) -> Result<Dataset, DatasetError> {
    read_csv(File::open(path)?)
}

/// Number of leading samples that form the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_train: usize,
}

/// Positional split: the first `n_train` rows train, the rest test. No
/// shuffling.
pub fn split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset), DatasetError> {
    if spec.n_train == 0 || spec.n_train >= ds.len() {
        return Err(DatasetError::SplitOutOfRange {
            n_train: spec.n_train,
            len: ds.len(),
        });
    }
    let cut = |range: std::ops::Range<usize>| Dataset {
        samples: ds.samples[range.clone()].to_vec(),
        row_numbers: ds.row_numbers[range].to_vec(),
    };
    Ok((cut(0..spec.n_train), cut(spec.n_train..ds.len())))
}

/// Per-feature affine map `(v - min) / (max - min)` learned on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub min: [f64; N_FEATURES],
    pub max: [f64; N_FEATURES],
    /// Columns that were constant on the training set; they map to 0.
    pub degenerate: [bool; N_FEATURES],
}

impl ScaleParams {
    pub fn fit(train: &Dataset) -> Result<Self, DatasetError> {
        if train.is_empty() {
            return Err(DatasetError::EmptyTrain);
        }
        let mut min = [f64::INFINITY; N_FEATURES];
        let mut max = [f64::NEG_INFINITY; N_FEATURES];
        for s in train.samples() {
            for f in 0..N_FEATURES {
                min[f] = min[f].min(s.features[f]);
                max[f] = max[f].max(s.features[f]);
            }
        }
        let degenerate = std::array::from_fn(|f| max[f] == min[f]);
        Ok(ScaleParams {
            min,
            max,
            degenerate,
        })
    }

    pub fn apply_features(&self, x: &[f64; N_FEATURES]) -> [f64; N_FEATURES] {
        std::array::from_fn(|f| {
            if self.degenerate[f] {
                0.0
            } else {
                (x[f] - self.min[f]) / (self.max[f] - self.min[f])
            }
        })
    }

    /// Scales the features of every sample. Scaled values may be negative or
    /// exceed 1 outside the training range, so the non-negativity invariant
    /// of raw samples does not apply to the result.
    pub fn apply(&self, ds: &Dataset) -> Dataset {
        Dataset {
            samples: ds
                .samples
                .iter()
                .map(|s| Sample {
                    features: self.apply_features(&s.features),
                    slump: s.slump,
                })
                .collect(),
            row_numbers: ds.row_numbers.clone(),
        }
    }
}

/// Fits min-max parameters on `train` and applies them to `train` and to each
/// of `others`. Targets are left untouched.
pub fn scale_minmax(
    train: &Dataset,
    others: &[&Dataset],
) -> Result<(Dataset, Vec<Dataset>, ScaleParams), DatasetError> {
    let params = ScaleParams::fit(train)?;
    let scaled_train = params.apply(train);
    let scaled_others = others.iter().map(|d| params.apply(d)).collect();
    Ok((scaled_train, scaled_others, params))
}
