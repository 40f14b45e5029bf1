//! CSV ingestion: long format, long format with a `method` column, and the
//! wide two-method layout.

use std::fs;
use std::path::{Path, PathBuf};

use loam_core::{ingest_long, LongRecord, MeasurementGrid, PairedStudy};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {detail}")]
    MalformedRow { line: u64, detail: String },
    #[error("missing column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("expected exactly two methods, found {0:?}")]
    MethodCount(Vec<String>),
    #[error(transparent)]
    Model(#[from] loam_core::Error),
}

impl InputError {
    /// Stable name printed on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Io { .. } => "IoError",
            Self::MalformedRow { .. } => "MalformedRow",
            Self::MissingColumn(_) => "MissingColumn",
            Self::MethodCount(_) => "MethodCount",
            Self::Model(e) => e.name(),
        }
    }
}

pub type Result<T, E = InputError> = std::result::Result<T, E>;

/// Raw bytes of an input file with their SHA-256 digest.
#[derive(Debug, Clone)]
pub struct Source {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
    pub sha256: String,
}

impl Source {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| InputError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_bytes(path, bytes))
    }

    pub fn from_bytes(path: &Path, bytes: Vec<u8>) -> Self {
        let sha256 = hex::encode(Sha256::digest(&bytes));
        Self {
            path: path.to_path_buf(),
            bytes,
            sha256,
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn parse(bytes: &[u8]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let header = reader
            .headers()
            .map_err(|e| malformed(1, e))?
            .iter()
            .map(|h| h.trim_start_matches('\u{feff}').to_string())
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                malformed(line, e)
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != header.len() {
                return Err(InputError::MalformedRow {
                    line,
                    detail: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            rows.push((line, record));
        }
        Ok(Self { header, rows })
    }

    fn column(&self, name: &'static str) -> Result<usize> {
        self.find(name).ok_or(InputError::MissingColumn(name))
    }

    fn find(&self, name: &str) -> Option<usize> {
        self.header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
    }
}

fn malformed(line: u64, e: impl std::fmt::Display) -> InputError {
    InputError::MalformedRow {
        line,
        detail: e.to_string(),
    }
}

fn parse_replicate(line: u64, s: &str) -> Result<u32> {
    match s.parse::<u32>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(InputError::MalformedRow {
            line,
            detail: format!("replicate `{s}` is not a positive integer"),
        }),
    }
}

fn parse_value(line: u64, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| InputError::MalformedRow {
        line,
        detail: format!("value `{s}` is not a number"),
    })
}

struct Keys {
    subject: usize,
    observer: usize,
    replicate: usize,
}

impl Keys {
    fn locate(table: &Table) -> Result<Self> {
        Ok(Self {
            subject: table.column("subject")?,
            observer: table.column("observer")?,
            replicate: table.column("replicate")?,
        })
    }

    fn record(&self, line: u64, row: &csv::StringRecord, value: &str) -> Result<LongRecord> {
        Ok(LongRecord::new(
            &row[self.subject],
            &row[self.observer],
            parse_replicate(line, &row[self.replicate])?,
            parse_value(line, value)?,
        ))
    }
}

/// Parses `subject,observer,replicate,value` rows. Extra columns are ignored.
pub fn parse_long(bytes: &[u8]) -> Result<Vec<LongRecord>> {
    let table = Table::parse(bytes)?;
    let keys = Keys::locate(&table)?;
    let value = table.column("value")?;
    table
        .rows
        .iter()
        .map(|(line, row)| keys.record(*line, row, &row[value]))
        .collect()
}

pub fn read_grid(bytes: &[u8]) -> Result<MeasurementGrid> {
    Ok(ingest_long(&parse_long(bytes)?)?)
}

/// Two methods side by side, in the order they appear in the input.
#[derive(Debug, Clone)]
pub struct Paired {
    pub methods: [String; 2],
    pub study: PairedStudy,
}

/// Reads a two-method file.
///
/// A file with `value` and `method` columns is long format with one method
/// per row. Otherwise every column after `subject,observer,replicate` is a
/// method, and there must be exactly two.
pub fn read_paired(bytes: &[u8]) -> Result<Paired> {
    let table = Table::parse(bytes)?;
    let keys = Keys::locate(&table)?;
    let mut methods: Vec<String> = Vec::new();
    let mut records: Vec<Vec<LongRecord>> = Vec::new();
    match (table.find("value"), table.find("method")) {
        (Some(value), Some(method)) => {
            for (line, row) in &table.rows {
                let name = &row[method];
                let m = match methods.iter().position(|x| x == name) {
                    Some(m) => m,
                    None => {
                        methods.push(name.to_string());
                        records.push(Vec::new());
                        methods.len() - 1
                    }
                };
                records[m].push(keys.record(*line, row, &row[value])?);
            }
        }
        (Some(_), None) => return Err(InputError::MissingColumn("method")),
        (None, _) => {
            let columns: Vec<usize> = (0..table.header.len())
                .filter(|&i| i != keys.subject && i != keys.observer && i != keys.replicate)
                .collect();
            methods = columns.iter().map(|&i| table.header[i].clone()).collect();
            records = vec![Vec::with_capacity(table.rows.len()); columns.len()];
            for (line, row) in &table.rows {
                for (m, &i) in columns.iter().enumerate() {
                    records[m].push(keys.record(*line, row, &row[i])?);
                }
            }
        }
    }
    if methods.len() != 2 {
        return Err(InputError::MethodCount(methods));
    }
    let y = ingest_long(&records.pop().expect("two methods"))?;
    let x = ingest_long(&records.pop().expect("two methods"))?;
    let [mx, my]: [String; 2] = methods.try_into().expect("two methods");
    Ok(Paired {
        methods: [mx, my],
        study: PairedStudy::new(x, y)?,
    })
}

/// Two long-format files, one per method; methods are named by file stem.
pub fn read_paired_files(x: &Source, y: &Source) -> Result<Paired> {
    let gx = read_grid(&x.bytes)?;
    let gy = read_grid(&y.bytes)?;
    let stem = |s: &Source| {
        s.path.file_stem().map_or_else(
            || s.path.display().to_string(),
            |f| f.to_string_lossy().into_owned(),
        )
    };
    Ok(Paired {
        methods: [stem(x), stem(y)],
        study: PairedStudy::new(gx, gy)?,
    })
}

/// Long-format CSV of a grid, `subject,observer,replicate,value`.
pub fn write_long(grid: &MeasurementGrid) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["subject", "observer", "replicate", "value"])
        .expect("writing to memory");
    for r in grid.to_long() {
        writer
            .write_record([
                r.subject,
                r.observer,
                r.replicate.to_string(),
                format_value(r.value),
            ])
            .expect("writing to memory");
    }
    writer.into_inner().expect("writing to memory")
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}
