//! Dataset files, transform serialization, report documents and benchmark timing.
//!
//! `fvecs` records are a little-endian `i32` dimension followed by that many
//! little-endian `f32` coordinates. CSV holds one point per row with no header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fjlt::{FjltTransform, GaussianTransform, LinearEmbedding};
use crate::model::{DataSet, EmbedParams, RngSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Fvecs,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fvecs" => Ok(Format::Fvecs),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Parse {
                location: "format".into(),
                message: format!("unknown format {other:?}, expected fvecs or csv"),
            }),
        }
    }
}

impl Format {
    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("fvecs") => Format::Fvecs,
            _ => Format::Csv,
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: Format) -> Result<DataSet> {
    let reader = BufReader::new(File::open(path)?);
    match format {
        Format::Fvecs => read_fvecs(reader),
        Format::Csv => read_csv(reader),
    }
}

/// Writes the unpadded coordinates of every point.
pub fn save_dataset(path: impl AsRef<Path>, data: &DataSet, format: Format) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        Format::Fvecs => write_fvecs(&mut w, data)?,
        Format::Csv => write_csv(&mut w, data)?,
    }
    w.flush()?;
    Ok(())
}

pub fn read_fvecs<R: Read>(mut reader: R) -> Result<DataSet> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let mut flat = Vec::new();
    let mut dim: Option<usize> = None;
    let mut offset = 0usize;
    let mut record = 0usize;
    while offset < bytes.len() {
        let header: [u8; 4] = bytes
            .get(offset..offset + 4)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| Error::Parse {
                location: format!("byte {offset}"),
                message: "truncated record header".into(),
            })?;
        let rec_dim = i32::from_le_bytes(header);
        if rec_dim <= 0 {
            return Err(Error::Parse {
                location: format!("byte {offset}"),
                message: format!("record dimension {rec_dim} is not positive"),
            });
        }
        let rec_dim = rec_dim as usize;
        match dim {
            None => dim = Some(rec_dim),
            Some(expected) if expected != rec_dim => {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: rec_dim,
                })
            }
            Some(_) => {}
        }
        let body = offset + 4;
        let payload = bytes.get(body..body + 4 * rec_dim).ok_or_else(|| Error::Parse {
            location: format!("byte {body}"),
            message: format!("record {record} is truncated"),
        })?;
        flat.extend(
            payload
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))),
        );
        offset = body + 4 * rec_dim;
        record += 1;
    }
    let dim = dim.ok_or(Error::EmptyInput(0))?;
    DataSet::from_flat(&flat, dim)
}

pub fn write_fvecs<W: Write>(mut w: W, data: &DataSet) -> Result<()> {
    let dim = data.d_orig();
    for p in data.points() {
        w.write_all(&(dim as i32).to_le_bytes())?;
        for &v in &p[..dim] {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<DataSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut flat = Vec::new();
    let mut dim: Option<usize> = None;
    for result in rdr.records() {
        let rec = result.map_err(|e| Error::Parse {
            location: e
                .position()
                .map_or_else(|| "unknown".into(), |p| format!("line {}", p.line())),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        match dim {
            None => dim = Some(rec.len()),
            Some(expected) if expected != rec.len() => {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: rec.len(),
                })
            }
            Some(_) => {}
        }
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                location: format!("line {line}, column {}", col + 1),
                message: format!("{field:?} is not a number"),
            })?;
            flat.push(v);
        }
    }
    let dim = dim.ok_or(Error::EmptyInput(0))?;
    DataSet::from_flat(&flat, dim)
}

pub fn write_csv<W: Write>(w: W, data: &DataSet) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let dim = data.d_orig();
    for p in data.points() {
        wtr.write_record(p[..dim].iter().map(|v| v.to_string()))
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    wtr.flush()?;
    Ok(())
}

pub const TRANSFORM_FORMAT: &str = "fnnpe-transform";
pub const TRANSFORM_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TransformFile {
    format: String,
    version: u32,
    transform: FjltTransform,
}

/// Versioned JSON holding seed, parameters, signs and every sparse entry exactly.
pub fn transform_to_json(t: &FjltTransform) -> Result<String> {
    Ok(serde_json::to_string(&TransformFile {
        format: TRANSFORM_FORMAT.into(),
        version: TRANSFORM_VERSION,
        transform: t.clone(),
    })?)
}

pub fn transform_from_json(s: &str) -> Result<FjltTransform> {
    let file: TransformFile = serde_json::from_str(s)?;
    if file.format != TRANSFORM_FORMAT || file.version != TRANSFORM_VERSION {
        return Err(Error::Parse {
            location: "header".into(),
            message: format!("unsupported transform file {} v{}", file.format, file.version),
        });
    }
    let t = file.transform;
    // Re-validate the parts; the file may have been edited.
    FjltTransform::from_parts(t.signs().clone(), t.projection().clone(), *t.params(), t.seed())
}

pub fn save_transform(path: impl AsRef<Path>, t: &FjltTransform) -> Result<()> {
    std::fs::write(path, transform_to_json(t)?)?;
    Ok(())
}

pub fn load_transform(path: impl AsRef<Path>) -> Result<FjltTransform> {
    transform_from_json(&std::fs::read_to_string(path)?)
}

pub const REPORT_SCHEMA_VERSION: &str = "fnnpe-report/1";

/// A self-describing report: the command and every parameter needed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    /// Seconds since the Unix epoch; omitted unless requested so reports stay byte-identical.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generated_at: Option<u64>,
    pub payload: serde_json::Value,
}

impl ReportDocument {
    pub fn new<P: Serialize, T: Serialize>(command: &str, parameters: &P, payload: &T) -> Result<Self> {
        Ok(ReportDocument {
            schema_version: REPORT_SCHEMA_VERSION.into(),
            command: command.into(),
            parameters: serde_json::to_value(parameters)?,
            generated_at: None,
            payload: serde_json::to_value(payload)?,
        })
    }

    pub fn stamped(mut self) -> Self {
        self.generated_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMethod {
    Fjlt,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: BenchMethod,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub q: f64,
    /// Mean stored entries over the repeats; `k·d` for the dense baseline.
    pub nnz: f64,
    pub expected_nnz: f64,
    pub median_seconds: f64,
    pub seconds_per_point: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub grid: Vec<(usize, usize)>,
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    pub constants: crate::model::Constants,
    pub repeats: usize,
    /// Distinct input vectors cycled through; bounds memory at large `d`.
    pub pool: usize,
    pub seed: RngSeed,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            grid: vec![(4096, 1 << 14)],
            epsilon: 0.5,
            delta: 0.1,
            lambda: 16.0,
            constants: crate::model::Constants::default(),
            repeats: 5,
            pool: 256,
            seed: RngSeed(1),
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn time_embedding<E: LinearEmbedding>(e: &E, pool: &[Vec<f64>], n: usize) -> Result<f64> {
    let mut scratch = Vec::new();
    let mut out = vec![0.0; e.output_dim()];
    let mut sink = 0.0;
    let start = Instant::now();
    for i in 0..n {
        e.apply_into(&pool[i % pool.len()], &mut scratch, &mut out)?;
        sink += out[0];
    }
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(sink);
    Ok(secs)
}

/// Times single-threaded FJLT and dense Gaussian embedding of `n` points at equal `k`.
///
/// Each repeat samples a fresh transform; one untimed warm-up precedes the repeats
/// and the median is reported.
pub fn bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for (cell, &(n, d)) in config.grid.iter().enumerate() {
        let params: EmbedParams = crate::model::select_params(
            n,
            d.next_power_of_two(),
            config.epsilon,
            config.delta,
            config.lambda,
            config.constants,
        )?;
        let cell_seed = config.seed.derive(cell as u64);
        let pool_data = crate::synthetic::gaussian_cloud(config.pool.clamp(2, n.max(2)), params.d, cell_seed.derive(0))?;
        let pool: Vec<Vec<f64>> = pool_data.points().map(<[f64]>::to_vec).collect();
        let repeats = config.repeats.max(1);

        let warm = FjltTransform::sample(&params, cell_seed.derive(1))?;
        time_embedding(&warm, &pool, n)?;
        let mut times = Vec::new();
        let mut nnz = 0usize;
        for r in 0..repeats {
            let t = FjltTransform::sample(&params, cell_seed.derive(2 + r as u64))?;
            nnz += t.projection().nnz();
            times.push(time_embedding(&t, &pool, n)?);
        }
        let med = median(times);
        rows.push(BenchRow {
            method: BenchMethod::Fjlt,
            n,
            d: params.d,
            k: params.k,
            q: params.q,
            nnz: nnz as f64 / repeats as f64,
            expected_nnz: params.expected_nnz(),
            median_seconds: med,
            seconds_per_point: med / n as f64,
            repeats,
        });

        let warm = GaussianTransform::sample(&params, cell_seed.derive(1000))?;
        time_embedding(&warm, &pool, n)?;
        let mut times = Vec::new();
        for r in 0..repeats {
            let g = GaussianTransform::sample(&params, cell_seed.derive(1001 + r as u64))?;
            times.push(time_embedding(&g, &pool, n)?);
        }
        let med = median(times);
        let dense = (params.k * params.d) as f64;
        rows.push(BenchRow {
            method: BenchMethod::Gaussian,
            n,
            d: params.d,
            k: params.k,
            q: 1.0,
            nnz: dense,
            expected_nnz: dense,
            median_seconds: med,
            seconds_per_point: med / n as f64,
            repeats,
        });
    }
    Ok(rows)
}

pub fn bench_rows_to_csv<W: Write>(w: W, rows: &[BenchRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    wtr.flush()?;
    Ok(())
}
