//! Observation types, datasets and their CSV representation.
//!
//! Three record kinds exist: revealed choices `(d, x, z)`, stated
//! probabilities `(p, x, z)`, and matched records carrying both. `x` and `z`
//! are categorical codes; `z` is optional, and a dataset without a `z` column
//! behaves as if `Z` took a single value.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension of the stated probability vector.
pub const MAX_DIM: usize = 2;

/// A stated probability report, one coordinate per elicitation scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    dim: usize,
    coords: [f64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(coords.len()));
        }
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point {
            dim: coords.len(),
            coords: c,
        })
    }

    pub fn scalar(p: f64) -> Self {
        Point {
            dim: 1,
            coords: [p, 0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn in_unit_cube(&self) -> bool {
        self.coords()
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
    }

    /// Lexicographic total order on coordinates.
    pub fn total_cmp(&self, other: &Point) -> std::cmp::Ordering {
        self.dim.cmp(&other.dim).then_with(|| {
            self.coords()
                .iter()
                .zip(other.coords())
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;

    fn index(&self, axis: usize) -> &f64 {
        &self.coords()[axis]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RevealedObservation {
    pub d: u8,
    pub x: i64,
    pub z: Option<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatedObservation {
    pub p: Point,
    pub x: i64,
    pub z: Option<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchedObservation {
    pub d: u8,
    pub p: Point,
    pub x: i64,
    pub z: Option<i64>,
}

impl MatchedObservation {
    pub fn revealed(&self) -> RevealedObservation {
        RevealedObservation {
            d: self.d,
            x: self.x,
            z: self.z,
        }
    }

    pub fn stated(&self) -> StatedObservation {
        StatedObservation {
            p: self.p,
            x: self.x,
            z: self.z,
        }
    }
}

/// Common accessors used by datasets, subsampling and CSV IO.
pub trait Observation: Clone + Send + Sync {
    fn x(&self) -> i64;
    fn z(&self) -> Option<i64>;
    fn decision(&self) -> Option<u8> {
        None
    }
    fn point(&self) -> Option<Point> {
        None
    }
}

impl Observation for RevealedObservation {
    fn x(&self) -> i64 {
        self.x
    }
    fn z(&self) -> Option<i64> {
        self.z
    }
    fn decision(&self) -> Option<u8> {
        Some(self.d)
    }
}

impl Observation for StatedObservation {
    fn x(&self) -> i64 {
        self.x
    }
    fn z(&self) -> Option<i64> {
        self.z
    }
    fn point(&self) -> Option<Point> {
        Some(self.p)
    }
}

impl Observation for MatchedObservation {
    fn x(&self) -> i64 {
        self.x
    }
    fn z(&self) -> Option<i64> {
        self.z
    }
    fn decision(&self) -> Option<u8> {
        Some(self.d)
    }
    fn point(&self) -> Option<Point> {
        Some(self.p)
    }
}

/// An immutable, validated collection of observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<O> {
    records: Vec<O>,
    has_z: bool,
    dim_p: Option<usize>,
}

pub type RevealedDataset = Dataset<RevealedObservation>;
pub type StatedDataset = Dataset<StatedObservation>;
pub type MatchedDataset = Dataset<MatchedObservation>;

impl<O: Observation> Dataset<O> {
    /// Validates every record. Errors carry the 1-based record index.
    pub fn new(records: Vec<O>) -> Result<Self> {
        let has_z = records.first().is_some_and(|r| r.z().is_some());
        let dim_p = records.first().and_then(|r| r.point()).map(|p| p.dim());
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            if r.z().is_some() != has_z {
                return Err(Error::row(row, "z must be present on every record or none"));
            }
            if let Some(d) = r.decision() {
                if d > 1 {
                    return Err(Error::row(row, format!("d={d} outside {{0,1}}")));
                }
            }
            if let Some(p) = r.point() {
                if Some(p.dim()) != dim_p {
                    return Err(Error::row(row, "stated probability dimension changes"));
                }
                if !p.in_unit_cube() {
                    return Err(Error::row(row, format!("p={:?} outside [0,1]", p.coords())));
                }
            }
        }
        Ok(Dataset {
            records,
            has_z,
            dim_p,
        })
    }

    pub fn records(&self) -> &[O] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_z(&self) -> bool {
        self.has_z
    }

    pub fn dim_p(&self) -> Option<usize> {
        self.dim_p
    }

    pub fn x_support(&self) -> Vec<i64> {
        let set: BTreeSet<i64> = self.records.iter().map(|r| r.x()).collect();
        set.into_iter().collect()
    }

    pub fn z_support(&self) -> Option<Vec<i64>> {
        self.has_z.then(|| {
            let set: BTreeSet<i64> = self.records.iter().filter_map(|r| r.z()).collect();
            set.into_iter().collect()
        })
    }

    /// Records with `X = x` (and `Z = z` when given), order preserved.
    pub fn subsample(&self, x: i64, z: Option<i64>) -> Result<Dataset<O>> {
        if z.is_some() && !self.has_z {
            return Err(Error::ZNotPresent);
        }
        let records = self
            .records
            .iter()
            .filter(|r| r.x() == x && (z.is_none() || r.z() == z))
            .cloned()
            .collect();
        Ok(Dataset {
            records,
            has_z: self.has_z,
            dim_p: self.dim_p,
        })
    }

    /// Dataset built from the rows at `indices` (repeats allowed).
    pub fn resample(&self, indices: &[usize]) -> Dataset<O> {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            has_z: self.has_z,
            dim_p: self.dim_p,
        }
    }

    pub fn points(&self) -> Vec<Point> {
        self.records.iter().filter_map(|r| r.point()).collect()
    }

    pub fn validation_report(&self) -> ValidationReport {
        ValidationReport {
            rows: self.len(),
            dim_p: self.dim_p,
            has_z: self.has_z,
            x_support: self.x_support(),
            z_support: self.z_support(),
        }
    }
}

impl MatchedDataset {
    pub fn revealed_view(&self) -> RevealedDataset {
        Dataset {
            records: self.records.iter().map(|r| r.revealed()).collect(),
            has_z: self.has_z,
            dim_p: None,
        }
    }

    pub fn stated_view(&self) -> StatedDataset {
        Dataset {
            records: self.records.iter().map(|r| r.stated()).collect(),
            has_z: self.has_z,
            dim_p: self.dim_p,
        }
    }
}

/// Summary of a loaded dataset, echoed as JSON by the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: usize,
    pub dim_p: Option<usize>,
    pub has_z: bool,
    pub x_support: Vec<i64>,
    pub z_support: Option<Vec<i64>>,
}

/// Column names used when reading CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub d: String,
    pub x: String,
    /// Name of the excluded-covariate column. When the header lacks it the
    /// dataset is loaded without `z`, unless `require_z` is set.
    pub z: Option<String>,
    pub require_z: bool,
    /// Stated probability columns; `None` picks up `p1`, `p2`, ... from the header.
    pub p: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            d: "d".into(),
            x: "x".into(),
            z: Some("z".into()),
            require_z: false,
            p: None,
        }
    }
}

struct Columns {
    d: Option<usize>,
    x: usize,
    z: Option<usize>,
    p: Vec<usize>,
}

impl CsvSchema {
    fn resolve(&self, header: &csv::StringRecord, want_d: bool, want_p: bool) -> Result<Columns> {
        let find = |name: &str| header.iter().position(|h| h == name);
        let need = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_string()));

        let d = if want_d { Some(need(&self.d)?) } else { None };
        let x = need(&self.x)?;
        let z = match &self.z {
            Some(name) => match find(name) {
                Some(i) => Some(i),
                None if self.require_z => return Err(Error::MissingColumn(name.clone())),
                None => None,
            },
            None => None,
        };
        let p = if !want_p {
            Vec::new()
        } else if let Some(names) = &self.p {
            names.iter().map(|n| need(n)).collect::<Result<Vec<_>>>()?
        } else {
            let mut cols = Vec::new();
            while let Some(i) = find(&format!("p{}", cols.len() + 1)) {
                cols.push(i);
            }
            if cols.is_empty() {
                return Err(Error::MissingColumn("p1".into()));
            }
            cols
        };
        if want_p && (p.is_empty() || p.len() > MAX_DIM) {
            return Err(Error::UnsupportedDimension(p.len()));
        }
        Ok(Columns { d, x, z, p })
    }
}

struct RawRow {
    d: Option<u8>,
    p: Option<Point>,
    x: i64,
    z: Option<i64>,
}

fn field<'r>(rec: &'r csv::StringRecord, col: usize, name: &str, row: usize) -> Result<&'r str> {
    match rec.get(col).map(str::trim) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(Error::row(row, format!("missing value for `{name}`"))),
    }
}

fn parse_int(s: &str, name: &str, row: usize) -> Result<i64> {
    s.parse::<i64>()
        .map_err(|_| Error::row(row, format!("`{name}`={s:?} is not an integer")))
}

fn read_rows<R: Read>(
    reader: R,
    schema: &CsvSchema,
    want_d: bool,
    want_p: bool,
) -> Result<Vec<RawRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    let cols = schema.resolve(&header, want_d, want_p)?;

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::row(row, e.to_string()))?;
        let d = match cols.d {
            Some(c) => {
                let v = parse_int(field(&rec, c, &schema.d, row)?, &schema.d, row)?;
                if v != 0 && v != 1 {
                    return Err(Error::row(row, format!("d={v} outside {{0,1}}")));
                }
                Some(v as u8)
            }
            None => None,
        };
        let p = if want_p {
            let mut coords = Vec::with_capacity(cols.p.len());
            for (k, &c) in cols.p.iter().enumerate() {
                let name = format!("p{}", k + 1);
                let s = field(&rec, c, &name, row)?;
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::row(row, format!("`{name}`={s:?} is not a number")))?;
                if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                    return Err(Error::row(row, format!("`{name}`={v} outside [0,1]")));
                }
                coords.push(v);
            }
            Some(Point::new(&coords)?)
        } else {
            None
        };
        let x = parse_int(field(&rec, cols.x, &schema.x, row)?, &schema.x, row)?;
        let z = match cols.z {
            Some(c) => {
                let name = schema.z.as_deref().unwrap_or("z");
                Some(parse_int(field(&rec, c, name, row)?, name, row)?)
            }
            None => None,
        };
        rows.push(RawRow { d, p, x, z });
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub fn read_revealed_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<RevealedDataset> {
    let rows = read_rows(reader, schema, true, false)?;
    Dataset::new(
        rows.into_iter()
            .map(|r| RevealedObservation {
                d: r.d.unwrap_or_default(),
                x: r.x,
                z: r.z,
            })
            .collect(),
    )
}

pub fn read_stated_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<StatedDataset> {
    let rows = read_rows(reader, schema, false, true)?;
    Dataset::new(
        rows.into_iter()
            .filter_map(|r| {
                r.p.map(|p| StatedObservation {
                    p,
                    x: r.x,
                    z: r.z,
                })
            })
            .collect(),
    )
}

pub fn read_matched_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<MatchedDataset> {
    let rows = read_rows(reader, schema, true, true)?;
    Dataset::new(
        rows.into_iter()
            .filter_map(|r| {
                r.p.map(|p| MatchedObservation {
                    d: r.d.unwrap_or_default(),
                    p,
                    x: r.x,
                    z: r.z,
                })
            })
            .collect(),
    )
}

pub fn load_revealed_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RevealedDataset> {
    read_revealed_csv(open(path.as_ref())?, schema)
}

pub fn load_stated_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<StatedDataset> {
    read_stated_csv(open(path.as_ref())?, schema)
}

pub fn load_matched_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<MatchedDataset> {
    read_matched_csv(open(path.as_ref())?, schema)
}

/// Writes any dataset with the canonical header `d,p1[,p2],x[,z]`
/// (columns absent from the record kind are omitted).
pub fn write_csv<O: Observation, W: Write>(dataset: &Dataset<O>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let first = dataset.records().first();
    let has_d = first.is_some_and(|r| r.decision().is_some());
    let dim = dataset.dim_p().unwrap_or(0);

    let mut header: Vec<String> = Vec::new();
    if has_d {
        header.push("d".into());
    }
    header.extend((1..=dim).map(|k| format!("p{k}")));
    header.push("x".into());
    if dataset.has_z() {
        header.push("z".into());
    }
    w.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;

    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for r in dataset.records() {
        fields.clear();
        if let Some(d) = r.decision() {
            fields.push(d.to_string());
        }
        if let Some(p) = r.point() {
            fields.extend(p.coords().iter().map(|v| v.to_string()));
        }
        fields.push(r.x().to_string());
        if let Some(z) = r.z() {
            fields.push(z.to_string());
        }
        w.write_record(&fields).map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn save_csv<O: Observation>(dataset: &Dataset<O>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(dataset, std::io::BufWriter::new(file))
}
