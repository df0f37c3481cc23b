//! Cause-effect pairs and ingestion of pair corpora.
//!
//! A pair file is plain text with one sample per line and whitespace
//! separated numeric columns; the first two columns are used. Lines that are
//! blank or start with `#` are skipped. A meta file lists one pair per row:
//!
//! ```text
//! pair-id cause-start cause-end effect-start effect-end weight
//! ```

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Ground-truth (or inferred) causal direction between the two columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "x->y")]
    XtoY,
    #[serde(rename = "y->x")]
    YtoX,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::XtoY => Direction::YtoX,
            Direction::YtoX => Direction::XtoY,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::XtoY => f.write_str("x->y"),
            Direction::YtoX => f.write_str("y->x"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseEffectPair {
    pub id: String,
    x: Vec<f64>,
    y: Vec<f64>,
    weight: f64,
    truth: Option<Direction>,
}

impl CauseEffectPair {
    /// Builds a validated pair with unit weight and no ground truth.
    pub fn new(id: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if x.len() != y.len() {
            return Err(Error::InvalidPair(format!(
                "{id}: column lengths differ ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidPair(format!("{id}: fewer than 2 rows")));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPair(format!("{id}: non-finite value")));
        }
        Ok(Self {
            id,
            x,
            y,
            weight: 1.0,
            truth: None,
        })
    }

    pub fn with_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidPair(format!("{}: weight {weight}", self.id)));
        }
        self.weight = weight;
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_truth(mut self, truth: Direction) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn truth(&self) -> Option<Direction> {
        self.truth
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Same data with the roles of the two columns exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            id: self.id.clone(),
            x: self.y.clone(),
            y: self.x.clone(),
            weight: self.weight,
            truth: self.truth.map(Direction::flipped),
        }
    }

    /// Keeps the rows at `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            id: self.id.clone(),
            x: rows.iter().map(|&i| self.x[i]).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            weight: self.weight,
            truth: self.truth,
        }
    }

    /// Replaces both columns, keeping id, weight and truth.
    pub fn with_columns(&self, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.id.clone(), x, y)?;
        out.weight = self.weight;
        out.truth = self.truth;
        Ok(out)
    }
}

/// Parses pair-file text. Columns 1 and 2 are used, extra columns ignored.
pub fn parse_pair(id: impl Into<String>, text: &str) -> Result<CauseEffectPair> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
            return Err(Error::MalformedLine(line_no));
        };
        let a: f64 = a.parse().map_err(|_| Error::MalformedLine(line_no))?;
        let b: f64 = b.parse().map_err(|_| Error::MalformedLine(line_no))?;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite(line_no));
        }
        x.push(a);
        y.push(b);
    }
    if x.len() < 2 {
        return Err(Error::EmptyFile);
    }
    CauseEffectPair::new(id, x, y)
}

/// Loads a pair file; the pair id is the file stem.
pub fn load_pair(path: impl AsRef<Path>) -> Result<CauseEffectPair> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_pair(id, &text)
}

/// Writes `pair` in the pair-file format using shortest round-trip
/// formatting, so reloading reproduces every value exactly.
pub fn write_pair(path: impl AsRef<Path>, pair: &CauseEffectPair) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(pair.len() * 40);
    for (a, b) in pair.x.iter().zip(&pair.y) {
        out.push_str(&format!("{a:e} {b:e}\n"));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// One row of a meta file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEntry {
    pub id: String,
    pub cause: (usize, usize),
    pub effect: (usize, usize),
    pub weight: f64,
}

impl MetaEntry {
    fn is_scalar(&self) -> bool {
        self.cause.0 == self.cause.1 && self.effect.0 == self.effect.1
    }
}

pub fn parse_meta(text: &str) -> Result<Vec<MetaEntry>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 6 {
            return Err(Error::MalformedLine(line_no));
        }
        let col = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::MalformedLine(line_no))
        };
        let weight: f64 = fields[5]
            .parse()
            .map_err(|_| Error::MalformedLine(line_no))?;
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::MalformedLine(line_no));
        }
        rows.push(MetaEntry {
            id: fields[0].to_string(),
            cause: (col(fields[1])?, col(fields[2])?),
            effect: (col(fields[3])?, col(fields[4])?),
            weight,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub id: String,
    pub reason: String,
}

/// Pairs loaded from a corpus directory together with the entries that
/// were skipped.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub pairs: Vec<CauseEffectPair>,
    pub skipped: Vec<SkippedEntry>,
}

/// Ids made only of digits refer to `pair<id>.txt`, the corpus convention;
/// anything else refers to `<id>.txt`.
fn pair_path(dir: &Path, id: &str) -> PathBuf {
    if id.chars().all(|c| c.is_ascii_digit()) {
        dir.join(format!("pair{id}.txt"))
    } else {
        dir.join(format!("{id}.txt"))
    }
}

/// Loads every scalar pair listed in `meta` from `dir`.
///
/// Entries with cause `[1,1]` and effect `[2,2]` are labelled `x->y`; the
/// mirrored layout (cause in column 2) is labelled `y->x`. Multivariate
/// entries and any other column layout are skipped and reported.
pub fn load_dataset(dir: impl AsRef<Path>, meta: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let meta = meta.as_ref();
    let text = fs::read_to_string(meta).map_err(|e| Error::io(meta, e))?;
    let mut out = Dataset::default();
    for entry in parse_meta(&text)? {
        if !entry.is_scalar() {
            out.skipped.push(SkippedEntry {
                id: entry.id,
                reason: "multivariate".into(),
            });
            continue;
        }
        let truth = match (entry.cause.0, entry.effect.0) {
            (1, 2) => Direction::XtoY,
            (2, 1) => Direction::YtoX,
            (c, e) => {
                out.skipped.push(SkippedEntry {
                    id: entry.id,
                    reason: format!("unsupported columns cause={c} effect={e}"),
                });
                continue;
            }
        };
        let path = pair_path(dir, &entry.id);
        if !path.is_file() {
            return Err(Error::MetaMismatch(entry.id));
        }
        let pair = load_pair(&path)?;
        let pair = CauseEffectPair {
            id: entry.id,
            ..pair
        };
        out.pairs
            .push(pair.with_weight(entry.weight)?.with_truth(truth));
    }
    Ok(out)
}

/// Loads every `*.txt` file in `dir` as an unlabelled pair of unit weight,
/// sorted by id.
pub fn load_directory(dir: impl AsRef<Path>) -> Result<Vec<CauseEffectPair>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    paths.sort();
    paths.iter().map(load_pair).collect()
}

/// Uniform subsample of `n` rows without replacement. Pairs with at most
/// `n` rows are returned unchanged; surviving rows keep their input order.
pub fn subsample(pair: &CauseEffectPair, n: usize, seed: u64) -> CauseEffectPair {
    let n = n.max(2);
    if pair.len() <= n {
        return pair.clone();
    }
    let mut rng = seed::rng(seed);
    let mut rows = index::sample(&mut rng, pair.len(), n).into_vec();
    rows.sort_unstable();
    pair.select_rows(&rows)
}
