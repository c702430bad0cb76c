//! Sparse binary datasets: storage, text formats, generators and transforms.
//!
//! A row is the sorted, duplicate-free list of the columns holding a 1. Rows
//! are kept in input order and duplicate rows are kept, since the distance
//! distribution counts every ordered pair.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    n_cols: usize,
    rows: Vec<Vec<u32>>,
}

impl BinaryDataset {
    /// Builds a dataset, checking that every row is strictly increasing and in `[0, n_cols)`.
    pub fn new(n_cols: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        if n_cols > u32::MAX as usize {
            return Err(Error::invalid("column count exceeds u32 range"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("row {i} is not strictly increasing")));
            }
            if let Some(&last) = row.last() {
                if last as usize >= n_cols {
                    return Err(Error::invalid(format!(
                        "row {i} has column {last} but the dataset has {n_cols} columns"
                    )));
                }
            }
        }
        Ok(Self { n_cols, rows })
    }

    /// Like [`BinaryDataset::new`] but sorts and deduplicates each row first.
    pub fn from_unsorted_rows(n_cols: usize, mut rows: Vec<Vec<u32>>) -> Result<Self> {
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
        }
        Self::new(n_cols, rows)
    }

    /// Builds a dataset from dense 0/1 rows.
    pub fn from_dense(dense: &[Vec<bool>]) -> Result<Self> {
        let n_cols = dense.first().map_or(0, Vec::len);
        if dense.iter().any(|r| r.len() != n_cols) {
            return Err(Error::invalid("dense rows have different lengths"));
        }
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(|(j, _)| j as u32)
                    .collect()
            })
            .collect();
        Ok(Self { n_cols, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Total number of 1s.
    pub fn ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Fraction of entries equal to 1; zero for an empty matrix.
    pub fn density(&self) -> f64 {
        let cells = self.n_rows() as f64 * self.n_cols as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.ones() as f64 / cells
        }
    }

    /// Widens the column range to at least `n_cols`. Never narrows.
    pub fn with_min_cols(mut self, n_cols: usize) -> Self {
        self.n_cols = self.n_cols.max(n_cols);
        self
    }

    /// Number of rows containing each column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_cols];
        for row in &self.rows {
            for &j in row {
                counts[j as usize] += 1;
            }
        }
        counts
    }

    /// Dataset made of the given rows (in the given order).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            n_cols: self.n_cols,
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Stacks the rows of several datasets; the column count is the maximum.
    pub fn vstack(parts: &[BinaryDataset]) -> Self {
        Self {
            n_cols: parts.iter().map(|p| p.n_cols).max().unwrap_or(0),
            rows: parts.iter().flat_map(|p| p.rows.iter().cloned()).collect(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.rows[row].binary_search(&(col as u32)).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One transaction per line, whitespace-separated item ids.
    Fimi,
    /// One row per line of `0`/`1` characters, optionally separated by commas or spaces.
    Dense01,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fimi" | "dat" => Ok(Format::Fimi),
            "dense01" | "dense" => Ok(Format::Dense01),
            other => Err(Error::invalid(format!("unknown format '{other}'"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Fimi => "fimi",
            Format::Dense01 => "dense01",
        })
    }
}

/// Parses a dataset from text.
///
/// FIMI: `K = 1 + max item id`, duplicate items in a line are dropped, an
/// empty line is an empty transaction. Dense: `K` is the row length, blank
/// lines are skipped and ragged rows are an error.
pub fn load_dataset<R: BufRead>(reader: R, format: Format) -> Result<BinaryDataset> {
    match format {
        Format::Fimi => load_fimi(reader),
        Format::Dense01 => load_dense(reader),
    }
}

/// Opens and parses a dataset file.
pub fn load_path(path: impl AsRef<std::path::Path>, format: Format) -> Result<BinaryDataset> {
    let file = std::fs::File::open(path)?;
    load_dataset(std::io::BufReader::new(file), format)
}

fn load_fimi<R: BufRead>(reader: R) -> Result<BinaryDataset> {
    let mut rows = Vec::new();
    let mut n_cols = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let id: u32 = tok.parse().map_err(|_| Error::Format {
                line: lineno + 1,
                msg: format!("'{tok}' is not a non-negative integer item id"),
            })?;
            if id == u32::MAX {
                return Err(Error::Format {
                    line: lineno + 1,
                    msg: "item id too large".into(),
                });
            }
            n_cols = n_cols.max(id as usize + 1);
            row.push(id);
        }
        row.sort_unstable();
        row.dedup();
        rows.push(row);
    }
    Ok(BinaryDataset { n_cols, rows })
}

fn load_dense<R: BufRead>(reader: R) -> Result<BinaryDataset> {
    let mut rows = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        let mut len = 0u32;
        for c in line.chars() {
            match c {
                '0' => len += 1,
                '1' => {
                    row.push(len);
                    len += 1;
                }
                ',' => {}
                c if c.is_whitespace() => {}
                c => {
                    return Err(Error::Format {
                        line: lineno + 1,
                        msg: format!("unexpected character '{c}' in dense 0/1 row"),
                    })
                }
            }
        }
        match width {
            None => width = Some(len as usize),
            Some(w) if w != len as usize => {
                return Err(Error::Format {
                    line: lineno + 1,
                    msg: format!("row has {len} entries, expected {w}"),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(BinaryDataset {
        n_cols: width.unwrap_or(0),
        rows,
    })
}

/// Writes FIMI text: item ids separated by single spaces, LF line endings.
pub fn write_fimi<W: Write>(d: &BinaryDataset, mut w: W) -> Result<()> {
    for row in &d.rows {
        let mut first = true;
        for j in row {
            if !first {
                w.write_all(b" ")?;
            }
            write!(w, "{j}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes one `0`/`1` string per row, LF line endings.
pub fn write_dense01<W: Write>(d: &BinaryDataset, mut w: W) -> Result<()> {
    let mut line = vec![b'0'; d.n_cols];
    for row in &d.rows {
        line.iter_mut().for_each(|c| *c = b'0');
        for &j in row {
            line[j as usize] = b'1';
        }
        w.write_all(&line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_dataset<W: Write>(d: &BinaryDataset, format: Format, w: W) -> Result<()> {
    match format {
        Format::Fimi => write_fimi(d, w),
        Format::Dense01 => write_dense01(d, w),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// Per-column probability of a 1.
    Margin,
    /// Per-column flip probability of the Markov generator.
    Reversal,
}

/// Per-column probabilities: margins or Markov reversal probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginProfile {
    pub values: Vec<f64>,
    pub kind: ProfileKind,
}

impl MarginProfile {
    pub fn new(values: Vec<f64>, kind: ProfileKind) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("probability {v} outside [0, 1]")));
        }
        Ok(Self { values, kind })
    }

    pub fn uniform(k: usize, value: f64, kind: ProfileKind) -> Result<Self> {
        Self::new(vec![value; k], kind)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Disagreement probabilities `2p(1-p)` of two independent draws per column.
    pub fn disagreement(&self) -> Vec<f64> {
        self.values.iter().map(|&p| 2.0 * p * (1.0 - p)).collect()
    }
}

/// Fraction of rows containing each column.
pub fn margins(d: &BinaryDataset) -> Result<MarginProfile> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = d.n_rows() as f64;
    Ok(MarginProfile {
        values: d.column_counts().into_iter().map(|c| c as f64 / n).collect(),
        kind: ProfileKind::Margin,
    })
}

/// Randomly permutes every column independently.
///
/// Column `j` draws its own stream from `(seed, j)`. A uniform permutation of a
/// column with `c` ones places them on a uniform `c`-subset of rows, so that
/// subset is drawn directly instead of shuffling all `N` entries.
pub fn permute_columns(d: &BinaryDataset, seed: u64) -> Result<BinaryDataset> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = d.n_rows();
    let counts = d.column_counts();
    let placed: Vec<Vec<usize>> = counts
        .par_iter()
        .enumerate()
        .map(|(j, &c)| {
            let mut r = rng::stream(seed, "permute-columns", j as u64);
            index::sample(&mut r, n, c).into_vec()
        })
        .collect();
    let mut rows: Vec<Vec<u32>> = d.rows.iter().map(|r| Vec::with_capacity(r.len())).collect();
    for (j, members) in placed.iter().enumerate() {
        for &i in members {
            rows[i].push(j as u32);
        }
    }
    Ok(BinaryDataset {
        n_cols: d.n_cols,
        rows,
    })
}

/// Replaces every column by `n` adjacent copies of itself.
pub fn copy_columns(d: &BinaryDataset, n: usize) -> Result<BinaryDataset> {
    if n == 0 {
        return Err(Error::invalid("copy count must be at least 1"));
    }
    let n_cols = d
        .n_cols
        .checked_mul(n)
        .filter(|&k| k <= u32::MAX as usize)
        .ok_or_else(|| Error::invalid("copied column count overflows"))?;
    let rows = d
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .flat_map(|&j| (0..n as u32).map(move |c| j * n as u32 + c))
                .collect()
        })
        .collect();
    Ok(BinaryDataset { n_cols, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetMode {
    Rows,
    Cols,
}

/// Uniform sample of `m` rows (in sampled order) or `m` columns (renumbered, order kept).
pub fn random_subset(d: &BinaryDataset, mode: SubsetMode, m: usize, seed: u64) -> Result<BinaryDataset> {
    let total = match mode {
        SubsetMode::Rows => d.n_rows(),
        SubsetMode::Cols => d.n_cols(),
    };
    if m == 0 || m > total {
        return Err(Error::invalid(format!("subset size {m} outside [1, {total}]")));
    }
    let mut r = rng::stream(seed, "random-subset", 0);
    let picked = index::sample(&mut r, total, m).into_vec();
    match mode {
        SubsetMode::Rows => Ok(d.select_rows(&picked)),
        SubsetMode::Cols => {
            let mut keep = picked;
            keep.sort_unstable();
            let mut remap = vec![u32::MAX; d.n_cols];
            for (new, &old) in keep.iter().enumerate() {
                remap[old] = new as u32;
            }
            let rows = d
                .rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&j| remap[j as usize])
                        .filter(|&j| j != u32::MAX)
                        .collect()
                })
                .collect();
            Ok(BinaryDataset { n_cols: m, rows })
        }
    }
}

/// Rows of independent Bernoulli(`p_j`) entries; row `i` uses stream `(seed, i)`.
pub fn gen_independent(k: usize, n: usize, p: &MarginProfile, seed: u64) -> Result<BinaryDataset> {
    if p.len() != k {
        return Err(Error::invalid(format!(
            "profile has {} values for {k} columns",
            p.len()
        )));
    }
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, "gen-independent", i as u64);
            p.values
                .iter()
                .enumerate()
                .filter_map(|(j, &pj)| (r.gen::<f64>() < pj).then_some(j as u32))
                .collect()
        })
        .collect();
    BinaryDataset::new(k, rows)
}

/// Draws `x_max ~ U[0,1]` once, then each value from `U[0, x_max]`.
pub fn random_profile(k: usize, kind: ProfileKind, seed: u64) -> Result<MarginProfile> {
    if k == 0 {
        return Err(Error::invalid("profile needs at least one column"));
    }
    let mut r = rng::stream(seed, "random-profile", 0);
    let x_max: f64 = r.gen();
    let values = (0..k).map(|_| x_max * r.gen::<f64>()).collect();
    Ok(MarginProfile { values, kind })
}

/// Markov chain across columns: the first column is a fair coin and column
/// `i > 0` flips the previous value with probability `t_i` (`t_0` is unused).
pub fn gen_markov(k: usize, n: usize, t: &MarginProfile, seed: u64) -> Result<BinaryDataset> {
    if t.len() != k {
        return Err(Error::invalid(format!(
            "profile has {} values for {k} columns",
            t.len()
        )));
    }
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, "gen-markov", i as u64);
            let mut row = Vec::new();
            if k == 0 {
                return row;
            }
            let mut bit = r.gen_bool(0.5);
            if bit {
                row.push(0);
            }
            for (j, &tj) in t.values.iter().enumerate().skip(1) {
                if r.gen::<f64>() < tj {
                    bit = !bit;
                }
                if bit {
                    row.push(j as u32);
                }
            }
            row
        })
        .collect();
    BinaryDataset::new(k, rows)
}

/// Correlation proxy `sum 2 t_i (1 - t_i)` of a reversal profile.
pub fn t_measure(t: &MarginProfile) -> Result<f64> {
    if t.kind != ProfileKind::Reversal {
        return Err(Error::invalid("t_measure expects a reversal profile"));
    }
    Ok(t.values.iter().map(|&x| 2.0 * x * (1.0 - x)).sum())
}
