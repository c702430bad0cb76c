//! Dataset reports and the synthetic/real-data experiment drivers.
//!
//! Every experiment is a pure function of its [`ExperimentSpec`]: replicate
//! `i` draws its data and Monte Carlo streams from seeds derived from
//! `(spec.seed, tag, i)`, and rows are emitted in replicate order however the
//! replicates are scheduled.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::baselines::{avg_abs_correlation, kmeans, pca_summary};
use crate::dataset::{
    gen_independent, gen_markov, load_path, margins, random_profile, random_subset, t_measure, BinaryDataset,
    Format, MarginProfile, ProfileKind, SubsetMode,
};
use crate::dimension::{
    cd_a, dataset_cdf, independent_cdf, match_columns, match_margin, normalized_cd, prop3_estimate, DimConfig,
};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::stats::{least_squares, mean, median, pearson, slope_through_origin, spearman};

/// One row of the dataset statistics / dimension / normalized-dimension tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub name: String,
    pub k: usize,
    pub n: usize,
    pub ones: usize,
    /// Percentage of 1s.
    pub density_pct: f64,
    pub cd_data: Option<f64>,
    pub cd_ind: Option<f64>,
    pub mu_over_sigma: Option<f64>,
    pub c_hat: Option<f64>,
    pub ncd: Option<usize>,
    pub ncd_over_k: Option<f64>,
    pub prop3_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    /// `field: message` for every field that could not be computed.
    pub errors: Vec<String>,
}

pub const REPORT_COLUMNS: [&str; 13] = [
    "name",
    "K",
    "N",
    "ones",
    "density_pct",
    "cd",
    "cd_ind",
    "mu_over_sigma",
    "c_hat",
    "ncd",
    "ncd_over_K",
    "prop3",
    "errors",
];

/// Computes every report field it can; only an empty dataset is a hard error.
pub fn dataset_report(name: &str, d: &BinaryDataset, cfg: &DimConfig, timing: bool) -> Result<DatasetReport> {
    cfg.validate()?;
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let mut errors = Vec::new();
    let mut note = |field: &str, e: Error| errors.push(format!("{field}: {e}"));

    let cd_data = match dataset_cdf(d, cfg).and_then(|c| cd_a(&c, cfg.alpha1, cfg.alpha2, cfg.grid_n)) {
        Ok(e) => Some(e.slope),
        Err(e) => {
            note("cd", e);
            None
        }
    };
    let mut cd_ind = None;
    let mut mu_over_sigma = None;
    match margins(d).and_then(|p| independent_cdf(&p, cfg)) {
        Ok(ind) => {
            let (mu, var) = ind.mean_var();
            if var > 0.0 {
                mu_over_sigma = Some(mu / var.sqrt());
            }
            match cd_a(&ind, cfg.alpha1, cfg.alpha2, cfg.grid_n) {
                Ok(e) => cd_ind = Some(e.slope),
                Err(e) => note("cd_ind", e),
            }
        }
        Err(e) => note("cd_ind", e),
    }
    let c_hat = match (cd_ind, mu_over_sigma) {
        (Some(c), Some(r)) => Some(c / r),
        _ => None,
    };
    let k = d.n_cols();
    let mut ncd = None;
    let mut prop3 = None;
    if let (Some(cd), Some(ci)) = (cd_data, cd_ind) {
        match match_margin(k, ci, cfg).and_then(|s| match_columns(s, cd, cfg)) {
            Ok((h, _)) => ncd = Some(h),
            Err(e) => note("ncd", e),
        }
        match prop3_estimate(cd, ci, k) {
            Ok(v) => prop3 = Some(v),
            Err(e) => note("prop3", e),
        }
    }
    Ok(DatasetReport {
        name: name.to_string(),
        k,
        n: d.n_rows(),
        ones: d.ones(),
        density_pct: 100.0 * d.density(),
        cd_data,
        cd_ind,
        mu_over_sigma,
        c_hat,
        ncd,
        ncd_over_k: ncd.map(|h| h as f64 / k as f64),
        prop3_estimate: prop3,
        wall_time_s: timing.then(|| start.elapsed().as_secs_f64()),
        errors,
    })
}

impl DatasetReport {
    pub fn cells(&self) -> Vec<Cell> {
        let mut v = vec![
            Cell::Text(self.name.clone()),
            Cell::Int(self.k as i64),
            Cell::Int(self.n as i64),
            Cell::Int(self.ones as i64),
            Cell::Float(self.density_pct),
            self.cd_data.into(),
            self.cd_ind.into(),
            self.mu_over_sigma.into(),
            self.c_hat.into(),
            self.ncd.map(|h| h as i64).into(),
            self.ncd_over_k.into(),
            self.prop3_estimate.into(),
            Cell::Text(if self.errors.is_empty() {
                "-".into()
            } else {
                self.errors.join("; ")
            }),
        ];
        if let Some(t) = self.wall_time_s {
            v.push(Cell::Float(t));
        }
        v
    }
}

/// Writes reports as TSV, one header line then one line per report.
pub fn write_reports_tsv<W: Write>(reports: &[DatasetReport], mut w: W) -> Result<()> {
    let mut header: Vec<&str> = REPORT_COLUMNS.to_vec();
    if reports.iter().any(|r| r.wall_time_s.is_some()) {
        header.push("wall_time_s");
    }
    writeln!(w, "{}", header.join("\t"))?;
    for r in reports {
        write_cells(&r.cells(), &mut w)?;
    }
    Ok(())
}

/// A table entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Missing,
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Float)
    }
}

impl From<Option<i64>> for Cell {
    fn from(v: Option<i64>) -> Self {
        v.map_or(Cell::Missing, Cell::Int)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) if v.is_finite() => write!(f, "{v:.6}"),
            Cell::Float(_) | Cell::Missing => f.write_str("NA"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Float(v) => Some(v),
            _ => None,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) | Cell::Missing => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

fn write_cells<W: Write>(cells: &[Cell], w: &mut W) -> Result<()> {
    let line: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
    writeln!(w, "{}", line.join("\t"))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    /// Normalized dimension of independent data, per column count.
    IndepBox,
    /// Dimension against `mu/sigma` for independent data.
    SlopeMusigma,
    /// Dimension with a 50-point grid against the two-point secant.
    GridN,
    /// Dimension against the mean distance `mu`.
    CdVsMu,
    /// Dimension of Markov-chain data against the correlation proxy `t`.
    Markov,
    /// Normalized dimension against `mu`.
    NcdVsSparsity,
    /// Normalized dimension against the closed-form estimate.
    NcdVsEstimate,
    /// Normalized dimension, PCA and average correlation on random column subsets.
    PcaSubsets,
    /// Dimensions of k-means clusters against the whole dataset.
    ClusterDims,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 9] = [
        ExperimentName::IndepBox,
        ExperimentName::SlopeMusigma,
        ExperimentName::GridN,
        ExperimentName::CdVsMu,
        ExperimentName::Markov,
        ExperimentName::NcdVsSparsity,
        ExperimentName::NcdVsEstimate,
        ExperimentName::PcaSubsets,
        ExperimentName::ClusterDims,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::IndepBox => "indep-box",
            ExperimentName::SlopeMusigma => "slope-musigma",
            ExperimentName::GridN => "grid-n",
            ExperimentName::CdVsMu => "cd-vs-mu",
            ExperimentName::Markov => "markov",
            ExperimentName::NcdVsSparsity => "ncd-vs-sparsity",
            ExperimentName::NcdVsEstimate => "ncd-vs-estimate",
            ExperimentName::PcaSubsets => "pca-subsets",
            ExperimentName::ClusterDims => "cluster-dims",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentName::ALL.iter().map(|n| n.as_str()).collect();
                Error::invalid(format!(
                    "unknown experiment {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub replicates: usize,
    /// Column counts; single-K experiments use the first entry.
    pub k_values: Vec<usize>,
    pub n_rows: usize,
    pub seed: u64,
    pub cfg: DimConfig,
    /// Real dataset for `pca-subsets` and `cluster-dims`.
    pub data: Option<PathBuf>,
    pub format: Format,
    /// Rows drawn once before the column subsets of `pca-subsets`.
    pub subset_rows: usize,
    /// Columns per subset in `pca-subsets`; `None` means half of K.
    pub subset_cols: Option<usize>,
    pub clusters: usize,
}

impl ExperimentSpec {
    /// Desk-scale defaults for `name`.
    pub fn new(name: ExperimentName) -> Self {
        let (replicates, k_values) = match name {
            ExperimentName::IndepBox => (20, vec![50, 100, 150, 200]),
            ExperimentName::Markov => (50, vec![100]),
            ExperimentName::PcaSubsets => (50, vec![200]),
            ExperimentName::ClusterDims => (30, vec![100]),
            _ => (50, vec![50, 100, 150, 200]),
        };
        ExperimentSpec {
            name,
            replicates,
            k_values,
            n_rows: 2000,
            seed: 0,
            cfg: DimConfig::default(),
            data: None,
            format: Format::Fimi,
            subset_rows: 1000,
            subset_cols: None,
            clusters: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.replicates == 0 {
            return Err(Error::invalid("need at least one replicate"));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::invalid("column counts must be positive"));
        }
        if self.n_rows < 2 {
            return Err(Error::invalid("need at least two rows"));
        }
        if self.clusters == 0 {
            return Err(Error::invalid("need at least one cluster"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub name: ExperimentName,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
    /// Set when a required input file is absent.
    pub skipped: Option<String>,
}

impl ExperimentOutput {
    fn new(name: ExperimentName, columns: &[&str]) -> Self {
        ExperimentOutput {
            name,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            skipped: None,
        }
    }

    fn put(&mut self, key: impl Into<String>, value: impl Into<SummaryValue>) {
        self.summary.push((key.into(), value.into().0));
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.as_f64())
    }

    /// Values of column `name`, one per row.
    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j].clone()).collect())
    }

    /// Header, rows, then `# key<TAB>value` summary lines.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# experiment={}", self.name)?;
        if let Some(why) = &self.skipped {
            writeln!(w, "# SKIPPED\t{why}")?;
            return Ok(());
        }
        writeln!(w, "{}", self.columns.join("\t"))?;
        for r in &self.rows {
            write_cells(r, &mut w)?;
        }
        for (k, v) in &self.summary {
            writeln!(w, "# {k}\t{v}")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert(c.clone(), v.to_json());
                }
                Value::Object(m)
            })
            .collect();
        let mut summary = Map::new();
        for (k, v) in &self.summary {
            summary.insert(k.clone(), v.to_json());
        }
        json!({
            "experiment": self.name.as_str(),
            "skipped": self.skipped,
            "columns": self.columns,
            "rows": rows,
            "summary": summary,
        })
    }
}

struct SummaryValue(Cell);

impl From<f64> for SummaryValue {
    fn from(v: f64) -> Self {
        SummaryValue(Cell::Float(v))
    }
}

impl From<Option<f64>> for SummaryValue {
    fn from(v: Option<f64>) -> Self {
        SummaryValue(v.into())
    }
}

impl From<usize> for SummaryValue {
    fn from(v: usize) -> Self {
        SummaryValue(Cell::Int(v as i64))
    }
}

impl From<&str> for SummaryValue {
    fn from(v: &str) -> Self {
        SummaryValue(Cell::Text(v.to_string()))
    }
}

/// Runs one experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    if let Some(path) = &spec.data {
        if !path.exists() {
            let columns: &[&str] = &[];
            let mut out = ExperimentOutput::new(spec.name, columns);
            out.skipped = Some(format!("{} not found", path.display()));
            return Ok(out);
        }
    }
    match spec.name {
        ExperimentName::IndepBox => indep_box(spec),
        ExperimentName::SlopeMusigma => slope_musigma(spec),
        ExperimentName::GridN => grid_n(spec),
        ExperimentName::CdVsMu => cd_vs_mu(spec),
        ExperimentName::Markov => markov(spec),
        ExperimentName::NcdVsSparsity => ncd_vs_sparsity(spec),
        ExperimentName::NcdVsEstimate => ncd_vs_estimate(spec),
        ExperimentName::PcaSubsets => pca_subsets(spec),
        ExperimentName::ClusterDims => cluster_dims(spec),
    }
}

/// Seed for replicate `r` at column count `k`; shared by every experiment on independent data.
fn item_index(k: usize, r: usize) -> u64 {
    ((k as u64) << 32) | r as u64
}

fn replicate_cfg(spec: &ExperimentSpec, tag: &str, index: u64) -> DimConfig {
    DimConfig {
        seed: derive_seed(spec.seed, tag, index),
        ..spec.cfg.clone()
    }
}

/// Independent dataset `r` with `k` random-margin columns.
pub fn independent_item(spec: &ExperimentSpec, k: usize, r: usize) -> Result<(MarginProfile, BinaryDataset)> {
    let idx = item_index(k, r);
    let p = random_profile(
        k,
        ProfileKind::Margin,
        derive_seed(spec.seed, "indep/profile", idx),
    )?;
    let d = gen_independent(k, spec.n_rows, &p, derive_seed(spec.seed, "indep/data", idx))?;
    Ok((p, d))
}

/// Markov dataset `r`: its reversal profile (with the unused `t_0` zeroed) and the data.
pub fn markov_item(spec: &ExperimentSpec, r: usize) -> Result<(MarginProfile, BinaryDataset)> {
    let k = spec.k_values[0];
    let idx = item_index(k, r);
    let mut t = random_profile(
        k,
        ProfileKind::Reversal,
        derive_seed(spec.seed, "markov/profile", idx),
    )?;
    t.values[0] = 0.0;
    let d = gen_markov(k, spec.n_rows, &t, derive_seed(spec.seed, "markov/data", idx))?;
    Ok((t, d))
}

/// `(k, r)` pairs cycling through the column counts: item `i` uses `k_values[i % len]`.
fn cycled_items(spec: &ExperimentSpec) -> Vec<(usize, usize)> {
    let len = spec.k_values.len();
    (0..spec.replicates)
        .map(|i| (spec.k_values[i % len], i / len))
        .collect()
}

fn err_cell(e: &Error) -> Cell {
    Cell::Text(e.to_string().replace(['\t', '\n'], " "))
}

const OK: &str = "ok";

/// Dimension summary of one independent item.
struct IndepMeasure {
    mu: f64,
    sigma: f64,
    cd50: Result<f64>,
    cd1: Result<f64>,
}

fn measure_independent(spec: &ExperimentSpec, k: usize, r: usize) -> Result<IndepMeasure> {
    let (_, d) = independent_item(spec, k, r)?;
    let cfg = replicate_cfg(spec, "indep/cfg", item_index(k, r));
    let cdf = dataset_cdf(&d, &cfg)?;
    let (mu, var) = cdf.mean_var();
    Ok(IndepMeasure {
        mu,
        sigma: var.sqrt(),
        cd50: cd_a(&cdf, cfg.alpha1, cfg.alpha2, cfg.grid_n).map(|e| e.slope),
        cd1: cd_a(&cdf, cfg.alpha1, cfg.alpha2, 1).map(|e| e.slope),
    })
}

fn indep_box(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new(
        spec.name,
        &[
            "K",
            "replicate",
            "mu",
            "cd",
            "cd_ind",
            "ncd",
            "ncd_over_K",
            "prop3",
            "status",
        ],
    );
    let items: Vec<(usize, usize)> = spec
        .k_values
        .iter()
        .flat_map(|&k| (0..spec.replicates).map(move |r| (k, r)))
        .collect();
    let results: Vec<Result<Vec<Cell>>> = items
        .par_iter()
        .map(|&(k, r)| {
            let (_, d) = independent_item(spec, k, r)?;
            let cfg = replicate_cfg(spec, "indep/cfg", item_index(k, r));
            Ok(ncd_row(k, r, &d, &cfg))
        })
        .collect();
    for row in results {
        out.rows.push(row?);
    }
    let mut worst: f64 = 0.0;
    for &k in &spec.k_values {
        let hs: Vec<f64> = out
            .rows
            .iter()
            .filter(|row| row[0] == Cell::Int(k as i64))
            .filter_map(|row| row[5].as_f64())
            .collect();
        let failed = spec.replicates - hs.len();
        out.put(format!("median_ncd_K{k}"), median(&hs));
        out.put(format!("failed_K{k}"), failed);
        for h in &hs {
            worst = worst.max((h - k as f64).abs() / k as f64);
        }
        if failed > 0 {
            worst = f64::INFINITY;
        }
    }
    out.put("max_rel_dev", worst);
    Ok(out)
}

/// `(K, replicate, mu, cd, cd_ind, ncd, ncd/K, prop3, status)` for one dataset.
fn ncd_row(k: usize, r: usize, d: &BinaryDataset, cfg: &DimConfig) -> Vec<Cell> {
    match normalized_cd(d, cfg) {
        Ok(res) => vec![
            Cell::Int(k as i64),
            Cell::Int(r as i64),
            Cell::Float(res.ind_mean),
            Cell::Float(res.cd_data),
            Cell::Float(res.cd_ind),
            Cell::Int(res.h as i64),
            Cell::Float(res.h as f64 / k as f64),
            Cell::Float(res.prop3_estimate),
            Cell::Text(OK.into()),
        ],
        Err(e) => {
            let mu = margins(d).map(|p| p.disagreement().iter().sum::<f64>()).ok();
            let mut row = vec![Cell::Int(k as i64), Cell::Int(r as i64), mu.into()];
            row.extend(std::iter::repeat_n(Cell::Missing, 5));
            row.push(err_cell(&e));
            row
        }
    }
}

fn indep_measures(spec: &ExperimentSpec) -> Result<Vec<((usize, usize), IndepMeasure)>> {
    cycled_items(spec)
        .par_iter()
        .map(|&(k, r)| Ok(((k, r), measure_independent(spec, k, r)?)))
        .collect()
}

fn slope_musigma(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new(spec.name, &["K", "replicate", "mu_over_sigma", "cd", "status"]);
    let mut points = Vec::new();
    for ((k, r), m) in indep_measures(spec)? {
        let ratio = (m.sigma > 0.0).then(|| m.mu / m.sigma);
        let (cd, status) = split(&m.cd50);
        if let (Some(x), Some(y)) = (ratio, cd.as_f64()) {
            points.push((x, y));
        }
        out.rows.push(vec![
            Cell::Int(k as i64),
            Cell::Int(r as i64),
            ratio.into(),
            cd,
            status,
        ]);
    }
    let fit = least_squares(&points);
    out.put("points", points.len());
    out.put("slope", fit.map(|f| f.0));
    out.put("intercept", fit.map(|f| f.1));
    out.put("slope_through_origin", slope_through_origin(&points));
    Ok(out)
}

fn split(v: &Result<f64>) -> (Cell, Cell) {
    match v {
        Ok(x) => (Cell::Float(*x), Cell::Text(OK.into())),
        Err(e) => (Cell::Missing, err_cell(e)),
    }
}

fn grid_n(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new(
        spec.name,
        &["K", "replicate", "cd_N1", "cd_N50", "rel_diff", "status"],
    );
    let mut worst: f64 = 0.0;
    let mut failed = 0usize;
    for ((k, r), m) in indep_measures(spec)? {
        match (&m.cd1, &m.cd50) {
            (Ok(a), Ok(b)) => {
                let rel = (b - a).abs() / a.abs();
                worst = worst.max(rel);
                out.rows.push(vec![
                    Cell::Int(k as i64),
                    Cell::Int(r as i64),
                    Cell::Float(*a),
                    Cell::Float(*b),
                    Cell::Float(rel),
                    Cell::Text(OK.into()),
                ]);
            }
            (a, b) => {
                failed += 1;
                let e = a.as_ref().err().or(b.as_ref().err()).expect("one side failed");
                out.rows.push(vec![
                    Cell::Int(k as i64),
                    Cell::Int(r as i64),
                    a.as_ref().ok().copied().into(),
                    b.as_ref().ok().copied().into(),
                    Cell::Missing,
                    err_cell(e),
                ]);
            }
        }
    }
    out.put("max_rel_diff", worst);
    out.put("failed", failed);
    Ok(out)
}

fn cd_vs_mu(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new(spec.name, &["K", "replicate", "mu", "cd", "status"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for ((k, r), m) in indep_measures(spec)? {
        let (cd, status) = split(&m.cd50);
        if let Some(y) = cd.as_f64() {
            xs.push(m.mu);
            ys.push(y);
        }
        out.rows.push(vec![
            Cell::Int(k as i64),
            Cell::Int(r as i64),
            Cell::Float(m.mu),
            cd,
            status,
        ]);
    }
    out.put("pearson", pearson(&xs, &ys));
    out.put(
        "slope",
        least_squares(&xs.iter().copied().zip(ys.iter().copied()).collect::<Vec<_>>()).map(|f| f.0),
    );
    Ok(out)
}

struct MarkovMeasure {
    t: f64,
    t_max: f64,
    cd: Result<f64>,
    cd_ind: Result<f64>,
}

fn measure_markov(spec: &ExperimentSpec, r: usize) -> Result<MarkovMeasure> {
    let (t, d) = markov_item(spec, r)?;
    let cfg = replicate_cfg(spec, "markov/cfg", item_index(spec.k_values[0], r));
    let cd = dataset_cdf(&d, &cfg)
        .and_then(|c| cd_a(&c, cfg.alpha1, cfg.alpha2, cfg.grid_n))
        .map(|e| e.slope);
    let cd_ind = margins(&d)
        .and_then(|p| independent_cdf(&p, &cfg))
        .and_then(|c| cd_a(&c, cfg.alpha1, cfg.alpha2, cfg.grid_n))
        .map(|e| e.slope);
    Ok(MarkovMeasure {
        t: t_measure(&t)?,
        t_max: t.values[1..].iter().copied().fold(0.0, f64::max),
        cd,
        cd_ind,
    })
}

fn markov(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new(spec.name, &["replicate", "t", "t_max", "cd", "cd_ind", "status"]);
    let measures: Vec<Result<MarkovMeasure>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| measure_markov(spec, r))
        .collect();
    let (mut ts, mut cds) = (Vec::new(), Vec::new());
    let (mut below, mut eligible) = (0usize, 0usize);
    for (r, m) in measures.into_iter().enumerate() {
        let m = m?;
        let status = match (&m.cd, &m.cd_ind) {
            (Err(e), _) | (_, Err(e)) => err_cell(e),
            _ => Cell::Text(OK.into()),
        };
        if let Ok(cd) = m.cd {
            ts.push(m.t);
            cds.push(cd);
        }
        if m.t_max < 0.5 {
            eligible += 1;
            if let (Ok(a), Ok(b)) = (&m.cd, &m.cd_ind) {
                if a <= b {
                    below += 1;
                }
            }
        }
        out.rows.push(vec![
            Cell::Int(r as i64),
            Cell::Float(m.t),
            Cell::Float(m.t_max),
            m.cd.as_ref().ok().copied().into(),
            m.cd_ind.as_ref().ok().copied().into(),
            status,
        ]);
    }
    out.put("spearman_t_cd", spearman(&ts, &cds));
    out.put("eligible", eligible);
    out.put(
        "frac_cd_le_cd_ind",
        (eligible > 0).then(|| below as f64 / eligible as f64),
    );
    Ok(out)
}

fn ncd_vs_sparsity(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new(
        spec.name,
        &[
            "K",
            "replicate",
            "mu",
            "cd",
            "cd_ind",
            "ncd",
            "ncd_over_K",
            "prop3",
            "status",
        ],
    );
    let rows: Vec<Result<Vec<Cell>>> = cycled_items(spec)
        .par_iter()
        .map(|&(k, r)| {
            let (_, d) = independent_item(spec, k, r)?;
            Ok(ncd_row(
                k,
                r,
                &d,
                &replicate_cfg(spec, "indep/cfg", item_index(k, r)),
            ))
        })
        .collect();
    for row in rows {
        out.rows.push(row?);
    }
    let (mut mus, mut fr) = (Vec::new(), Vec::new());
    for row in &out.rows {
        if let (Some(m), Some(f)) = (row[2].as_f64(), row[6].as_f64()) {
            mus.push(m);
            fr.push(f);
        }
    }
    out.put("pearson_mu_ncd_over_K", pearson(&mus, &fr));
    out.put("mean_ncd_over_K", mean(&fr));
    Ok(out)
}

/// Column count of the Markov datasets mixed into `ncd-vs-estimate`.
const MARKOV_K: usize = 100;

fn ncd_vs_estimate(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new(
        spec.name,
        &["source", "K", "replicate", "prop3", "ncd", "gap_over_K", "status"],
    );
    let indep = cycled_items(spec);
    let markov_spec = ExperimentSpec {
        k_values: vec![MARKOV_K],
        ..spec.clone()
    };
    let jobs: Vec<(&str, usize, usize)> = indep
        .iter()
        .map(|&(k, r)| ("independent", k, r))
        .chain((0..spec.replicates).map(|r| ("markov", markov_spec.k_values[0], r)))
        .collect();
    let rows: Vec<Result<Vec<Cell>>> = jobs
        .par_iter()
        .map(|&(source, k, r)| {
            let (d, cfg) = if source == "independent" {
                (
                    independent_item(spec, k, r)?.1,
                    replicate_cfg(spec, "indep/cfg", item_index(k, r)),
                )
            } else {
                (
                    markov_item(&markov_spec, r)?.1,
                    replicate_cfg(spec, "markov/cfg", item_index(k, r)),
                )
            };
            let head = [
                Cell::Text(source.into()),
                Cell::Int(k as i64),
                Cell::Int(r as i64),
            ];
            let tail = match normalized_cd(&d, &cfg) {
                Ok(res) => vec![
                    Cell::Float(res.prop3_estimate),
                    Cell::Int(res.h as i64),
                    Cell::Float((res.h as f64 - res.prop3_estimate).abs() / k as f64),
                    Cell::Text(OK.into()),
                ],
                Err(e) => vec![Cell::Missing, Cell::Missing, Cell::Missing, err_cell(&e)],
            };
            Ok(head.into_iter().chain(tail).collect())
        })
        .collect();
    for row in rows {
        out.rows.push(row?);
    }
    for source in ["independent", "markov"] {
        let sel: Vec<&Vec<Cell>> = out
            .rows
            .iter()
            .filter(|r| r[0] == Cell::Text(source.into()))
            .collect();
        let close = sel
            .iter()
            .filter(|r| r[5].as_f64().is_some_and(|g| g <= 0.15))
            .count();
        let (xs, ys): (Vec<f64>, Vec<f64>) = sel
            .iter()
            .filter_map(|r| Some((r[3].as_f64()?, r[4].as_f64()?)))
            .unzip();
        out.put(
            format!("{source}_frac_within_0.15K"),
            close as f64 / sel.len() as f64,
        );
        out.put(format!("{source}_pearson"), pearson(&xs, &ys));
    }
    Ok(out)
}

fn load_spec_data(spec: &ExperimentSpec) -> Result<Option<BinaryDataset>> {
    spec.data.as_ref().map(|p| load_path(p, spec.format)).transpose()
}

fn pca_subsets(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new(
        spec.name,
        &[
            "subset",
            "M",
            "ncd",
            "ncd_over_M",
            "pca90",
            "pca90_over_M",
            "avg_corr",
            "status",
        ],
    );
    let source = match load_spec_data(spec)? {
        Some(d) => d,
        None => {
            let k = spec.k_values[0];
            let t = random_profile(k, ProfileKind::Reversal, derive_seed(spec.seed, "pca/profile", 0))?;
            gen_markov(k, spec.n_rows, &t, derive_seed(spec.seed, "pca/data", 0))?
        }
    };
    let base = if source.n_rows() > spec.subset_rows {
        random_subset(
            &source,
            SubsetMode::Rows,
            spec.subset_rows,
            derive_seed(spec.seed, "pca/rows", 0),
        )?
    } else {
        source
    };
    let m = spec.subset_cols.unwrap_or((base.n_cols() / 2).max(2));
    if m > base.n_cols() || m < 2 {
        return Err(Error::invalid(format!(
            "subset of {m} columns from {} columns",
            base.n_cols()
        )));
    }
    let rows: Vec<Vec<Cell>> = (0..spec.replicates)
        .into_par_iter()
        .map(|i| {
            let sub = match random_subset(
                &base,
                SubsetMode::Cols,
                m,
                derive_seed(spec.seed, "pca/cols", i as u64),
            ) {
                Ok(s) => s,
                Err(e) => {
                    return vec![
                        Cell::Int(i as i64),
                        Cell::Int(m as i64),
                        Cell::Missing,
                        Cell::Missing,
                        Cell::Missing,
                        Cell::Missing,
                        Cell::Missing,
                        err_cell(&e),
                    ]
                }
            };
            let cfg = replicate_cfg(spec, "pca/cfg", i as u64);
            let mut errs = Vec::new();
            let ncd = normalized_cd(&sub, &cfg)
                .map(|r| r.h)
                .map_err(|e| errs.push(e))
                .ok();
            let pca90 = pca_summary(&sub)
                .and_then(|s| s.components_for(0.9))
                .map_err(|e| errs.push(e))
                .ok();
            let corr = avg_abs_correlation(&sub).map_err(|e| errs.push(e)).ok();
            let status = errs.first().map_or(Cell::Text(OK.into()), err_cell);
            vec![
                Cell::Int(i as i64),
                Cell::Int(m as i64),
                ncd.map(|h| h as i64).into(),
                ncd.map(|h| h as f64 / m as f64).into(),
                pca90.map(|c| c as i64).into(),
                pca90.map(|c| c as f64 / m as f64).into(),
                corr.into(),
                status,
            ]
        })
        .collect();
    out.rows = rows;
    let triples: Vec<(f64, f64, f64)> = out
        .rows
        .iter()
        .filter_map(|r| Some((r[3].as_f64()?, r[5].as_f64()?, r[6].as_f64()?)))
        .collect();
    let ncd: Vec<f64> = triples.iter().map(|t| t.0).collect();
    let pca: Vec<f64> = triples.iter().map(|t| t.1).collect();
    let corr: Vec<f64> = triples.iter().map(|t| t.2).collect();
    out.put("subsets", triples.len());
    out.put("pearson_ncd_pca90", pearson(&ncd, &pca));
    out.put("pearson_ncd_avg_corr", pearson(&ncd, &corr));
    Ok(out)
}

/// `(cd, ncd)` of one dataset, each possibly missing.
fn dims(d: &BinaryDataset, cfg: &DimConfig) -> (Option<f64>, Option<usize>, Option<Error>) {
    match normalized_cd(d, cfg) {
        Ok(r) => (Some(r.cd_data), Some(r.h), None),
        Err(e) => {
            let cd = dataset_cdf(d, cfg)
                .and_then(|c| cd_a(&c, cfg.alpha1, cfg.alpha2, cfg.grid_n))
                .ok()
                .map(|e| e.slope);
            (cd, None, Some(e))
        }
    }
}

/// Three-component mixture for replicate `r`: each component has its own random margins.
pub fn mixture_item(spec: &ExperimentSpec, r: usize) -> Result<Vec<BinaryDataset>> {
    let k = spec.k_values[0];
    let per = (spec.n_rows / spec.clusters).max(2);
    (0..spec.clusters)
        .map(|c| {
            let idx = item_index(c, r);
            let p = random_profile(
                k,
                ProfileKind::Margin,
                derive_seed(spec.seed, "mixture/profile", idx),
            )?;
            gen_independent(k, per, &p, derive_seed(spec.seed, "mixture/data", idx))
        })
        .collect()
}

fn cluster_rows(
    replicate: usize,
    d: &BinaryDataset,
    spec: &ExperimentSpec,
    index: u64,
    extra: Option<f64>,
) -> Result<(Vec<Vec<Cell>>, Option<f64>)> {
    let k = spec.clusters.min(d.n_rows());
    let clustering = kmeans(d, k, derive_seed(spec.seed, "cluster/kmeans", index))?;
    let mut rows = Vec::new();
    let (mut cds, mut ncds) = (Vec::new(), Vec::new());
    for (c, members) in clustering.members().iter().enumerate() {
        let sub = d.select_rows(members);
        let cfg = replicate_cfg(spec, "cluster/cfg", index * 64 + c as u64);
        let (cd, ncd, err) = dims(&sub, &cfg);
        cds.extend(cd);
        ncds.extend(ncd.map(|h| h as f64));
        rows.push(vec![
            Cell::Int(replicate as i64),
            Cell::Text(format!("cluster-{}", c + 1)),
            Cell::Int(members.len() as i64),
            cd.into(),
            ncd.map(|h| h as i64).into(),
            err.map_or(Cell::Text(OK.into()), |e| err_cell(&e)),
        ]);
    }
    rows.push(vec![
        Cell::Int(replicate as i64),
        Cell::Text("average".into()),
        Cell::Missing,
        mean(&cds).into(),
        mean(&ncds).into(),
        Cell::Text(OK.into()),
    ]);
    if let Some(m) = extra {
        rows.push(vec![
            Cell::Int(replicate as i64),
            Cell::Text("components-mean".into()),
            Cell::Missing,
            Cell::Float(m),
            Cell::Missing,
            Cell::Text(OK.into()),
        ]);
    }
    let cfg = replicate_cfg(spec, "cluster/cfg", index * 64 + 63);
    let (cd, ncd, err) = dims(d, &cfg);
    rows.push(vec![
        Cell::Int(replicate as i64),
        Cell::Text("whole".into()),
        Cell::Int(d.n_rows() as i64),
        cd.into(),
        ncd.map(|h| h as i64).into(),
        err.map_or(Cell::Text(OK.into()), |e| err_cell(&e)),
    ]);
    Ok((rows, cd))
}

fn cluster_dims(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::new(spec.name, &["replicate", "unit", "rows", "cd", "ncd", "status"]);
    if let Some(d) = load_spec_data(spec)? {
        let (rows, _) = cluster_rows(0, &d, spec, 0, None)?;
        out.rows = rows;
        return Ok(out);
    }
    // rows, mean component cd, whole-mixture cd
    type Replicate = (Vec<Vec<Cell>>, Option<f64>, Option<f64>);
    let results: Vec<Result<Replicate>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let parts = mixture_item(spec, r)?;
            let comp: Vec<f64> = parts
                .iter()
                .enumerate()
                .filter_map(|(c, p)| {
                    let cfg = replicate_cfg(spec, "mixture/cfg", item_index(c, r));
                    dataset_cdf(p, &cfg)
                        .and_then(|f| cd_a(&f, cfg.alpha1, cfg.alpha2, cfg.grid_n))
                        .ok()
                        .map(|e| e.slope)
                })
                .collect();
            let comp_mean = (comp.len() == parts.len()).then(|| mean(&comp)).flatten();
            let mixture = BinaryDataset::vstack(&parts);
            let (rows, whole) = cluster_rows(r, &mixture, spec, r as u64 + 1, comp_mean)?;
            Ok((rows, comp_mean, whole))
        })
        .collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut above = 0usize;
    for res in results {
        let (rows, comp, whole) = res?;
        if let (Some(x), Some(y)) = (comp, whole) {
            xs.push(x);
            ys.push(y);
        }
        let avg = rows
            .iter()
            .find(|r| r[1] == Cell::Text("average".into()))
            .and_then(|r| r[3].as_f64());
        if let (Some(a), Some(w)) = (avg, whole) {
            if a > w {
                above += 1;
            }
        }
        out.rows.extend(rows);
    }
    out.put("pearson_whole_vs_components", pearson(&xs, &ys));
    out.put("clusters_above_whole", above);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{copy_columns, load_dataset};

    fn quick(name: ExperimentName) -> ExperimentSpec {
        ExperimentSpec {
            replicates: 4,
            k_values: vec![30, 40],
            n_rows: 300,
            cfg: DimConfig {
                ind_samples: 2000,
                ..DimConfig::default()
            },
            subset_rows: 200,
            ..ExperimentSpec::new(name)
        }
    }

    #[test]
    fn names_roundtrip() {
        for n in ExperimentName::ALL {
            assert_eq!(n.as_str().parse::<ExperimentName>().unwrap(), n);
            assert_eq!(serde_json::to_value(n).unwrap(), json!(n.as_str()));
        }
        assert!(matches!("fig-9".parse::<ExperimentName>(), Err(e) if e.is_usage()));
    }

    #[test]
    fn report_on_independent_data() {
        let p = MarginProfile::uniform(100, 0.3, ProfileKind::Margin).unwrap();
        let d = gen_independent(100, 2000, &p, 11).unwrap();
        let r = dataset_report("indep", &d, &DimConfig::default(), false).unwrap();
        assert!(r.errors.is_empty(), "{:?}", r.errors);
        let c = r.c_hat.unwrap();
        assert!((0.78..=0.88).contains(&c), "c_hat {c}");
        let h = r.ncd.unwrap() as f64;
        assert!((h - 100.0).abs() <= 15.0, "ncd {h}");
        assert_eq!(r.k, 100);
        assert_eq!(r.n, 2000);
        assert!(r.wall_time_s.is_none());
    }

    #[test]
    fn report_errors() {
        let empty = BinaryDataset::new(4, vec![]).unwrap();
        assert!(matches!(
            dataset_report("e", &empty, &DimConfig::default(), false),
            Err(Error::EmptyDataset)
        ));
        // identical rows: nothing but distance 0, every dimension fails but the counts remain
        let d = load_dataset("0 1\n0 1\n0 1\n".as_bytes(), Format::Fimi).unwrap();
        let r = dataset_report("flat", &d, &DimConfig::default(), true).unwrap();
        assert_eq!((r.k, r.n, r.ones), (2, 3, 6));
        assert!(r.cd_data.is_none() && r.ncd.is_none());
        assert!(!r.errors.is_empty());
        assert!(r.wall_time_s.is_some());
        let mut buf = Vec::new();
        write_reports_tsv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("name\tK\tN\tones"));
        assert!(lines[0].ends_with("wall_time_s"));
        assert!(lines[1].starts_with("flat\t2\t3\t6\t100.000000\tNA"));
    }

    #[test]
    fn cell_formatting() {
        assert_eq!(Cell::Float(0.1).to_string(), "0.100000");
        assert_eq!(Cell::Float(f64::NAN).to_string(), "NA");
        assert_eq!(Cell::Missing.to_string(), "NA");
        assert_eq!(Cell::Int(-3).to_string(), "-3");
        assert_eq!(Cell::Missing.to_json(), Value::Null);
    }

    #[test]
    fn experiments_are_reproducible() {
        for name in ExperimentName::ALL {
            let spec = quick(name);
            let a = run_experiment(&spec).unwrap();
            let b = run_experiment(&spec).unwrap();
            assert_eq!(a, b, "{name}");
            assert!(!a.rows.is_empty(), "{name}");
            for row in &a.rows {
                assert_eq!(row.len(), a.columns.len(), "{name}");
            }
            let mut t1 = Vec::new();
            a.write_tsv(&mut t1).unwrap();
            let mut t2 = Vec::new();
            b.write_tsv(&mut t2).unwrap();
            assert_eq!(t1, t2);
        }
    }

    #[test]
    fn seed_changes_output() {
        let spec = quick(ExperimentName::CdVsMu);
        let other = ExperimentSpec {
            seed: 1,
            ..spec.clone()
        };
        assert_ne!(run_experiment(&spec).unwrap(), run_experiment(&other).unwrap());
    }

    #[test]
    fn indep_box_rows_per_k() {
        let out = run_experiment(&quick(ExperimentName::IndepBox)).unwrap();
        assert_eq!(out.rows.len(), 8);
        assert!(out.summary_value("median_ncd_K30").is_some());
        let ks = out.column("K").unwrap();
        assert_eq!(ks[0], Cell::Int(30));
        assert_eq!(ks[7], Cell::Int(40));
    }

    #[test]
    fn missing_data_is_skipped() {
        let spec = ExperimentSpec {
            data: Some(PathBuf::from("/nonexistent/paleo.dat")),
            ..quick(ExperimentName::ClusterDims)
        };
        let out = run_experiment(&spec).unwrap();
        assert!(out.skipped.is_some());
        let mut buf = Vec::new();
        out.write_tsv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("SKIPPED"));
    }

    #[test]
    fn cluster_dims_on_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("blocks.dat");
        let p = MarginProfile::uniform(20, 0.4, ProfileKind::Margin).unwrap();
        let d = copy_columns(&gen_independent(20, 90, &p, 3).unwrap(), 2).unwrap();
        let mut f = std::fs::File::create(&path).unwrap();
        crate::dataset::write_fimi(&d, &mut f).unwrap();
        let spec = ExperimentSpec {
            data: Some(path),
            ..quick(ExperimentName::ClusterDims)
        };
        let out = run_experiment(&spec).unwrap();
        let units: Vec<String> = out
            .column("unit")
            .unwrap()
            .iter()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(units, ["cluster-1", "cluster-2", "cluster-3", "average", "whole"]);
        let sizes: i64 = out.rows[..3].iter().map(|r| r[2].as_f64().unwrap() as i64).sum();
        assert_eq!(sizes, 90);
    }

    #[test]
    fn invalid_specs() {
        let mut spec = quick(ExperimentName::Markov);
        spec.replicates = 0;
        assert!(run_experiment(&spec).is_err());
        let mut spec = quick(ExperimentName::Markov);
        spec.k_values.clear();
        assert!(run_experiment(&spec).is_err());
    }
}
