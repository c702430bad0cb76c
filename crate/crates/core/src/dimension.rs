//! Correlation dimension and its normalization.
//!
//! [`cd_r`] fits the least-squares slope of `(ln r, ln f(r))` on a uniform grid
//! of radii. [`cd_a`] picks the radii from quantiles of the distance
//! distribution. [`normalized_cd`] converts the slope into a column count: it
//! finds the margin `s` at which `K` independent columns reproduce the
//! dimension of the column-randomized data, then the number of such columns
//! that reproduces the dimension of the data itself.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{margins, BinaryDataset, MarginProfile};
use crate::distdist::{
    binomial_model, exact_cdf, independent_mc_cdf, poisson_binomial_cdf, sampled_cdf, DistanceCdf, SampleMode,
};
use crate::error::{Error, Result};
use crate::normal;
use crate::stats::least_squares;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Number of grid intervals; the fit uses `grid_n + 1` points.
    pub grid_n: usize,
    /// Datasets with more rows than this are estimated against a random subset of this size.
    pub sample_m: usize,
    /// Monte Carlo draws for the independent-columns reference.
    pub ind_samples: usize,
    pub seed: u64,
    /// Bisection tolerance on the matched margin.
    pub search_tol: f64,
    /// Upper bound of the column-count search.
    pub h_max: usize,
    /// Relative amount by which the margin-search target may exceed the
    /// `s = 0.5` model value and still resolve to `s = 0.5`. Absorbs Monte
    /// Carlo noise for data whose margins are all near one half.
    pub margin_slack: f64,
}

impl Default for DimConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.25,
            alpha2: 0.75,
            grid_n: 50,
            sample_m: 10_000,
            ind_samples: 10_000,
            seed: 0,
            search_tol: 1e-6,
            h_max: 1 << 20,
            margin_slack: 0.05,
        }
    }
}

impl DimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 > 0.0 && self.alpha1 < self.alpha2 && self.alpha2 < 1.0) {
            return Err(Error::invalid(format!(
                "need 0 < alpha1 < alpha2 < 1, got {} and {}",
                self.alpha1, self.alpha2
            )));
        }
        if self.grid_n == 0 || self.sample_m == 0 || self.ind_samples == 0 || self.h_max == 0 {
            return Err(Error::invalid("grid, sample sizes and h_max must be positive"));
        }
        if !(self.search_tol > 0.0) {
            return Err(Error::invalid("search tolerance must be positive"));
        }
        if !(self.margin_slack >= 0.0) {
            return Err(Error::invalid("margin slack must be nonnegative"));
        }
        Ok(())
    }
}

/// A fitted correlation dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// The dimension.
    pub slope: f64,
    pub intercept: f64,
    pub r1: f64,
    pub r2: f64,
    pub grid_n: usize,
    /// `(ln r, ln f(r))` at `r = r1 + i (r2 - r1) / grid_n`.
    pub points: Vec<(f64, f64)>,
}

impl DimensionEstimate {
    pub fn write_points_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "log_r\tlog_f")?;
        for (x, y) in &self.points {
            writeln!(w, "{x}\t{y}")?;
        }
        Ok(())
    }
}

/// Correlation dimension between two absolute radii.
pub fn cd_r(cdf: &DistanceCdf, r1: f64, r2: f64, grid_n: usize) -> Result<DimensionEstimate> {
    if grid_n == 0 {
        return Err(Error::invalid("grid needs at least one interval"));
    }
    if !(r1 > 0.0) {
        return Err(Error::invalid(format!("lower radius {r1} must be positive")));
    }
    if !(r1 < r2) {
        return Err(Error::DegenerateRange { r1, r2 });
    }
    let top = (cdf.max_distance() + 1) as f64;
    if r2 > top {
        return Err(Error::invalid(format!("upper radius {r2} exceeds {top}")));
    }
    if cdf.eval(r1)? <= 0.0 {
        return Err(Error::InsufficientMass { r1 });
    }
    let step = (r2 - r1) / grid_n as f64;
    let points = (0..=grid_n)
        .map(|i| {
            let r = if i == grid_n { r2 } else { r1 + i as f64 * step };
            Ok((r.ln(), cdf.eval(r)?.ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (slope, intercept) = least_squares(&points).ok_or(Error::DegenerateRange { r1, r2 })?;
    Ok(DimensionEstimate {
        slope,
        intercept,
        r1,
        r2,
        grid_n,
        points,
    })
}

/// Correlation dimension between the `alpha1` and `alpha2` quantiles, each radius truncated below at 1.
pub fn cd_a(cdf: &DistanceCdf, alpha1: f64, alpha2: f64, grid_n: usize) -> Result<DimensionEstimate> {
    if !(alpha1 > 0.0 && alpha1 < alpha2 && alpha2 < 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < alpha1 < alpha2 < 1, got {alpha1} and {alpha2}"
        )));
    }
    let r1 = cdf.inverse(alpha1)?.max(1.0);
    let r2 = cdf.inverse(alpha2)?.max(1.0);
    if r2 <= r1 {
        return Err(Error::DegenerateRange { r1, r2 });
    }
    cd_r(cdf, r1, r2, grid_n)
}

/// `|ln((1-a)/a)| / (2 |Phi^{-1}(a)|)`, about 0.815 at `a = 1/4`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || alpha == 0.5 {
        return Err(Error::invalid(format!(
            "alpha {alpha} must be in (0, 1) and not 0.5"
        )));
    }
    Ok(((1.0 - alpha) / alpha).ln().abs() / (2.0 * normal::quantile(alpha).abs()))
}

/// Normal-approximation dimension of independent columns: `C(a) sum q / sqrt(sum q (1 - q))`.
pub fn prop1_approx(p: &MarginProfile, alpha: f64) -> Result<f64> {
    let q = p.disagreement();
    let mu: f64 = q.iter().sum();
    let var: f64 = q.iter().map(|x| x * (1.0 - x)).sum();
    if mu <= 0.0 || var <= 0.0 {
        return Err(Error::Degenerate(
            "all columns are constant; the distance is always 0".into(),
        ));
    }
    Ok(c_alpha(alpha)? * mu / var.sqrt())
}

/// Column-count estimate `(cd_data / cd_ind)^2 K`.
pub fn prop3_estimate(cd_data: f64, cd_ind: f64, k: usize) -> Result<f64> {
    if !(cd_ind > 0.0) {
        return Err(Error::invalid(format!(
            "reference dimension {cd_ind} must be positive"
        )));
    }
    Ok((cd_data / cd_ind).powi(2) * k as f64)
}

/// Quantile dimension of `h` independent columns with margin `p`, from the exact binomial CDF.
pub fn cd_ind_model(h: usize, p: f64, cfg: &DimConfig) -> Result<f64> {
    if h == 0 || !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "need h >= 1 and 0 < p < 1, got h={h}, p={p}"
        )));
    }
    Ok(cd_a(&binomial_model(h, p)?, cfg.alpha1, cfg.alpha2, cfg.grid_n)?.slope)
}

/// The distance CDF of a dataset: all pairs when `N <= sample_m`, otherwise
/// every row against a random `sample_m`-row subset.
pub fn dataset_cdf(d: &BinaryDataset, cfg: &DimConfig) -> Result<DistanceCdf> {
    if d.n_rows() <= cfg.sample_m {
        exact_cdf(d)
    } else {
        sampled_cdf(d, SampleMode::RowVsSample, cfg.sample_m, cfg.seed)
    }
}

/// Dimension of the independent-columns reference of a margin profile, by Monte Carlo.
pub fn independent_cdf(p: &MarginProfile, cfg: &DimConfig) -> Result<DistanceCdf> {
    independent_mc_cdf(p, cfg.ind_samples, cfg.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedResult {
    /// Number of columns of the matching independent dataset.
    pub h: usize,
    /// Matched common margin.
    pub s: f64,
    pub k: usize,
    pub cd_data: f64,
    pub cd_ind: f64,
    /// Model dimension at `(h, s)`.
    pub cd_matched: f64,
    pub prop3_estimate: f64,
    /// Mean and standard deviation of the independent-reference distance.
    pub ind_mean: f64,
    pub ind_sd: f64,
}

const MARGIN_FLOOR: f64 = 1e-12;

/// Model dimension used by the searches; a collapsed quantile range counts as dimension 0.
fn search_cd(h: usize, s: f64, cfg: &DimConfig) -> Result<f64> {
    match cd_ind_model(h, s, cfg) {
        Err(Error::DegenerateRange { .. }) => Ok(0.0),
        other => other,
    }
}

/// Bisection for the margin `s` in `(0, 0.5]` at which `k` independent columns have dimension `target`.
pub fn match_margin(k: usize, target: f64, cfg: &DimConfig) -> Result<f64> {
    let high_value = search_cd(k, 0.5, cfg)?;
    let low_value = search_cd(k, MARGIN_FLOOR, cfg)?;
    if target > high_value && target <= high_value * (1.0 + cfg.margin_slack) {
        return Ok(0.5);
    }
    if target > high_value || target < low_value {
        return Err(Error::NoRoot {
            target,
            low_value,
            high_value,
        });
    }
    let (mut lo, mut hi) = (MARGIN_FLOOR, 0.5);
    while hi - lo > cfg.search_tol {
        let mid = 0.5 * (lo + hi);
        if search_cd(k, mid, cfg)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Integer `h` minimizing `|cd(ind(h, s)) - target|`: doubling, then binary search
/// for the first `h` reaching the target, then the closer of it and its predecessor.
pub fn match_columns(s: f64, target: f64, cfg: &DimConfig) -> Result<(usize, f64)> {
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut g = |h: usize| -> Result<f64> {
        if let Some(&v) = cache.get(&h) {
            return Ok(v);
        }
        let v = search_cd(h, s, cfg)?;
        cache.insert(h, v);
        Ok(v)
    };
    let first = g(1)?;
    if first >= target {
        return Ok((1, first));
    }
    let mut below;
    let mut above = 1usize;
    loop {
        if above == cfg.h_max {
            return Err(Error::Saturated {
                h_max: cfg.h_max,
                value: g(above)?,
                target,
            });
        }
        below = above;
        above = (above * 2).min(cfg.h_max);
        if g(above)? >= target {
            break;
        }
    }
    while above - below > 1 {
        let mid = below + (above - below) / 2;
        if g(mid)? >= target {
            above = mid;
        } else {
            below = mid;
        }
    }
    let (gb, ga) = (g(below)?, g(above)?);
    if (ga - target).abs() < (gb - target).abs() {
        Ok((above, ga))
    } else {
        Ok((below, gb))
    }
}

/// Normalized correlation dimension of a dataset.
pub fn normalized_cd(d: &BinaryDataset, cfg: &DimConfig) -> Result<NormalizedResult> {
    cfg.validate()?;
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = d.n_cols();
    let cd_data = cd_a(&dataset_cdf(d, cfg)?, cfg.alpha1, cfg.alpha2, cfg.grid_n)?.slope;
    let ind = independent_cdf(&margins(d)?, cfg)?;
    let (ind_mean, ind_var) = ind.mean_var();
    let cd_ind = cd_a(&ind, cfg.alpha1, cfg.alpha2, cfg.grid_n)?.slope;
    let s = match_margin(k, cd_ind, cfg)?;
    let (h, cd_matched) = match_columns(s, cd_data, cfg)?;
    Ok(NormalizedResult {
        h,
        s,
        k,
        cd_data,
        cd_ind,
        cd_matched,
        prop3_estimate: prop3_estimate(cd_data, cd_ind, k)?,
        ind_mean,
        ind_sd: ind_var.sqrt(),
    })
}

/// One point `(mu, cd_R(c1 mu, c2 mu))` of the dimension-versus-mean relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop2Point {
    pub mu: f64,
    pub cd: f64,
    /// The lower radius fell below 1 and was raised to 1.
    pub clamped: bool,
}

/// Largest column count for which the exact per-column convolution is used
/// instead of Monte Carlo when margins differ.
const EXACT_CONVOLUTION_MAX_K: usize = 4096;

/// Dimension between radii `c1 mu` and `c2 mu` (both below the mean) of the
/// independent model with margins `p`.
pub fn prop2_check(p: &MarginProfile, c1: f64, c2: f64, cfg: &DimConfig) -> Result<Prop2Point> {
    if !(c1 > 0.0 && c1 < c2 && c2 <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < c1 < c2 <= 1, got {c1} and {c2}"
        )));
    }
    let mu: f64 = p.disagreement().iter().sum();
    if mu <= 0.0 {
        return Err(Error::Degenerate(
            "all columns are constant; the distance is always 0".into(),
        ));
    }
    let cdf = match p.values.first() {
        Some(&p0) if p.values.iter().all(|&v| v == p0) => binomial_model(p.len(), p0)?,
        _ if p.len() <= EXACT_CONVOLUTION_MAX_K => poisson_binomial_cdf(p)?,
        _ => independent_mc_cdf(p, cfg.ind_samples, cfg.seed)?,
    };
    let mut r1 = c1 * mu;
    let clamped = r1 < 1.0;
    if clamped {
        r1 = 1.0;
    }
    let cd = cd_r(&cdf, r1, c2 * mu, cfg.grid_n)?.slope;
    Ok(Prop2Point { mu, cd, clamped })
}
