//! The distribution of `Z`, the L1 distance between two random rows.
//!
//! A [`DistanceCdf`] stores `f(r) = P(Z < r)` at `r = 0..=K+1` and extends it to
//! real `r` by linear interpolation. Estimators accumulate integer pair counts
//! per worker and merge them before dividing, so results do not depend on the
//! number of threads.

use std::fmt;
use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dataset::{BinaryDataset, MarginProfile};
use crate::error::{Error, Result};
use crate::rng;

/// How a [`DistanceCdf`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CdfBasis {
    /// All `N^2` ordered pairs, self-pairs included.
    ExactPairs { n: usize },
    /// Every row against a random `m`-row subset.
    RowVsSample { n: usize, m: usize },
    /// All ordered pairs within a random `m`-row subset.
    SampleVsSample { m: usize },
    /// Monte Carlo draws of the independent-columns distance.
    IndependentMc { n_samples: usize },
    /// Exact `Binomial(h, 2p(1-p))`.
    Binomial { h: usize, p: f64 },
    /// Exact sum of independent Bernoulli disagreements with per-column margins.
    PoissonBinomial { k: usize },
    /// Supplied directly by the caller.
    Custom,
}

impl fmt::Display for CdfBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CdfBasis::ExactPairs { n } => write!(f, "exact-pairs(n={n})"),
            CdfBasis::RowVsSample { n, m } => write!(f, "row-vs-sample(n={n},m={m})"),
            CdfBasis::SampleVsSample { m } => write!(f, "sample-vs-sample(m={m})"),
            CdfBasis::IndependentMc { n_samples } => write!(f, "independent-mc(samples={n_samples})"),
            CdfBasis::Binomial { h, p } => write!(f, "binomial(h={h},p={p})"),
            CdfBasis::PoissonBinomial { k } => write!(f, "poisson-binomial(k={k})"),
            CdfBasis::Custom => write!(f, "custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceCdf {
    max_distance: usize,
    f_int: Vec<f64>,
    basis: CdfBasis,
    pair_count: u64,
}

impl DistanceCdf {
    /// From a histogram of distances `0..=K`; `f(r)` is the count below `r` over the total.
    pub fn from_histogram(hist: &[u64], basis: CdfBasis) -> Result<Self> {
        let total: u64 = hist.iter().sum();
        if hist.is_empty() || total == 0 {
            return Err(Error::Degenerate("empty distance histogram".into()));
        }
        let denom = total as f64;
        let mut f_int = Vec::with_capacity(hist.len() + 1);
        let mut below = 0u64;
        f_int.push(0.0);
        for &c in hist {
            below += c;
            f_int.push(below as f64 / denom);
        }
        Ok(Self {
            max_distance: hist.len() - 1,
            f_int,
            basis,
            pair_count: total,
        })
    }

    /// From explicit values `f(0..=K+1)`; they must start at 0, end at 1 and never decrease.
    pub fn from_values(f_int: Vec<f64>, basis: CdfBasis) -> Result<Self> {
        if f_int.len() < 2 {
            return Err(Error::invalid("a distance CDF needs at least two values"));
        }
        if f_int[0] != 0.0 || *f_int.last().unwrap() != 1.0 {
            return Err(Error::invalid("a distance CDF must start at 0 and end at 1"));
        }
        if f_int.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::invalid("a distance CDF must be nondecreasing"));
        }
        Ok(Self {
            max_distance: f_int.len() - 2,
            f_int,
            basis,
            pair_count: 0,
        })
    }

    /// Largest possible distance `K`.
    pub fn max_distance(&self) -> usize {
        self.max_distance
    }

    /// `f(r)` at `r = 0..=K+1`.
    pub fn values(&self) -> &[f64] {
        &self.f_int
    }

    pub fn basis(&self) -> CdfBasis {
        self.basis
    }

    /// Pairs or samples behind the estimate; zero for exact models.
    pub fn pair_count(&self) -> u64 {
        self.pair_count
    }

    /// `P(Z = k)` for `k = 0..=K`.
    pub fn pmf(&self) -> Vec<f64> {
        self.f_int.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Interpolated `f(x)` for `0 <= x <= K+1`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let top = (self.max_distance + 1) as f64;
        if !(0.0..=top).contains(&x) {
            return Err(Error::invalid(format!("radius {x} outside [0, {top}]")));
        }
        let lo = x.floor() as usize;
        if lo == self.max_distance + 1 {
            return Ok(self.f_int[lo]);
        }
        let frac = x - lo as f64;
        Ok(self.f_int[lo] + frac * (self.f_int[lo + 1] - self.f_int[lo]))
    }

    /// Smallest `x` in `[0, K+1]` with `f(x) >= a`; on a plateau this is its left end.
    pub fn inverse(&self, a: f64) -> Result<f64> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::invalid(format!("probability {a} outside (0, 1]")));
        }
        let r = self.f_int.partition_point(|&v| v < a);
        // f_int[0] = 0 < a and f_int[K+1] = 1 >= a, so 1 <= r <= K+1.
        let (lo, hi) = (self.f_int[r - 1], self.f_int[r]);
        Ok((r - 1) as f64 + (a - lo) / (hi - lo))
    }

    /// Mean and variance of `Z`.
    pub fn mean_var(&self) -> (f64, f64) {
        let pmf = self.pmf();
        let mu: f64 = pmf.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
        let var: f64 = pmf
            .iter()
            .enumerate()
            .map(|(k, &p)| (k as f64 - mu).powi(2) * p)
            .sum();
        (mu, var)
    }

    /// Two-column `r<TAB>f(r)` table with a `#` header describing the basis.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# basis={} pair_count={} max_distance={}",
            self.basis, self.pair_count, self.max_distance
        )?;
        writeln!(w, "r\tf")?;
        for (r, v) in self.f_int.iter().enumerate() {
            writeln!(w, "{r}\t{v}")?;
        }
        Ok(())
    }
}

/// `f(x)` for a CDF; see [`DistanceCdf::eval`].
pub fn f_eval(cdf: &DistanceCdf, x: f64) -> Result<f64> {
    cdf.eval(x)
}

/// Leftmost preimage of `a`; see [`DistanceCdf::inverse`].
pub fn f_inverse(cdf: &DistanceCdf, a: f64) -> Result<f64> {
    cdf.inverse(a)
}

pub fn mean_var(cdf: &DistanceCdf) -> (f64, f64) {
    cdf.mean_var()
}

/// Pairwise L1 distances between rows of one dataset.
///
/// Sparse rows are compared by a sorted merge, costing the sum of the two row
/// lengths. When rows are dense enough that a packed bitset is shorter than
/// the rows themselves, rows are packed into `u64` words and compared with
/// popcounts instead; both give identical integer distances.
enum PairKernel<'a> {
    Sparse(&'a [Vec<u32>]),
    Packed { words: usize, bits: Vec<u64> },
}

const PACKED_BYTES_LIMIT: usize = 1 << 29;

impl<'a> PairKernel<'a> {
    fn new(d: &'a BinaryDataset) -> Self {
        let words = d.n_cols().div_ceil(64).max(1);
        let avg = d.ones() as f64 / d.n_rows().max(1) as f64;
        let bytes = words.saturating_mul(d.n_rows()).saturating_mul(8);
        if (words as f64) <= 2.0 * avg && bytes <= PACKED_BYTES_LIMIT {
            let mut bits = vec![0u64; words * d.n_rows()];
            for (i, row) in d.rows().iter().enumerate() {
                let slot = &mut bits[i * words..(i + 1) * words];
                for &j in row {
                    slot[j as usize / 64] |= 1u64 << (j % 64);
                }
            }
            PairKernel::Packed { words, bits }
        } else {
            PairKernel::Sparse(d.rows())
        }
    }

    #[inline]
    fn distance(&self, a: usize, b: usize) -> usize {
        match self {
            PairKernel::Sparse(rows) => sparse_distance(&rows[a], &rows[b]),
            PairKernel::Packed { words, bits } => {
                let x = &bits[a * words..(a + 1) * words];
                let y = &bits[b * words..(b + 1) * words];
                x.iter().zip(y).map(|(u, v)| (u ^ v).count_ones() as usize).sum()
            }
        }
    }
}

/// L1 distance of two sorted index sets.
pub fn sparse_distance(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() + b.len() - 2 * common
}

fn add_hist(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

/// Counts of distances over all ordered pairs of `idx` (self-pairs included).
fn symmetric_histogram(kernel: &PairKernel, idx: &[usize], k: usize) -> Vec<u64> {
    let mut hist = (0..idx.len())
        .into_par_iter()
        .fold(
            || vec![0u64; k + 1],
            |mut h, a| {
                let ia = idx[a];
                for &ib in &idx[a + 1..] {
                    h[kernel.distance(ia, ib)] += 2;
                }
                h
            },
        )
        .reduce(|| vec![0u64; k + 1], add_hist);
    hist[0] += idx.len() as u64;
    hist
}

/// Counts of distances over `(x, y)` for every row `x` and every `y` in `sample`.
fn cross_histogram(kernel: &PairKernel, n_rows: usize, sample: &[usize], k: usize) -> Vec<u64> {
    (0..n_rows)
        .into_par_iter()
        .fold(
            || vec![0u64; k + 1],
            |mut h, a| {
                for &b in sample {
                    h[kernel.distance(a, b)] += 1;
                }
                h
            },
        )
        .reduce(|| vec![0u64; k + 1], add_hist)
}

/// `P(Z < r)` over all `N^2` ordered pairs, in `O(N M)` time.
pub fn exact_cdf(d: &BinaryDataset) -> Result<DistanceCdf> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let kernel = PairKernel::new(d);
    let idx: Vec<usize> = (0..d.n_rows()).collect();
    let hist = symmetric_histogram(&kernel, &idx, d.n_cols());
    DistanceCdf::from_histogram(&hist, CdfBasis::ExactPairs { n: d.n_rows() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    RowVsSample,
    SampleVsSample,
}

/// Estimates `P(Z < r)` from a uniform `m`-row subset drawn without replacement.
pub fn sampled_cdf(d: &BinaryDataset, mode: SampleMode, m: usize, seed: u64) -> Result<DistanceCdf> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if m == 0 || m > d.n_rows() {
        return Err(Error::invalid(format!(
            "sample size {m} outside [1, {}]",
            d.n_rows()
        )));
    }
    let mut r = rng::stream(seed, "sample-rows", 0);
    let sample = index::sample(&mut r, d.n_rows(), m).into_vec();
    let kernel = PairKernel::new(d);
    match mode {
        SampleMode::RowVsSample => {
            let hist = cross_histogram(&kernel, d.n_rows(), &sample, d.n_cols());
            DistanceCdf::from_histogram(&hist, CdfBasis::RowVsSample { n: d.n_rows(), m })
        }
        SampleMode::SampleVsSample => {
            let hist = symmetric_histogram(&kernel, &sample, d.n_cols());
            DistanceCdf::from_histogram(&hist, CdfBasis::SampleVsSample { m })
        }
    }
}

const MC_CHUNK: usize = 512;

/// Empirical CDF of `n_samples` draws of `Z = sum_i Bernoulli(2 p_i (1 - p_i))`.
pub fn independent_mc_cdf(p: &MarginProfile, n_samples: usize, seed: u64) -> Result<DistanceCdf> {
    if n_samples == 0 {
        return Err(Error::invalid("at least one Monte Carlo sample is required"));
    }
    let k = p.len();
    let q: Vec<f64> = p.disagreement().into_iter().filter(|&x| x > 0.0).collect();
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let hist = (0..chunks)
        .into_par_iter()
        .fold(
            || vec![0u64; k + 1],
            |mut h, c| {
                let mut r = rng::stream(seed, "independent-mc", c as u64);
                let len = MC_CHUNK.min(n_samples - c * MC_CHUNK);
                for _ in 0..len {
                    let z = q.iter().filter(|&&qi| r.gen::<f64>() < qi).count();
                    h[z] += 1;
                }
                h
            },
        )
        .reduce(|| vec![0u64; k + 1], add_hist);
    DistanceCdf::from_histogram(&hist, CdfBasis::IndependentMc { n_samples })
}

/// Tail width, in standard deviations plus a constant, outside which binomial
/// terms are below `1e-60` and are treated as zero.
const BINOMIAL_WINDOW_SD: f64 = 40.0;
const BINOMIAL_WINDOW_PAD: f64 = 60.0;

/// Exact CDF of `Binomial(h, q)` with `q = 2p(1-p)`: the distance between two
/// rows of `h` independent columns that are each 1 with probability `p`.
///
/// Terms come from log-gamma and are accumulated with Neumaier summation.
pub fn binomial_model(h: usize, p: f64) -> Result<DistanceCdf> {
    if h == 0 {
        return Err(Error::invalid("binomial model needs h >= 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("margin {p} outside [0, 1]")));
    }
    let basis = CdfBasis::Binomial { h, p };
    let q = 2.0 * p * (1.0 - p);
    let mut f_int = vec![1.0; h + 2];
    f_int[0] = 0.0;
    if q == 0.0 {
        return DistanceCdf::from_values(f_int, basis);
    }
    let hf = h as f64;
    let mu = hf * q;
    let sd = (hf * q * (1.0 - q)).sqrt();
    let lo = (mu - BINOMIAL_WINDOW_SD * sd - BINOMIAL_WINDOW_PAD)
        .floor()
        .max(0.0) as usize;
    let hi = ((mu + BINOMIAL_WINDOW_SD * sd + BINOMIAL_WINDOW_PAD).ceil() as usize).min(h);

    let ln_q = q.ln();
    let ln_1q = (-q).ln_1p();
    let ln_hfact = ln_gamma(hf + 1.0);
    f_int[1..=lo].iter_mut().for_each(|v| *v = 0.0);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in lo..=hi {
        let kf = k as f64;
        let ln_pmf = ln_hfact - ln_gamma(kf + 1.0) - ln_gamma(hf - kf + 1.0) + kf * ln_q + (hf - kf) * ln_1q;
        let term = ln_pmf.exp();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        f_int[k + 1] = (sum + comp).min(1.0);
    }
    f_int[h + 1] = 1.0;
    for r in 1..f_int.len() {
        if f_int[r] < f_int[r - 1] {
            f_int[r] = f_int[r - 1];
        }
    }
    DistanceCdf::from_values(f_int, basis)
}

/// Exact CDF of `sum_i Bernoulli(2 p_i (1 - p_i))` by dynamic programming, `O(K^2)`.
pub fn poisson_binomial_cdf(p: &MarginProfile) -> Result<DistanceCdf> {
    let k = p.len();
    if k == 0 {
        return Err(Error::invalid("profile is empty"));
    }
    let mut pmf = vec![0.0f64; k + 1];
    pmf[0] = 1.0;
    for (done, q) in p.disagreement().into_iter().enumerate() {
        for z in (1..=done + 1).rev() {
            pmf[z] = pmf[z] * (1.0 - q) + pmf[z - 1] * q;
        }
        pmf[0] *= 1.0 - q;
    }
    let mut f_int = Vec::with_capacity(k + 2);
    f_int.push(0.0);
    let mut acc = 0.0;
    for &x in &pmf {
        acc += x;
        f_int.push(acc.min(1.0));
    }
    f_int[k + 1] = 1.0;
    DistanceCdf::from_values(f_int, CdfBasis::PoissonBinomial { k })
}
