//! Baseline structure measures: PCA spectrum, average absolute correlation and k-means.
//!
//! All three work on dense `K x K` or `k x K` matrices and are meant for
//! datasets or column subsets of up to a few thousand columns.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::BinaryDataset;
use crate::error::{Error, Result};
use crate::rng;

const DENSE_COLS_LIMIT: usize = 16_384;

/// Co-occurrence counts `C[a][b]` = rows containing both `a` and `b` (row-major, symmetric).
fn cooccurrence(d: &BinaryDataset) -> Vec<u64> {
    let k = d.n_cols();
    let mut c = vec![0u64; k * k];
    for row in d.rows() {
        for (i, &a) in row.iter().enumerate() {
            let base = a as usize * k;
            for &b in &row[i..] {
                c[base + b as usize] += 1;
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            c[a * k + b] = c[b * k + a];
        }
    }
    c
}

fn check_dense_cols(k: usize) -> Result<()> {
    if k > DENSE_COLS_LIMIT {
        return Err(Error::invalid(format!(
            "{k} columns exceed the dense limit of {DENSE_COLS_LIMIT}; take a column subset first"
        )));
    }
    Ok(())
}

/// Column-centered covariance with divisor `N - 1`, row-major `K x K`.
pub fn covariance(d: &BinaryDataset) -> Result<Vec<f64>> {
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::invalid("covariance needs at least two rows"));
    }
    check_dense_cols(d.n_cols())?;
    let k = d.n_cols();
    let counts = d.column_counts();
    let co = cooccurrence(d);
    let nf = n as f64;
    let mut cov = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            cov[a * k + b] = (co[a * k + b] as f64 - counts[a] as f64 * counts[b] as f64 / nf) / (nf - 1.0);
        }
    }
    Ok(cov)
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Sorted in decreasing order.
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `i` is the unit eigenvector of `values[i]`.
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-10;

/// Cyclic Jacobi rotations until every off-diagonal entry is below `1e-10 * trace`.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<SymmetricEigen> {
    if matrix.len() != n * n {
        return Err(Error::invalid("matrix is not n x n"));
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = (0..n).map(|i| a[i * n + i].abs()).sum::<f64>();
    let tol = JACOBI_REL_TOL * if scale > 0.0 { scale } else { 1.0 };
    let mut sweeps = 0;
    loop {
        let off_max = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].abs())
            .fold(0.0, f64::max);
        if off_max < tol {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Degenerate(format!(
                "Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < tol * 1e-3 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r * n + p];
                        let arq = a[r * n + q];
                        let np = c * arp - s * arq;
                        let nq = s * arp + c * arq;
                        a[r * n + p] = np;
                        a[p * n + r] = np;
                        a[r * n + q] = nq;
                        a[q * n + r] = nq;
                    }
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + new] = v[r * n + old];
        }
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Covariance spectrum of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSummary {
    /// Nonincreasing; tiny negative round-off is clamped to 0.
    pub eigenvalues: Vec<f64>,
    /// Trace of the covariance.
    pub total_variance: f64,
}

/// Relative slack when comparing cumulative variance against a target fraction.
const FRACTION_SLACK: f64 = 1e-12;

impl PcaSummary {
    /// Smallest number of leading components explaining at least `frac` of the variance.
    pub fn components_for(&self, frac: f64) -> Result<usize> {
        if !(frac > 0.0 && frac <= 1.0) {
            return Err(Error::invalid(format!("fraction {frac} outside (0, 1]")));
        }
        let goal = frac * self.total_variance * (1.0 - FRACTION_SLACK);
        let mut acc = 0.0;
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            acc += l;
            if acc >= goal {
                return Ok(i + 1);
            }
        }
        Ok(self.eigenvalues.len())
    }

    /// Fraction of variance explained by the first `m` components.
    pub fn explained_by(&self, m: usize) -> f64 {
        let top: f64 = self.eigenvalues.iter().take(m).sum();
        (top / self.total_variance).min(1.0)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "component\teigenvalue\tcumulative_fraction")?;
        let mut acc = 0.0;
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            acc += l;
            writeln!(w, "{}\t{}\t{}", i + 1, l, acc / self.total_variance)?;
        }
        Ok(())
    }
}

const EIGEN_CLAMP: f64 = 1e-10;

pub fn pca_summary(d: &BinaryDataset) -> Result<PcaSummary> {
    let cov = covariance(d)?;
    let k = d.n_cols();
    let total_variance: f64 = (0..k).map(|i| cov[i * k + i]).sum();
    if !(total_variance > 0.0) {
        return Err(Error::Degenerate(
            "every column is constant; total variance is 0".into(),
        ));
    }
    let eig = jacobi_eigen(&cov, k)?;
    let eigenvalues = eig
        .values
        .into_iter()
        .map(|l| if (-EIGEN_CLAMP..0.0).contains(&l) { 0.0 } else { l })
        .collect();
    Ok(PcaSummary {
        eigenvalues,
        total_variance,
    })
}

pub fn components_for_variance(summary: &PcaSummary, frac: f64) -> Result<usize> {
    summary.components_for(frac)
}

/// Mean of `|corr(i, j)|` over column pairs where both columns vary.
pub fn avg_abs_correlation(d: &BinaryDataset) -> Result<f64> {
    let k = d.n_cols();
    if k < 2 {
        return Err(Error::invalid("average correlation needs at least two columns"));
    }
    if d.n_rows() < 2 {
        return Err(Error::UndefinedCorrelation);
    }
    check_dense_cols(k)?;
    let n = d.n_rows() as f64;
    let counts = d.column_counts();
    let live: Vec<usize> = (0..k)
        .filter(|&j| counts[j] > 0 && counts[j] < d.n_rows())
        .collect();
    if live.len() < 2 {
        return Err(Error::UndefinedCorrelation);
    }
    let co = cooccurrence(d);
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for (x, &a) in live.iter().enumerate() {
        let ca = counts[a] as f64;
        for &b in &live[x + 1..] {
            let cb = counts[b] as f64;
            let num = n * co[a * k + b] as f64 - ca * cb;
            let den = (ca * (n - ca) * cb * (n - cb)).sqrt();
            sum += (num / den).abs().min(1.0);
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    /// Cluster id per row.
    pub assignments: Vec<usize>,
    /// `k` dense centroids of length `K`.
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared Euclidean distances to the assigned centroids.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every centroid update.
    pub objective_trace: Vec<f64>,
}

impl Clustering {
    /// Row indices of each cluster, in row order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// One cluster id per line.
    pub fn write_assignments<W: Write>(&self, mut w: W) -> Result<()> {
        for c in &self.assignments {
            writeln!(w, "{c}")?;
        }
        Ok(())
    }
}

pub const KMEANS_MAX_ITER: usize = 100;

/// Squared Euclidean distance from a 0/1 row to a dense centroid with precomputed squared norm.
#[inline]
fn row_to_centroid(row: &[u32], centroid: &[f64], norm2: f64) -> f64 {
    let dot: f64 = row.iter().map(|&j| centroid[j as usize]).sum();
    (norm2 + row.len() as f64 - 2.0 * dot).max(0.0)
}

fn assign(d: &BinaryDataset, centroids: &[Vec<f64>]) -> Vec<usize> {
    let norms: Vec<f64> = centroids.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
    d.rows()
        .par_iter()
        .map(|row| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let dist = row_to_centroid(row, centroid, norms[c]);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn update(d: &BinaryDataset, assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; d.n_cols()]; k];
    let mut sizes = vec![0usize; k];
    for (row, &c) in d.rows().iter().zip(assignments) {
        sizes[c] += 1;
        for &j in row {
            sums[c][j as usize] += 1.0;
        }
    }
    for (s, &m) in sums.iter_mut().zip(&sizes) {
        if m > 0 {
            s.iter_mut().for_each(|x| *x /= m as f64);
        }
    }
    sums
}

fn objective(d: &BinaryDataset, assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    let norms: Vec<f64> = centroids.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
    d.rows()
        .iter()
        .zip(assignments)
        .map(|(row, &c)| row_to_centroid(row, &centroids[c], norms[c]))
        .sum()
}

fn dense_row(row: &[u32], k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    for &j in row {
        v[j as usize] = 1.0;
    }
    v
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken from a cluster that keeps at least one other member.
fn reseed_empty(d: &BinaryDataset, assignments: &mut [usize], centroids: &[Vec<f64>], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignments.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let norms: Vec<f64> = centroids.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
        let mut far = None;
        let mut far_d = -1.0;
        for (i, row) in d.rows().iter().enumerate() {
            let c = assignments[i];
            if sizes[c] < 2 {
                continue;
            }
            let dist = row_to_centroid(row, &centroids[c], norms[c]);
            if dist > far_d {
                far_d = dist;
                far = Some(i);
            }
        }
        match far {
            Some(i) => assignments[i] = empty,
            None => return,
        }
    }
}

/// Lloyd's algorithm with k-means++ seeding on the rows as 0/1 vectors.
pub fn kmeans(d: &BinaryDataset, k: usize, seed: u64) -> Result<Clustering> {
    let n = d.n_rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} outside [1, {n}]")));
    }
    let kc = d.n_cols();
    let mut r = rng::stream(seed, "kmeans", 0);

    let mut centers = vec![r.gen_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| crate::distdist::sparse_distance(d.row(i), d.row(centers[0])) as f64)
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let u = r.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > u {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            (0..n).find(|i| !centers.contains(i)).unwrap()
        };
        centers.push(next);
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(crate::distdist::sparse_distance(d.row(i), d.row(next)) as f64);
        }
    }
    let mut centroids: Vec<Vec<f64>> = centers.iter().map(|&i| dense_row(d.row(i), kc)).collect();

    let mut assignments = assign(d, &centroids);
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        reseed_empty(d, &mut assignments, &centroids, k);
        centroids = update(d, &assignments, k);
        trace.push(objective(d, &assignments, &centroids));
        iterations += 1;
        if iterations == KMEANS_MAX_ITER {
            break;
        }
        let next = assign(d, &centroids);
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(Clustering {
        k,
        objective: *trace.last().unwrap(),
        assignments,
        centroids,
        iterations,
        objective_trace: trace,
    })
}
