//! Command-line interface.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 1 when a computation fails, 2 for usage and input
//! format errors. Output is TSV unless `--json` is given.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::baselines::{avg_abs_correlation, kmeans, pca_summary};
use crate::dataset::{
    gen_independent, gen_markov, load_path, random_profile, write_dataset, Format, MarginProfile, ProfileKind,
};
use crate::dimension::{cd_a, cd_r, dataset_cdf, normalized_cd, DimConfig};
use crate::distdist::{exact_cdf, sampled_cdf, SampleMode};
use crate::error::{Error, Result};
use crate::harness::{dataset_report, run_experiment, write_reports_tsv, ExperimentName, ExperimentSpec};
use crate::rng::derive_seed;

#[derive(Debug, Parser)]
#[command(name = "cordim", version, about = "Correlation dimension of sparse 0/1 data")]
pub struct Cli {
    /// Emit JSON instead of TSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct DimArgs {
    /// Input format.
    #[arg(long, default_value_t = Format::Fimi)]
    pub format: Format,
    #[arg(long, default_value_t = 0.25)]
    pub alpha1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub alpha2: f64,
    /// Number of grid intervals between the two radii.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    /// Rows in the comparison sample; all pairs are used when the file has no more rows.
    #[arg(long, default_value_t = 10_000)]
    pub sample: usize,
    /// Monte Carlo draws for the independent reference.
    #[arg(long, default_value_t = 10_000)]
    pub ind_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative overshoot of the independent reference still matched at margin 0.5.
    #[arg(long, default_value_t = 0.05)]
    pub margin_slack: f64,
}

impl DimArgs {
    fn config(&self) -> DimConfig {
        DimConfig {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            grid_n: self.grid,
            sample_m: self.sample,
            ind_samples: self.ind_samples,
            seed: self.seed,
            margin_slack: self.margin_slack,
            ..DimConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CdfMode {
    Exact,
    RowVsSample,
    SampleVsSample,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Correlation dimension between two quantiles (or two radii with --r1/--r2).
    Dim {
        file: PathBuf,
        #[command(flatten)]
        dim: DimArgs,
        /// Absolute lower radius; requires --r2.
        #[arg(long, requires = "r2")]
        r1: Option<f64>,
        /// Absolute upper radius; requires --r1.
        #[arg(long, requires = "r1")]
        r2: Option<f64>,
        /// Also print the fitted (ln r, ln f) points.
        #[arg(long)]
        points: bool,
    },
    /// Normalized correlation dimension.
    Ncd {
        file: PathBuf,
        #[command(flatten)]
        dim: DimArgs,
    },
    /// Statistics, dimensions and normalized dimension, one row per file.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        dim: DimArgs,
        /// Add a wall-time column (breaks byte-identical reruns).
        #[arg(long)]
        timing: bool,
    },
    /// Distance CDF at integer radii.
    Cdf {
        file: PathBuf,
        #[arg(long, default_value_t = Format::Fimi)]
        format: Format,
        #[arg(long, value_enum, default_value_t = CdfMode::Exact)]
        mode: CdfMode,
        #[arg(long, default_value_t = 10_000)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic dataset.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Common margin (indep) or reversal probability (markov); random profile if absent.
        #[arg(long)]
        prob: Option<f64>,
        #[arg(long, default_value_t = Format::Fimi)]
        format: Format,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// PCA eigenvalues and the components needed for a variance fraction.
    Pca {
        file: PathBuf,
        #[arg(long, default_value_t = Format::Fimi)]
        format: Format,
        #[arg(long, default_value_t = 0.9)]
        frac: f64,
    },
    /// Average absolute Pearson correlation between columns.
    Corr {
        file: PathBuf,
        #[arg(long, default_value_t = Format::Fimi)]
        format: Format,
    },
    /// k-means cluster assignments, one id per row.
    Cluster {
        file: PathBuf,
        #[arg(long, default_value_t = Format::Fimi)]
        format: Format,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a synthetic or real-data experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Indep,
    Markov,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    pub name: String,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Comma-separated column counts.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Rows per synthetic dataset.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Real dataset for pca-subsets and cluster-dims; reported as SKIPPED when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = Format::Fimi)]
    pub format: Format,
    #[arg(long)]
    pub subset_rows: Option<usize>,
    #[arg(long)]
    pub subset_cols: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub ind_samples: Option<usize>,
}

impl ExperimentArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(self.name.parse::<ExperimentName>()?);
        spec.seed = self.seed;
        spec.format = self.format;
        spec.data = self.data.clone();
        spec.subset_cols = self.subset_cols;
        if let Some(v) = self.replicates {
            spec.replicates = v;
        }
        if let Some(v) = &self.k {
            spec.k_values = v.clone();
        }
        if let Some(v) = self.n {
            spec.n_rows = v;
        }
        if let Some(v) = self.subset_rows {
            spec.subset_rows = v;
        }
        if let Some(v) = self.clusters {
            spec.clusters = v;
        }
        if let Some(v) = self.sample {
            spec.cfg.sample_m = v;
        }
        if let Some(v) = self.ind_samples {
            spec.cfg.ind_samples = v;
        }
        Ok(spec)
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    // output is buffered so the worker pool never touches the caller's writer
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(0) => Err(Error::invalid("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli, &mut buf)),
            Err(e) => Err(Error::invalid(format!("cannot start {n} threads: {e}"))),
        },
        None => execute(&cli, &mut buf),
    };
    let result = result.and_then(|()| {
        out.write_all(&buf)?;
        out.flush()?;
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Dim {
            file,
            dim,
            r1,
            r2,
            points,
        } => {
            let cfg = dim.config();
            cfg.validate()?;
            let d = load_path(file, dim.format)?;
            let cdf = dataset_cdf(&d, &cfg)?;
            let est = match (r1, r2) {
                (Some(a), Some(b)) => cd_r(&cdf, *a, *b, cfg.grid_n)?,
                _ => cd_a(&cdf, cfg.alpha1, cfg.alpha2, cfg.grid_n)?,
            };
            if cli.json {
                return to_json(&json!({"file": file, "basis": cdf.basis(), "estimate": est}), out);
            }
            writeln!(out, "file\tcd\tintercept\tr1\tr2\tgrid\tbasis")?;
            writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
                file.display(),
                est.slope,
                est.intercept,
                est.r1,
                est.r2,
                est.grid_n,
                cdf.basis()
            )?;
            if *points {
                est.write_points_tsv(&mut *out)?;
            }
        }
        Command::Ncd { file, dim } => {
            let d = load_path(file, dim.format)?;
            let res = normalized_cd(&d, &dim.config())?;
            if cli.json {
                return to_json(&json!({"file": file, "result": res}), out);
            }
            writeln!(
                out,
                "file\tK\tncd\ts\tcd\tcd_ind\tcd_matched\tprop3\tind_mean\tind_sd"
            )?;
            writeln!(
                out,
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                file.display(),
                res.k,
                res.h,
                res.s,
                res.cd_data,
                res.cd_ind,
                res.cd_matched,
                res.prop3_estimate,
                res.ind_mean,
                res.ind_sd
            )?;
        }
        Command::Report { files, dim, timing } => {
            let cfg = dim.config();
            let mut reports = Vec::new();
            for f in files {
                let d = load_path(f, dim.format)?;
                reports.push(dataset_report(&f.display().to_string(), &d, &cfg, *timing)?);
            }
            if cli.json {
                return to_json(&reports, out);
            }
            write_reports_tsv(&reports, &mut *out)?;
        }
        Command::Cdf {
            file,
            format,
            mode,
            sample,
            seed,
        } => {
            let d = load_path(file, *format)?;
            let cdf = match mode {
                CdfMode::Exact => exact_cdf(&d)?,
                CdfMode::RowVsSample => sampled_cdf(&d, SampleMode::RowVsSample, *sample, *seed)?,
                CdfMode::SampleVsSample => sampled_cdf(&d, SampleMode::SampleVsSample, *sample, *seed)?,
            };
            if cli.json {
                return to_json(&cdf, out);
            }
            cdf.write_tsv(&mut *out)?;
        }
        Command::Gen {
            kind,
            k,
            n,
            seed,
            prob,
            format,
            out: path,
        } => {
            let profile_kind = match kind {
                GenKind::Indep => ProfileKind::Margin,
                GenKind::Markov => ProfileKind::Reversal,
            };
            let profile = match prob {
                Some(p) => MarginProfile::uniform(*k, *p, profile_kind)?,
                None => random_profile((*k).max(1), profile_kind, derive_seed(*seed, "gen/profile", 0))?,
            };
            let data_seed = derive_seed(*seed, "gen/data", 0);
            let d = match kind {
                GenKind::Indep => gen_independent(*k, *n, &profile, data_seed)?,
                GenKind::Markov => gen_markov(*k, *n, &profile, data_seed)?,
            };
            match path {
                Some(p) => {
                    let mut w = BufWriter::new(File::create(p)?);
                    write_dataset(&d, *format, &mut w)?;
                    w.flush()?;
                    if cli.json {
                        return to_json(
                            &json!({"out": p, "K": d.n_cols(), "N": d.n_rows(), "ones": d.ones()}),
                            out,
                        );
                    }
                    writeln!(out, "out\tK\tN\tones")?;
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}",
                        p.display(),
                        d.n_cols(),
                        d.n_rows(),
                        d.ones()
                    )?;
                }
                None => write_dataset(&d, *format, &mut *out)?,
            }
        }
        Command::Pca { file, format, frac } => {
            let d = load_path(file, *format)?;
            let s = pca_summary(&d)?;
            let m = s.components_for(*frac)?;
            if cli.json {
                return to_json(
                    &json!({"file": file, "frac": frac, "components": m, "pca": s}),
                    out,
                );
            }
            writeln!(out, "# components_for({frac})\t{m}")?;
            s.write_tsv(&mut *out)?;
        }
        Command::Corr { file, format } => {
            let d = load_path(file, *format)?;
            let c = avg_abs_correlation(&d)?;
            if cli.json {
                return to_json(&json!({"file": file, "avg_abs_corr": c}), out);
            }
            writeln!(out, "file\tavg_abs_corr")?;
            writeln!(out, "{}\t{:.6}", file.display(), c)?;
        }
        Command::Cluster {
            file,
            format,
            k,
            seed,
        } => {
            let d = load_path(file, *format)?;
            let c = kmeans(&d, *k, *seed)?;
            if cli.json {
                return to_json(&c, out);
            }
            writeln!(
                out,
                "# k={} objective={:.6} iterations={}",
                c.k, c.objective, c.iterations
            )?;
            c.write_assignments(&mut *out)?;
        }
        Command::Experiment(args) => {
            let res = run_experiment(&args.spec()?)?;
            if cli.json {
                return to_json(&res.to_json(), out);
            }
            res.write_tsv(&mut *out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("cordim").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    }

    #[test]
    fn help_and_usage_errors() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("experiment"));
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["dim"]).0, 2);
        assert_eq!(call(&["dim", "/no/such/file.dat"]).0, 2);
        assert_eq!(call(&["experiment", "fig-99"]).0, 2);
        assert_eq!(call(&["--threads", "0", "experiment", "markov"]).0, 2);
    }

    #[test]
    fn format_error_is_exit_two_and_computation_error_is_one() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write_tmp(&dir, "bad.dat", "1 2\nx 3\n");
        let (code, _, err) = call(&["dim", &bad]);
        assert_eq!(code, 2);
        assert!(err.contains("line 2"));
        let flat = write_tmp(&dir, "flat.dat", "0 1\n0 1\n0 1\n");
        assert_eq!(call(&["dim", &flat]).0, 1);
        assert_eq!(call(&["pca", &flat]).0, 1);
    }

    #[test]
    fn dim_tsv_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let f = write_tmp(&dir, "d.dat", "0 1 2\n1\n\n2 3\n0 3\n1 2 3\n");
        let (code, out, err) = call(&["dim", &f, "--r1", "1", "--r2", "3", "--grid", "2"]);
        assert_eq!(code, 0, "{err}");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "file\tcd\tintercept\tr1\tr2\tgrid\tbasis");
        assert!(lines[1].contains("\t1.000000\t3.000000\t2\texact-pairs(n=6)"));
        let (code, out, _) = call(&["--json", "dim", &f, "--r1", "1", "--r2", "3", "--grid", "2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["estimate"]["points"].as_array().unwrap().len(), 3);
        assert_eq!(v["basis"]["kind"], "exact-pairs");
    }

    #[test]
    fn gen_roundtrips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.dat").display().to_string();
        let (code, out, _) = call(&[
            "gen", "indep", "--k", "30", "--n", "200", "--seed", "4", "--out", &path,
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("out\tK\tN\tones\n"));
        let (_, stdout, _) = call(&["gen", "indep", "--k", "30", "--n", "200", "--seed", "4"]);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout);
        let (code, out, _) = call(&[
            "gen", "markov", "--k", "8", "--n", "5", "--prob", "0.2", "--format", "dense01",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 5);
        assert!(out
            .lines()
            .all(|l| l.len() == 8 && l.bytes().all(|b| b == b'0' || b == b'1')));
    }

    #[test]
    fn baselines_commands() {
        let dir = tempfile::tempdir().unwrap();
        let f = write_tmp(&dir, "o.txt", "0 0\n0 1\n1 0\n1 1\n");
        let (code, out, _) = call(&["pca", &f, "--format", "dense01"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("# components_for(0.9)\t2\n"));
        let (code, out, _) = call(&["corr", &f, "--format", "dense01"]);
        assert_eq!(code, 0);
        assert!(out.ends_with("\t0.000000\n"));
        let (code, out, _) = call(&["cluster", &f, "--format", "dense01", "--k", "4"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 5);
        assert_eq!(call(&["cluster", &f, "--format", "dense01", "--k", "5"]).0, 2);
    }
}
