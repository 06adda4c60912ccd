//! `pmm bench`: every instance in a directory under several modes, with
//! per-run rows and per-mode aggregates.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use pmm_core::filter::Mode;
use pmm_core::pipeline::{run_with_lp, solve_relaxation};
use pmm_core::{PmmError, Rat};
use rayon::prelude::*;
use serde::Serialize;

use crate::{check_valid, read_instance, EXIT_INTERNAL, EXIT_OK};

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = Mode::ALL)]
    pub modes: Vec<Mode>,
    /// Write per-run rows as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    LedgerFailed,
    Infeasible,
    /// Uniform mode on an instance whose radii differ.
    Skipped,
    Error,
}

impl Status {
    fn is_failure(self) -> bool {
        matches!(self, Status::LedgerFailed | Status::Error)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub mode: Mode,
    pub status: Status,
    pub lp_value: Option<Rat>,
    pub cost: Option<Rat>,
    pub ratio: Option<Rat>,
    pub max_dilation: Option<Rat>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregate {
    pub mode: Mode,
    pub runs: usize,
    pub failures: usize,
    pub max_ratio: Option<Rat>,
    pub max_dilation: Option<Rat>,
}

fn row(instance: &str, mode: Mode, status: Status, detail: String) -> BenchRow {
    BenchRow {
        instance: instance.to_string(),
        mode,
        status,
        lp_value: None,
        cost: None,
        ratio: None,
        max_dilation: None,
        detail,
    }
}

/// Rows for one instance file, one per mode, in mode order.
pub fn bench_instance(path: &Path, modes: &[Mode]) -> Vec<BenchRow> {
    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    let all = |status: Status, detail: String| modes.iter().map(|&m| row(&name, m, status, detail.clone())).collect();
    let inst = match read_instance(path).and_then(|i| check_valid(&i).map(|_| i)) {
        Ok(i) => i,
        Err(e) => return all(Status::Error, format!("{e:#}")),
    };
    let lp = match solve_relaxation(&inst) {
        Ok(lp) => lp,
        Err(PmmError::Infeasible(m)) => return all(Status::Infeasible, m),
        Err(e) => return all(Status::Error, e.to_string()),
    };
    modes
        .iter()
        .map(|&mode| {
            if mode == Mode::Uniform && inst.uniform_radius().is_none() {
                return row(&name, mode, Status::Skipped, "radii differ".into());
            }
            match run_with_lp(&inst, &lp, mode) {
                Ok(rep) => {
                    let (status, detail) = match rep.ledger.first_failure() {
                        Some(f) => (Status::LedgerFailed, f.name.clone()),
                        None => (Status::Ok, String::new()),
                    };
                    BenchRow {
                        instance: name.clone(),
                        mode,
                        status,
                        lp_value: Some(rep.lp_value.clone()),
                        cost: Some(rep.solution.cost.clone()),
                        ratio: rep.cost_ratio(),
                        max_dilation: rep.max_dilation(),
                        detail,
                    }
                }
                Err(e) => row(&name, mode, Status::Error, e.to_string()),
            }
        })
        .collect()
}

/// Rows for every `*.json` file in `dir`, sorted by file name.
pub fn bench_dir(dir: &Path, modes: &[Mode]) -> Result<Vec<BenchRow>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(PmmError::from)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let rows: Vec<Vec<BenchRow>> = files.par_iter().map(|p| bench_instance(p, modes)).collect();
    Ok(rows.into_iter().flatten().collect())
}

fn max_of(acc: &mut Option<Rat>, v: &Option<Rat>) {
    if let Some(v) = v {
        if acc.as_ref().map_or(true, |a| v > a) {
            *acc = Some(v.clone());
        }
    }
}

pub fn aggregate(rows: &[BenchRow], modes: &[Mode]) -> Vec<Aggregate> {
    modes
        .iter()
        .map(|&mode| {
            let mut agg = Aggregate { mode, runs: 0, failures: 0, max_ratio: None, max_dilation: None };
            for r in rows.iter().filter(|r| r.mode == mode) {
                if r.status == Status::Ok || r.status == Status::LedgerFailed {
                    agg.runs += 1;
                }
                if r.status.is_failure() {
                    agg.failures += 1;
                }
                max_of(&mut agg.max_ratio, &r.ratio);
                max_of(&mut agg.max_dilation, &r.max_dilation);
            }
            agg
        })
        .collect()
}

pub fn to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn approx(v: &Option<Rat>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), |x| format!("{:.4}", x.to_f64()))
}

pub fn text_table(rows: &[BenchRow], aggs: &[Aggregate]) -> String {
    let mut out = format!("{:<28} {:<10} {:<14} {:>10} {:>10}\n", "instance", "mode", "status", "ratio", "dilation");
    for r in rows {
        let status = serde_json::to_value(r.status).expect("status serializes");
        out += &format!(
            "{:<28} {:<10} {:<14} {:>10} {:>10}\n",
            r.instance,
            r.mode.as_str(),
            status.as_str().unwrap_or_default(),
            approx(&r.ratio),
            approx(&r.max_dilation)
        );
    }
    for a in aggs {
        out += &format!(
            "{}: {} runs, {} failures, max ratio {}, max dilation {}\n",
            a.mode.as_str(),
            a.runs,
            a.failures,
            a.max_ratio.as_ref().map_or("-".to_string(), Rat::to_string),
            a.max_dilation.as_ref().map_or("-".to_string(), Rat::to_string),
        );
    }
    out
}

pub fn bench(args: &BenchArgs) -> Result<i32> {
    let rows = bench_dir(&args.dir, &args.modes)?;
    let aggs = aggregate(&rows, &args.modes);
    if let Some(p) = &args.csv {
        fs::write(p, to_csv(&rows)?).map_err(PmmError::from)?;
    }
    print!("{}", text_table(&rows, &aggs));
    Ok(if rows.iter().any(|r| r.status.is_failure()) { EXIT_INTERNAL } else { EXIT_OK })
}
