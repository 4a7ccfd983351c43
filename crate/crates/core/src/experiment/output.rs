use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use super::{CellResult, ComparisonRow, ExperimentConfig, Method, SampleCosts};
use crate::cost::GridSpec;
use crate::error::{Error, Result};
use crate::nn::History;

pub const RESULTS_HEADER: &str = "delta,M,method,p05,p50,p95,n_test";

pub fn dataset_file_name(grid: &GridSpec) -> String {
    format!("dataset_K{}_L{}.jsonl", grid.k(), grid.l())
}

fn cell_tag(grid: &GridSpec, m: usize) -> String {
    format!("K{}_L{}_M{}", grid.k(), grid.l(), m)
}

pub fn results_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.delta, r.moment_count, r.method, r.p05, r.p50, r.p95, r.n_test
        );
    }
    out
}

pub fn history_csv(history: &History) -> String {
    let mut out = String::from("epoch,train_loss,validation_loss\n");
    for e in &history.epochs {
        let val = e.validation.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", e.epoch, e.train, val);
    }
    out
}

pub fn per_sample_csv(costs: &[SampleCosts]) -> String {
    let mut out = String::from("index,nn,git,lsq_oracle\n");
    for c in costs {
        let _ = writeln!(out, "{},{},{},{}", c.index, c.nn, c.git, c.lsq_oracle);
    }
    out
}

/// One row per `M` with the band of every method side by side.
fn panel_csv(grid: &GridSpec, rows: &[ComparisonRow]) -> String {
    let mut out = String::from("M");
    for m in Method::ALL {
        let _ = write!(out, ",{m}_p05,{m}_p50,{m}_p95");
    }
    out.push('\n');
    let delta = grid.delta();
    let mut budgets: Vec<usize> = rows
        .iter()
        .filter(|r| r.delta == delta)
        .map(|r| r.moment_count)
        .collect();
    budgets.dedup();
    for m in budgets {
        let _ = write!(out, "{m}");
        for method in Method::ALL {
            match rows
                .iter()
                .find(|r| r.delta == delta && r.moment_count == m && r.method == method)
            {
                Some(r) => {
                    let _ = write!(out, ",{},{},{}", r.p05, r.p50, r.p95);
                }
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes `results.csv`, per-cell training histories and test costs, and one
/// plot-data file per resolution. `rows` must already be sorted.
pub fn emit_outputs(
    rows: &[ComparisonRow],
    cells: &[CellResult],
    config: &ExperimentConfig,
) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut write = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        files.push(path);
        Ok(())
    };
    write("results.csv".into(), results_csv(rows))?;
    for cell in cells {
        let tag = cell_tag(&cell.grid, cell.moment_count);
        write(format!("history_{tag}.csv"), history_csv(&cell.history))?;
        write(format!("costs_{tag}.csv"), per_sample_csv(&cell.costs))?;
    }
    for grid in &config.resolutions {
        write(
            format!("panel_K{}_L{}.csv", grid.k(), grid.l()),
            panel_csv(grid, rows),
        )?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(delta: f64, m: usize, method: Method) -> ComparisonRow {
        ComparisonRow {
            delta,
            moment_count: m,
            method,
            p05: 0.1,
            p50: 0.2,
            p95: 0.3,
            n_test: 100,
        }
    }

    #[test]
    fn single_row_gives_two_lines() {
        let csv = results_csv(&[row(0.5, 4, Method::Nn)]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap(), RESULTS_HEADER);
        assert_eq!(csv.lines().nth(1).unwrap(), "0.5,4,nn,0.1,0.2,0.3,100");
    }

    #[test]
    fn rows_sort_by_delta_m_method() {
        let mut rows = vec![
            row(0.5, 4, Method::Nn),
            row(0.2, 8, Method::Git),
            row(0.5, 4, Method::Git),
            row(0.2, 2, Method::LsqOracle),
        ];
        super::super::sort_rows(&mut rows);
        let keys: Vec<(f64, usize, Method)> =
            rows.iter().map(|r| (r.delta, r.moment_count, r.method)).collect();
        assert_eq!(
            keys,
            vec![
                (0.2, 2, Method::LsqOracle),
                (0.2, 8, Method::Git),
                (0.5, 4, Method::Git),
                (0.5, 4, Method::Nn),
            ]
        );
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let config = ExperimentConfig {
            output_dir: file.path().join("sub"),
            ..ExperimentConfig::default()
        };
        assert!(matches!(
            emit_outputs(&[row(0.5, 4, Method::Nn)], &[], &config),
            Err(Error::Io(_))
        ));
    }
}
