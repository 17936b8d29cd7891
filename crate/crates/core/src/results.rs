//! CSV serialization of regret traces and sweep tables.
//!
//! Trace files carry one row per `(trace, t)` with the exact header
//! `policy,delta,rep,t,cum_realized,cum_pseudo`. Rows are sorted by
//! `(policy, delta, rep, t)` regardless of input order, and floats are
//! printed with 17 significant digits so re-parsing reproduces the 64-bit
//! values exactly. Two runs with the same config and seed produce
//! byte-identical files.

use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::sim::{RegretTrace, SweepRow};

/// Header of a trace CSV.
pub const TRACE_HEADER: &str = "policy,delta,rep,t,cum_realized,cum_pseudo";

/// Header of a sweep CSV.
pub const SWEEP_HEADER: &str = "policy,delta,replications,final_mean_realized,\
final_se_realized,final_mean_pseudo,final_se_pseudo";

/// 17 significant digits: lossless for f64 round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes all traces as CSV, sorted into canonical row order.
pub fn write_results(traces: &[RegretTrace], path: &Path) -> io::Result<()> {
    let mut order: Vec<&RegretTrace> = traces.iter().collect();
    order.sort_by(|a, b| {
        a.policy
            .cmp(&b.policy)
            .then(a.delta.total_cmp(&b.delta))
            .then(a.replication.cmp(&b.replication))
    });
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{TRACE_HEADER}")?;
    for trace in order {
        let delta = fmt_f64(trace.delta);
        for (i, (r, p)) in trace
            .cum_realized
            .iter()
            .zip(&trace.cum_pseudo)
            .enumerate()
        {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                trace.policy,
                delta,
                trace.replication,
                i + 1,
                fmt_f64(*r),
                fmt_f64(*p),
            )?;
        }
    }
    out.flush()
}

/// Writes a delta-sweep table as CSV, sorted by `(policy, delta)`.
pub fn write_sweep(rows: &[SweepRow], path: &Path) -> io::Result<()> {
    let mut order: Vec<&SweepRow> = rows.iter().collect();
    order.sort_by(|a, b| a.policy.cmp(&b.policy).then(a.delta.total_cmp(&b.delta)));
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in order {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.policy,
            fmt_f64(row.delta),
            row.replications,
            fmt_f64(row.final_mean_realized),
            fmt_f64(row.final_se_realized),
            fmt_f64(row.final_mean_pseudo),
            fmt_f64(row.final_se_pseudo),
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(policy: &str, delta: f64, rep: u32, values: &[f64]) -> RegretTrace {
        RegretTrace {
            policy: policy.to_string(),
            delta,
            replication: rep,
            cum_realized: values.to_vec(),
            cum_pseudo: values.iter().map(|v| v * 0.5).collect(),
        }
    }

    #[test]
    fn row_count_is_traces_times_horizon() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let traces = vec![trace("genie", 0.3, 0, &[0.1, 0.2, 0.3])];
        write_results(&traces, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], TRACE_HEADER);
        assert!(lines[1].starts_with("genie,"));
    }

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let values = [0.1 + 0.2, 1.0 / 3.0, f64::MIN_POSITIVE, 12345.6789];
        let traces = vec![trace("ucb", 1.0 / 3.0, 2, &values)];
        write_results(&traces, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for (line, expected) in text.lines().skip(1).zip(values) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0 / 3.0);
            assert_eq!(fields[4].parse::<f64>().unwrap(), expected);
            assert_eq!(fields[5].parse::<f64>().unwrap(), expected * 0.5);
        }
    }

    #[test]
    fn rows_are_sorted_canonically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let traces = vec![
            trace("ucb", 0.3, 1, &[1.0]),
            trace("genie", 0.5, 0, &[1.0]),
            trace("genie", 0.3, 1, &[1.0]),
            trace("genie", 0.3, 0, &[1.0]),
        ];
        write_results(&traces, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let keys: Vec<String> = text
            .lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{}", f[0], f[1].parse::<f64>().unwrap(), f[2])
            })
            .collect();
        assert_eq!(
            keys,
            vec!["genie,0.3,0", "genie,0.3,1", "genie,0.5,0", "ucb,0.3,1"]
        );
    }

    #[test]
    fn identical_input_gives_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let traces = vec![trace("greedy", 0.25, 0, &[0.5, 1.5])];
        write_results(&traces, &a).unwrap();
        write_results(&traces, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn sweep_table_writes_one_row_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let rows = vec![
            SweepRow {
                policy: "genie".into(),
                delta: 0.3,
                replications: 10,
                final_mean_realized: 12.0,
                final_se_realized: 0.5,
                final_mean_pseudo: 11.0,
                final_se_pseudo: 0.4,
            },
            SweepRow {
                policy: "genie".into(),
                delta: 0.1,
                replications: 10,
                final_mean_realized: 20.0,
                final_se_realized: 0.6,
                final_mean_pseudo: 19.0,
                final_se_pseudo: 0.5,
            },
        ];
        write_sweep(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], SWEEP_HEADER);
        // sorted by delta within the policy
        let delta_of = |l: &str| l.split(',').nth(1).unwrap().parse::<f64>().unwrap();
        assert_eq!(delta_of(lines[1]), 0.1);
        assert_eq!(delta_of(lines[2]), 0.3);
    }
}
