//! CSV reports for completed runs.
//!
//! All numeric fields are decimal text with 9 significant digits, so a run
//! with the same configuration and seed produces byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::channel::ChannelState;
use crate::error::Result;
use crate::metrics::EstimateLog;
use crate::sim::{mean_stderr, ComparisonCell, SessionRecord};

/// Formats a float as plain decimal text with 9 significant digits.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:e}");
    let exp: i32 = sci
        .split('e')
        .nth(1)
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn join_usize(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn bitstring(flags: impl Iterator<Item = bool>) -> String {
    flags.map(|f| if f { '1' } else { '0' }).collect()
}

/// Streaming writer for `sessions.csv`, one summary row per session.
pub struct SessionCsvWriter<W: Write> {
    out: W,
}

impl SessionCsvWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> SessionCsvWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(
            out,
            "session,truth,assignment,sensor_counts,occupied_votes,fused,estimates,adaptive_k"
        )?;
        Ok(Self { out })
    }

    /// Encodings: `truth` is one digit per channel (1 = occupied); `fused`
    /// uses 1/0 for verdicts and `-` for unsensed channels; vector fields
    /// are semicolon-joined in channel (or node) order.
    pub fn write_record(&mut self, record: &SessionRecord) -> Result<()> {
        let fused: String = record
            .fused
            .iter()
            .map(|f| match f {
                Some(ChannelState::Occupied) => '1',
                Some(ChannelState::Vacant) => '0',
                None => '-',
            })
            .collect();
        let estimates = record
            .estimates
            .iter()
            .map(|e| fmt_sig9(*e))
            .collect::<Vec<_>>()
            .join(";");
        let adaptive = record
            .adaptive_k
            .as_ref()
            .map(|ks| {
                ks.iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{}",
            record.session,
            bitstring(record.truth.iter().copied()),
            join_usize(&record.assignment),
            join_usize(&record.sensor_counts),
            join_usize(&record.occupied_votes),
            fused,
            estimates,
            adaptive
        )?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Renders `metrics.csv`: per-channel RMSE rows followed by the effective
/// RMSE row, aggregated over replications (mean and standard error).
pub fn metrics_csv(logs: &[EstimateLog], top_n: usize) -> String {
    assert!(!logs.is_empty());
    let channels = logs[0].num_channels();
    let mut out = String::from("metric,index,truth,mean,stderr\n");
    for m in 0..channels {
        let values: Vec<f64> = logs.iter().map(|log| log.rmse(m)).collect();
        let (mean, stderr) = mean_stderr(&values);
        out.push_str(&format!(
            "rmse,{m},{},{},{}\n",
            fmt_sig9(logs[0].truth()[m]),
            fmt_sig9(mean),
            fmt_sig9(stderr)
        ));
    }
    let values: Vec<f64> = logs.iter().map(|log| log.rmse_me(top_n)).collect();
    let (mean, stderr) = mean_stderr(&values);
    out.push_str(&format!(
        "rmse_me,{top_n},,{},{}\n",
        fmt_sig9(mean),
        fmt_sig9(stderr)
    ));
    out
}

pub fn write_metrics_csv(path: &Path, logs: &[EstimateLog], top_n: usize) -> Result<()> {
    fs::write(path, metrics_csv(logs, top_n))?;
    Ok(())
}

/// Renders `comparison.csv` from scheme-sweep cells.
pub fn comparison_csv(cells: &[ComparisonCell]) -> String {
    let mut out = String::from("scheme,nodes,fusion,rmse_me_mean,rmse_me_stderr,replications\n");
    for cell in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cell.scheme,
            cell.nodes,
            cell.fusion,
            fmt_sig9(cell.mean),
            fmt_sig9(cell.stderr),
            cell.per_replication.len()
        ));
    }
    out
}

pub fn write_comparison_csv(path: &Path, cells: &[ComparisonCell]) -> Result<()> {
    fs::write(path, comparison_csv(cells))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig9(0.5), "0.500000000");
        assert_eq!(fmt_sig9(0.0), "0.00000000");
        assert_eq!(fmt_sig9(-0.0), "0.00000000");
        assert_eq!(fmt_sig9(1.0), "1.00000000");
        assert_eq!(fmt_sig9(0.123456789123), "0.123456789");
        assert_eq!(fmt_sig9(12.25), "12.2500000");
        assert_eq!(fmt_sig9(-0.0725), "-0.0725000000");
        assert_eq!(fmt_sig9(5e-5), "0.0000500000000");
    }

    #[test]
    fn session_rows_encode_fields() {
        let record = SessionRecord {
            session: 3,
            truth: vec![true, false],
            assignment: vec![0, 0, 1],
            sensor_counts: vec![2, 1],
            occupied_votes: vec![2, 0],
            fused: vec![Some(ChannelState::Occupied), Some(ChannelState::Vacant)],
            estimates: vec![0.25, 0.75],
            adaptive_k: Some(vec![2, 1]),
        };
        let mut buf = Vec::new();
        let mut writer = SessionCsvWriter::new(&mut buf).unwrap();
        writer.write_record(&record).unwrap();
        writer.finish().unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "session,truth,assignment,sensor_counts,occupied_votes,fused,estimates,adaptive_k"
        );
        assert_eq!(
            lines.next().unwrap(),
            "3,10,0;0;1,2;1,2;0,10,0.250000000;0.750000000,2;1"
        );
    }

    #[test]
    fn unsensed_channels_render_as_dash() {
        let record = SessionRecord {
            session: 0,
            truth: vec![false],
            assignment: vec![],
            sensor_counts: vec![0],
            occupied_votes: vec![0],
            fused: vec![None],
            estimates: vec![0.5],
            adaptive_k: None,
        };
        let mut buf = Vec::new();
        let mut writer = SessionCsvWriter::new(&mut buf).unwrap();
        writer.write_record(&record).unwrap();
        writer.finish().unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",-,"));
    }

    #[test]
    fn metrics_csv_shape() {
        let mut log = EstimateLog::new(vec![0.3, 0.7]);
        log.push_session(&[0.3, 0.6]);
        log.push_session(&[0.3, 0.8]);
        let text = metrics_csv(&[log], 1);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "metric,index,truth,mean,stderr");
        assert!(lines[1].starts_with("rmse,0,0.300000000,"));
        assert!(lines[3].starts_with("rmse_me,1,,0.100000000,"));
    }
}
