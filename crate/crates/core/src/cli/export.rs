use std::fmt::Write as _;

use anyhow::{anyhow, bail, Result};

use crate::cli::output::{Manifest, OutputDir};
use crate::cli::ExportPlotArgs;

/// Columns that identify a series rather than carry a value.
const KEY_COLUMNS: [&str; 6] = ["sample", "joint", "method", "series", "train_set", "test_set"];
const TIME_COLUMNS: [&str; 5] = ["t_ms", "frame", "step", "epoch", "iteration"];

/// Rewrites a wide CSV as `series,t_ms,value` rows.
///
/// Milestone tables (`mpjpe_<ms>` columns) become one series per row keyed by
/// its identifying columns. Otherwise time comes from `t_ms`, else `frame`
/// (converted with `rate_hz`), else `step`/`epoch`/`iteration` taken as is.
/// Cells that are not numbers (such as `-`) are skipped.
pub fn to_long_format(csv: &str, rate_hz: f64) -> Result<String> {
    let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| anyhow!("input CSV is empty"))?.split(',').map(str::trim).collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').map(str::trim).collect()).collect();
    if let Some(bad) = rows.iter().position(|r| r.len() != header.len()) {
        bail!("row {} has {} fields, header has {}", bad + 2, rows[bad].len(), header.len());
    }
    let keys: Vec<usize> = (0..header.len()).filter(|i| KEY_COLUMNS.contains(&header[*i])).collect();
    let key_of = |r: &[&str]| -> String {
        keys.iter().map(|&i| format!("{}={}", header[i], r[i])).collect::<Vec<_>>().join(";")
    };
    let mut out = String::from("series,t_ms,value\n");
    let milestones: Vec<(usize, f64)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("mpjpe_").and_then(|ms| ms.parse::<f64>().ok()).map(|ms| (i, ms)))
        .collect();
    if !milestones.is_empty() {
        for r in &rows {
            for &(i, ms) in &milestones {
                if let Ok(v) = r[i].parse::<f64>() {
                    writeln!(out, "{},{ms},{v}", key_of(r))?;
                }
            }
        }
        return Ok(out);
    }
    let time = TIME_COLUMNS
        .iter()
        .find_map(|t| header.iter().position(|h| h == t))
        .ok_or_else(|| anyhow!("no time column (t_ms, frame, step, epoch or iteration)"))?;
    let from_frame = header[time] == "frame" && !header.contains(&"t_ms");
    let skip: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(i, h)| *i == time || keys.contains(i) || TIME_COLUMNS.contains(h))
        .map(|(i, _)| i)
        .collect();
    for r in &rows {
        let Ok(mut t) = r[time].parse::<f64>() else { continue };
        if from_frame {
            t *= 1000.0 / rate_hz;
        }
        let key = key_of(r);
        for (i, h) in header.iter().enumerate().filter(|(i, _)| !skip.contains(i)) {
            if let Ok(v) = r[i].parse::<f64>() {
                let series = if key.is_empty() { h.to_string() } else { format!("{h}[{key}]") };
                writeln!(out, "{series},{t},{v}")?;
            }
        }
    }
    Ok(out)
}

pub fn export_plot(a: ExportPlotArgs, argv: &[String]) -> Result<()> {
    if !(a.rate > 0.0) {
        bail!("rate must be positive");
    }
    let mut m = Manifest::new("export-plot", argv);
    m.config([format!("rate={}", a.rate)]);
    let bytes = std::fs::read(&a.input).map_err(|e| anyhow!("cannot read {}: {e}", a.input.display()))?;
    m.input(&a.input, &bytes);
    let text = String::from_utf8(bytes).map_err(|_| anyhow!("{} is not UTF-8 text", a.input.display()))?;
    let long = to_long_format(&text, a.rate)?;
    let stem = a.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "table".into());
    let mut out = OutputDir::create(&a.out)?;
    out.write(&format!("{stem}_long.csv"), long.as_bytes())?;
    m.finish(out)
}
