use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub method: String,
    pub train_set: String,
    pub test_set: String,
    /// Rejected share in percent, gating methods only.
    pub det_pct: Option<f64>,
    /// One cell per milestone, meters; `None` when no window contributed.
    pub mpjpe: Vec<Option<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub milestones_ms: Vec<f64>,
    pub rows: Vec<EvalRow>,
}

/// Three decimals, or `-` when absent.
pub fn format_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

fn ms_label(ms: f64) -> String {
    if ms.fract() == 0.0 {
        format!("{}", ms as i64)
    } else {
        format!("{ms}")
    }
}

fn header(report: &EvalReport) -> Vec<String> {
    let mut h: Vec<String> = ["method", "train_set", "test_set", "det_pct"].iter().map(|s| s.to_string()).collect();
    h.extend(report.milestones_ms.iter().map(|ms| format!("mpjpe_{}", ms_label(*ms))));
    h.push("accepted".into());
    h.push("rejected".into());
    h
}

fn cells(row: &EvalRow) -> Vec<String> {
    let mut c = vec![row.method.clone(), row.train_set.clone(), row.test_set.clone(), format_cell(row.det_pct)];
    c.extend(row.mpjpe.iter().map(|v| format_cell(*v)));
    c.push(row.accepted.to_string());
    c.push(row.rejected.to_string());
    c
}

/// `method,train_set,test_set,det_pct,mpjpe_400,...,accepted,rejected`
pub fn render_csv(report: &EvalReport) -> String {
    let mut out = header(report).join(",");
    out.push('\n');
    for row in &report.rows {
        out.push_str(&cells(row).join(","));
        out.push('\n');
    }
    out
}

/// Fixed-width table in the same column order as the CSV.
pub fn render_table(report: &EvalReport) -> String {
    let head = header(report);
    let body: Vec<Vec<String>> = report.rows.iter().map(cells).collect();
    let widths: Vec<usize> = (0..head.len())
        .map(|i| body.iter().map(|r| r[i].len()).chain([head[i].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let mut line = |cols: &[String]| {
        let parts: Vec<String> = cols
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        writeln!(out, "{}", parts.join("  ").trim_end()).unwrap();
    };
    line(&head);
    for r in &body {
        line(r);
    }
    out
}
