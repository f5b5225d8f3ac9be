use gwg::verify::ErrorReport;

pub const CSV_HEADER: &str = "level,inv_h,energy_err,energy_rate,l2_err,l2_rate,edge_err,edge_rate";

fn rate_cell(r: Option<f64>) -> String {
    r.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// CSV rows for every completed level, optionally preceded by `# key = value`
/// comment lines.
pub fn format_csv(report: &ErrorReport, manifest: &[String]) -> String {
    let mut out = String::new();
    for line in manifest {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, l) in report.levels.iter().enumerate() {
        let rates = if i == 0 { [None; 3] } else { report.rates(i) };
        out.push_str(&format!("{i},{}", l.label));
        for (e, r) in l.errors().iter().zip(rates) {
            out.push_str(&format!(",{e:.16e},{}", rate_cell(r)));
        }
        out.push('\n');
    }
    out
}

/// `1.56E-04` style: three significant digits, signed two-digit exponent.
pub fn sci3(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.2E}");
    let (mant, exp) = s.split_once('E').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    format!("{mant}E{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

pub fn format_table(report: &ErrorReport) -> String {
    let header = ["1/h", "|||e_h|||", "rate", "||e_0||", "rate", "|||e_b|||", "rate"];
    let mut rows = vec![header.map(String::from).to_vec()];
    for (i, l) in report.levels.iter().enumerate() {
        let rates = if i == 0 { [None; 3] } else { report.rates(i) };
        let mut row = vec![l.label.to_string()];
        for (e, r) in l.errors().iter().zip(rates) {
            row.push(sci3(*e));
            row.push(r.map(|x| format!("{x:.2}")).unwrap_or_default());
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
