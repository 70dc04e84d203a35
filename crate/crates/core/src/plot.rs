//! Static SVG charts built from the metric and scenario CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{read_table, Table};

const W: f64 = 720.0;
const H: f64 = 420.0;
const M: f64 = 56.0;
const PALETTE: &[&str] = &["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, esc(title));
    s
}

fn axes(s: &mut String, xlabel: &str, ylabel: &str, ymin: f64, ymax: f64) {
    let (x0, y0, y1) = (M, H - M, M);
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>", W - M / 2.0);
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    for k in 0..=4 {
        let v = ymin + (ymax - ymin) * k as f64 / 4.0;
        let y = y0 - (y0 - y1) * k as f64 / 4.0;
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", x0 - 4.0, y + 4.0, tick(v));
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 14.0, esc(xlabel));
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(s: &mut String, names: &[String]) {
    for (k, n) in names.iter().enumerate() {
        let y = M + 14.0 * k as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{}\" y=\"{}\">{}</text>",
            W - 150.0,
            y - 9.0,
            PALETTE[k % PALETTE.len()],
            W - 135.0,
            y,
            esc(n)
        );
    }
}

/// Overlaid histograms sharing one set of bins.
pub fn histogram(title: &str, xlabel: &str, series: &[(String, Vec<f64>)], bins: usize) -> String {
    let all: Vec<f64> = series.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let mut s = open(title);
    if all.is_empty() || bins == 0 {
        s.push_str("</svg>\n");
        return s;
    }
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let counts: Vec<Vec<usize>> = series
        .iter()
        .map(|(_, v)| {
            let mut c = vec![0usize; bins];
            for &x in v {
                let b = (((x - lo) / width) as usize).min(bins - 1);
                c[b] += 1;
            }
            c
        })
        .collect();
    let cmax = counts.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    axes(&mut s, xlabel, "customers", 0.0, cmax);
    let plot_w = W - 1.5 * M;
    let bar_w = plot_w / bins as f64;
    for (k, c) in counts.iter().enumerate() {
        let sub = bar_w / series.len() as f64;
        for (b, &n) in c.iter().enumerate() {
            let h = (H - 2.0 * M) * n as f64 / cmax;
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                M + b as f64 * bar_w + k as f64 * sub,
                H - M - h,
                sub.max(0.5),
                h,
                PALETTE[k % PALETTE.len()]
            );
        }
    }
    for b in [0, bins / 2, bins] {
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            M + b as f64 * bar_w,
            H - M + 14.0,
            tick(lo + b as f64 * width)
        );
    }
    legend(&mut s, &series.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Hour (rows) × month (columns) heatmap with a diverging palette; absent
/// cells are drawn grey.
pub fn heatmap(title: &str, cells: &[[Option<f64>; 12]; 24]) -> String {
    let mut s = open(title);
    let vmax = cells
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    let (cw, ch) = ((W - 2.0 * M) / 12.0, (H - 2.0 * M) / 24.0);
    for (h, row) in cells.iter().enumerate() {
        for (m, cell) in row.iter().enumerate() {
            let fill = match cell {
                None => "#dddddd".to_string(),
                Some(v) => {
                    let a = (v.abs() / vmax).min(1.0);
                    let fade = (255.0 * (1.0 - a)).round() as u8;
                    if *v >= 0.0 {
                        format!("#{fade:02x}{:02x}ff", fade)
                    } else {
                        format!("#ff{fade:02x}{:02x}", fade)
                    }
                }
            };
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"/>",
                M + m as f64 * cw,
                M + h as f64 * ch,
                cw,
                ch
            );
        }
    }
    for m in 0..12 {
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>", M + (m as f64 + 0.5) * cw, H - M + 14.0, m + 1);
    }
    for h in (0..24).step_by(3) {
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{h:02}</text>", M - 4.0, M + (h as f64 + 0.7) * ch);
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">month</text>", W / 2.0, H - 14.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">blue = positive, red = negative, max |v| = {}</text>", M, M - 8.0, tick(vmax));
    s.push_str("</svg>\n");
    s
}

/// Grouped bars, one group per category.
pub fn grouped_bars(title: &str, ylabel: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let mut s = open(title);
    let vals = series.iter().flat_map(|(_, v)| v.iter().copied());
    let lo = vals.clone().fold(0.0f64, f64::min);
    let mut hi = vals.fold(0.0f64, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    axes(&mut s, "", ylabel, lo, hi);
    let n = categories.len().max(1) as f64;
    let gw = (W - 1.5 * M) / n;
    let bw = gw * 0.8 / series.len().max(1) as f64;
    let y_of = |v: f64| H - M - (H - 2.0 * M) * (v - lo) / (hi - lo);
    for (k, (_, v)) in series.iter().enumerate() {
        for (c, &x) in v.iter().enumerate() {
            let (ya, yb) = (y_of(x.max(0.0)), y_of(x.min(0.0)));
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                M + c as f64 * gw + gw * 0.1 + k as f64 * bw,
                ya,
                bw,
                (yb - ya).max(0.0),
                PALETTE[k % PALETTE.len()]
            );
        }
    }
    for (c, name) in categories.iter().enumerate() {
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>", M + (c as f64 + 0.5) * gw, H - M + 14.0, esc(name));
    }
    legend(&mut s, &series.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

fn numbers(t: &Table, col: &str) -> Vec<Option<f64>> {
    match t.column(col) {
        Some(k) => t.rows.iter().map(|r| r.get(k).and_then(|v| v.parse().ok())).collect(),
        None => Vec::new(),
    }
}

fn write(path: PathBuf, body: String, out: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    out.push(path);
    Ok(())
}

/// Renders every chart whose source CSV exists in `dir`; errors if none does.
pub fn plot_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let annual = dir.join("annual_error.csv");
    if annual.exists() {
        let t = read_table(&annual)?;
        let series: Vec<(String, Vec<f64>)> = [("net", "net_pct_error"), ("estimated", "est_pct_error")]
            .iter()
            .map(|(n, c)| (n.to_string(), numbers(&t, c).into_iter().flatten().collect()))
            .collect();
        write(dir.join("annual_error_hist.svg"), histogram("Annual generation error", "% error", &series, 20), &mut out)?;
    }
    let grid = dir.join("hour_month_grid.csv");
    if grid.exists() {
        let t = read_table(&grid)?;
        let (hc, mc) = (numbers(&t, "hour"), numbers(&t, "month"));
        let diff = numbers(&t, "diff_pct");
        let mut cells = [[None; 12]; 24];
        for k in 0..diff.len() {
            if let (Some(h), Some(m)) = (hc[k], mc[k]) {
                let (h, m) = (h as usize, m as usize);
                if h < 24 && (1..=12).contains(&m) {
                    cells[h][m - 1] = diff[k];
                }
            }
        }
        write(dir.join("hour_month_heatmap.svg"), heatmap("MAPE reduction (net − estimated), hour × month", &cells), &mut out)?;
    }
    let monthly = dir.join("monthly_mape.csv");
    if monthly.exists() {
        let t = read_table(&monthly)?;
        let cats: Vec<String> = (1..=12).map(|m| m.to_string()).collect();
        let series: Vec<(String, Vec<f64>)> = [("net", "net_mape_pct"), ("estimated", "est_mape_pct")]
            .iter()
            .map(|(n, c)| (n.to_string(), numbers(&t, c).into_iter().map(|v| v.unwrap_or(0.0)).collect()))
            .collect();
        write(dir.join("monthly_mape.svg"), grouped_bars("Monthly MAPE", "MAPE %", &cats, &series), &mut out)?;
    }
    let scen = dir.join("scenario_monthly.csv");
    if scen.exists() {
        let t = read_table(&scen)?;
        let (sc, mc) = (t.column("scenario"), t.column("month"));
        let gen = numbers(&t, "generation_kwh");
        if let (Some(sc), Some(mc)) = (sc, mc) {
            let mut months: Vec<String> = Vec::new();
            let mut series: Vec<(String, Vec<f64>)> = Vec::new();
            for (k, r) in t.rows.iter().enumerate() {
                let (name, month) = (r[sc].clone(), r[mc].clone());
                let mi = months.iter().position(|m| *m == month).unwrap_or_else(|| {
                    months.push(month.clone());
                    months.len() - 1
                });
                let si = series.iter().position(|(n, _)| *n == name).unwrap_or_else(|| {
                    series.push((name.clone(), Vec::new()));
                    series.len() - 1
                });
                let v = &mut series[si].1;
                if v.len() <= mi {
                    v.resize(mi + 1, 0.0);
                }
                v[mi] = -gen[k].unwrap_or(0.0);
            }
            write(dir.join("scenario_monthly.svg"), grouped_bars("Scenario monthly generation", "kWh", &months, &series), &mut out)?;
        }
    }
    if out.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no metric or scenario CSVs to plot"),
        ));
    }
    Ok(out)
}
