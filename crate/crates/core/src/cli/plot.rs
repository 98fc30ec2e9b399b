//! Static SVG chart of NMSE (log scale) against SNR, one polyline per scheme.

use std::fmt::Write;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("malformed CSV: {0}")]
    Malformed(String),
    #[error("CSV contains no data rows")]
    Empty,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 130.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Series {
    scheme: String,
    points: Vec<(f64, f64)>,
}

fn read_series(csv_text: &str) -> Result<Vec<Series>, PlotError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let mut columns: Option<(usize, usize, usize)> = None;
    let mut series: Vec<Series> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| PlotError::Malformed(e.to_string()))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        // Header rows may repeat when run outputs are concatenated.
        if record.iter().any(|f| f == "nmse_mean") {
            let find = |name: &str| {
                record
                    .iter()
                    .position(|f| f == name)
                    .ok_or_else(|| PlotError::Malformed(format!("missing column '{name}'")))
            };
            columns = Some((find("scheme")?, find("snr_db")?, find("nmse_mean")?));
            continue;
        }
        let (ci, si, ni) =
            columns.ok_or_else(|| PlotError::Malformed("data row before header".into()))?;
        let field = |i: usize| {
            record
                .get(i)
                .ok_or_else(|| PlotError::Malformed(format!("short row: {record:?}")))
        };
        let parse = |i: usize| -> Result<f64, PlotError> {
            let s = field(i)?;
            s.trim()
                .parse::<f64>()
                .map_err(|_| PlotError::Malformed(format!("not a number: '{s}'")))
        };
        let scheme = field(ci)?.to_string();
        let point = (parse(si)?, parse(ni)?);
        match series.iter_mut().find(|s| s.scheme == scheme) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                scheme,
                points: vec![point],
            }),
        }
    }
    if series.is_empty() {
        return Err(PlotError::Empty);
    }
    Ok(series)
}

/// Renders the chart for CSV text produced by `aircomp run`.
pub fn plot_svg(csv_text: &str) -> Result<String, PlotError> {
    let series = read_series(csv_text)?;
    let floor = 1e-300_f64;
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|&(x, y)| (x, y.max(floor).log10())))
        .collect();
    if all.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(PlotError::Malformed("non-finite SNR or NMSE".into()));
    }
    let (mut x_lo, mut x_hi) = all.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let (y_min, y_max) = all.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let (mut y_lo, mut y_hi) = (y_min.floor(), y_max.ceil());
    if x_hi - x_lo < 1e-9 {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    if y_hi - y_lo < 1.0 {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (sx(x_lo), sx(x_hi), sy(y_lo), sy(y_hi));
    let _ = writeln!(
        svg,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );

    // Decade ticks on y.
    let step = ((y_hi - y_lo) / 8.0).ceil().max(1.0);
    let mut d = y_lo;
    while d <= y_hi + 1e-9 {
        let y = sy(d);
        let _ = writeln!(
            svg,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"##,
            x0 - 6.0,
            y + 4.0,
            d as i64
        );
        d += step;
    }
    for i in 0..=4 {
        let xv = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let x = sx(xv);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{xv:.1}</text>"#,
            y0 + 5.0,
            y0 + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">SNR (dB)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">NMSE</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for (idx, s) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let vertices: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y.max(floor).log10())))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            vertices.join(" ")
        );
        let ly = MARGIN_TOP + 16.0 + 18.0 * idx as f64;
        let lx = x1 + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.scheme)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "scheme,M,K,snr_db,trials,nmse_mean,nmse_median,leakage_mean,aligned_rank,analytic_nmse,dof_slope";

    fn rows(scheme: &str, n: usize) -> String {
        (0..n)
            .map(|i| {
                let snr = 10.0 * i as f64;
                format!("{scheme},4,2,{snr},10,{},1,0,2,1,-0.1\n", 10f64.powf(-snr / 10.0))
            })
            .collect()
    }

    #[test]
    fn one_series() {
        let csv = format!("# tool: x\n{HEADER}\n{}", rows("sia", 5));
        let svg = plot_svg(&csv).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split_whitespace().count(), 5);
    }

    #[test]
    fn merged_series() {
        let csv = format!("{HEADER}\n{}{HEADER}\n{}", rows("sia", 5), rows("no_ia", 5));
        assert_eq!(plot_svg(&csv).unwrap().matches("<polyline").count(), 2);
    }

    #[test]
    fn bad_inputs() {
        assert_eq!(plot_svg(""), Err(PlotError::Empty));
        assert_eq!(plot_svg(&format!("{HEADER}\n")), Err(PlotError::Empty));
        assert!(matches!(plot_svg("sia,4,2\n"), Err(PlotError::Malformed(_))));
        let bad = format!("{HEADER}\nsia,4,2,zero,10,1,1,0,2,1,-0.1\n");
        assert!(matches!(plot_svg(&bad), Err(PlotError::Malformed(_))));
    }
}
