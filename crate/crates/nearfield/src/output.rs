//! CSV writers and the SVG sweep plot.

use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;
use nearfield_core::estimator_fresnel::{AngleSpectrum, DistanceSpectrum};
use nearfield_core::estimator_sf::SpectrumGrid;
use nearfield_core::experiment::{SweepRow, SweepTable};
use nearfield_core::signal::ReceivedData;
use serde::Serialize;

pub const SWEEP_METRICS: [&str; 4] = ["distance", "angle", "location", "distance_median"];

#[derive(Serialize)]
struct SweepRecord<'a> {
    sweep_param: &'a str,
    sweep_value: f64,
    estimator: &'a str,
    waveband: &'a str,
    metric: &'a str,
    nmse: f64,
    failures: usize,
    trials: usize,
}

fn metric_value(row: &SweepRow, metric: &str) -> f64 {
    match metric {
        "distance" => row.nmse.distance,
        "angle" => row.nmse.angle,
        "location" => row.nmse.location,
        "distance_median" => row.distance_median,
        _ => unreachable!("unknown metric {metric}"),
    }
}

/// Long format: one line per `(row, metric)`.
pub fn write_sweep_csv(table: &SweepTable, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &table.rows {
        for metric in SWEEP_METRICS {
            w.serialize(SweepRecord {
                sweep_param: row.point.param.label(),
                sweep_value: row.point.value,
                estimator: row.estimator.label(),
                waveband: row.point.waveband.label(),
                metric,
                nmse: metric_value(row, metric),
                failures: row.detection_failures,
                trials: row.n_trials,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SpectrumPoint {
    r_m: f64,
    theta_rad: f64,
    #[serde(rename = "J")]
    j: f64,
}

pub fn write_spectrum_2d(spectrum: &SpectrumGrid, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (r_m, theta_rad, j) in spectrum.points() {
        w.serialize(SpectrumPoint { r_m, theta_rad, j })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AnglePoint {
    theta_rad: f64,
    value: f64,
}

#[derive(Serialize)]
struct RangePoint {
    r_m: f64,
    value: f64,
}

pub fn write_angle_spectrum(spec: &AngleSpectrum, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (&theta_rad, &value) in spec.theta_axis.points().iter().zip(&spec.values) {
        w.serialize(AnglePoint { theta_rad, value })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_distance_spectrum(spec: &DistanceSpectrum, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (&r_m, &value) in spec.r_axis.points().iter().zip(&spec.values) {
        w.serialize(RangePoint { r_m, value })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Sample {
    subcarrier: usize,
    element: usize,
    snapshot: usize,
    re: f64,
    im: f64,
}

pub fn write_received(data: &ReceivedData, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (subcarrier, y) in data.per_subcarrier.iter().enumerate() {
        for element in 0..y.rows() {
            for snapshot in 0..y.cols() {
                let z = y[(element, snapshot)];
                w.serialize(Sample { subcarrier, element, snapshot, re: z.re, im: z.im })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Log-scale line chart of NMSE versus the sweep value, one line per
/// `(estimator, waveband, metric)`. Bandwidth sweeps use a log x axis.
pub fn sweep_svg(table: &SweepTable) -> String {
    const W: f64 = 720.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 230.0;
    const TOP: f64 = 20.0;
    const BOTTOM: f64 = 50.0;

    let log_x = table
        .rows
        .first()
        .is_some_and(|r| r.point.param == nearfield_core::experiment::SweepParam::BandwidthHz);
    let xf = |v: f64| if log_x { v.log10() } else { v };

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for row in &table.rows {
        for metric in &SWEEP_METRICS[..3] {
            let name =
                format!("{}-{}-{}", metric, row.point.waveband.label(), row.estimator.label());
            let y = metric_value(row, metric);
            let pt = (xf(row.point.value), if y > 0.0 { y.log10() } else { f64::NAN });
            match series.iter_mut().find(|s| s.0 == name) {
                Some(s) => s.1.push(pt),
                None => series.push((name, vec![pt])),
            }
        }
    }
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().filter(finite)).copied().collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, -1.0, 0.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    y0 = y0.floor();
    y1 = y1.ceil().max(y0 + 1.0);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for e in (y0 as i64)..=(y1 as i64) {
        let y = py(e as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"##,
            W - RIGHT,
            LEFT - 4.0,
            y + 4.0
        );
    }
    let mut ticks: Vec<f64> = all.iter().map(|p| p.0).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in ticks {
        let label = if log_x { format!("1e{t:.0}") } else { format!("{t}") };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            px(t),
            H - BOTTOM + 16.0
        );
    }
    let xlabel = if log_x { "bandwidth [Hz]" } else { "SNR [dB]" };
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xlabel}</text><text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">NMSE</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0,
        H / 2.0,
        H / 2.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = match i / PALETTE.len() {
            0 => "",
            1 => r#" stroke-dasharray="6 3""#,
            _ => r#" stroke-dasharray="2 2""#,
        };
        let path: Vec<String> =
            pts.iter().filter(finite).map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            path.join(" ")
        );
        let ly = TOP + 14.0 * i as f64 + 8.0;
        let lx = W - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{name}</text>"#,
            lx + 18.0,
            lx + 22.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
