//! Report and plot output for a synced pair of logs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::firmware::{AIR_FILE, GROUND_FILE};
use crate::wxindices::{self, FreezingStatus, SoundingProfile, WxReport};

pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";
pub const PLOTS_DIR: &str = "plots";

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 48.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    HeightTemperature,
    HeightHumidity,
    HeightPressure,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [
        PlotKind::HeightTemperature,
        PlotKind::HeightHumidity,
        PlotKind::HeightPressure,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::HeightTemperature => "height_temperature.svg",
            PlotKind::HeightHumidity => "height_humidity.svg",
            PlotKind::HeightPressure => "height_pressure.svg",
        }
    }

    fn title(self) -> &'static str {
        match self {
            PlotKind::HeightTemperature => "Height / temperature",
            PlotKind::HeightHumidity => "Height / humidity",
            PlotKind::HeightPressure => "Height / pressure",
        }
    }

    fn x_label(self) -> &'static str {
        match self {
            PlotKind::HeightTemperature => "Temperature (°C)",
            PlotKind::HeightHumidity => "Relative humidity (%)",
            PlotKind::HeightPressure => "Pressure (hPa)",
        }
    }

    fn value(self, level: &wxindices::ProfileLevel) -> f64 {
        match self {
            PlotKind::HeightTemperature => level.temperature,
            PlotKind::HeightHumidity => level.humidity,
            PlotKind::HeightPressure => level.pressure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotDocument {
    pub kind: PlotKind,
    pub svg: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub report: WxReport,
    pub plots: Vec<PlotDocument>,
    pub sources: Vec<PathBuf>,
    pub generated_at: NaiveDateTime,
}

/// Axis range covering `values` with 5% padding on each side.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    let pad = if span > 0.0 {
        0.05 * span
    } else {
        (0.05 * lo.abs()).max(1.0)
    };
    (lo - pad, hi + pad)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn render_plot(kind: PlotKind, profile: &SoundingProfile) -> String {
    let levels = &profile.levels;
    let (x0, x1) = padded_range(levels.iter().map(|l| kind.value(l)));
    let (y0, y1) = padded_range(levels.iter().map(|l| l.altitude));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        esc(kind.title())
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT:.2}" y="{MARGIN_TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );

    let _ = writeln!(s, r##"<g class="ticks" stroke="#ccc">"##);
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{MARGIN_TOP:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            px(xv),
            px(xv),
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN_LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
            py(yv),
            MARGIN_LEFT + plot_w,
            py(yv)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g class="labels" fill="black">"#);
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text>"#,
            px(xv),
            MARGIN_TOP + plot_h + 14.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.1}</text>"#,
            MARGIN_LEFT - 4.0,
            py(yv) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        esc(kind.x_label())
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">Height (m)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );
    let _ = writeln!(s, "</g>");

    if levels.len() > 1 {
        let points: Vec<String> = levels
            .iter()
            .map(|l| format!("{:.2},{:.2}", px(kind.value(l)), py(l.altitude)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="profile" fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
    }
    let _ = writeln!(s, r#"<g class="points" fill="steelblue">"#);
    for l in levels {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#,
            px(kind.value(l)),
            py(l.altitude)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

/// One SVG per plot kind, height on the vertical axis.
pub fn render_plots(profile: &SoundingProfile) -> Result<Vec<PlotDocument>> {
    if profile.levels.is_empty() {
        return Err(Error::Data("no profile levels to plot".into()));
    }
    Ok(PlotKind::ALL
        .iter()
        .map(|&kind| PlotDocument {
            kind,
            svg: render_plot(kind, profile),
        })
        .collect())
}

fn opt(v: Option<f64>, digits: usize, unit: &str) -> String {
    match v {
        Some(v) => format!("{v:.digits$} {unit}"),
        None => "unavailable".into(),
    }
}

fn freezing_line(report: &WxReport) -> String {
    let fl = &report.freezing_level;
    match (fl.status, fl.altitude) {
        (FreezingStatus::Bracketed, Some(h)) => format!("{h:.0} m (interpolated)"),
        (FreezingStatus::Extrapolated, Some(h)) => format!("{h:.0} m (extrapolated)"),
        (FreezingStatus::BelowSurface, Some(h)) => format!("{h:.0} m (below surface)"),
        _ => "indeterminate".into(),
    }
}

pub fn render_text_report(report: &WxReport, generated_at: NaiveDateTime) -> String {
    let mut s = String::new();
    let ts = |t: NaiveDateTime| t.format("%Y-%m-%d %H:%M:%S").to_string();
    let _ = writeln!(s, "Weather sounding report");
    let _ = writeln!(s);
    let _ = writeln!(s, "Collection start     {}", ts(report.collection_time));
    let _ = writeln!(s, "Collection end       {}", ts(report.collection_end));
    let _ = writeln!(s, "Processed            {}", ts(generated_at));
    let _ = writeln!(s, "Ground rows          {}", report.ground_rows);
    let _ = writeln!(s, "Profile levels       {}", report.levels.len());
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Surface temperature  {:.1} °C",
        report.surface_temperature
    );
    let _ = writeln!(s, "Surface humidity     {:.1} %", report.surface_humidity);
    let _ = writeln!(s, "Surface pressure     {:.2} hPa", report.surface_pressure);
    let _ = writeln!(s, "Dew point            {}", opt(report.dew_point, 1, "°C"));
    let _ = writeln!(s, "Heat index           {:.1} °C", report.heat_index);
    let _ = writeln!(s, "Discomfort index     {:.1}", report.discomfort_index);
    let _ = writeln!(s, "Freezing level       {}", freezing_line(report));
    let _ = writeln!(
        s,
        "Fitted lapse rate    {}",
        opt(report.fitted_lapse_rate.map(|l| l * 1000.0), 2, "°C/km")
    );
    if !report.levels.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "  height_m  temp_C  rh_pct  press_hPa  dewpt_C");
        for l in &report.levels {
            let dp = l
                .dew_point
                .map_or_else(|| "-".to_string(), |d| format!("{d:.1}"));
            let _ = writeln!(
                s,
                "{:>10.2}{:>8.1}{:>8.1}{:>11.2}{:>9}",
                l.altitude, l.temperature, l.humidity, l.pressure, dp
            );
        }
    }
    s
}

pub fn render_json_report(report: &WxReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Reads `air.csv` and `ground.csv` from `dir` and builds the report bundle.
pub fn build_bundle(dir: &Path, generated_at: NaiveDateTime) -> Result<ReportBundle> {
    let read = |name: &str| -> Result<String> {
        let path = dir.join(name);
        fs::read_to_string(&path)
            .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
    };
    let ground = wxindices::parse_rows(&read(GROUND_FILE)?)?;
    let air = wxindices::parse_rows(&read(AIR_FILE)?)?;
    let profile = wxindices::build_profile(&air, &ground)?;
    let report = wxindices::build_report(&profile);
    let plots = if profile.levels.is_empty() {
        Vec::new()
    } else {
        render_plots(&profile)?
    };
    Ok(ReportBundle {
        report,
        plots,
        sources: vec![dir.join(AIR_FILE), dir.join(GROUND_FILE)],
        generated_at,
    })
}

/// Writes the text report, the JSON report and the plots under `out`.
pub fn write_bundle(bundle: &ReportBundle, out: &Path) -> Result<()> {
    fs::create_dir_all(out.join(PLOTS_DIR))?;
    fs::write(
        out.join(REPORT_TEXT),
        render_text_report(&bundle.report, bundle.generated_at),
    )?;
    fs::write(out.join(REPORT_JSON), render_json_report(&bundle.report)?)?;
    for plot in &bundle.plots {
        fs::write(out.join(PLOTS_DIR).join(plot.kind.file_name()), &plot.svg)?;
    }
    Ok(())
}
