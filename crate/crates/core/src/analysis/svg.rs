//! Static SVG charts of a run: dropout curves, efficiency against equity,
//! final psychosocial state and dropout by resilience class.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{final_psych_means, split_by_scenario, yearly_from_semesters, CurveRow, ScenarioSummary};
use crate::error::{Error, Result};
use crate::output::AgentRecord;
use crate::policy::ScenarioKind;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    DropoutCurves,
    EfficiencyEquity,
    Psychosocial,
    ResilienceDropout,
}

impl Figure {
    pub const ALL: [Figure; 4] = [
        Figure::DropoutCurves,
        Figure::EfficiencyEquity,
        Figure::Psychosocial,
        Figure::ResilienceDropout,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Figure::DropoutCurves => "fig1_cumulative_dropout.svg",
            Figure::EfficiencyEquity => "fig2_efficiency_equity.svg",
            Figure::Psychosocial => "fig3_psychosocial.svg",
            Figure::ResilienceDropout => "fig4_resilience_dropout.svg",
        }
    }
}

fn colour(k: ScenarioKind) -> &'static str {
    match k {
        ScenarioKind::Historical => "#1f77b4",
        ScenarioKind::DirectPromotion => "#d62728",
        ScenarioKind::SafetyNet => "#2ca02c",
    }
}

struct Canvas {
    body: String,
    y_max: f64,
}

impl Canvas {
    fn new(title: &str, x_label: &str, y_label: &str, y_max: f64) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(body, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = write!(body, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#, W / 2.0);
        let (x0, y0, x1) = (LEFT, H - BOTTOM, W - RIGHT);
        let _ = write!(body, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
        let _ = write!(body, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>"#);
        let _ = write!(
            body,
            r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
            (x0 + x1) / 2.0,
            H - 12.0
        );
        let _ = write!(
            body,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{y_label}</text>"#,
            (TOP + y0) / 2.0,
            (TOP + y0) / 2.0
        );
        let mut c = Canvas { body, y_max };
        for i in 0..=4 {
            let v = y_max * i as f64 / 4.0;
            let y = c.y(v);
            let _ = write!(c.body, r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#, x0 - 6.0, y + 4.0);
            let _ = write!(c.body, r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ddd"/>"##);
        }
        c
    }

    fn y(&self, v: f64) -> f64 {
        H - BOTTOM - (v / self.y_max).clamp(0.0, 1.0) * (H - BOTTOM - TOP)
    }

    fn legend(&mut self, row: usize, fill: &str, label: &str) {
        let x = W - RIGHT + 15.0;
        let y = TOP + 10.0 + 20.0 * row as f64;
        let _ = write!(self.body, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{fill}"/>"#, y - 10.0);
        let _ = write!(self.body, r#"<text x="{}" y="{y}">{label}</text>"#, x + 18.0);
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn nice_max(v: f64) -> f64 {
    ((v * 10.0).ceil() / 10.0).max(0.1)
}

fn dropout_curves(curves: &[CurveRow]) -> String {
    let mut c = Canvas::new("Cumulative dropout by year", "Year", "Cumulative dropout", 1.0);
    let plot_w = W - LEFT - RIGHT;
    let mut kinds: Vec<ScenarioKind> = curves.iter().map(|r| r.scenario).collect();
    kinds.sort();
    kinds.dedup();
    for (row, kind) in kinds.into_iter().enumerate() {
        let mut sem: Vec<&CurveRow> = curves.iter().filter(|r| r.scenario == kind).collect();
        sem.sort_by_key(|r| r.semester);
        let values: Vec<f64> = sem.iter().map(|r| r.cumulative_dropout).collect();
        let yearly = yearly_from_semesters(&values);
        let n = yearly.len().max(2) - 1;
        let points: Vec<String> = yearly
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.1},{:.1}", LEFT + plot_w * i as f64 / n as f64, c.y(*v)))
            .collect();
        let _ = write!(
            c.body,
            r#"<polyline class="series" data-scenario="{}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            kind.label(),
            points.join(" "),
            colour(kind)
        );
        c.legend(row, colour(kind), kind.label());
    }
    for i in 0..6 {
        let x = LEFT + plot_w * i as f64 / 5.0;
        let _ = write!(c.body, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 16.0, i + 1);
    }
    c.finish()
}

fn efficiency_equity(summary: &[ScenarioSummary]) -> String {
    let y_max = nice_max(summary.iter().map(|s| s.equity_gap_low_vs_high_resilience).fold(0.0, f64::max));
    let mut c = Canvas::new("Efficiency and equity", "Overall dropout rate", "Equity gap (LOW - HIGH)", y_max);
    let plot_w = W - LEFT - RIGHT;
    for (row, s) in summary.iter().enumerate() {
        let x = LEFT + plot_w * s.overall_dropout_rate.clamp(0.0, 1.0);
        let y = c.y(s.equity_gap_low_vs_high_resilience);
        let _ = write!(
            c.body,
            r#"<circle class="series" data-scenario="{}" cx="{x:.1}" cy="{y:.1}" r="6" fill="{}"/>"#,
            s.scenario.label(),
            colour(s.scenario)
        );
        c.legend(row, colour(s.scenario), s.scenario.label());
    }
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let _ = write!(
            c.body,
            r#"<text x="{}" y="{}" text-anchor="middle">{v:.2}</text>"#,
            LEFT + plot_w * v,
            H - BOTTOM + 16.0
        );
    }
    c.finish()
}

/// Grouped bars: one group per scenario, one bar per series.
fn grouped_bars(title: &str, y_label: &str, groups: &[(ScenarioKind, Vec<f64>)], series: &[(&str, &str)]) -> String {
    let y_max = nice_max(groups.iter().flat_map(|(_, v)| v.iter().copied()).fold(0.0, f64::max));
    let mut c = Canvas::new(title, "Scenario", y_label, y_max);
    let plot_w = W - LEFT - RIGHT;
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = group_w * 0.7 / series.len() as f64;
    for (g, (kind, values)) in groups.iter().enumerate() {
        let gx = LEFT + group_w * g as f64 + group_w * 0.15;
        for (i, v) in values.iter().enumerate() {
            let y = c.y(*v);
            let _ = write!(
                c.body,
                r#"<rect class="bar" data-scenario="{}" x="{:.1}" y="{y:.1}" width="{bar_w:.1}" height="{:.1}" fill="{}"/>"#,
                kind.label(),
                gx + bar_w * i as f64,
                H - BOTTOM - y,
                series[i].1
            );
        }
        let _ = write!(
            c.body,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            gx + group_w * 0.35,
            H - BOTTOM + 16.0,
            kind.label()
        );
    }
    for (row, (label, fill)) in series.iter().enumerate() {
        c.legend(row, fill, label);
    }
    c.finish()
}

/// Renders one figure to a string.
pub fn render(
    figure: Figure,
    records: &[AgentRecord],
    summary: &[ScenarioSummary],
    curves: &[CurveRow],
) -> Result<String> {
    Ok(match figure {
        Figure::DropoutCurves => dropout_curves(curves),
        Figure::EfficiencyEquity => efficiency_equity(summary),
        Figure::Psychosocial => {
            let groups = split_by_scenario(records)
                .into_iter()
                .map(|(k, rs)| final_psych_means(&rs).map(|(s, b)| (k, vec![s, b])))
                .collect::<Result<Vec<_>>>()?;
            grouped_bars(
                "Final stress and belonging",
                "Mean over all agents",
                &groups,
                &[("Stress", "#ff7f0e"), ("Belonging", "#9467bd")],
            )
        }
        Figure::ResilienceDropout => {
            let groups: Vec<_> = summary
                .iter()
                .map(|s| (s.scenario, vec![s.dropout_rate_low_resilience, s.dropout_rate_high_resilience]))
                .collect();
            grouped_bars(
                "Dropout by resilience class",
                "Dropout rate",
                &groups,
                &[("LOW", "#8c564b"), ("HIGH", "#17becf")],
            )
        }
    })
}

pub fn write_figures(
    dir: &Path,
    records: &[AgentRecord],
    summary: &[ScenarioSummary],
    curves: &[CurveRow],
) -> Result<Vec<PathBuf>> {
    Figure::ALL
        .iter()
        .map(|&f| {
            let path = dir.join(f.file_name());
            fs::write(&path, render(f, records, summary, curves)?).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
