//! Static SVG 1.1 plot in ROC space: false-positive rate across,
//! sensitivity up, both on `[0, 1]`.
//!
//! Layers from back to front: grid, SROC curve (grey), NCR boundary (blue,
//! dashed), CCR boundary (red), studies (open circles), summary point
//! (filled). Styling is fixed.

use std::fmt::Write;

use dta_core::{to_roc_space, Dataset, Vec2};

use crate::report::FitReport;

pub const BOUNDARY_POINTS: usize = 256;

const SIZE: f64 = 520.0;
const LEFT: f64 = 64.0;
const TOP: f64 = 40.0;
const SPAN: f64 = 416.0;

fn px(p: Vec2) -> (f64, f64) {
    (LEFT + SPAN * p[0], TOP + SPAN * (1.0 - p[1]))
}

fn points_attr(points: &[Vec2]) -> String {
    points
        .iter()
        .map(|p| {
            let (x, y) = px(*p);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Boundary of one region as ROC-space points, or `None` when the region
/// was not computed.
pub fn roc_boundary(region: Option<&crate::report::RegionReport>) -> Option<Vec<Vec2>> {
    let logit = region?.region.boundary(BOUNDARY_POINTS).ok()?;
    Some(to_roc_space(&logit))
}

pub fn render(d: &Dataset, report: &FitReport) -> String {
    let mut s = String::new();
    let w = |s: &mut String, line: String| {
        s.push_str(&line);
        s.push('\n');
    };
    w(&mut s, r#"<?xml version="1.0" encoding="UTF-8"?>"#.into());
    w(
        &mut s,
        format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
        ),
    );
    w(&mut s, format!(r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#));

    // grid and ticks
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let (x, _) = px([t, 0.0]);
        let (_, y) = px([0.0, t]);
        let (bottom, top) = (TOP + SPAN, TOP);
        w(&mut s, format!(r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{bottom}" stroke="#e0e0e0"/>"##));
        w(
            &mut s,
            format!(r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + SPAN),
        );
        w(&mut s, format!(r#"<text x="{x:.2}" y="{}" text-anchor="middle">{t:.1}</text>"#, bottom + 18.0));
        w(&mut s, format!(r#"<text x="{}" y="{:.2}" text-anchor="end">{t:.1}</text>"#, LEFT - 8.0, y + 4.0));
    }
    w(
        &mut s,
        format!(r#"<rect x="{LEFT}" y="{TOP}" width="{SPAN}" height="{SPAN}" fill="none" stroke="black"/>"#),
    );
    w(
        &mut s,
        format!(
            r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#,
            LEFT + SPAN / 2.0,
            SIZE - 12.0
        ),
    );
    w(
        &mut s,
        format!(
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">Sensitivity</text>"#,
            TOP + SPAN / 2.0
        ),
    );

    if !report.sroc.is_empty() {
        let pts: Vec<Vec2> = report.sroc.iter().map(|p| [p.fpr, p.sens]).collect();
        w(
            &mut s,
            format!(
                r##"<polyline id="sroc" points="{}" fill="none" stroke="#808080" stroke-width="1.5"/>"##,
                points_attr(&pts)
            ),
        );
    }
    if let Some(b) = roc_boundary(Some(&report.regions.ncr)) {
        w(
            &mut s,
            format!(
                r##"<polygon id="ncr" points="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5" stroke-dasharray="5,3"/>"##,
                points_attr(&b)
            ),
        );
    }
    if let Some(b) = roc_boundary(report.regions.ccr.as_ref()) {
        w(
            &mut s,
            format!(
                r##"<polygon id="ccr" points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##,
                points_attr(&b)
            ),
        );
    }

    w(&mut s, r#"<g id="studies" fill="none" stroke="black">"#.into());
    for (study, p) in d.studies().iter().zip(to_roc_space(&d.ys().collect::<Vec<_>>())) {
        let (x, y) = px(p);
        w(
            &mut s,
            format!(
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5"><title>{}</title></circle>"#,
                escape(&study.id)
            ),
        );
    }
    w(&mut s, "</g>".into());
    let (x, y) = px(report.summary_roc());
    w(&mut s, format!(r#"<circle id="summary" cx="{x:.2}" cy="{y:.2}" r="4.5" fill="black"/>"#));

    // legend, lower right
    let lx = LEFT + SPAN - 150.0;
    let mut ly = TOP + SPAN - 78.0;
    let mut entry = |s: &mut String, swatch: String, label: &str| {
        s.push_str(&swatch.replace("{y}", &format!("{ly:.2}")));
        s.push('\n');
        w(s, format!(r#"<text x="{}" y="{:.2}">{label}</text>"#, lx + 30.0, ly + 4.0));
        ly += 18.0;
    };
    entry(
        &mut s,
        format!(
            r##"<line x1="{lx}" y1="{{y}}" x2="{}" y2="{{y}}" stroke="#808080" stroke-width="1.5"/>"##,
            lx + 22.0
        ),
        "SROC curve",
    );
    entry(
        &mut s,
        format!(
            r##"<line x1="{lx}" y1="{{y}}" x2="{}" y2="{{y}}" stroke="#1f4e9c" stroke-width="1.5" stroke-dasharray="5,3"/>"##,
            lx + 22.0
        ),
        "Naive region",
    );
    if report.regions.ccr.is_some() {
        entry(
            &mut s,
            format!(
                r##"<line x1="{lx}" y1="{{y}}" x2="{}" y2="{{y}}" stroke="#c0392b" stroke-width="1.5"/>"##,
                lx + 22.0
            ),
            "Corrected region",
        );
    }
    entry(
        &mut s,
        format!(r#"<circle cx="{}" cy="{{y}}" r="4.5" fill="black"/>"#, lx + 11.0),
        "Summary point",
    );

    let title = format!("Summary ROC, n = {}, alpha = {}", d.len(), report.regions.ncr.region.alpha);
    let _ = write!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        SIZE / 2.0,
        escape(&title)
    );
    s.push_str("\n</svg>\n");
    s
}
