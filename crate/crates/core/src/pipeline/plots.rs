//! SVG figures with CSV sidecars holding the plotted data.

use std::fmt::Write as _;

use super::artifacts::{csv_bytes, Artifacts};
use super::{CampaignReport, LocationReport};
use crate::error::Result;
use crate::response::{frf, linear_grid};

const STAGE: &str = "report";
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
/// Radius of the largest bubble [px].
pub const MAX_BUBBLE_RADIUS: f64 = 40.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Linear map of a data range onto a pixel range.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else if lo == 0.0 {
            (0.0, 1.0)
        } else {
            (lo - lo.abs() * 0.5, lo + lo.abs() * 0.5)
        };
        Self { lo, hi, p0, p1 }
    }

    /// Range padded by a fraction on both sides.
    fn padded(lo: f64, hi: f64, pad: f64, p0: f64, p1: f64) -> Self {
        let a = Self::new(lo, hi, p0, p1);
        let d = (a.hi - a.lo) * pad;
        Self::new(a.lo - d, a.hi + d, p0, p1)
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0).collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(body, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        Self { body }
    }

    fn frame(&mut self, x: &Axis, y: &Axis, xlabel: &str, ylabel: &str) {
        let b = &mut self.body;
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
        let _ = writeln!(b, r#"<rect x="{x0}" y="{y1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        for t in x.ticks() {
            let px = x.map(t);
            let _ = writeln!(b, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.1}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(b, r#"<text x="{px:.2}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick_label(t));
        }
        for t in y.ticks() {
            let py = y.map(t);
            let _ = writeln!(b, r#"<line x1="{:.1}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(b, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick_label(t));
        }
        let _ = writeln!(b, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 10.0, escape(xlabel));
        let _ = writeln!(
            b,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(self.body, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, color: &str, opacity: f64) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.4}" fill="{color}" fill-opacity="{opacity}" stroke="{color}"/>"#
        );
    }

    fn cross(&mut self, x: f64, y: f64, color: &str) {
        let d = 6.0;
        let _ = writeln!(
            self.body,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{color}" stroke-width="2"/>"#,
            x - d,
            y - d,
            x + d,
            y + d,
            x - d,
            y + d,
            x + d,
            y - d
        );
    }

    fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str) {
        let _ = writeln!(self.body, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#, escape(s));
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn placeholder(title: &str, message: &str) -> String {
    let mut svg = Svg::new(title);
    svg.text(WIDTH / 2.0, HEIGHT / 2.0, message, "middle");
    svg.finish()
}

fn plot_axes() -> (f64, f64, f64, f64) {
    (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP)
}

/// FRF magnitude of every candidate of a location, peaks marked.
fn frf_overlay(report: &CampaignReport, loc: &LocationReport, out: &mut Artifacts) -> Result<()> {
    let title = format!("Voltage FRF, {}", loc.id);
    let svg_path = format!("plots/frf_{}.svg", loc.id);
    let csv_path = format!("plots/frf_{}.csv", loc.id);
    let header = ["candidate", "frequency_hz", "magnitude", "peak"];
    if loc.candidates.is_empty() {
        out.write_bytes(STAGE, &svg_path, placeholder(&title, "no candidates").as_bytes())?;
        out.write_bytes(STAGE, &csv_path, &csv_bytes(&header, Vec::<Vec<String>>::new())?)?;
        return Ok(());
    }
    let f_max = loc.candidates.iter().map(|c| c.fundamental_hz).fold(0.0, f64::max) * 3.0;
    let grid = linear_grid(0.0, f_max, 601);
    let mut curves = Vec::new();
    for c in &loc.candidates {
        let reduced = report.settings.analyze(&c.shape)?;
        let curve = frf(&reduced, &grid);
        let peak = curve.peak().unwrap_or((0.0, 0.0));
        curves.push((curve.magnitudes(), peak));
    }
    let m_max = curves.iter().map(|c| c.1 .1).fold(0.0, f64::max);
    let (x0, x1, y0, y1) = plot_axes();
    let xa = Axis::new(0.0, f_max, x0, x1);
    let ya = Axis::new(0.0, m_max * 1.05, y0, y1);
    let mut svg = Svg::new(&title);
    svg.frame(&xa, &ya, "frequency [Hz]", "|H| [V s^2/m]");
    let mut rows = Vec::new();
    for (i, (mags, peak)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = grid.iter().zip(mags).map(|(&f, &m)| (xa.map(f), ya.map(m))).collect();
        svg.polyline(&pts, color);
        svg.circle(xa.map(peak.0), ya.map(peak.1), 4.0, color, 1.0);
        svg.text(x1 - 8.0, y1 + 16.0 * (i + 1) as f64, &format!("candidate {i}: peak {:.3} Hz", peak.0), "end");
        for (&f, &m) in grid.iter().zip(mags) {
            let is_peak = f == peak.0;
            rows.push(vec![i.to_string(), format!("{f}"), format!("{m:e}"), (is_peak as u8).to_string()]);
        }
    }
    out.write_bytes(STAGE, &svg_path, svg.finish().as_bytes())?;
    out.write_bytes(STAGE, &csv_path, &csv_bytes(&header, rows)?)?;
    Ok(())
}

fn silhouette_plot(loc: &LocationReport, out: &mut Artifacts) -> Result<()> {
    let title = format!("Mean silhouette vs k, {}", loc.id);
    let svg_path = format!("plots/silhouette_{}.svg", loc.id);
    let csv_path = format!("plots/silhouette_{}.csv", loc.id);
    let header = ["k", "mean_silhouette"];
    let values = loc.clustering.as_ref().map(|c| c.silhouettes.clone()).unwrap_or_default();
    if values.is_empty() {
        let msg = if loc.candidates.is_empty() { "no candidates" } else { "fewer than three optima" };
        out.write_bytes(STAGE, &svg_path, placeholder(&title, msg).as_bytes())?;
        out.write_bytes(STAGE, &csv_path, &csv_bytes(&header, Vec::<Vec<String>>::new())?)?;
        return Ok(());
    }
    let (x0, x1, y0, y1) = plot_axes();
    let k_lo = values[0].0 as f64;
    let k_hi = values[values.len() - 1].0 as f64;
    let xa = Axis::padded(k_lo, k_hi, 0.1, x0, x1);
    let ya = Axis::new(-1.0, 1.0, y0, y1);
    let mut svg = Svg::new(&title);
    svg.frame(&xa, &ya, "k", "mean silhouette");
    let pts: Vec<(f64, f64)> = values.iter().map(|&(k, s)| (xa.map(k as f64), ya.map(s))).collect();
    svg.polyline(&pts, PALETTE[0]);
    for p in &pts {
        svg.circle(p.0, p.1, 4.0, PALETTE[0], 1.0);
    }
    let rows: Vec<Vec<String>> = values.iter().map(|(k, s)| vec![k.to_string(), format!("{s}")]).collect();
    out.write_bytes(STAGE, &svg_path, svg.finish().as_bytes())?;
    out.write_bytes(STAGE, &csv_path, &csv_bytes(&header, rows)?)?;
    Ok(())
}

/// Optimal shapes in the (L, l) plane coloured by cluster, centroids as crosses.
fn parameter_scatter(loc: &LocationReport, out: &mut Artifacts) -> Result<()> {
    let title = format!("Optimal shapes, {}", loc.id);
    let svg_path = format!("plots/parameters_{}.svg", loc.id);
    let csv_path = format!("plots/parameters_{}.csv", loc.id);
    let header = ["kind", "id", "L_m", "l", "H", "cluster"];
    if loc.optima.is_empty() {
        out.write_bytes(STAGE, &svg_path, placeholder(&title, "no candidates").as_bytes())?;
        out.write_bytes(STAGE, &csv_path, &csv_bytes(&header, Vec::<Vec<String>>::new())?)?;
        return Ok(());
    }
    let (x0, x1, y0, y1) = plot_axes();
    let (lo, hi) = crate::geometry::design_bounds();
    let xa = Axis::new(lo[0], hi[0], x0, x1);
    let ya = Axis::new(lo[1], hi[1], y0, y1);
    let mut svg = Svg::new(&title);
    svg.frame(&xa, &ya, "L [m]", "l = L_pzt / L");
    let assign = loc.clustering.as_ref().map(|c| c.assignments.clone()).unwrap_or_default();
    let mut rows = Vec::new();
    for (i, o) in loc.optima.iter().enumerate() {
        let c = assign.get(i).copied().unwrap_or(0);
        let x = o.best.design_vector();
        // marker radius grows with H
        svg.circle(xa.map(x[0]), ya.map(x[1]), 3.0 + 10.0 * x[2], PALETTE[c % PALETTE.len()], 0.6);
        rows.push(vec!["optimum".into(), o.window_id.clone(), format!("{}", x[0]), format!("{}", x[1]), format!("{}", x[2]), c.to_string()]);
    }
    for (c, cand) in loc.candidates.iter().enumerate() {
        let x = cand.shape.design_vector();
        svg.cross(xa.map(x[0]), ya.map(x[1]), PALETTE[c % PALETTE.len()]);
        rows.push(vec!["candidate".into(), c.to_string(), format!("{}", x[0]), format!("{}", x[1]), format!("{}", x[2]), c.to_string()]);
    }
    out.write_bytes(STAGE, &svg_path, svg.finish().as_bytes())?;
    out.write_bytes(STAGE, &csv_path, &csv_bytes(&header, rows)?)?;
    Ok(())
}

/// Bubble radius for an energy, so that bubble area is proportional to energy.
pub fn bubble_radius(energy: f64, max_energy: f64) -> f64 {
    if max_energy > 0.0 && energy > 0.0 {
        MAX_BUBBLE_RADIUS * (energy / max_energy).sqrt()
    } else {
        0.0
    }
}

fn energy_bubbles(report: &CampaignReport, out: &mut Artifacts) -> Result<()> {
    let title = "Best-candidate energy by location";
    let svg_path = "plots/energy_locations.svg";
    let csv_path = "plots/energy_locations.csv";
    let header = ["location", "position_m", "energy_j", "radius_px", "area_px2"];
    let table = &report.energy_table;
    if table.is_empty() {
        out.write_bytes(STAGE, svg_path, placeholder(title, "no candidates").as_bytes())?;
        out.write_bytes(STAGE, csv_path, &csv_bytes(&header, Vec::<Vec<String>>::new())?)?;
        return Ok(());
    }
    let e_max = table.iter().map(|e| e.energy).fold(0.0, f64::max);
    let p_lo = table.iter().map(|e| e.position).fold(f64::INFINITY, f64::min);
    let p_hi = table.iter().map(|e| e.position).fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1, y0, y1) = plot_axes();
    let pad = MAX_BUBBLE_RADIUS;
    let xa = Axis::padded(p_lo, p_hi, 0.1, x0 + pad, x1 - pad);
    let ya = Axis::new(0.0, e_max * 1.1, y0, y1 + pad);
    let mut svg = Svg::new(title);
    svg.frame(&xa, &ya, "position along span [m]", "energy [J]");
    let mut rows = Vec::new();
    for e in table {
        let r = bubble_radius(e.energy, e_max);
        let (cx, cy) = (xa.map(e.position), ya.map(e.energy));
        svg.circle(cx, cy, r, PALETTE[e.candidate_type % PALETTE.len()], 0.5);
        svg.text(cx, cy - r - 4.0, &e.location, "middle");
        rows.push(vec![
            e.location.clone(),
            format!("{}", e.position),
            format!("{:e}", e.energy),
            format!("{r:.4}"),
            format!("{:.4}", std::f64::consts::PI * r * r),
        ]);
    }
    out.write_bytes(STAGE, svg_path, svg.finish().as_bytes())?;
    out.write_bytes(STAGE, csv_path, &csv_bytes(&header, rows)?)?;
    Ok(())
}

/// Writes all figures of a campaign under `plots/`.
pub fn emit_plots(report: &CampaignReport, out: &mut Artifacts) -> Result<()> {
    out.begin(STAGE);
    for loc in &report.locations {
        frf_overlay(report, loc, out)?;
        silhouette_plot(loc, out)?;
        parameter_scatter(loc, out)?;
    }
    energy_bubbles(report, out)?;
    Ok(())
}
