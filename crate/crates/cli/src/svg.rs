//! Minimal hand-written SVG charts. Coordinates are printed with fixed
//! precision so the files are reproducible byte for byte.

use std::fmt::Write;

use bems_core::scenario::Profile;
use bems_core::{ProbabilityMatrix, ScenarioSet};

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 50.0;

struct Doc {
    body: String,
    width: f64,
    height: f64,
}

impl Doc {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut d = Self {
            body: String::new(),
            width,
            height,
        };
        d.text(width / 2.0, 24.0, "middle", 16, title);
        d
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-size="{size}">{}</text>"#,
            escape(s)
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }

    /// Frame and hour ticks of a panel at `(x0, y0)`; returns nothing, the
    /// caller maps data with [`Panel`].
    fn frame(&mut self, p: &Panel, title: &str, y_label: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.1}" y="{:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="black"/>"#,
            p.x0, p.y0
        );
        self.text(p.x0 + PANEL_W / 2.0, p.y0 - 8.0, "middle", 13, title);
        for h in (0..=24).step_by(6) {
            let x = p.x(h as f64);
            self.text(x, p.y0 + PANEL_H + 16.0, "middle", 11, &h.to_string());
        }
        self.text(p.x0 + PANEL_W / 2.0, p.y0 + PANEL_H + 34.0, "middle", 11, "hour");
        self.text(p.x0 - 6.0, p.y0 + 10.0, "end", 11, &format!("{:.1}", p.y_max));
        self.text(p.x0 - 6.0, p.y0 + PANEL_H, "end", 11, "0");
        let cx = p.x0 - 34.0;
        let cy = p.y0 + PANEL_H / 2.0;
        let _ = writeln!(
            self.body,
            r#"<text x="{cx:.1}" y="{cy:.1}" text-anchor="middle" font-size="11" transform="rotate(-90 {cx:.1} {cy:.1})">{}</text>"#,
            escape(y_label)
        );
    }

    fn polyline(&mut self, p: &Panel, values: &[f64], stroke: &str, width: f64, opacity: f64) {
        let pts: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(h, v)| format!("{:.2},{:.2}", p.x(h as f64 + 0.5), p.y(*v)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.1}" stroke-opacity="{opacity:.3}"/>"#,
            pts.join(" ")
        );
    }
}

struct Panel {
    x0: f64,
    y0: f64,
    y_max: f64,
}

impl Panel {
    fn x(&self, hour: f64) -> f64 {
        self.x0 + hour / 24.0 * PANEL_W
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + PANEL_H - (v / self.y_max).clamp(0.0, 1.0) * PANEL_H
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        1.0
    } else {
        (v * 1.1 * 2.0).ceil() / 2.0
    }
}

/// Scenario trajectories in two panels, line opacity following probability,
/// with the realised day drawn in black.
pub fn scenarios(title: &str, set: &ScenarioSet, actual_gen: &Profile, actual_dem: &Profile) -> String {
    let width = 2.0 * PANEL_W + 3.0 * MARGIN + 20.0;
    let height = PANEL_H + 2.0 * MARGIN + 40.0;
    let mut doc = Doc::new(width, height, title);
    let p_max = set.scenarios.iter().map(|s| s.prob).fold(0.0, f64::max).max(1e-12);
    for (k, (label, actual)) in [("PV generation", actual_gen), ("Demand", actual_dem)].into_iter().enumerate() {
        let peak = set
            .scenarios
            .iter()
            .flat_map(|s| if k == 0 { s.gen.iter() } else { s.dem.iter() })
            .chain(actual.iter())
            .cloned()
            .fold(0.0, f64::max);
        let panel = Panel {
            x0: MARGIN + 20.0 + k as f64 * (PANEL_W + MARGIN),
            y0: MARGIN + 10.0,
            y_max: nice_max(peak),
        };
        doc.frame(&panel, label, "kW");
        let colour = if k == 0 { "#d98c00" } else { "#1f5fa8" };
        for s in &set.scenarios {
            let v = if k == 0 { &s.gen } else { &s.dem };
            doc.polyline(&panel, v, colour, 1.5, 0.25 + 0.75 * s.prob / p_max);
        }
        doc.polyline(&panel, actual, "black", 2.0, 1.0);
    }
    doc.finish()
}

/// Heat maps of two matrices (bins upward, hours across), each column scaled
/// to its own maximum.
pub fn matrices(title: &str, gen: &ProbabilityMatrix, dem: &ProbabilityMatrix) -> String {
    let width = 2.0 * PANEL_W + 3.0 * MARGIN + 20.0;
    let height = PANEL_H + 2.0 * MARGIN + 40.0;
    let mut doc = Doc::new(width, height, title);
    for (k, (label, m)) in [("PV generation", gen), ("Demand", dem)].into_iter().enumerate() {
        let panel = Panel {
            x0: MARGIN + 20.0 + k as f64 * (PANEL_W + MARGIN),
            y0: MARGIN + 10.0,
            y_max: m.bins() as f64,
        };
        let cell_w = PANEL_W / 24.0;
        let cell_h = PANEL_H / m.bins() as f64;
        for h in 0..24 {
            let col = m.column(h);
            let top = col.iter().cloned().fold(0.0, f64::max);
            if top <= 0.0 {
                continue;
            }
            for (b, p) in col.iter().enumerate() {
                if *p <= 0.0 {
                    continue;
                }
                let _ = writeln!(
                    doc.body,
                    r##"<rect x="{:.2}" y="{:.2}" width="{cell_w:.2}" height="{cell_h:.2}" fill="#b00020" fill-opacity="{:.3}"/>"##,
                    panel.x(h as f64),
                    panel.y(b as f64 + 1.0),
                    p / top
                );
            }
        }
        doc.frame(&panel, label, "bin");
    }
    doc.finish()
}
