//! Deterministic SVG rendering of a layout.

use std::fmt::Write;

use heliopack_core::geom::{Point, RoofPolygon};
use heliopack_core::layout::CandidatePanel;

const PX_PER_M: f64 = 40.0;
const MARGIN: f64 = 30.0;
const LEGEND_W: f64 = 130.0;

/// Hue of an azimuth, degrees clockwise from north.
fn azimuth_color(az: f64) -> String {
    format!("hsl({:.0},70%,50%)", az.rem_euclid(360.0))
}

/// Roof outline, red obstacle holes, one `class="panel"` polygon per
/// selected panel colored by azimuth with its tilt written inside, an
/// azimuth legend and a 1 m scale bar. `+y` (north) points up.
pub fn render_svg(roof: &RoofPolygon, candidates: &[CandidatePanel], selected: &[bool], azimuths: &[f64], title: &str) -> String {
    let bb = roof.bbox();
    let (w, h) = (bb.width() * PX_PER_M, bb.height() * PX_PER_M);
    let total_w = w + 2.0 * MARGIN + LEGEND_W;
    let legend_h = 40.0 + 16.0 * azimuths.len() as f64;
    let total_h = (h + 2.0 * MARGIN + 30.0).max(legend_h + MARGIN);
    let map = |p: Point| ((p.x - bb.min.x) * PX_PER_M + MARGIN, (bb.max.y - p.y) * PX_PER_M + MARGIN);
    let pts = |ring: &[Point]| {
        ring.iter()
            .map(|&p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0}" height="{total_h:.0}" viewBox="0 0 {total_w:.2} {total_h:.2}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r##"<polygon class="roof" points="{}" fill="#eeeeee" stroke="black" stroke-width="1.5"/>"##, pts(&roof.exterior));
    for hole in &roof.holes {
        let _ = writeln!(s, r#"<polygon class="obstacle" points="{}" fill="red" fill-opacity="0.6" stroke="darkred"/>"#, pts(hole));
    }
    for (c, _) in candidates.iter().zip(selected).filter(|(_, &x)| x) {
        let _ = writeln!(
            s,
            r#"<polygon class="panel" points="{}" fill="{}" stroke="black" stroke-width="0.5"/>"#,
            pts(&c.footprint),
            azimuth_color(c.config.azimuth)
        );
        let mid = c.footprint.iter().fold(Point::new(0.0, 0.0), |a, &p| Point::new(a.x + p.x / 4.0, a.y + p.y / 4.0));
        let (x, y) = map(mid);
        let _ = writeln!(
            s,
            r#"<text class="tilt" x="{x:.2}" y="{:.2}" font-size="8" text-anchor="middle">{}</text>"#,
            y + 3.0,
            c.config.tilt
        );
    }

    let lx = w + 2.0 * MARGIN;
    let _ = writeln!(s, r#"<g class="legend"><text x="{lx:.2}" y="{:.2}" font-size="11">azimuth</text>"#, MARGIN);
    for (n, &az) in azimuths.iter().enumerate() {
        let y = MARGIN + 8.0 + 16.0 * n as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{y:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}" font-size="10">{az}</text>"#,
            azimuth_color(az),
            lx + 16.0,
            y + 10.0
        );
    }
    let _ = writeln!(s, "</g>");

    let sy = h + 2.0 * MARGIN + 10.0;
    let _ = writeln!(
        s,
        r#"<g class="scale"><line x1="{MARGIN:.2}" y1="{sy:.2}" x2="{:.2}" y2="{sy:.2}" stroke="black" stroke-width="2"/><text x="{MARGIN:.2}" y="{:.2}" font-size="10">1 m</text></g>"#,
        MARGIN + PX_PER_M,
        sy + 12.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use heliopack_core::layout::{panel_geometry, PanelConfig, PanelSpec};

    fn roof() -> RoofPolygon {
        let hole = vec![Point::new(4.0, 4.0), Point::new(5.0, 4.0), Point::new(5.0, 5.0), Point::new(4.0, 5.0)];
        RoofPolygon::new(RoofPolygon::rectangle(0.0, 0.0, 8.0, 6.0).exterior, vec![hole])
    }

    fn count(doc: &str, class: &str) -> usize {
        let d = roxmltree::Document::parse(doc).unwrap();
        d.descendants().filter(|n| n.attribute("class") == Some(class)).count()
    }

    #[test]
    fn empty_solution_draws_roof_only() {
        let doc = render_svg(&roof(), &[], &[], &[180.0], "empty <roof>");
        assert_eq!(count(&doc, "panel"), 0);
        assert_eq!(count(&doc, "roof"), 1);
        assert_eq!(count(&doc, "obstacle"), 1);
    }

    #[test]
    fn one_panel_one_rectangle() {
        let spec = PanelSpec::default();
        let cands: Vec<CandidatePanel> = (0..3)
            .map(|i| panel_geometry(&spec, PanelConfig { azimuth: 180.0, tilt: 20.0, shift: 0 }, Point::new(1.0 + 2.0 * i as f64, 1.0)))
            .collect();
        let doc = render_svg(&roof(), &cands, &[false, true, false], &[90.0, 180.0], "one");
        assert_eq!(count(&doc, "panel"), 1);
        assert_eq!(count(&doc, "tilt"), 1);
        assert_eq!(doc, render_svg(&roof(), &cands, &[false, true, false], &[90.0, 180.0], "one"));
    }
}
