//! Self-contained SVG line plot of a distortion sweep: the negative- and
//! positive-curvature branches as polylines over rank-spaced grid positions,
//! log-scaled distortion on the y axis, and the flat-space value marked as a
//! separate filled circle.

use crate::embedding::SweepPoint;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 50.0;

pub fn sweep_svg(curve: &[SweepPoint]) -> String {
    let finite: Vec<&SweepPoint> = curve.iter().filter(|p| p.distortion.is_finite()).collect();
    let logs: Vec<f64> = finite
        .iter()
        .map(|p| p.distortion.max(1e-300).log10())
        .collect();
    let (mut y_min, mut y_max) = logs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if y_max - y_min < 1e-9 {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let n = curve.len().max(1);
    let x_of = |rank: usize| {
        MARGIN_L
            + (WIDTH - MARGIN_L - MARGIN_R) * (rank as f64 + 0.5) / n as f64
    };
    let y_of = |v: f64| {
        let t = (v - y_min) / (y_max - y_min);
        HEIGHT - MARGIN_B - t * (HEIGHT - MARGIN_T - MARGIN_B)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L:.1}\" y1=\"{MARGIN_T:.1}\" x2=\"{MARGIN_L:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));

    // y ticks
    for i in 0..=4 {
        let v = y_min + (y_max - y_min) * i as f64 / 4.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{MARGIN_L:.1}\" y2=\"{y:.1}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{v:.2}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0
        ));
    }
    // x tick labels at the extremes and at zero curvature
    for (rank, p) in curve.iter().enumerate() {
        let is_edge = rank == 0 || rank + 1 == curve.len();
        if is_edge || p.kappa == 0.0 {
            let x = x_of(rank);
            svg.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
                HEIGHT - MARGIN_B,
                HEIGHT - MARGIN_B + 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{:.4}</text>\n",
                HEIGHT - MARGIN_B + 18.0,
                p.kappa
            ));
        }
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">curvature</text>\n",
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        HEIGHT - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">log10 distortion</text>\n",
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0
    ));

    // branch polylines (negative and positive curvature separately; the
    // curve is discontinuous at zero)
    for (colour, keep) in [
        ("#1f6feb", Box::new(|k: f64| k < 0.0) as Box<dyn Fn(f64) -> bool>),
        ("#d1242f", Box::new(|k: f64| k > 0.0)),
    ] {
        let pts: Vec<String> = curve
            .iter()
            .enumerate()
            .filter(|(_, p)| keep(p.kappa) && p.distortion.is_finite())
            .map(|(rank, p)| {
                format!(
                    "{:.1},{:.1}",
                    x_of(rank),
                    y_of(p.distortion.max(1e-300).log10())
                )
            })
            .collect();
        if pts.len() >= 2 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"/>\n",
                pts.join(" ")
            ));
        }
    }
    // flat-space marker
    for (rank, p) in curve.iter().enumerate() {
        if p.kappa == 0.0 && p.distortion.is_finite() {
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"black\"/>\n",
                x_of(rank),
                y_of(p.distortion.max(1e-300).log10())
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_grid_is_valid_svg() {
        let svg = sweep_svg(&[SweepPoint {
            kappa: 0.0,
            distortion: 3.0,
        }]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<circle"));
    }

    #[test]
    fn branches_are_separate_polylines() {
        let curve: Vec<SweepPoint> = vec![
            SweepPoint { kappa: -0.2, distortion: 5.0 },
            SweepPoint { kappa: -0.1, distortion: 4.0 },
            SweepPoint { kappa: 0.0, distortion: 4.5 },
            SweepPoint { kappa: 0.1, distortion: 4.2 },
            SweepPoint { kappa: 0.2, distortion: 6.0 },
        ];
        let svg = sweep_svg(&curve);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 1);
    }
}
