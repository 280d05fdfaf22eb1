//! CSV and SVG writers for paths, series samples and histograms.

use std::fmt::Write as _;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::kloosterman::PathPoint;

/// `j,x,re,im`, one row per vertex.
pub fn write_path_csv<W: Write>(mut out: W, points: &[PathPoint]) -> io::Result<()> {
    writeln!(out, "j,x,re,im")?;
    for p in points {
        writeln!(out, "{},{},{:.16e},{:.16e}", p.j, p.x, p.value.re, p.value.im)?;
    }
    Ok(())
}

/// A single polyline through `vertices`, with a viewBox fitted to them and a
/// stroke width of 0.5% of the bounding-box diagonal.
pub fn path_svg(vertices: &[(f64, f64)]) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in vertices {
        x0 = x0.min(x);
        x1 = x1.max(x);
        // SVG y grows downwards
        y0 = y0.min(-y);
        y1 = y1.max(-y);
    }
    if vertices.is_empty() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let diag = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt().max(1e-12);
    let stroke = 0.005 * diag;
    let pad = 2.0 * stroke;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}">"#,
        x0 - pad,
        y0 - pad,
        x1 - x0 + 2.0 * pad,
        y1 - y0 + 2.0 * pad
    );
    s.push_str(r#"<polyline fill="none" stroke="black" stroke-linejoin="round" stroke-width=""#);
    let _ = write!(s, "{stroke:.6}");
    s.push_str(r#"" points=""#);
    for (i, &(x, y)) in vertices.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.6},{:.6}", x, 0.0 - y);
    }
    s.push_str("\"/>\n</svg>\n");
    s
}

/// `sample,t,re,im` for sample paths on a common grid, preceded by a comment
/// line recording how they were drawn.
pub fn write_series_csv<W: Write>(
    mut out: W,
    grid: &[f64],
    paths: &[Vec<Complex64>],
    seed: u64,
    h_max: usize,
    samples: usize,
) -> io::Result<()> {
    writeln!(out, "# seed={seed} H={h_max} N={samples}")?;
    writeln!(out, "sample,t,re,im")?;
    for (i, path) in paths.iter().enumerate() {
        for (t, v) in grid.iter().zip(path) {
            writeln!(out, "{i},{t:.16e},{:.16e},{:.16e}", v.re, v.im)?;
        }
    }
    Ok(())
}

/// `value,count`.
pub fn write_histogram_csv<W: Write>(mut out: W, bins: &[(f64, u64)]) -> io::Result<()> {
    writeln!(out, "value,count")?;
    for (v, c) in bins {
        writeln!(out, "{v:.16e},{c}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_csv_layout() {
        let pts = [
            PathPoint { j: 1, x: 1, value: Complex64::new(0.5, -0.25) },
            PathPoint { j: 2, x: 2, value: Complex64::new(0.0, 0.0) },
        ];
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "j,x,re,im");
        assert_eq!(lines.len(), 3);
        let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields, vec![1.0, 1.0, 0.5, -0.25]);
    }

    #[test]
    fn svg_has_one_polyline() {
        let svg = path_svg(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("0.000000,0.000000 1.000000,-1.000000 2.000000,0.000000"));
        assert!(svg.contains("viewBox"));
    }

    #[test]
    fn series_header_records_parameters() {
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &[0.0, 1.0], &[vec![Complex64::new(0.0, 0.0); 2]], 7, 16, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=7 H=16 N=1\nsample,t,re,im\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
