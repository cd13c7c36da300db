use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const CELL: usize = 4;

/// SVG text for a grayscale heatmap: black at `max|entry|`, white at zero.
/// Cells follow row-major order, row 0 at the top.
pub fn render_heatmap_to(w: &Matrix) -> String {
    let (rows, cols) = w.shape();
    let max = w.max_abs();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" shape-rendering="crispEdges">"#,
        cols * CELL,
        rows * CELL,
        cols * CELL,
        rows * CELL
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="rgb(255,255,255)"/>"#);
    for i in 0..rows {
        for j in 0..cols {
            let level = if max > 0.0 { w[(i, j)].abs() / max } else { 0.0 };
            let shade = (255.0 * (1.0 - level)).round() as u8;
            if shade == 255 {
                continue;
            }
            let _ = writeln!(
                svg,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="rgb({shade},{shade},{shade})"/>"#,
                j * CELL,
                i * CELL
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn render_heatmap(w: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_heatmap_to(w)).map_err(|e| Error::io(path, e))
}
