//! Binary PPM (P6) rendering of patterns.

use serde::{Deserialize, Serialize};

use crate::analysis::detect_singularities;
use crate::grid::Pattern;

const WHITE: [u8; 3] = [255, 255, 255];
const BLACK: [u8; 3] = [0, 0, 0];
const RED: [u8; 3] = [255, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderOptions {
    /// Pixels per cell edge.
    pub scale: usize,
    /// Tile the pattern 2x2 to show structure across the wrap.
    pub quad: bool,
    /// Paint detected singularity blocks red.
    pub mark_singularities: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            scale: 1,
            quad: false,
            mark_singularities: false,
        }
    }
}

/// Cell colors of the rendered grid, before scaling.
pub fn cell_colors(p: &Pattern, opts: &RenderOptions) -> Vec<Vec<[u8; 3]>> {
    let n = p.n();
    let mut base: Vec<Vec<[u8; 3]>> = p
        .cells()
        .chunks(n)
        .map(|row| row.iter().map(|&v| if v == 1 { BLACK } else { WHITE }).collect())
        .collect();
    if opts.mark_singularities {
        for c in detect_singularities(p) {
            for (di, dj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                base[(c.i + di) % n][(c.j + dj) % n] = RED;
            }
        }
    }
    let reps = if opts.quad { 2 } else { 1 };
    (0..n * reps)
        .map(|i| (0..n * reps).map(|j| base[i % n][j % n]).collect())
        .collect()
}

/// Encodes the pattern as a P6 image with maxval 255.
pub fn render_ppm(p: &Pattern, opts: &RenderOptions) -> Vec<u8> {
    let colors = cell_colors(p, opts);
    let scale = opts.scale.max(1);
    let side = colors.len() * scale;
    let mut out = format!("P6\n{side} {side}\n255\n").into_bytes();
    out.reserve(side * side * 3);
    for row in &colors {
        for _ in 0..scale {
            for px in row {
                for _ in 0..scale {
                    out.extend_from_slice(px);
                }
            }
        }
    }
    out
}
