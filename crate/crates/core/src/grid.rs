//! Toroidal binary grids, Moore neighborhoods and the symmetry transforms
//! (dihedral group of the square plus cyclic shifts).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest side length for which a 3x3 window never revisits a cell.
pub const MIN_SIDE: usize = 3;

/// Window offsets `(di, dj)`: center first, then row-major over the 3x3
/// window with the center skipped. Shared by payoffs and template matching.
pub const MOORE_OFFSETS: [(isize, isize); 9] = [
    (0, 0),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("side length {n} is below the minimum of 3")]
    TooSmall { n: usize },
    #[error("expected {expected} cells for an {n}x{n} grid, got {found}")]
    CellCount { n: usize, expected: usize, found: usize },
    #[error("cell value {value} at index {index} is not 0 or 1")]
    NotBinary { index: usize, value: u8 },
    #[error("line {line}: expected {expected} characters, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("line {line}: illegal character {ch:?} at column {column}")]
    IllegalChar { line: usize, column: usize, ch: char },
    #[error("line {line}: grid must be square, got {rows} rows of width {width}")]
    NotSquare { line: usize, rows: usize, width: usize },
    #[error("empty pattern text")]
    Empty,
}

/// A cell position, always reduced modulo the grid side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub i: usize,
    pub j: usize,
}

impl Coord {
    pub fn new(i: isize, j: isize, n: usize) -> Self {
        let n = n as isize;
        Coord {
            i: i.rem_euclid(n) as usize,
            j: j.rem_euclid(n) as usize,
        }
    }

    pub fn offset(self, di: isize, dj: isize, n: usize) -> Self {
        Coord::new(self.i as isize + di, self.j as isize + dj, n)
    }
}

/// The 9 values of a Moore window in [`MOORE_OFFSETS`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeighborhoodConfig(pub [u8; 9]);

impl NeighborhoodConfig {
    pub fn center(&self) -> u8 {
        self.0[0]
    }

    pub fn outer(&self) -> &[u8] {
        &self.0[1..]
    }

    /// Number of ones among the 8 outer neighbors.
    pub fn outer_ones(&self) -> usize {
        self.outer().iter().filter(|&&v| v == 1).count()
    }
}

/// The eight symmetries of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dihedral {
    Identity,
    /// Clockwise quarter turn.
    Rotate90,
    Rotate180,
    Rotate270,
    /// Mirror against the horizontal center line (flips rows).
    ReflectHorizontal,
    /// Mirror against the vertical center line (flips columns).
    ReflectVertical,
    /// Mirror against the main diagonal.
    Transpose,
    /// Mirror against the anti-diagonal.
    AntiTranspose,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rotate90,
        Dihedral::Rotate180,
        Dihedral::Rotate270,
        Dihedral::ReflectHorizontal,
        Dihedral::ReflectVertical,
        Dihedral::Transpose,
        Dihedral::AntiTranspose,
    ];

    /// Where the source cell `(i, j)` lands in an `n`x`n` square.
    pub fn map(self, i: usize, j: usize, n: usize) -> (usize, usize) {
        let last = n - 1;
        match self {
            Dihedral::Identity => (i, j),
            Dihedral::Rotate90 => (j, last - i),
            Dihedral::Rotate180 => (last - i, last - j),
            Dihedral::Rotate270 => (last - j, i),
            Dihedral::ReflectHorizontal => (last - i, j),
            Dihedral::ReflectVertical => (i, last - j),
            Dihedral::Transpose => (j, i),
            Dihedral::AntiTranspose => (last - j, last - i),
        }
    }

    pub fn inverse(self) -> Dihedral {
        match self {
            Dihedral::Rotate90 => Dihedral::Rotate270,
            Dihedral::Rotate270 => Dihedral::Rotate90,
            other => other,
        }
    }
}

/// A grid transform: a symmetry of the square or a cyclic shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transform {
    Dihedral(Dihedral),
    /// Moves cell `(i, j)` to `(i + di, j + dj)` with wrap.
    Shift { di: isize, dj: isize },
}

impl Transform {
    pub fn inverse(self) -> Transform {
        match self {
            Transform::Dihedral(d) => Transform::Dihedral(d.inverse()),
            Transform::Shift { di, dj } => Transform::Shift { di: -di, dj: -dj },
        }
    }
}

impl From<Dihedral> for Transform {
    fn from(d: Dihedral) -> Self {
        Transform::Dihedral(d)
    }
}

/// Square binary grid with cyclic boundaries, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    n: usize,
    cells: Vec<u8>,
}

impl Pattern {
    pub fn new(n: usize, cells: Vec<u8>) -> Result<Self, PatternError> {
        if n < MIN_SIDE {
            return Err(PatternError::TooSmall { n });
        }
        if cells.len() != n * n {
            return Err(PatternError::CellCount {
                n,
                expected: n * n,
                found: cells.len(),
            });
        }
        if let Some((index, &value)) = cells.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(PatternError::NotBinary { index, value });
        }
        Ok(Pattern { n, cells })
    }

    pub fn zeros(n: usize) -> Result<Self, PatternError> {
        Pattern::new(n, vec![0; n * n])
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self, PatternError> {
        let mut cells = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                cells.push(f(i, j) as u8);
            }
        }
        Pattern::new(n, cells)
    }

    /// Builds a pattern from `n` row strings over `{0,1}`; panics on bad
    /// input. Meant for literals in code and tests.
    pub fn from_rows(rows: &[&str]) -> Self {
        rows.join("\n").parse().expect("invalid pattern literal")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, c: Coord) -> usize {
        c.i * self.n + c.j
    }

    #[inline]
    pub fn get(&self, c: Coord) -> u8 {
        self.cells[c.i * self.n + c.j]
    }

    /// Value at `(i, j)` with toroidal wrap.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> u8 {
        self.get(Coord::new(i, j, self.n))
    }

    #[inline]
    pub fn set(&mut self, c: Coord, value: bool) {
        let idx = self.index(c);
        self.cells[idx] = value as u8;
    }

    pub fn coord_of(&self, index: usize) -> Coord {
        Coord {
            i: index / self.n,
            j: index % self.n,
        }
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.len()).map(|k| self.coord_of(k))
    }

    /// Count of 1-cells (defectors).
    pub fn ones(&self) -> usize {
        self.cells.iter().filter(|&&v| v == 1).count()
    }

    pub fn moore_neighborhood(&self, c: Coord) -> NeighborhoodConfig {
        let mut values = [0u8; 9];
        for (slot, &(di, dj)) in values.iter_mut().zip(MOORE_OFFSETS.iter()) {
            *slot = self.get(c.offset(di, dj, self.n));
        }
        NeighborhoodConfig(values)
    }

    /// The 3x3 window at `c` packed as a 9-bit code, bit `3*r + s` holding
    /// window row `r`, column `s` (so bit 4 is the center).
    #[inline]
    pub fn window_code(&self, c: Coord) -> u16 {
        let n = self.n;
        let up = if c.i == 0 { n - 1 } else { c.i - 1 };
        let down = if c.i + 1 == n { 0 } else { c.i + 1 };
        let left = if c.j == 0 { n - 1 } else { c.j - 1 };
        let right = if c.j + 1 == n { 0 } else { c.j + 1 };
        let mut code = 0u16;
        let mut bit = 0;
        for row in [up, c.i, down] {
            let base = row * n;
            for col in [left, c.j, right] {
                code |= (self.cells[base + col] as u16) << bit;
                bit += 1;
            }
        }
        code
    }

    /// Number of ones in every cell's 3x3 window (center included).
    pub fn window_ones(&self) -> Vec<u8> {
        let n = self.n;
        let mut horiz = vec![0u8; n * n];
        for i in 0..n {
            let row = &self.cells[i * n..(i + 1) * n];
            for j in 0..n {
                let l = row[(j + n - 1) % n];
                let r = row[(j + 1) % n];
                horiz[i * n + j] = l + row[j] + r;
            }
        }
        let mut out = vec![0u8; n * n];
        for i in 0..n {
            let up = (i + n - 1) % n;
            let down = (i + 1) % n;
            for j in 0..n {
                out[i * n + j] = horiz[up * n + j] + horiz[i * n + j] + horiz[down * n + j];
            }
        }
        out
    }

    pub fn transform(&self, op: Transform) -> Pattern {
        match op {
            Transform::Dihedral(d) => self.apply_dihedral(d),
            Transform::Shift { di, dj } => self.shift(di, dj),
        }
    }

    pub fn apply_dihedral(&self, d: Dihedral) -> Pattern {
        let n = self.n;
        let mut cells = vec![0u8; n * n];
        for i in 0..n {
            for j in 0..n {
                let (ti, tj) = d.map(i, j, n);
                cells[ti * n + tj] = self.cells[i * n + j];
            }
        }
        Pattern { n, cells }
    }

    pub fn shift(&self, di: isize, dj: isize) -> Pattern {
        let n = self.n;
        let mut cells = vec![0u8; n * n];
        for c in self.coords() {
            let t = c.offset(di, dj, n);
            cells[t.i * n + t.j] = self.get(c);
        }
        Pattern { n, cells }
    }

    /// The pattern tiled `reps` x `reps`, as a plain row-major matrix (the
    /// result is not a torus of its own).
    pub fn tiled(&self, reps: usize) -> Vec<Vec<u8>> {
        let side = self.n * reps;
        (0..side)
            .map(|i| (0..side).map(|j| self.cells[(i % self.n) * self.n + j % self.n]).collect())
            .collect()
    }

    /// Smallest image under all shifts and symmetries of the square.
    pub fn canonical(&self) -> Pattern {
        let n = self.n as isize;
        let mut best: Option<Pattern> = None;
        for d in Dihedral::ALL {
            let base = self.apply_dihedral(d);
            for di in 0..n {
                for dj in 0..n {
                    let cand = base.shift(di, dj);
                    if best.as_ref().is_none_or(|b| cand < *b) {
                        best = Some(cand);
                    }
                }
            }
        }
        best.expect("at least one image")
    }

    /// True when `other` is an image of `self` under shifts and symmetries.
    pub fn is_equivalent(&self, other: &Pattern) -> bool {
        self.n == other.n && self.canonical() == other.canonical()
    }

    pub fn serialize(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Pattern, PatternError> {
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .collect();
        let lines: &[&str] = match lines.iter().rposition(|l| !l.is_empty()) {
            Some(last) => &lines[..=last],
            None => return Err(PatternError::Empty),
        };
        let width = lines[0].chars().count();
        let mut cells = Vec::with_capacity(width * width);
        for (k, line) in lines.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(PatternError::Ragged {
                    line: k + 1,
                    expected: width,
                    found,
                });
            }
            for (column, ch) in line.chars().enumerate() {
                match ch {
                    '0' => cells.push(0),
                    '1' => cells.push(1),
                    _ => {
                        return Err(PatternError::IllegalChar {
                            line: k + 1,
                            column: column + 1,
                            ch,
                        })
                    }
                }
            }
        }
        if lines.len() < MIN_SIDE || width < MIN_SIDE {
            return Err(PatternError::TooSmall {
                n: lines.len().min(width),
            });
        }
        if lines.len() != width {
            return Err(PatternError::NotSquare {
                line: lines.len().min(width) + 1,
                rows: lines.len(),
                width,
            });
        }
        Pattern::new(width, cells)
    }
}

impl FromStr for Pattern {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pattern::parse(s)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(self.n) {
            for &v in row {
                f.write_str(if v == 1 { "1" } else { "0" })?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}
