//! Structural analysis of patterns (points, dominoes, singularities), the
//! closed-form optimum for odd sizes with its recursive construction, and
//! an exhaustive oracle for small grids.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indices, Execution};
use crate::grid::{Coord, Pattern, PatternError};
use crate::payoff::PayoffParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("size {0} must be odd and at least 5")]
    NotOddFamily(usize),
    #[error("exhaustive search supports n <= {max}, got {n}")]
    OracleTooLarge { n: usize, max: usize },
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Limit of the optimal wealth for large grids, `43/36`.
pub const LIMIT_WEALTH: f64 = 43.0 / 36.0;

/// The optimal 5x5 pattern (unique up to shift and symmetry): four
/// dominoes circling one 2x2 block of zeros.
pub const OPTIMUM_5: [&str; 5] = ["11010", "00010", "10000", "10110", "00000"];

/// A 1 whose 8 Moore neighbors are all 0.
pub fn is_point(p: &Pattern, c: Coord) -> bool {
    let nb = p.moore_neighborhood(c);
    nb.center() == 1 && nb.outer_ones() == 0
}

pub fn count_points(p: &Pattern) -> usize {
    p.coords().filter(|&c| is_point(p, c)).count()
}

/// Two orthogonally adjacent ones whose 10-cell surrounding hull is all 0.
/// Each domino is counted once, from its left or top cell.
pub fn count_dominoes(p: &Pattern) -> usize {
    let n = p.n() as isize;
    let mut count = 0;
    for c in p.coords() {
        if p.get(c) != 1 {
            continue;
        }
        let (i, j) = (c.i as isize, c.j as isize);
        for (di, dj) in [(0isize, 1isize), (1, 0)] {
            if p.at(i + di, j + dj) != 1 {
                continue;
            }
            let mut hull_clear = true;
            'hull: for a in -1..=(1 + di) {
                for b in -1..=(1 + dj) {
                    let cell = Coord::new(i + a, j + b, n as usize);
                    if cell == c || cell == Coord::new(i + di, j + dj, n as usize) {
                        continue;
                    }
                    if p.get(cell) != 0 {
                        hull_clear = false;
                        break 'hull;
                    }
                }
            }
            if hull_clear {
                count += 1;
            }
        }
    }
    count
}

fn zero_block(p: &Pattern, i: isize, j: isize, h: isize, w: isize) -> bool {
    (0..h).all(|a| (0..w).all(|b| p.at(i + a, j + b) == 0))
}

/// Top-left corners of every 2x2 all-zero block that cannot be extended to
/// an all-zero 2x3 or 3x2 block.
pub fn detect_singularities(p: &Pattern) -> Vec<Coord> {
    p.coords()
        .filter(|c| {
            let (i, j) = (c.i as isize, c.j as isize);
            zero_block(p, i, j, 2, 2)
                && !zero_block(p, i, j - 1, 2, 3)
                && !zero_block(p, i, j, 2, 3)
                && !zero_block(p, i - 1, j, 3, 2)
                && !zero_block(p, i, j, 3, 2)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub points: usize,
    pub dominoes: usize,
    pub singularities: usize,
    pub ones: usize,
    pub zero_cells: usize,
}

pub fn structure_report(p: &Pattern) -> StructureReport {
    let ones = p.ones();
    StructureReport {
        points: count_points(p),
        dominoes: count_dominoes(p),
        singularities: detect_singularities(p).len(),
        ones,
        zero_cells: p.len() - ones,
    }
}

fn check_odd(n: usize) -> Result<usize, AnalysisError> {
    if n < 5 || n.is_multiple_of(2) {
        return Err(AnalysisError::NotOddFamily(n));
    }
    Ok((n - 5) / 2)
}

/// `265 + 128 m + 43 m (m + 2)` with `m = (n - 5) / 2`.
pub fn tps_formula_odd(n: usize) -> Result<u64, AnalysisError> {
    let m = check_odd(n)? as u64;
    Ok(265 + 128 * m + 43 * m * (m + 2))
}

pub fn wealth_formula_odd(n: usize) -> Result<f64, AnalysisError> {
    Ok(tps_formula_odd(n)? as f64 / (9 * n * n) as f64)
}

pub fn dominoes_formula_odd(n: usize) -> Result<usize, AnalysisError> {
    check_odd(n)?;
    Ok(n - 1)
}

pub fn points_formula_odd(n: usize) -> Result<usize, AnalysisError> {
    let m = check_odd(n)?;
    Ok(m + m * (m + 1))
}

pub fn ones_formula_odd(n: usize) -> Result<usize, AnalysisError> {
    Ok(2 * dominoes_formula_odd(n)? + points_formula_odd(n)?)
}

/// Best TPS known for side `n` under the default game: 91 for `n = 3`,
/// `43 n^2 / 4` (the point lattice) for even `n`, the closed form for odd
/// `n >= 5`.
pub fn best_known_tps(n: usize) -> Option<u64> {
    match n {
        3 => Some(91),
        n if n >= 4 && n % 2 == 0 => Some(43 * (n * n) as u64 / 4),
        n if n >= 5 => tps_formula_odd(n).ok(),
        _ => None,
    }
}

/// Grows an optimal `n`x`n` odd pattern into an `(n+2)`x`(n+2)` one.
///
/// Two rows go below the pattern: `110(10)^m` then zeros. Two columns go to
/// its right: `(10)^m 110` read top-down (i.e. `011(01)^m` bottom-up), then
/// zeros. The new 2x2 corner holds a single point at its top-left.
fn grow_odd(p: &Pattern) -> Pattern {
    let n = p.n();
    let m = (n + 2 - 5) / 2;
    let mut row: Vec<u8> = vec![1, 1, 0];
    let mut col: Vec<u8> = vec![0, 1, 1];
    for _ in 0..m {
        row.extend([1, 0]);
        col.extend([0, 1]);
    }
    col.reverse();
    let side = n + 2;
    Pattern::from_fn(side, |i, j| match (i < n, j < n) {
        (true, true) => p.get(Coord { i, j }) == 1,
        (true, false) => j == n && col[i] == 1,
        (false, true) => i == n && row[j] == 1,
        (false, false) => i == n && j == n,
    })
    .expect("grown pattern is valid")
}

/// Optimal pattern for odd `n >= 5`, built recursively from the 5x5 optimum.
pub fn construct_optimal_odd(n: usize) -> Result<Pattern, AnalysisError> {
    check_odd(n)?;
    let mut p = Pattern::from_rows(&OPTIMUM_5);
    while p.n() < n {
        p = grow_odd(&p);
    }
    Ok(p)
}

/// Points on the even sublattice. For odd `n` the last two rows and columns
/// stay empty.
pub fn point_filled(n: usize) -> Result<Pattern, PatternError> {
    let limit = if n.is_multiple_of(2) { n } else { n.saturating_sub(2) };
    Pattern::from_fn(n, |i, j| i < limit && j < limit && i % 2 == 0 && j % 2 == 0)
}

/// Maximum TPS over all `2^(n*n)` patterns, and the optimal patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub n: usize,
    pub max_tps: f64,
    /// Number of optimal patterns before symmetry reduction.
    pub n_optima: u64,
    /// One canonical pattern per equivalence class under shift and the
    /// symmetries of the square.
    #[serde(skip)]
    pub representatives: Vec<Pattern>,
}

/// Largest side the oracle accepts without `allow_five`.
pub const ORACLE_MAX_N: usize = 4;

/// Bitboard TPS evaluator for grids of at most 64 cells. Works from the raw
/// game payoffs, independent of [`crate::payoff`].
struct BitEvaluator {
    cells: usize,
    neighbor_masks: Vec<u64>,
    table: [[f64; 9]; 2],
}

impl BitEvaluator {
    fn new(n: usize, params: &PayoffParams) -> Self {
        let neighbor_masks = (0..n * n)
            .map(|k| {
                let (i, j) = ((k / n) as isize, (k % n) as isize);
                let mut mask = 0u64;
                for di in -1..=1 {
                    for dj in -1..=1 {
                        if (di, dj) != (0, 0) {
                            let c = Coord::new(i + di, j + dj, n);
                            mask |= 1 << (c.i * n + c.j);
                        }
                    }
                }
                mask
            })
            .collect();
        let mut table = [[0.0; 9]; 2];
        for (own, row) in table.iter_mut().enumerate() {
            for (ones, slot) in row.iter_mut().enumerate() {
                let own = own as u8;
                let mut v = 0.0;
                for k in 0..8 {
                    v += params.game(own, (k < ones) as u8);
                }
                if params.self_play {
                    v += params.game(own, own);
                }
                *slot = v;
            }
        }
        BitEvaluator {
            cells: n * n,
            neighbor_masks,
            table,
        }
    }

    #[inline]
    fn tps(&self, bits: u64) -> f64 {
        let mut total = 0.0;
        for k in 0..self.cells {
            let own = ((bits >> k) & 1) as usize;
            let ones = (bits & self.neighbor_masks[k]).count_ones() as usize;
            total += self.table[own][ones];
        }
        total
    }
}

fn bits_to_pattern(bits: u64, n: usize) -> Pattern {
    Pattern::new(n, (0..n * n).map(|k| ((bits >> k) & 1) as u8).collect()).expect("valid size")
}

/// Exhaustive search over every pattern of side `n`. Sides above 4 are
/// refused unless `allow_five` is set and `n == 5` (2^25 patterns).
pub fn brute_force_oracle(
    n: usize,
    params: &PayoffParams,
    allow_five: bool,
    exec: Execution,
) -> Result<OracleResult, AnalysisError> {
    let max = if allow_five { 5 } else { ORACLE_MAX_N };
    if n > max {
        return Err(AnalysisError::OracleTooLarge { n, max });
    }
    if n < 3 {
        return Err(PatternError::TooSmall { n }.into());
    }
    let eval = BitEvaluator::new(n, params);
    let total: u64 = 1 << (n * n);
    let chunks = 256.min(total) as usize;
    let per_chunk = total / chunks as u64;

    let partial = map_indices(chunks, exec, |chunk| {
        let lo = chunk as u64 * per_chunk;
        let hi = lo + per_chunk;
        let mut best = f64::NEG_INFINITY;
        let mut arg: Vec<u64> = Vec::new();
        for bits in lo..hi {
            let v = eval.tps(bits);
            if v > best {
                best = v;
                arg.clear();
                arg.push(bits);
            } else if v == best {
                arg.push(bits);
            }
        }
        (best, arg)
    });

    let max_tps = partial.iter().map(|(b, _)| *b).fold(f64::NEG_INFINITY, f64::max);
    let mut n_optima = 0u64;
    let mut classes = BTreeSet::new();
    for (best, arg) in partial {
        if best == max_tps {
            n_optima += arg.len() as u64;
            for bits in arg {
                classes.insert(bits_to_pattern(bits, n).canonical());
            }
        }
    }
    Ok(OracleResult {
        n,
        max_tps,
        n_optima,
        representatives: classes.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::tps;

    fn lattice(n: usize) -> Pattern {
        Pattern::from_fn(n, |i, j| i % 2 == 0 && j % 2 == 0).unwrap()
    }

    #[test]
    fn best_known_values() {
        let known: Vec<Option<u64>> = (2..=9).map(best_known_tps).collect();
        assert_eq!(
            known,
            [None, Some(91), Some(172), Some(265), Some(387), Some(522), Some(688), Some(865)]
        );
        assert_eq!(best_known_tps(6).unwrap() as f64, tps(&lattice(6), &PayoffParams::default()));
    }

    #[test]
    fn point_counts() {
        assert_eq!(count_points(&lattice(6)), 9);
        assert_eq!(count_points(&Pattern::zeros(5).unwrap()), 0);
        assert_eq!(count_points(&Pattern::from_rows(&["000", "010", "000"])), 1);
    }

    #[test]
    fn domino_counts() {
        assert_eq!(count_dominoes(&Pattern::from_rows(&OPTIMUM_5)), 4);
        assert_eq!(count_dominoes(&Pattern::zeros(6).unwrap()), 0);
        let single = Pattern::from_rows(&["0000", "0110", "0000", "0000"]);
        assert_eq!(count_dominoes(&single), 1);
        // a 111-line is not a domino
        let line = Pattern::from_rows(&["00000", "01110", "00000", "00000", "00000"]);
        assert_eq!(count_dominoes(&line), 0);
    }

    #[test]
    fn singularity_examples() {
        assert_eq!(detect_singularities(&Pattern::from_rows(&OPTIMUM_5)).len(), 1);
        assert!(detect_singularities(&Pattern::zeros(6).unwrap()).is_empty());
        assert!(detect_singularities(&lattice(6)).is_empty());
    }

    #[test]
    fn formulas() {
        assert_eq!(tps_formula_odd(5).unwrap(), 265);
        assert_eq!(tps_formula_odd(7).unwrap(), 522);
        assert_eq!(tps_formula_odd(13).unwrap(), 1809);
        assert_eq!(points_formula_odd(9).unwrap(), 8);
        assert_eq!(dominoes_formula_odd(9).unwrap(), 8);
        assert_eq!(ones_formula_odd(9).unwrap(), 24);
        assert!(tps_formula_odd(6).is_err());
        assert!(tps_formula_odd(3).is_err());
        let far = wealth_formula_odd(100_001).unwrap();
        assert!((far - LIMIT_WEALTH).abs() < 1e-4);
        assert!(far < LIMIT_WEALTH);
    }

    #[test]
    fn odd_wealth_increases_and_density_decreases() {
        let sizes: Vec<usize> = (5..=41).step_by(2).collect();
        for w in sizes.windows(2) {
            assert!(wealth_formula_odd(w[0]).unwrap() < wealth_formula_odd(w[1]).unwrap());
            let d0 = ones_formula_odd(w[0]).unwrap() as f64 / (w[0] * w[0]) as f64;
            let d1 = ones_formula_odd(w[1]).unwrap() as f64 / (w[1] * w[1]) as f64;
            assert!(d1 < d0);
        }
    }

    #[test]
    fn construction_examples() {
        let params = PayoffParams::default();
        assert_eq!(tps(&construct_optimal_odd(5).unwrap(), &params), 265.0);
        let nine = construct_optimal_odd(9).unwrap();
        assert_eq!(tps(&nine, &params), 865.0);
        assert_eq!(nine.ones(), 24);
        assert_eq!(tps(&construct_optimal_odd(15).unwrap(), &params), 2410.0);
        assert_eq!(construct_optimal_odd(8), Err(AnalysisError::NotOddFamily(8)));
        assert_eq!(construct_optimal_odd(3), Err(AnalysisError::NotOddFamily(3)));
    }

    #[test]
    fn seven_by_seven_structure() {
        let r = structure_report(&construct_optimal_odd(7).unwrap());
        assert_eq!((r.dominoes, r.points, r.ones, r.singularities), (6, 3, 15, 1));
        assert_eq!(r.zero_cells, 34);
    }

    #[test]
    fn point_filled_shapes() {
        let even = point_filled(6).unwrap();
        assert_eq!(even, lattice(6));
        let odd = point_filled(27).unwrap();
        assert_eq!(odd.ones(), 13 * 13);
        assert_eq!(count_points(&odd), 169);
    }

    #[test]
    fn bit_evaluator_matches_payoff_module() {
        let params = PayoffParams::default();
        let eval = BitEvaluator::new(4, &params);
        let mut x = 0x1234_5678u64;
        for _ in 0..500 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let bits = (x >> 20) & 0xFFFF;
            assert_eq!(eval.tps(bits), tps(&bits_to_pattern(bits, 4), &params));
        }
    }

    #[test]
    fn oracle_three() {
        let r = brute_force_oracle(3, &PayoffParams::default(), false, Execution::Sequential).unwrap();
        assert_eq!(r.max_tps, 91.0);
        assert!(r.n_optima >= r.representatives.len() as u64);
        for p in &r.representatives {
            assert_eq!(tps(p, &PayoffParams::default()), 91.0);
        }
    }

    #[test]
    fn oracle_refuses_large_sizes() {
        let params = PayoffParams::default();
        assert_eq!(
            brute_force_oracle(5, &params, false, Execution::Sequential),
            Err(AnalysisError::OracleTooLarge { n: 5, max: 4 })
        );
        assert!(brute_force_oracle(6, &params, true, Execution::Sequential).is_err());
    }
}
