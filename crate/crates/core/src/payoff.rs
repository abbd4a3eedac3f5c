//! Spatial prisoner's dilemma utility and the pattern measures built on it:
//! total payoff sum (TPS), wealth, and the mean-field expected wealth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Coord, Pattern};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PayoffError {
    #[error("cooperation rate {0} is outside [0, 1]")]
    RateOutOfRange(f64),
    #[error("step {0} must be in (0, 1]")]
    BadStep(f64),
}

/// Payoff matrix entries plus whether a cell also plays against itself.
///
/// State 0 is C (cooperate), state 1 is D (defect).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffParams {
    /// Temptation: D against C.
    pub t: f64,
    /// Reward: C against C.
    pub r: f64,
    /// Punishment: D against D.
    pub p: f64,
    /// Sucker: C against D.
    pub s: f64,
    pub self_play: bool,
}

impl Default for PayoffParams {
    fn default() -> Self {
        PayoffParams {
            t: 3.0,
            r: 1.0,
            p: 0.0,
            s: 0.0,
            self_play: true,
        }
    }
}

impl PayoffParams {
    /// Number of opponents: the 8 Moore neighbors, plus the cell itself
    /// under self-play.
    pub fn k(&self) -> usize {
        if self.self_play {
            9
        } else {
            8
        }
    }

    /// Payoff of a player in state `own` against an opponent in `other`.
    #[inline]
    pub fn game(&self, own: u8, other: u8) -> f64 {
        match (own, other) {
            (0, 0) => self.r,
            (0, _) => self.s,
            (_, 0) => self.t,
            _ => self.p,
        }
    }

    /// Total payoff of a cell as a function of its own state and the number
    /// of ones among its 8 outer neighbors.
    pub fn payoff_table(&self) -> [[f64; 9]; 2] {
        let mut table = [[0.0; 9]; 2];
        for (own, row) in table.iter_mut().enumerate() {
            let own = own as u8;
            for (ones, slot) in row.iter_mut().enumerate() {
                let zeros = 8 - ones;
                let mut total = zeros as f64 * self.game(own, 0) + ones as f64 * self.game(own, 1);
                if self.self_play {
                    total += self.game(own, own);
                }
                *slot = total;
            }
        }
        table
    }

    /// True when every payoff entry is an integer, so TPS is exact.
    pub fn is_integral(&self) -> bool {
        [self.t, self.r, self.p, self.s].iter().all(|v| v.fract() == 0.0)
    }
}

/// Sum of the 2-player payoffs a cell collects from its opponents.
pub fn cell_total_payoff(p: &Pattern, c: Coord, params: &PayoffParams) -> f64 {
    let nb = p.moore_neighborhood(c);
    let own = nb.center();
    let mut total: f64 = nb.outer().iter().map(|&other| params.game(own, other)).sum();
    if params.self_play {
        total += params.game(own, own);
    }
    total
}

pub fn cell_utility(p: &Pattern, c: Coord, params: &PayoffParams) -> f64 {
    cell_total_payoff(p, c, params) / params.k() as f64
}

/// Per-cell total payoffs, row-major.
pub fn payoff_map(p: &Pattern, params: &PayoffParams) -> Vec<f64> {
    let table = params.payoff_table();
    let window = p.window_ones();
    p.cells()
        .iter()
        .zip(window)
        .map(|(&own, ones)| table[own as usize][(ones - own) as usize])
        .collect()
}

/// Total payoff sum over all cells. This is the GA fitness.
pub fn tps(p: &Pattern, params: &PayoffParams) -> f64 {
    payoff_map(p, params).iter().sum()
}

/// TPS divided by the number of opponents and the number of cells.
pub fn wealth(p: &Pattern, params: &PayoffParams) -> f64 {
    tps(p, params) / (params.k() * p.len()) as f64
}

/// Mean-field wealth when a fraction `pi_c` of all agents cooperates and
/// everybody meets everybody.
pub fn expected_wealth(pi_c: f64, params: &PayoffParams) -> Result<f64, PayoffError> {
    if !(0.0..=1.0).contains(&pi_c) {
        return Err(PayoffError::RateOutOfRange(pi_c));
    }
    let pi_d = 1.0 - pi_c;
    let payoff_d = params.p * pi_d + params.t * pi_c;
    let payoff_c = params.r * pi_c + params.s * pi_d;
    Ok(pi_d * payoff_d + pi_c * payoff_c)
}

/// `(pi_C, W)` samples on `0, step, 2*step, ..., 1`.
pub fn expected_wealth_curve(step: f64, params: &PayoffParams) -> Result<Vec<(f64, f64)>, PayoffError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(PayoffError::BadStep(step));
    }
    let count = (1.0 / step).round() as usize;
    (0..=count)
        .map(|k| {
            let pi_c = (k as f64 * step).min(1.0);
            expected_wealth(pi_c, params).map(|w| (pi_c, w))
        })
        .collect()
}

/// Characteristic tuple `(W, TPS; n, n^2, b, b/n^2)` of a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub wealth: f64,
    pub tps: f64,
    pub n: usize,
    pub cells: usize,
    pub ones: usize,
    pub density: f64,
}

pub fn characteristic(p: &Pattern, params: &PayoffParams) -> Characteristic {
    let tps = tps(p, params);
    let cells = p.len();
    let ones = p.ones();
    Characteristic {
        wealth: tps / (params.k() * cells) as f64,
        tps,
        n: p.n(),
        cells,
        ones,
        density: ones as f64 / cells as f64,
    }
}
