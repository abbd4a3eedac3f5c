//! Probabilistic, asynchronously updated CA driven by template matching.
//!
//! A micro-step selects one cell and tests every template's outer ring
//! against the cell's neighbors. On a hit the cell takes the center value of
//! a hitting template (drawn uniformly if several hit); without a hit, noise
//! flips 0 to 1 with probability `pi_01` and 1 to 0 with `pi_10`. A
//! generation is `n^2` micro-steps. TPS and wealth are evaluated after each
//! generation and never feed back into the dynamics.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{rng_from_seed, SimRng};
use crate::grid::{Coord, Pattern, PatternError, MIN_SIDE};
use crate::payoff::{tps, PayoffParams};
use crate::templates::{builtin_set, match_except_center, RuleVariant, TemplateSet, OUTER_MASK};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaError {
    #[error("probability {name} = {value} is outside [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("template set is empty")]
    NoTemplates,
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Selection {
    /// Uniform draw with replacement.
    #[default]
    Random,
    /// Row-major sweep, continuing across generations.
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaConfig {
    pub templates: TemplateSet,
    pub pi_01: f64,
    pub pi_10: f64,
    pub selection: Selection,
    /// Probability that a cell starts as 1 in a random initial field.
    pub init_density: f64,
    pub t_limit: usize,
    pub seed: u64,
    pub params: PayoffParams,
    /// End the run at the first stable generation. A stable pattern is a
    /// fixed point, so this only trims the trace.
    pub stop_when_stable: bool,
    /// Keep the per-generation trace in the result.
    pub record_trace: bool,
}

impl CaConfig {
    pub fn new(templates: TemplateSet) -> Self {
        CaConfig {
            templates,
            pi_01: 0.04,
            pi_10: 1.0,
            selection: Selection::Random,
            init_density: 0.25,
            t_limit: 100,
            seed: 0,
            params: PayoffParams::default(),
            stop_when_stable: true,
            record_trace: true,
        }
    }

    pub fn for_rule(rule: RuleVariant) -> Self {
        CaConfig::new(builtin_set(rule))
    }

    pub fn validate(&self) -> Result<(), CaError> {
        for (name, value) in [
            ("pi_01", self.pi_01),
            ("pi_10", self.pi_10),
            ("init_density", self.init_density),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CaError::Probability { name, value });
            }
        }
        if self.templates.is_empty() {
            return Err(CaError::NoTemplates);
        }
        Ok(())
    }
}

/// Template set compiled into a lookup from outer ring to the center values
/// of the templates that hit.
#[derive(Debug, Clone)]
pub struct CompiledRule {
    /// Indexed by the 9-bit window code with the center bit cleared. Bit 0
    /// set: a template with center 0 hits; bit 1: one with center 1 hits.
    centers: Vec<u8>,
}

impl CompiledRule {
    pub fn new(templates: &TemplateSet) -> Self {
        let mut centers = vec![0u8; 512];
        for t in templates {
            centers[t.outer() as usize] |= 1 << t.center();
        }
        CompiledRule { centers }
    }

    /// Bitmask of hitting centers for a window code.
    #[inline]
    pub fn hits(&self, window: u16) -> u8 {
        self.centers[(window & OUTER_MASK) as usize]
    }

    /// Cell is fully matched and no template could rewrite it.
    #[inline]
    pub fn is_settled(&self, p: &Pattern, c: Coord) -> bool {
        self.hits(p.window_code(c)) == 1 << p.get(c)
    }

    /// Every cell is settled, so no micro-step can change the pattern.
    pub fn is_stable(&self, p: &Pattern) -> bool {
        p.coords().all(|c| self.is_settled(p, c))
    }
}

/// Indices of the templates whose outer ring matches at `c`, tested one by
/// one.
pub fn template_hits(p: &Pattern, c: Coord, templates: &TemplateSet) -> Vec<usize> {
    templates
        .iter()
        .enumerate()
        .filter(|(_, t)| match_except_center(p, c, t))
        .map(|(k, _)| k)
        .collect()
}

/// Pattern plus per-cell hit flags and the generation counter.
#[derive(Debug, Clone, PartialEq)]
pub struct CaState {
    pub pattern: Pattern,
    pub hits: Vec<u8>,
    pub t: usize,
    cursor: usize,
}

impl CaState {
    pub fn from_pattern(pattern: Pattern) -> Self {
        let hits = vec![0; pattern.len()];
        CaState {
            pattern,
            hits,
            t: 0,
            cursor: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.pattern.n()
    }
}

/// Random start: each cell is 1 with probability `init_density`.
pub fn init_ca(cfg: &CaConfig, n: usize, rng: &mut SimRng) -> Result<CaState, CaError> {
    cfg.validate()?;
    if n < MIN_SIDE {
        return Err(PatternError::TooSmall { n }.into());
    }
    let cells = (0..n * n).map(|_| rng.random_bool(cfg.init_density) as u8).collect();
    Ok(CaState::from_pattern(Pattern::new(n, cells)?))
}

/// What one micro-step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MicroStep {
    pub coord: Coord,
    pub hit: bool,
    pub changed: bool,
}

pub fn micro_step(state: &mut CaState, rule: &CompiledRule, cfg: &CaConfig, rng: &mut SimRng) -> MicroStep {
    let len = state.pattern.len();
    let index = match cfg.selection {
        Selection::Random => rng.random_range(0..len),
        Selection::Sequential => {
            let k = state.cursor;
            state.cursor = (k + 1) % len;
            k
        }
    };
    let coord = state.pattern.coord_of(index);
    let current = state.pattern.get(coord);
    let centers = rule.hits(state.pattern.window_code(coord));
    let hit = centers != 0;
    state.hits[index] = hit as u8;
    let next = if hit {
        match centers {
            0b01 => 0,
            0b10 => 1,
            _ => rng.random_range(0..2u8),
        }
    } else if current == 0 {
        rng.random_bool(cfg.pi_01) as u8
    } else {
        (!rng.random_bool(cfg.pi_10)) as u8
    };
    if next != current {
        state.pattern.set(coord, next == 1);
    }
    MicroStep {
        coord,
        hit,
        changed: next != current,
    }
}

/// `n^2` micro-steps, then `t += 1`. Returns the number of cell changes.
pub fn generation(state: &mut CaState, rule: &CompiledRule, cfg: &CaConfig, rng: &mut SimRng) -> usize {
    let mut changes = 0;
    for _ in 0..state.pattern.len() {
        changes += micro_step(state, rule, cfg, rng).changed as usize;
    }
    state.t += 1;
    changes
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub t: usize,
    pub tps: f64,
    pub wealth: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub w_max: f64,
    pub tps_max: f64,
    /// First generation at which `w_max` was observed (0 = initial field).
    pub t_max: usize,
    pub best_pattern: Pattern,
    pub final_pattern: Pattern,
    pub tps_final: f64,
    pub w_final: f64,
    pub stable: bool,
    /// First generation at which the pattern was stable, if ever.
    pub t_stable: Option<usize>,
    pub generations: usize,
    pub trace: Vec<GenerationRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaStart {
    Random { n: usize },
    Pattern(Pattern),
}

pub fn run_ca(cfg: &CaConfig, start: &CaStart) -> Result<RunResult, CaError> {
    run_ca_observed(cfg, start, |_, _| {})
}

/// Like [`run_ca`], calling `observe` with the state and its evaluation at
/// t = 0 and after every generation.
pub fn run_ca_observed(
    cfg: &CaConfig,
    start: &CaStart,
    mut observe: impl FnMut(&CaState, &GenerationRecord),
) -> Result<RunResult, CaError> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut state = match start {
        CaStart::Random { n } => init_ca(cfg, *n, &mut rng)?,
        CaStart::Pattern(p) => CaState::from_pattern(p.clone()),
    };
    let rule = CompiledRule::new(&cfg.templates);
    let k_cells = (cfg.params.k() * state.pattern.len()) as f64;

    let evaluate = |state: &CaState| {
        let tps = tps(&state.pattern, &cfg.params);
        GenerationRecord {
            t: state.t,
            tps,
            wealth: tps / k_cells,
            stable: rule.is_stable(&state.pattern),
        }
    };

    let first = evaluate(&state);
    observe(&state, &first);
    let mut best = first;
    let mut best_pattern = state.pattern.clone();
    let mut t_stable = first.stable.then_some(0);
    let mut last = first;
    let mut trace = Vec::new();
    if cfg.record_trace {
        trace.push(first);
    }

    while state.t < cfg.t_limit && !(cfg.stop_when_stable && last.stable) {
        generation(&mut state, &rule, cfg, &mut rng);
        last = evaluate(&state);
        observe(&state, &last);
        if cfg.record_trace {
            trace.push(last);
        }
        if last.tps > best.tps {
            best = last;
            best_pattern = state.pattern.clone();
        }
        if last.stable && t_stable.is_none() {
            t_stable = Some(state.t);
        }
    }

    Ok(RunResult {
        w_max: best.wealth,
        tps_max: best.tps,
        t_max: best.t,
        best_pattern,
        tps_final: last.tps,
        w_final: last.wealth,
        stable: last.stable,
        t_stable,
        generations: state.t,
        final_pattern: state.pattern,
        trace,
    })
}
