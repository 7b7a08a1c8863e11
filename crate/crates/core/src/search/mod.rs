//! Search over periodic strip coefficients for large box averages of `S#μ`,
//! and the small-`t` curvature of the integral means spectrum.

mod curvature;
mod objective;

pub use curvature::{b0_curvature, CurvatureRow};
pub use objective::{
    mode_count, mode_weight, objective, objective_by_quadrature, s_sharp_halfplane, BoxObjective, ObjectiveValue,
};

use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beltrami::{make_periodic, StripCoefficient};
use crate::{Error, Result};

/// Ceiling every objective must respect: `Σ² ≤ 1` plus quadrature slack.
pub const OBJECTIVE_CEILING: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    /// Each sweep visits the cells in a random order and sets each phase to
    /// its exact maximizer.
    CoordinateAscent,
    /// Metropolis phase moves with temperature `t0 · cooling^iteration`.
    Annealing { initial_temperature: f64, cooling: f64, step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// The tile is periodic for the `2^order`-adic grid.
    pub order: u32,
    pub tile_depth: u32,
    /// Box order of the objective; defaults to `order`.
    pub box_order: u32,
    pub optimizer: Optimizer,
    pub iterations: usize,
    pub seed: u64,
    /// Cell values on the unit circle; otherwise magnitudes start uniform in
    /// `[0, 1]` and moves may change them.
    pub unimodular: bool,
}

impl SearchConfig {
    pub fn new(order: u32, tile_depth: u32, iterations: usize, seed: u64) -> Self {
        Self {
            order,
            tile_depth,
            box_order: order,
            optimizer: Optimizer::CoordinateAscent,
            iterations,
            seed,
            unimodular: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidParameter(format!("grid order n must be >= 2, got {}", self.order)));
        }
        if self.box_order < 1 {
            return Err(Error::InvalidParameter("box order must be >= 1".into()));
        }
        if let Optimizer::Annealing { initial_temperature, cooling, step } = self.optimizer {
            if !(initial_temperature > 0.0 && cooling > 0.0 && cooling <= 1.0 && step > 0.0) {
                return Err(Error::InvalidParameter("annealing needs t0 > 0, 0 < cooling <= 1, step > 0".into()));
            }
        }
        if self.order > 16 || self.tile_depth > 8 {
            return Err(Error::InvalidParameter(format!(
                "order {} / tile depth {} out of range (<= 16 / <= 8)",
                self.order, self.tile_depth
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub current: f64,
    pub best: f64,
}

/// Everything needed to continue a search bit-exactly. Iteration `k` draws
/// from ChaCha8 stream `k + 1` of the seed, so the stream index is the whole
/// RNG state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchState {
    pub config: SearchConfig,
    pub iteration: usize,
    pub rng_stream: u64,
    pub current: Vec<Complex64>,
    pub current_value: f64,
    pub best: Vec<Complex64>,
    pub best_value: f64,
    pub max_evaluated: f64,
    pub history: Vec<HistoryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub config: SearchConfig,
    pub best: StripCoefficient,
    pub objective: f64,
    /// Mode-truncation bound of the spectral objective.
    pub quadrature_error: f64,
    pub history: Vec<HistoryRow>,
    /// Largest objective seen at any evaluation.
    pub max_evaluated: f64,
    pub ceiling_respected: bool,
}

impl SearchState {
    pub fn initial(config: SearchConfig, form: &BoxObjective) -> Result<Self> {
        config.validate()?;
        let cells = StripCoefficient::cell_count(config.order, config.tile_depth);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let tile: Vec<Complex64> = (0..cells)
            .map(|_| {
                let phase = rng.gen_range(0.0..TAU);
                let r = if config.unimodular { 1.0 } else { rng.gen_range(0.0..=1.0) };
                Complex64::from_polar(r, phase)
            })
            .collect();
        let value = form.evaluate(&tile);
        Ok(Self {
            config,
            iteration: 0,
            rng_stream: 1,
            current: tile.clone(),
            current_value: value,
            best: tile,
            best_value: value,
            max_evaluated: value,
            history: vec![HistoryRow { iteration: 0, current: value, best: value }],
        })
    }

    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_checkpoint(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let s: Self = serde_json::from_str(&text).map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))?;
        let cells = StripCoefficient::cell_count(s.config.order, s.config.tile_depth);
        if s.current.len() != cells || s.best.len() != cells || s.rng_stream != s.iteration as u64 + 1 {
            return Err(Error::Corrupt(format!("{}: inconsistent checkpoint", path.display())));
        }
        s.config.validate().map_err(|e| Error::Corrupt(e.to_string()))?;
        Ok(s)
    }

    /// Runs `count` further iterations.
    pub fn advance(&mut self, form: &BoxObjective, count: usize) {
        for _ in 0..count {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
            rng.set_stream(self.rng_stream);
            let mut order: Vec<usize> = (0..self.current.len()).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, rng.gen_range(0..=i));
            }
            // recomputed from the tile each sweep so a resumed run sees the same bits
            let mut c = form.coefficients(&self.current);
            for &k in &order {
                let v = self.current[k];
                let col = form.column(k);
                for (ci, a) in c.iter_mut().zip(col) {
                    *ci -= a * v;
                }
                let (d, g) = form.coordinate_terms(&c, k);
                let next = match self.config.optimizer {
                    Optimizer::CoordinateAscent => best_move(g, v),
                    Optimizer::Annealing { initial_temperature, cooling, step } => {
                        let temp = initial_temperature * cooling.powi(self.iteration as i32);
                        let dphi = rng.gen_range(-step..step);
                        let r = if self.config.unimodular { 1.0 } else { rng.gen_range(0.0..=1.0) };
                        let w = Complex64::from_polar(r, v.arg() + dphi);
                        let gain = |u: Complex64| u.norm_sqr() * d + 2.0 * (u * g).re;
                        let delta = gain(w) - gain(v);
                        let u: f64 = rng.gen();
                        if delta >= 0.0 || u < (delta / temp).exp() {
                            w
                        } else {
                            v
                        }
                    }
                };
                self.current[k] = next;
                for (ci, a) in c.iter_mut().zip(col) {
                    *ci += a * next;
                }
            }
            self.iteration += 1;
            self.rng_stream += 1;
            self.current_value = form.evaluate(&self.current);
            self.max_evaluated = self.max_evaluated.max(self.current_value);
            if self.current_value > self.best_value {
                self.best_value = self.current_value;
                self.best = self.current.clone();
            }
            self.history.push(HistoryRow {
                iteration: self.iteration,
                current: self.current_value,
                best: self.best_value,
            });
        }
    }

    pub fn result(&self, form: &BoxObjective) -> Result<SearchResult> {
        let best = make_periodic(self.config.order, self.config.tile_depth, self.best.clone())?;
        Ok(SearchResult {
            config: self.config,
            best,
            objective: self.best_value,
            quadrature_error: form.tail + 1e-12,
            history: self.history.clone(),
            max_evaluated: self.max_evaluated,
            ceiling_respected: self.max_evaluated <= OBJECTIVE_CEILING,
        })
    }
}

/// Maximizer of `2 Re(v g)` over the unit circle; ties keep `v`.
fn best_move(g: Complex64, v: Complex64) -> Complex64 {
    if g.norm() == 0.0 {
        return v;
    }
    g.conj() / g.norm()
}

/// Runs a fresh search.
pub fn optimize(config: SearchConfig) -> Result<SearchResult> {
    let form = BoxObjective::new(config.order, config.tile_depth, config.box_order)?;
    let mut state = SearchState::initial(config, &form)?;
    state.advance(&form, config.iterations);
    state.result(&form)
}

impl SearchResult {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iteration,current,best\n");
        for r in &self.history {
            s.push_str(&format!("{},{},{}\n", r.iteration, crate::spectrum::fmt17(r.current), crate::spectrum::fmt17(r.best)));
        }
        s
    }

    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1].best >= w[0].best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_iterations_return_initial_objective() {
        let cfg = SearchConfig::new(2, 1, 0, 3);
        let r = optimize(cfg).unwrap();
        let direct = objective(&r.best, 2).unwrap().value;
        assert!((r.objective - direct).abs() < 1e-12 * direct);
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn ascent_improves_and_respects_ceiling() {
        let cfg = SearchConfig::new(4, 3, 200, 1);
        let r = optimize(cfg).unwrap();
        assert!(r.is_monotone());
        assert!(r.objective > r.history[0].best);
        assert!(r.ceiling_respected, "{}", r.max_evaluated);
        let check = objective(&r.best, 4).unwrap();
        assert!((check.value - r.objective).abs() < 1e-10);
    }

    #[test]
    fn annealing_is_monotone_in_best() {
        let mut cfg = SearchConfig::new(3, 1, 30, 2);
        cfg.optimizer = Optimizer::Annealing { initial_temperature: 0.01, cooling: 0.9, step: 1.0 };
        let r = optimize(cfg).unwrap();
        assert!(r.is_monotone());
        assert!(r.objective >= r.history[0].best);
    }

    #[test]
    fn resume_is_bit_exact() {
        let cfg = SearchConfig::new(3, 2, 10, 7);
        let form = BoxObjective::new(3, 2, 3).unwrap();
        let mut one = SearchState::initial(cfg, &form).unwrap();
        one.advance(&form, 10);
        let mut two = SearchState::initial(cfg, &form).unwrap();
        two.advance(&form, 4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        two.write_checkpoint(&path).unwrap();
        let mut three = SearchState::read_checkpoint(&path).unwrap();
        three.advance(&form, 6);
        assert_eq!(one, three);
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(SearchState::read_checkpoint(&path), Err(Error::Corrupt(_))));
    }

    #[test]
    fn invalid_configs() {
        assert!(SearchConfig::new(1, 1, 1, 0).validate().is_err());
        assert!(SearchConfig::new(2, 9, 1, 0).validate().is_err());
        assert!(SearchConfig::new(4, 2, 1, 0).validate().is_ok());
    }
}
