//! Lexicase parent selection over subaggregated objectives (maximization).
//!
//! Each selection shuffles the objectives, then repeatedly filters the
//! candidate pool down to those tied with the pool maximum on the next
//! objective, stopping early once a single candidate survives. Residual
//! ties after the last objective break uniformly at random.

use rand::seq::SliceRandom;
use rand::RngExt;

use crate::rng::RngStream;
use crate::subagg::ObjectiveVector;
use crate::{Error, Result};

/// Rectangular p × n matrix of objective values, one row per candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveMatrix {
    values: Vec<f64>,
    candidates: usize,
    objectives: usize,
}

impl ObjectiveMatrix {
    pub fn from_rows(rows: &[ObjectiveVector]) -> Result<ObjectiveMatrix> {
        let Some(first) = rows.first() else {
            return Err(Error::input(
                "objective matrix needs at least one candidate",
            ));
        };
        let objectives = first.len();
        if objectives == 0 {
            return Err(Error::input(
                "objective matrix needs at least one objective",
            ));
        }
        let mut values = Vec::with_capacity(rows.len() * objectives);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != objectives {
                return Err(Error::input(format!(
                    "candidate {i} has {} objectives, expected {objectives}",
                    row.len()
                )));
            }
            if let Some(bad) = row.0.iter().find(|v| !v.is_finite()) {
                return Err(Error::input(format!(
                    "candidate {i} has non-finite objective value {bad}"
                )));
            }
            values.extend_from_slice(&row.0);
        }
        Ok(ObjectiveMatrix {
            values,
            candidates: rows.len(),
            objectives,
        })
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn objectives(&self) -> usize {
        self.objectives
    }

    pub fn value(&self, candidate: usize, objective: usize) -> f64 {
        self.values[candidate * self.objectives + objective]
    }
}

/// Lexicase selector. `epsilon = 0` filters on exact equality with the pool
/// maximum; positive epsilon keeps candidates within that margin instead.
/// All shipped experiment presets use 0.
#[derive(Debug, Clone, Copy)]
pub struct LexicaseSelector {
    pub epsilon: f64,
}

impl Default for LexicaseSelector {
    fn default() -> Self {
        LexicaseSelector { epsilon: 0.0 }
    }
}

impl LexicaseSelector {
    pub fn new(epsilon: f64) -> Result<LexicaseSelector> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::config(format!(
                "lexicase epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(LexicaseSelector { epsilon })
    }

    /// Retain pool members whose value on `objective` ties the pool maximum.
    fn filter_pool(&self, m: &ObjectiveMatrix, pool: &mut Vec<usize>, objective: usize) {
        let max = pool
            .iter()
            .map(|&c| m.value(c, objective))
            .fold(f64::NEG_INFINITY, f64::max);
        pool.retain(|&c| m.value(c, objective) >= max - self.epsilon);
    }

    /// One parent selection: fresh objective shuffle, sequential filtering,
    /// uniform tie-break among whatever survives every objective.
    pub fn select_one(&self, m: &ObjectiveMatrix, rng: &mut RngStream) -> Result<usize> {
        let mut order: Vec<usize> = (0..m.objectives()).collect();
        order.shuffle(rng);
        let mut pool: Vec<usize> = (0..m.candidates()).collect();
        for &objective in &order {
            self.filter_pool(m, &mut pool, objective);
            if pool.len() == 1 {
                return Ok(pool[0]);
            }
        }
        Ok(pool[rng.random_range(0..pool.len())])
    }

    /// `count` independent selections with replacement.
    pub fn select_parents(
        &self,
        m: &ObjectiveMatrix,
        count: usize,
        rng: &mut RngStream,
    ) -> Result<Vec<usize>> {
        if count == 0 {
            return Err(Error::input("parent count must be at least 1"));
        }
        (0..count).map(|_| self.select_one(m, rng)).collect()
    }

    /// Exact selection probabilities by enumerating all n! objective orders.
    /// Residual ties after the full order split their weight uniformly.
    pub fn selection_probability_oracle(&self, m: &ObjectiveMatrix) -> Result<Vec<f64>> {
        if m.objectives() > 6 || m.candidates() > 8 {
            return Err(Error::OracleTooLarge(format!(
                "oracle enumerates at most 6 objectives x 8 candidates, got {} x {}",
                m.objectives(),
                m.candidates()
            )));
        }
        let mut probs = vec![0.0; m.candidates()];
        let mut order: Vec<usize> = (0..m.objectives()).collect();
        let total_orders = factorial(m.objectives()) as f64;
        let per_order = 1.0 / total_orders;
        permutations(&mut order, 0, &mut |order| {
            let mut pool: Vec<usize> = (0..m.candidates()).collect();
            for &objective in order {
                self.filter_pool(m, &mut pool, objective);
                if pool.len() == 1 {
                    break;
                }
            }
            let share = per_order / pool.len() as f64;
            for &c in &pool {
                probs[c] += share;
            }
        });
        Ok(probs)
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Visit every permutation of `items[at..]` in place (Heap's recursion).
fn permutations(items: &mut [usize], at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permutations(items, at + 1, visit);
        items.swap(at, i);
    }
}
