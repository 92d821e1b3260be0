//! Genome representations, initialization, and mutation operators.
//!
//! Two genome kinds cover the benchmark domains: a fixed-length knight move
//! sequence and a flat MLP weight vector. Mutation is the only variation
//! operator; both algorithms share it so comparisons isolate selection.

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::RngStream;
use crate::{Error, Result};

/// The 8 knight move offsets (dx, dy), indexed by gene value.
pub const KNIGHT_MOVES: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];

/// 63 moves extend a tour to at most all 64 tiles.
pub const KNIGHT_GENOME_LEN: usize = 63;

/// Move-index sequence; every entry indexes [`KNIGHT_MOVES`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnightGenome(pub Vec<u8>);

/// Flat MLP weight vector, laid out per [`MlpLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGenome(pub Vec<f64>);

/// Fully connected 5 → hidden (tanh) → 2 (linear) network.
///
/// Genome layout: W1 row-major (hidden × 5), b1, W2 row-major (2 × hidden),
/// b2. Total length (5+1)·H + (H+1)·2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpLayout {
    pub hidden: usize,
}

impl MlpLayout {
    pub const INPUTS: usize = 5;
    pub const OUTPUTS: usize = 2;

    pub fn new(hidden: usize) -> Result<MlpLayout> {
        if hidden == 0 {
            return Err(Error::config("hidden layer size must be at least 1"));
        }
        Ok(MlpLayout { hidden })
    }

    pub fn genome_len(&self) -> usize {
        (Self::INPUTS + 1) * self.hidden + (self.hidden + 1) * Self::OUTPUTS
    }

    fn split<'g>(&self, g: &'g MlpGenome) -> (&'g [f64], &'g [f64], &'g [f64], &'g [f64]) {
        let h = self.hidden;
        let (w1, rest) = g.0.split_at(h * Self::INPUTS);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(Self::OUTPUTS * h);
        (w1, b1, w2, b2)
    }
}

/// Fixed-size population plus its generation counter.
#[derive(Debug, Clone)]
pub struct Population<G> {
    pub members: Vec<G>,
    pub generation: u32,
}

/// Draw p genomes from `init`. The population size stays fixed for the
/// whole run, so p = 0 is rejected up front.
pub fn init_population<G>(
    p: usize,
    rng: &mut RngStream,
    mut init: impl FnMut(&mut RngStream) -> G,
) -> Result<Population<G>> {
    if p == 0 {
        return Err(Error::config("population size must be at least 1"));
    }
    Ok(Population {
        members: (0..p).map(|_| init(rng)).collect(),
        generation: 0,
    })
}

/// Uniform random move sequence.
pub fn init_knight_genome(rng: &mut RngStream) -> KnightGenome {
    KnightGenome(
        (0..KNIGHT_GENOME_LEN)
            .map(|_| rng.random_range(0..KNIGHT_MOVES.len()) as u8)
            .collect(),
    )
}

/// Per-layer Gaussian init with std 1/√fan_in (fan_in 5 for the hidden
/// layer, H for the output layer). Biases use their layer's std.
pub fn init_mlp_genome(layout: MlpLayout, rng: &mut RngStream) -> MlpGenome {
    let h = layout.hidden;
    let std1 = 1.0 / (MlpLayout::INPUTS as f64).sqrt();
    let std2 = 1.0 / (h as f64).sqrt();
    let mut w = Vec::with_capacity(layout.genome_len());
    for _ in 0..(MlpLayout::INPUTS + 1) * h {
        let z: f64 = StandardNormal.sample(rng);
        w.push(z * std1);
    }
    for _ in 0..(h + 1) * MlpLayout::OUTPUTS {
        let z: f64 = StandardNormal.sample(rng);
        w.push(z * std2);
    }
    MlpGenome(w)
}

/// Each gene is independently resampled uniformly from [0, 7] with
/// probability `per_gene_rate`; the parent is left untouched.
pub fn mutate_knight(g: &KnightGenome, per_gene_rate: f64, rng: &mut RngStream) -> KnightGenome {
    debug_assert!((0.0..=1.0).contains(&per_gene_rate));
    let mut child = g.clone();
    for gene in &mut child.0 {
        if rng.random::<f64>() < per_gene_rate {
            *gene = rng.random_range(0..KNIGHT_MOVES.len()) as u8;
        }
    }
    child
}

/// Every weight perturbed by i.i.d. Gaussian(0, sigma); parent untouched.
pub fn mutate_mlp(g: &MlpGenome, sigma: f64, rng: &mut RngStream) -> MlpGenome {
    debug_assert!(sigma >= 0.0);
    let mut child = g.clone();
    for w in &mut child.0 {
        let z: f64 = StandardNormal.sample(rng);
        *w += z * sigma;
    }
    child
}

/// Scratch buffer so rollout loops can run the network without allocating.
#[derive(Debug, Clone)]
pub struct MlpScratch {
    hidden: Vec<f64>,
}

impl MlpScratch {
    pub fn new(layout: MlpLayout) -> MlpScratch {
        MlpScratch {
            hidden: vec![0.0; layout.hidden],
        }
    }
}

/// hidden = tanh(W1·input + b1); output = W2·hidden + b2, raw and unclipped.
pub fn mlp_forward_into(
    layout: MlpLayout,
    g: &MlpGenome,
    input: &[f64],
    scratch: &mut MlpScratch,
) -> [f64; 2] {
    debug_assert_eq!(g.0.len(), layout.genome_len());
    debug_assert_eq!(input.len(), MlpLayout::INPUTS);
    let (w1, b1, w2, b2) = layout.split(g);
    for (i, h) in scratch.hidden.iter_mut().enumerate() {
        let row = &w1[i * MlpLayout::INPUTS..(i + 1) * MlpLayout::INPUTS];
        let pre: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b1[i];
        *h = pre.tanh();
    }
    let mut out = [0.0; 2];
    for (j, o) in out.iter_mut().enumerate() {
        let row = &w2[j * layout.hidden..(j + 1) * layout.hidden];
        *o = row
            .iter()
            .zip(&scratch.hidden)
            .map(|(w, h)| w * h)
            .sum::<f64>()
            + b2[j];
    }
    out
}

/// Allocating convenience wrapper around [`mlp_forward_into`].
pub fn mlp_forward(layout: MlpLayout, g: &MlpGenome, input: &[f64]) -> [f64; 2] {
    let mut scratch = MlpScratch::new(layout);
    mlp_forward_into(layout, g, input, &mut scratch)
}
