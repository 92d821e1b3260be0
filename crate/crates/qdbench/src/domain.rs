//! The [`Domain`] trait packages what the evolutionary loop needs from a
//! problem: genome sampling and mutation, trajectory evaluation, and the
//! score/measure/archive conventions.

use crate::archive::MeasureSpec;
use crate::evo::{
    init_knight_genome, init_mlp_genome, mutate_knight, mutate_mlp, KnightGenome, MlpGenome,
    MlpLayout,
};
use crate::knights::{board_bounds, evaluate_knight, knight_measure, BOARD_SIDE};
use crate::maze::{
    deceptive_score, maze_measure, rollout, MazeMap, MazePhysics, RewardMode, ACTION_SCALE,
};
use crate::rng::RngStream;
use crate::subagg::Trajectory;
use crate::{Error, Result};

pub trait Domain: Sync {
    type Genome: Clone + Send + Sync;

    fn init_genome(&self, rng: &mut RngStream) -> Self::Genome;
    fn mutate(&self, genome: &Self::Genome, rng: &mut RngStream) -> Self::Genome;
    /// Deterministic: same genome, same trajectory.
    fn evaluate(&self, genome: &Self::Genome) -> Trajectory;
    /// Reported score of a trajectory. Equals total fitness except where a
    /// domain defines a normalized report (deceptive maze: −d_T).
    fn score(&self, traj: &Trajectory) -> f64;
    fn measure(&self, traj: &Trajectory) -> (f64, f64);
    /// Lower bound on scores, used as the QD-score offset.
    fn score_floor(&self) -> f64;
    fn measure_spec(&self) -> MeasureSpec;
}

/// Knight's tour on the 8x8 board. The archive is pinned to one cell per
/// tile, so the measure space is exactly the board.
#[derive(Debug, Clone)]
pub struct KnightsDomain {
    pub per_gene_rate: f64,
}

impl KnightsDomain {
    pub fn new(per_gene_rate: f64) -> Result<KnightsDomain> {
        if !(per_gene_rate.is_finite() && (0.0..=1.0).contains(&per_gene_rate)) {
            return Err(Error::config(format!(
                "per-gene mutation rate must be in [0, 1], got {per_gene_rate}"
            )));
        }
        Ok(KnightsDomain { per_gene_rate })
    }
}

impl Domain for KnightsDomain {
    type Genome = KnightGenome;

    fn init_genome(&self, rng: &mut RngStream) -> KnightGenome {
        init_knight_genome(rng)
    }

    fn mutate(&self, genome: &KnightGenome, rng: &mut RngStream) -> KnightGenome {
        mutate_knight(genome, self.per_gene_rate, rng)
    }

    fn evaluate(&self, genome: &KnightGenome) -> Trajectory {
        evaluate_knight(genome)
    }

    fn score(&self, traj: &Trajectory) -> f64 {
        traj.total_fitness()
    }

    fn measure(&self, traj: &Trajectory) -> (f64, f64) {
        knight_measure(traj)
    }

    fn score_floor(&self) -> f64 {
        // Visiting the start tile already rewards 1; the floor 0 keeps
        // QD-score contributions strictly positive.
        0.0
    }

    fn measure_spec(&self) -> MeasureSpec {
        MeasureSpec::new(board_bounds(), BOARD_SIDE, BOARD_SIDE)
            .expect("board archive spec is valid")
    }
}

/// Maze navigation in either reward mode. Archive resolution over the map
/// bounds is configurable; defaults to 64x64.
#[derive(Debug, Clone)]
pub struct MazeDomain {
    pub map: MazeMap,
    pub mode: RewardMode,
    pub physics: MazePhysics,
    pub layout: MlpLayout,
    pub sigma: f64,
    pub steps: usize,
    pub rows: usize,
    pub cols: usize,
}

impl MazeDomain {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        map: MazeMap,
        mode: RewardMode,
        physics: MazePhysics,
        layout: MlpLayout,
        sigma: f64,
        steps: usize,
        rows: usize,
        cols: usize,
    ) -> Result<MazeDomain> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::config(format!(
                "mutation sigma must be positive, got {sigma}"
            )));
        }
        if steps == 0 {
            return Err(Error::config("rollout length must be at least 1"));
        }
        if !(physics.rho.is_finite() && physics.rho > 0.0) {
            return Err(Error::config(format!(
                "robot radius must be positive, got {}",
                physics.rho
            )));
        }
        if !(physics.laser_range.is_finite() && physics.laser_range > 0.0) {
            return Err(Error::config(format!(
                "laser range must be positive, got {}",
                physics.laser_range
            )));
        }
        map.validate_physics(&physics)?;
        // Validated by MeasureSpec::new as well, but fail early with a
        // config error rather than later with an archive error.
        MeasureSpec::new(map.bounds, rows, cols)?;
        Ok(MazeDomain {
            map,
            mode,
            physics,
            layout,
            sigma,
            steps,
            rows,
            cols,
        })
    }
}

impl Domain for MazeDomain {
    type Genome = MlpGenome;

    fn init_genome(&self, rng: &mut RngStream) -> MlpGenome {
        init_mlp_genome(self.layout, rng)
    }

    fn mutate(&self, genome: &MlpGenome, rng: &mut RngStream) -> MlpGenome {
        mutate_mlp(genome, self.sigma, rng)
    }

    fn evaluate(&self, genome: &MlpGenome) -> Trajectory {
        rollout(
            &self.map,
            &self.physics,
            self.layout,
            genome,
            self.mode,
            self.steps,
        )
    }

    fn score(&self, traj: &Trajectory) -> f64 {
        match self.mode {
            RewardMode::Deceptive => deceptive_score(&self.map, traj),
            RewardMode::Illumination => traj.total_fitness(),
        }
    }

    fn measure(&self, traj: &Trajectory) -> (f64, f64) {
        maze_measure(traj)
    }

    fn score_floor(&self) -> f64 {
        let t = self.steps as f64;
        match self.mode {
            // Worst deceptive score is −d_T, bounded by the distance a robot
            // can cover in T steps at 0.025 per step (d_0 on unit maps is
            // far smaller, so this dominates any reachable −d_T).
            RewardMode::Deceptive => -(ACTION_SCALE * t),
            // Worst per-step energy penalty is −2·0.025² at full throttle.
            RewardMode::Illumination => -(2.0 * ACTION_SCALE * ACTION_SCALE * t),
        }
    }

    fn measure_spec(&self) -> MeasureSpec {
        MeasureSpec::new(self.map.bounds, self.rows, self.cols).expect("validated at construction")
    }
}
