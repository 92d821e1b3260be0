//! Knight's Tour evaluation: decode a move sequence from the fixed start
//! tile, reward each newly visited tile, truncate at the first rule break.

use crate::evo::{KnightGenome, KNIGHT_MOVES};
use crate::subagg::{Rect, StepRecord, Trajectory};

pub const BOARD_SIDE: usize = 8;

/// Position space of the board: tile (x, y) maps to the point (x, y).
pub fn board_bounds() -> Rect {
    Rect::new(0.0, 0.0, BOARD_SIDE as f64, BOARD_SIDE as f64)
}

/// Replay the genome from (0,0). The start tile counts as visited (reward 1,
/// fitness floor 1); every legal move appends one step with reward 1; the
/// first move that leaves the board or revisits a tile ends the tour. Total
/// fitness is therefore the visited-tile count, in [1, 64].
pub fn evaluate_knight(g: &KnightGenome) -> Trajectory {
    let mut visited = [false; BOARD_SIDE * BOARD_SIDE];
    let (mut x, mut y) = (0i32, 0i32);
    visited[0] = true;
    let mut steps = vec![StepRecord {
        t: 0,
        pos: (0.0, 0.0),
        reward: 1.0,
    }];
    for &gene in &g.0 {
        let (dx, dy) = KNIGHT_MOVES[gene as usize];
        let nx = x + dx as i32;
        let ny = y + dy as i32;
        if !(0..BOARD_SIDE as i32).contains(&nx) || !(0..BOARD_SIDE as i32).contains(&ny) {
            break;
        }
        let tile = (ny as usize) * BOARD_SIDE + nx as usize;
        if visited[tile] {
            break;
        }
        visited[tile] = true;
        x = nx;
        y = ny;
        steps.push(StepRecord {
            t: steps.len(),
            pos: (x as f64, y as f64),
            reward: 1.0,
        });
    }
    Trajectory::new(steps, board_bounds())
}

/// End position of the knight before the rule break, as tile coordinates.
pub fn knight_measure(traj: &Trajectory) -> (f64, f64) {
    traj.steps
        .last()
        .expect("knight trajectories are non-empty")
        .pos
}
