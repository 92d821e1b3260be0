//! Grid archive over a 2D measure space, shared by MAP-Elites (as its
//! population) and lexicase runs (as a statistics surface).
//!
//! Cells keep the best-scoring occupant seen for their measure bin; ties
//! keep the incumbent. Best Score, QD-Score, and Coverage all read from the
//! same grid so the two algorithms are compared on identical bookkeeping.

use std::fmt::Write as _;
use std::path::Path;

use rand::RngExt;

use crate::rng::RngStream;
use crate::subagg::{axis_bin, axis_edges, Rect};
use crate::{Error, Result};

/// Discretization of the measure space: bounds plus grid resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    pub bounds: Rect,
    pub rows: usize,
    pub cols: usize,
}

impl MeasureSpec {
    pub fn new(bounds: Rect, rows: usize, cols: usize) -> Result<MeasureSpec> {
        if rows == 0 || cols == 0 {
            return Err(Error::config(format!(
                "archive resolution must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(Error::config("degenerate measure bounds"));
        }
        Ok(MeasureSpec { bounds, rows, cols })
    }

    pub fn total_cells(&self) -> usize {
        self.rows * self.cols
    }
}

/// A stored elite: genome plus the score and measure it was inserted with.
#[derive(Debug, Clone)]
pub struct Occupant<G> {
    pub genome: G,
    pub score: f64,
    pub measure: (f64, f64),
}

/// Outcome of an insertion attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    InsertedNew,
    Replaced,
    Rejected,
}

pub struct Archive<G> {
    spec: MeasureSpec,
    score_floor: f64,
    cells: Vec<Option<Occupant<G>>>,
    /// Flat indices of occupied cells, in first-insertion order.
    occupied: Vec<usize>,
    edges_x: Vec<f64>,
    edges_y: Vec<f64>,
}

impl<G> Archive<G> {
    /// `score_floor` is the domain's minimum possible score; QD-Score sums
    /// occupant scores relative to it so negative scores still add up.
    pub fn new(spec: MeasureSpec, score_floor: f64) -> Archive<G> {
        let edges_x = axis_edges(spec.bounds.x_min, spec.bounds.x_max, spec.cols);
        let edges_y = axis_edges(spec.bounds.y_min, spec.bounds.y_max, spec.rows);
        let cells = std::iter::repeat_with(|| None)
            .take(spec.total_cells())
            .collect();
        Archive {
            spec,
            score_floor,
            cells,
            occupied: Vec::new(),
            edges_x,
            edges_y,
        }
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    pub fn score_floor(&self) -> f64 {
        self.score_floor
    }

    /// Half-open uniform binning; points on the max edge map to the last bin.
    pub fn measure_to_cell(&self, measure: (f64, f64)) -> Result<(usize, usize)> {
        let (x, y) = measure;
        if !self.spec.bounds.contains(x, y) {
            return Err(Error::input(format!(
                "measure ({x}, {y}) outside archive bounds"
            )));
        }
        Ok((axis_bin(&self.edges_y, y), axis_bin(&self.edges_x, x)))
    }

    /// Keep the cell's best: empty cells accept, occupied cells are replaced
    /// only by a strictly higher score (ties keep the incumbent).
    pub fn insert(&mut self, genome: G, measure: (f64, f64), score: f64) -> Result<InsertOutcome> {
        if !score.is_finite() {
            return Err(Error::input(format!("non-finite score {score}")));
        }
        if score < self.score_floor {
            return Err(Error::input(format!(
                "score {score} below declared floor {}",
                self.score_floor
            )));
        }
        let (row, col) = self.measure_to_cell(measure)?;
        let idx = row * self.spec.cols + col;
        let occupant = Occupant {
            genome,
            score,
            measure,
        };
        match &mut self.cells[idx] {
            slot @ None => {
                *slot = Some(occupant);
                self.occupied.push(idx);
                Ok(InsertOutcome::InsertedNew)
            }
            Some(incumbent) if score > incumbent.score => {
                *incumbent = occupant;
                Ok(InsertOutcome::Replaced)
            }
            Some(_) => Ok(InsertOutcome::Rejected),
        }
    }

    /// Uniform draw (with replacement) of `batch` elites from occupied cells.
    pub fn select_batch(&self, batch: usize, rng: &mut RngStream) -> Result<Vec<&G>> {
        if batch == 0 {
            return Err(Error::input("batch size must be at least 1"));
        }
        if self.occupied.is_empty() {
            return Err(Error::input(
                "cannot select from an empty archive; seed it first",
            ));
        }
        Ok((0..batch)
            .map(|_| {
                let idx = self.occupied[rng.random_range(0..self.occupied.len())];
                &self.cells[idx].as_ref().expect("occupied index").genome
            })
            .collect())
    }

    pub fn occupied_cells(&self) -> usize {
        self.occupied.len()
    }

    pub fn iter_occupants(&self) -> impl Iterator<Item = &Occupant<G>> {
        self.cells.iter().flatten()
    }

    /// Σ over occupants of (score − score_floor); 0 for an empty archive.
    pub fn qd_score(&self) -> f64 {
        self.iter_occupants()
            .map(|o| o.score - self.score_floor)
            .sum()
    }

    /// Occupied fraction of the grid, in [0, 1].
    pub fn coverage(&self) -> f64 {
        self.occupied.len() as f64 / self.spec.total_cells() as f64
    }

    /// Maximum occupant score.
    pub fn best_score(&self) -> Result<f64> {
        self.iter_occupants()
            .map(|o| o.score)
            .fold(None, |acc: Option<f64>, s| {
                Some(acc.map_or(s, |a| a.max(s)))
            })
            .ok_or_else(|| Error::input("best_score of an empty archive"))
    }

    /// Render the score grid in the heatmap CSV format. Row 0 is the
    /// y_min-side row; empty cells print the `nan` sentinel.
    pub fn to_heatmap_csv(&self) -> String {
        let b = &self.spec.bounds;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            self.spec.rows, self.spec.cols, b.x_min, b.y_min, b.x_max, b.y_max
        );
        for row in 0..self.spec.rows {
            let mut line = String::new();
            for col in 0..self.spec.cols {
                if col > 0 {
                    line.push(',');
                }
                match &self.cells[row * self.spec.cols + col] {
                    Some(o) => {
                        let _ = write!(line, "{}", o.score);
                    }
                    None => line.push_str("nan"),
                }
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn export_heatmap(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_heatmap_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Parsed heatmap: grid geometry plus per-cell scores (None = empty).
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    pub bounds: Rect,
    pub values: Vec<Option<f64>>,
}

impl Heatmap {
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.cols + col]
    }
}

/// Parse the heatmap CSV format produced by [`Archive::to_heatmap_csv`].
pub fn parse_heatmap(name: &str, text: &str) -> Result<Heatmap> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(name, 1, "empty heatmap file"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 6 {
        return Err(Error::parse(
            name,
            1,
            format!("header needs 6 fields, got {}", fields.len()),
        ));
    }
    let rows: usize = fields[0]
        .parse()
        .map_err(|_| Error::parse(name, 1, format!("bad row count {:?}", fields[0])))?;
    let cols: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(name, 1, format!("bad column count {:?}", fields[1])))?;
    let mut geom = [0.0f64; 4];
    for (slot, raw) in geom.iter_mut().zip(&fields[2..]) {
        *slot = raw
            .parse()
            .map_err(|_| Error::parse(name, 1, format!("bad bound {raw:?}")))?;
        if !slot.is_finite() {
            return Err(Error::parse(name, 1, format!("non-finite bound {raw:?}")));
        }
    }
    let bounds = Rect::new(geom[0], geom[1], geom[2], geom[3]);
    if rows == 0 || cols == 0 || !(bounds.width() > 0.0 && bounds.height() > 0.0) {
        return Err(Error::parse(name, 1, "degenerate heatmap geometry"));
    }
    if rows.saturating_mul(cols) > 1 << 24 {
        return Err(Error::parse(name, 1, "heatmap too large"));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| Error::parse(name, row + 2, "missing grid row"))?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols {
            return Err(Error::parse(
                name,
                lineno + 1,
                format!("expected {cols} cells, got {}", cells.len()),
            ));
        }
        for cell in cells {
            if cell == "nan" {
                values.push(None);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::parse(name, lineno + 1, format!("bad score {cell:?}")))?;
                if !v.is_finite() {
                    return Err(Error::parse(
                        name,
                        lineno + 1,
                        format!("non-finite score {cell:?}"),
                    ));
                }
                values.push(Some(v));
            }
        }
    }
    if let Some((lineno, extra)) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(Error::parse(
                name,
                lineno + 1,
                "trailing content after grid",
            ));
        }
    }
    Ok(Heatmap {
        rows,
        cols,
        bounds,
        values,
    })
}

pub fn load_heatmap(path: &Path) -> Result<Heatmap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_heatmap(&path.display().to_string(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tile_spec() -> MeasureSpec {
        MeasureSpec::new(Rect::new(0.0, 0.0, 8.0, 8.0), 8, 8).unwrap()
    }

    fn unit_spec(rows: usize, cols: usize) -> MeasureSpec {
        MeasureSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), rows, cols).unwrap()
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(MeasureSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), 0, 8).is_err());
        assert!(MeasureSpec::new(Rect::new(0.0, 0.0, 0.0, 1.0), 8, 8).is_err());
    }

    #[test]
    fn origin_maps_to_cell_zero() {
        let a: Archive<u8> = Archive::new(tile_spec(), 0.0);
        assert_eq!(a.measure_to_cell((0.0, 0.0)).unwrap(), (0, 0));
    }

    #[test]
    fn max_edge_maps_to_last_bin() {
        let a: Archive<u8> = Archive::new(unit_spec(4, 4), 0.0);
        assert_eq!(a.measure_to_cell((1.0, 0.3)).unwrap(), (1, 3));
        assert_eq!(a.measure_to_cell((1.0, 1.0)).unwrap(), (3, 3));
    }

    #[test]
    fn integer_positions_cover_every_tile_cell() {
        let a: Archive<u8> = Archive::new(tile_spec(), 0.0);
        let mut seen = [false; 64];
        for x in 0..8 {
            for y in 0..8 {
                let (row, col) = a.measure_to_cell((x as f64, y as f64)).unwrap();
                assert_eq!((row, col), (y, x));
                seen[row * 8 + col] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn out_of_bounds_measure_is_input_error() {
        let mut a: Archive<u8> = Archive::new(tile_spec(), 0.0);
        assert!(matches!(a.insert(0, (8.5, 0.0), 1.0), Err(Error::Input(_))));
    }

    #[test]
    fn insertion_rule_empty_replace_reject_tie() {
        let mut a: Archive<u8> = Archive::new(tile_spec(), 0.0);
        let m = (3.0, 4.0);
        assert_eq!(a.insert(1, m, 7.0).unwrap(), InsertOutcome::InsertedNew);
        assert_eq!(a.insert(2, m, 5.0).unwrap(), InsertOutcome::Rejected);
        assert_eq!(a.best_score().unwrap(), 7.0);
        assert_eq!(a.insert(3, m, 9.0).unwrap(), InsertOutcome::Replaced);
        assert_eq!(a.best_score().unwrap(), 9.0);
        // Ties keep the incumbent genome.
        assert_eq!(a.insert(4, m, 9.0).unwrap(), InsertOutcome::Rejected);
        let occ = a.iter_occupants().next().unwrap();
        assert_eq!(occ.genome, 3);
    }

    #[test]
    fn non_finite_score_rejected() {
        let mut a: Archive<u8> = Archive::new(tile_spec(), 0.0);
        assert!(a.insert(0, (0.0, 0.0), f64::NAN).is_err());
        assert!(a.insert(0, (0.0, 0.0), f64::INFINITY).is_err());
    }

    #[test]
    fn score_below_floor_rejected() {
        let mut a: Archive<u8> = Archive::new(tile_spec(), -1.0);
        assert!(a.insert(0, (0.0, 0.0), -2.0).is_err());
    }

    #[test]
    fn batch_from_single_occupant_repeats_it() {
        let mut a: Archive<u8> = Archive::new(tile_spec(), 0.0);
        a.insert(42, (1.0, 1.0), 1.0).unwrap();
        let mut rng = RngStream::new(1, 0);
        let batch = a.select_batch(4, &mut rng).unwrap();
        assert_eq!(batch.len(), 4);
        assert!(batch.iter().all(|&&g| g == 42));
    }

    #[test]
    fn batch_errors() {
        let a: Archive<u8> = Archive::new(tile_spec(), 0.0);
        let mut rng = RngStream::new(1, 0);
        assert!(a.select_batch(0, &mut rng).is_err());
        assert!(a.select_batch(4, &mut rng).is_err());
    }

    #[test]
    fn batch_draws_uniformly() {
        let mut a: Archive<u8> = Archive::new(tile_spec(), 0.0);
        a.insert(0, (0.0, 0.0), 1.0).unwrap();
        a.insert(1, (5.0, 5.0), 1.0).unwrap();
        let mut rng = RngStream::new(11, 0);
        let draws = a.select_batch(100_000, &mut rng).unwrap();
        let zeros = draws.iter().filter(|&&&g| g == 0).count();
        let freq = zeros as f64 / draws.len() as f64;
        assert!((freq - 0.5).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn qd_score_subtracts_floor() {
        let mut a: Archive<u8> = Archive::new(tile_spec(), -10.0);
        assert_eq!(a.qd_score(), 0.0);
        a.insert(0, (0.0, 0.0), -1.0).unwrap();
        a.insert(1, (3.0, 3.0), -3.0).unwrap();
        assert!((a.qd_score() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_counts_occupied_fraction() {
        let mut a: Archive<usize> = Archive::new(tile_spec(), 0.0);
        assert_eq!(a.coverage(), 0.0);
        for i in 0..16 {
            a.insert(i, ((i % 8) as f64, (i / 8) as f64), 1.0).unwrap();
        }
        assert!((a.coverage() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn best_score_matches_full_scan() {
        let mut a: Archive<usize> = Archive::new(tile_spec(), 0.0);
        let mut rng = RngStream::new(5, 0);
        for i in 0..200 {
            let x = rng.random_range(0..8) as f64;
            let y = rng.random_range(0..8) as f64;
            let score = rng.random::<f64>() * 64.0;
            a.insert(i, (x, y), score).unwrap();
        }
        let scan = a
            .iter_occupants()
            .map(|o| o.score)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(a.best_score().unwrap(), scan);
    }

    #[test]
    fn empty_archive_has_no_best() {
        let a: Archive<u8> = Archive::new(tile_spec(), 0.0);
        assert!(a.best_score().is_err());
    }

    #[test]
    fn heatmap_of_empty_archive_is_all_sentinels() {
        let a: Archive<u8> = Archive::new(unit_spec(2, 3), 0.0);
        let csv = a.to_heatmap_csv();
        assert_eq!(csv, "2,3,0,0,1,1\nnan,nan,nan\nnan,nan,nan\n");
        let hm = parse_heatmap("test", &csv).unwrap();
        assert!(hm.values.iter().all(|v| v.is_none()));
    }

    #[test]
    fn heatmap_round_trip_preserves_occupancy_and_scores() {
        let mut a: Archive<usize> = Archive::new(tile_spec(), 0.0);
        let mut rng = RngStream::new(9, 0);
        for i in 0..40 {
            let x = rng.random_range(0..8) as f64;
            let y = rng.random_range(0..8) as f64;
            a.insert(i, (x, y), rng.random::<f64>() * 10.0).unwrap();
        }
        let csv = a.to_heatmap_csv();
        let hm = parse_heatmap("test", &csv).unwrap();
        assert_eq!(hm.rows, 8);
        assert_eq!(hm.cols, 8);
        let numeric = hm.values.iter().flatten().count();
        assert_eq!(numeric, a.occupied_cells());
        for row in 0..8 {
            for col in 0..8 {
                let expected = a.cells[row * 8 + col].as_ref().map(|o| o.score);
                assert_eq!(hm.value(row, col), expected);
            }
        }
    }

    #[test]
    fn heatmap_exports_bit_stable() {
        let mut a: Archive<u8> = Archive::new(unit_spec(3, 3), 0.0);
        a.insert(0, (0.49, 0.51), 0.125).unwrap();
        assert_eq!(a.to_heatmap_csv(), a.to_heatmap_csv());
        assert!(a.to_heatmap_csv().contains("0.125"));
    }

    #[test]
    fn parse_rejects_malformed_heatmaps() {
        assert!(parse_heatmap("t", "").is_err());
        assert!(parse_heatmap("t", "1,1,0,0,1\n0\n").is_err());
        assert!(parse_heatmap("t", "2,2,0,0,1,1\n0,1\n").is_err());
        assert!(parse_heatmap("t", "1,2,0,0,1,1\n0,x\n").is_err());
        assert!(parse_heatmap("t", "1,1,0,0,0,1\n0\n").is_err());
        assert!(parse_heatmap("t", "1,1,0,0,1,1\n0\n0\n").is_err());
        assert!(parse_heatmap("t", "1,1,0,0,1,1\ninf\n").is_err());
    }

    proptest! {
        #[test]
        fn metrics_are_monotone_under_insertion(
            inserts in proptest::collection::vec(
                (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=5.0),
                1..300,
            )
        ) {
            let mut a: Archive<usize> = Archive::new(unit_spec(4, 4), 0.0);
            let mut last = (0.0f64, 0.0f64, f64::NEG_INFINITY);
            for (i, (x, y, score)) in inserts.into_iter().enumerate() {
                a.insert(i, (x, y), score).unwrap();
                let now = (a.qd_score(), a.coverage(), a.best_score().unwrap());
                prop_assert!(now.0 >= last.0 - 1e-12);
                prop_assert!(now.1 >= last.1);
                prop_assert!(now.2 >= last.2);
                last = now;
            }
        }

        #[test]
        fn insertion_order_does_not_change_cell_scores(
            inserts in proptest::collection::vec(
                (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=5.0),
                1..100,
            ),
            rotation in 0usize..100,
        ) {
            let mut forward: Archive<usize> = Archive::new(unit_spec(3, 3), 0.0);
            for (i, &(x, y, s)) in inserts.iter().enumerate() {
                forward.insert(i, (x, y), s).unwrap();
            }
            let mut rotated: Archive<usize> = Archive::new(unit_spec(3, 3), 0.0);
            let k = rotation % inserts.len();
            for (i, &(x, y, s)) in inserts[k..].iter().chain(&inserts[..k]).enumerate() {
                rotated.insert(i, (x, y), s).unwrap();
            }
            for idx in 0..forward.cells.len() {
                let a = forward.cells[idx].as_ref().map(|o| o.score);
                let b = rotated.cells[idx].as_ref().map(|o| o.score);
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn occupants_remap_to_their_own_cells(
            inserts in proptest::collection::vec(
                (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=5.0),
                1..100,
            )
        ) {
            let mut a: Archive<usize> = Archive::new(unit_spec(5, 7), 0.0);
            for (i, (x, y, s)) in inserts.into_iter().enumerate() {
                a.insert(i, (x, y), s).unwrap();
            }
            for (idx, cell) in a.cells.iter().enumerate() {
                if let Some(occ) = cell {
                    let (row, col) = a.measure_to_cell(occ.measure).unwrap();
                    prop_assert_eq!(row * a.spec.cols + col, idx);
                }
            }
        }
    }
}
