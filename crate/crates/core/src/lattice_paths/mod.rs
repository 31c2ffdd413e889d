//! Up-right paths from `(1,1)` to `(M,N)` and the ensembles they are drawn from.
//!
//! An ensemble is the rectangle plus one constraint: no constraint, a chain
//! of ordered waypoints the path must visit, or a set of forbidden cells
//! (including the centred square hole). Paths are drawn uniformly from the
//! admissible set; [`CountTable`] holds the exact and log-space path counts
//! that make this possible.

mod counts;
mod enumerate;
mod sample;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use counts::{build_counts, CountOptions, CountTable};
pub use enumerate::{enumerate_paths, PathIter, DEFAULT_ENUMERATION_CAP};
pub use sample::{sample_path, PathSampler};

use crate::environment::Environment;
use crate::error::{Error, Result};

/// A lattice cell, 1-based: `i` horizontal, `j` vertical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
}

impl Cell {
    pub const fn new(i: usize, j: usize) -> Self {
        Cell { i, j }
    }

    /// Anti-diagonal index `i + j`.
    pub fn diagonal(&self) -> usize {
        self.i + self.j
    }
}

impl From<(usize, usize)> for Cell {
    fn from((i, j): (usize, usize)) -> Self {
        Cell { i, j }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    /// `(1, 0)`
    Right,
    /// `(0, 1)`
    Up,
}

impl Step {
    pub fn as_char(self) -> char {
        match self {
            Step::Right => 'R',
            Step::Up => 'U',
        }
    }
}

/// Square hole of side `B = floor(beta N)` centred in the `N x N` square.
///
/// A cell is removed when `max(|i - N/2|, |j - N/2|) < B/2`; the test is
/// evaluated on doubled integers so no floating-point boundary cases arise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleSpec {
    pub n: usize,
    pub beta: f64,
}

impl HoleSpec {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param("beta", "must lie in (0, 1)"));
        }
        if n == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        Ok(HoleSpec { n, beta })
    }

    /// `B = floor(beta N)`.
    pub fn side(&self) -> usize {
        crate::math::floor(self.beta * self.n as f64) as usize
    }

    /// Whether `(i, j)` lies inside the hole.
    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        let n = self.n as i64;
        let di = (2 * i as i64 - n).abs();
        let dj = (2 * j as i64 - n).abs();
        di.max(dj) < self.side() as i64
    }

    /// All cells of the hole.
    pub fn mask(&self) -> BTreeSet<Cell> {
        let mut out = BTreeSet::new();
        for i in 1..=self.n {
            for j in 1..=self.n {
                if self.contains(i, j) {
                    out.insert(Cell::new(i, j));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    All,
    /// Cells the path must visit, strictly increasing in both coordinates.
    Waypoints(Vec<Cell>),
    Forbidden(BTreeSet<Cell>),
    /// The centred hole; equivalent to `Forbidden(spec.mask())`.
    Hole(HoleSpec),
}

/// A rectangle together with a constraint; defines the uniform path law.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    m: usize,
    n: usize,
    constraint: Constraint,
}

impl PathEnsemble {
    pub fn new(m: usize, n: usize, constraint: Constraint) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("M", "must be at least 1"));
        }
        if n == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        match &constraint {
            Constraint::All => {}
            Constraint::Waypoints(points) => {
                let mut prev = Cell::new(1, 1);
                for p in points {
                    if p.i >= m || p.j >= n {
                        return Err(Error::param(
                            "waypoints",
                            format!("({}, {}) is not strictly inside {m}x{n}", p.i, p.j),
                        ));
                    }
                    if p.i <= prev.i || p.j <= prev.j {
                        return Err(Error::param(
                            "waypoints",
                            format!(
                                "({}, {}) does not strictly follow ({}, {}) in both coordinates",
                                p.i, p.j, prev.i, prev.j
                            ),
                        ));
                    }
                    prev = *p;
                }
            }
            Constraint::Forbidden(mask) => {
                if mask.contains(&Cell::new(1, 1)) || mask.contains(&Cell::new(m, n)) {
                    return Err(Error::param("forbidden", "mask may not contain an endpoint"));
                }
            }
            Constraint::Hole(spec) => {
                if m != n || spec.n != n {
                    return Err(Error::param("hole", "the hole ensemble lives in an N x N square"));
                }
                if spec.contains(1, 1) || spec.contains(n, n) {
                    return Err(Error::param("hole", "hole swallows an endpoint"));
                }
            }
        }
        Ok(PathEnsemble { m, n, constraint })
    }

    pub fn all(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, Constraint::All)
    }

    pub fn waypoints(m: usize, n: usize, points: Vec<Cell>) -> Result<Self> {
        Self::new(m, n, Constraint::Waypoints(points))
    }

    pub fn hole(n: usize, beta: f64) -> Result<Self> {
        Self::new(n, n, Constraint::Hole(HoleSpec::new(n, beta)?))
    }

    pub fn forbidden(m: usize, n: usize, mask: BTreeSet<Cell>) -> Result<Self> {
        Self::new(m, n, Constraint::Forbidden(mask))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    /// Number of cells on every path, `M + N - 1`.
    pub fn path_len(&self) -> usize {
        self.m + self.n - 1
    }

    /// Whether the constraint is symmetric under `(i, j) -> (j, i)`.
    pub fn is_transpose_symmetric(&self) -> bool {
        if self.m != self.n {
            return false;
        }
        match &self.constraint {
            Constraint::All | Constraint::Hole(_) => true,
            Constraint::Waypoints(p) => p.iter().all(|c| p.contains(&Cell::new(c.j, c.i))),
            Constraint::Forbidden(mask) => mask.iter().all(|c| mask.contains(&Cell::new(c.j, c.i))),
        }
    }

    /// Whether cell `(i, j)` may be visited, before any reachability pruning.
    pub fn allows(&self, i: usize, j: usize) -> bool {
        if i == 0 || j == 0 || i > self.m || j > self.n {
            return false;
        }
        match &self.constraint {
            Constraint::All => true,
            Constraint::Forbidden(mask) => !mask.contains(&Cell::new(i, j)),
            Constraint::Hole(spec) => !spec.contains(i, j),
            Constraint::Waypoints(points) => {
                // Cells weakly between consecutive waypoints in the product order.
                let mut lo = Cell::new(1, 1);
                for hi in points.iter().copied().chain(core::iter::once(Cell::new(self.m, self.n))) {
                    if lo.i <= i && i <= hi.i && lo.j <= j && j <= hi.j {
                        return true;
                    }
                    lo = hi;
                }
                false
            }
        }
    }

    /// Number of cells allowed by the constraint (`|Sigma|`).
    pub fn cell_count(&self) -> usize {
        let mut c = 0;
        for i in 1..=self.m {
            for j in 1..=self.n {
                if self.allows(i, j) {
                    c += 1;
                }
            }
        }
        c
    }

    /// Compact label, e.g. `all`, `hole(beta=0.5)`, `waypoints(3:2;5:4)`.
    pub fn label(&self) -> String {
        match &self.constraint {
            Constraint::All => String::from("all"),
            Constraint::Hole(h) => format!("hole(beta={})", h.beta),
            Constraint::Waypoints(p) => {
                let parts: Vec<String> = p.iter().map(|c| format!("{}:{}", c.i, c.j)).collect();
                format!("waypoints({})", parts.join(";"))
            }
            Constraint::Forbidden(mask) => format!("forbidden({} cells)", mask.len()),
        }
    }
}

/// A family of ensembles indexed by the vertical size `N`.
#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleFamily {
    /// All paths in the `floor(xi N) x N` rectangle.
    All { xi: f64 },
    /// Paths through `(floor(x_r N), floor(y_r N))` in the `floor(xi N) x N`
    /// rectangle, for the listed fractional positions.
    Waypoints { xi: f64, points: Vec<(f64, f64)> },
    /// Paths avoiding the centred hole with `B = floor(beta N)`.
    Hole { beta: f64 },
    /// The `1 x N` strip: one admissible path.
    SinglePath,
}

impl EnsembleFamily {
    pub fn instantiate(&self, n: usize) -> Result<PathEnsemble> {
        match self {
            EnsembleFamily::All { xi } => PathEnsemble::all(scaled_width(*xi, n)?, n),
            EnsembleFamily::Waypoints { xi, points } => {
                let m = scaled_width(*xi, n)?;
                let cells = points
                    .iter()
                    .map(|&(x, y)| {
                        Cell::new(
                            crate::math::floor(x * n as f64) as usize,
                            crate::math::floor(y * n as f64) as usize,
                        )
                    })
                    .collect();
                PathEnsemble::waypoints(m, n, cells)
            }
            EnsembleFamily::Hole { beta } => PathEnsemble::hole(n, *beta),
            EnsembleFamily::SinglePath => PathEnsemble::all(1, n),
        }
    }

    pub fn label(&self) -> String {
        match self {
            EnsembleFamily::All { xi } => format!("all(xi={xi})"),
            EnsembleFamily::Waypoints { xi, points } => {
                let parts: Vec<String> = points.iter().map(|(x, y)| format!("{x}:{y}")).collect();
                format!("waypoints(xi={xi};{})", parts.join(";"))
            }
            EnsembleFamily::Hole { beta } => format!("hole(beta={beta})"),
            EnsembleFamily::SinglePath => String::from("single"),
        }
    }
}

fn scaled_width(xi: f64, n: usize) -> Result<usize> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::param("xi", "must be positive and finite"));
    }
    let m = crate::math::floor(xi * n as f64) as usize;
    if m == 0 {
        return Err(Error::param("xi", format!("floor(xi * {n}) is zero")));
    }
    Ok(m)
}

/// An up-right path, stored as its `M + N - 2` unit steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UpRightPath {
    m: usize,
    n: usize,
    steps: Vec<Step>,
}

impl UpRightPath {
    pub fn from_steps(m: usize, n: usize, steps: Vec<Step>) -> Result<Self> {
        let rights = steps.iter().filter(|s| **s == Step::Right).count();
        if m == 0 || n == 0 || rights != m - 1 || steps.len() != m + n - 2 {
            return Err(Error::param(
                "path",
                format!("{} steps with {rights} rights cannot join (1,1) to ({m},{n})", steps.len()),
            ));
        }
        Ok(UpRightPath { m, n, steps })
    }

    /// Parses the `R`/`U` step string for an `M x N` rectangle.
    pub fn parse(m: usize, n: usize, s: &str) -> Result<Self> {
        let steps = s
            .chars()
            .map(|c| match c {
                'R' => Ok(Step::Right),
                'U' => Ok(Step::Up),
                other => Err(Error::param("path", format!("unexpected step '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_steps(m, n, steps)
    }

    /// Builds a path from its cell list, checking the unit-step property.
    pub fn from_cells(cells: &[Cell]) -> Result<Self> {
        let first = cells.first().copied();
        let last = cells.last().copied();
        if first != Some(Cell::new(1, 1)) {
            return Err(Error::param("path", "must start at (1,1)"));
        }
        let last = last.expect("non-empty");
        let mut steps = Vec::with_capacity(cells.len() - 1);
        for w in cells.windows(2) {
            match (w[1].i.wrapping_sub(w[0].i), w[1].j.wrapping_sub(w[0].j)) {
                (1, 0) => steps.push(Step::Right),
                (0, 1) => steps.push(Step::Up),
                _ => return Err(Error::param("path", "consecutive cells must differ by (1,0) or (0,1)")),
            }
        }
        Self::from_steps(last.i, last.j, steps)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn step_string(&self) -> String {
        self.steps.iter().map(|s| s.as_char()).collect()
    }

    /// The `M + N - 1` visited cells in order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let mut cur = Cell::new(1, 1);
        core::iter::once(cur).chain(self.steps.iter().map(move |s| {
            match s {
                Step::Right => cur.i += 1,
                Step::Up => cur.j += 1,
            }
            cur
        }))
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells().any(|c| c == cell)
    }
}

/// Energy of a path: the sum of the weights it visits.
pub fn path_energy(path: &UpRightPath, env: &Environment) -> Result<f64> {
    if env.dims() != (path.m, path.n) {
        return Err(Error::DimensionMismatch {
            expected: (path.m, path.n),
            got: env.dims(),
        });
    }
    Ok(path.cells().map(|c| env.weight(c.i, c.j)).sum())
}
