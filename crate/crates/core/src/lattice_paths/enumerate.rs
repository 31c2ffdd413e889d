use alloc::vec::Vec;

use super::{Cell, CountTable, Step, UpRightPath};
use crate::error::{Error, Result};

/// Default refusal threshold for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Iterator over every admissible path exactly once, in lexicographic order
/// of the step sequence with `R < U`.
#[derive(Debug, Clone)]
pub struct PathIter<'a> {
    ct: &'a CountTable,
    steps: Vec<Step>,
    /// `cells[t]` is the cell reached before step `t`.
    cells: Vec<Cell>,
    started: bool,
    done: bool,
}

/// Enumerates all admissible paths of `ct`'s ensemble, refusing when the
/// path count exceeds `cap`.
pub fn enumerate_paths(ct: &CountTable, cap: u64) -> Result<PathIter<'_>> {
    let over = match ct.z() {
        Some(z) => *z > cap.into(),
        None => ct.z_log() > crate::math::ln(cap as f64) + 1e-9,
    };
    if over {
        return Err(Error::CapExceeded {
            count: ct.z_description(),
            cap,
        });
    }
    Ok(PathIter {
        ct,
        steps: Vec::with_capacity(ct.m() + ct.n() - 2),
        cells: Vec::with_capacity(ct.m() + ct.n() - 1),
        started: false,
        done: false,
    })
}

impl PathIter<'_> {
    fn next_cell(c: Cell, s: Step) -> Cell {
        match s {
            Step::Right => Cell::new(c.i + 1, c.j),
            Step::Up => Cell::new(c.i, c.j + 1),
        }
    }

    /// Extends the current prefix with the lexicographically smallest
    /// admissible completion.
    fn complete(&mut self) {
        let len = self.ct.m() + self.ct.n() - 2;
        while self.steps.len() < len {
            let here = *self.cells.last().expect("prefix starts at (1,1)");
            let s = if self.ct.reaches_end(Self::next_cell(here, Step::Right)) {
                Step::Right
            } else {
                Step::Up
            };
            self.steps.push(s);
            self.cells.push(Self::next_cell(here, s));
        }
    }

    fn advance(&mut self) -> bool {
        while let Some(s) = self.steps.pop() {
            self.cells.pop();
            let here = *self.cells.last().expect("prefix starts at (1,1)");
            if s == Step::Right && self.ct.reaches_end(Self::next_cell(here, Step::Up)) {
                self.steps.push(Step::Up);
                self.cells.push(Self::next_cell(here, Step::Up));
                self.complete();
                return true;
            }
        }
        false
    }
}

impl Iterator for PathIter<'_> {
    type Item = UpRightPath;

    fn next(&mut self) -> Option<UpRightPath> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.cells.push(Cell::new(1, 1));
            self.complete();
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(UpRightPath {
            m: self.ct.m(),
            n: self.ct.n(),
            steps: self.steps.clone(),
        })
    }
}
