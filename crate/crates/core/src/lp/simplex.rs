//! Dense two-phase primal simplex over exact rationals with Bland's rule.

use super::{LinearProgram, LpResult, LpStatus, Sense};
use crate::rat::Rat;

struct StdRow {
    coeffs: Vec<(usize, Rat)>,
    sense: Sense,
    rhs: Rat,
}

struct Tableau {
    /// `rows[r]` has `ncols + 1` entries; the last is the right-hand side.
    rows: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    /// Reduced costs, last entry is minus the current objective.
    obj: Vec<Rat>,
    ncols: usize,
    /// Columns that may not enter the basis.
    blocked: Vec<bool>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rat {
        &self.rows[r][self.ncols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let inv = self.rows[pr][pc].recip();
        if !inv.is_one() {
            for v in self.rows[pr].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
        }
        let nz: Vec<usize> = (0..=self.ncols)
            .filter(|&c| !self.rows[pr][c].is_zero())
            .collect();
        let pivot_row = std::mem::take(&mut self.rows[pr]);
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == pr || row[pc].is_zero() {
                continue;
            }
            let factor = row[pc].clone();
            for &c in &nz {
                let delta = &factor * &pivot_row[c];
                row[c] -= delta;
            }
        }
        if !self.obj[pc].is_zero() {
            let factor = self.obj[pc].clone();
            for &c in &nz {
                let delta = &factor * &pivot_row[c];
                self.obj[c] -= delta;
            }
        }
        self.rows[pr] = pivot_row;
        self.basis[pr] = pc;
    }

    /// Minimizes the current objective row with Bland's rule.
    fn run(&mut self) -> Outcome {
        loop {
            let entering = (0..self.ncols).find(|&c| !self.blocked[c] && self.obj[c].is_negative());
            let Some(pc) = entering else {
                return Outcome::Optimal;
            };
            let mut best: Option<(usize, Rat)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][pc];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                let better = match &best {
                    None => true,
                    Some((br, bv)) => {
                        ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                None => return Outcome::Unbounded,
                Some((pr, _)) => self.pivot(pr, pc),
            }
        }
    }

    fn set_objective(&mut self, cost: &[Rat]) {
        let mut obj: Vec<Rat> = cost.to_vec();
        obj.push(Rat::zero());
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (c, v) in self.rows[r].iter().enumerate() {
                if !v.is_zero() {
                    obj[c] -= cb * v;
                }
            }
        }
        self.obj = obj;
    }
}

/// Bounds folded into rows, `x = lower + x'` with `x' >= 0`.
fn standard_rows(lp: &LinearProgram) -> Vec<StdRow> {
    let mut out = Vec::with_capacity(lp.rows.len() + lp.upper.len());
    for row in &lp.rows {
        let shift: Rat = row.coeffs.iter().map(|(v, a)| a * &lp.lower[*v]).sum();
        out.push(StdRow {
            coeffs: row.coeffs.iter().filter(|(_, a)| !a.is_zero()).cloned().collect(),
            sense: row.sense,
            rhs: &row.rhs - shift,
        });
    }
    for (v, hi) in lp.upper.iter().enumerate() {
        if let Some(hi) = hi {
            out.push(StdRow {
                coeffs: vec![(v, Rat::one())],
                sense: Sense::Le,
                rhs: hi - &lp.lower[v],
            });
        }
    }
    for r in out.iter_mut() {
        if r.rhs.is_negative() {
            r.rhs = -&r.rhs;
            for (_, a) in r.coeffs.iter_mut() {
                *a = -&*a;
            }
            r.sense = match r.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    out
}

pub(super) fn solve(lp: &LinearProgram) -> LpResult {
    let n = lp.num_vars();
    let rows = standard_rows(lp);
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.sense != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.sense != Sense::Le).count();
    let ncols = n + n_slack + n_art;
    let first_art = n + n_slack;

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        obj: Vec::new(),
        ncols,
        blocked: vec![false; ncols],
    };
    let (mut s, mut a) = (n, first_art);
    for r in &rows {
        let mut dense = vec![Rat::zero(); ncols + 1];
        for (v, c) in &r.coeffs {
            dense[*v] += c;
        }
        dense[ncols] = r.rhs.clone();
        match r.sense {
            Sense::Le => {
                dense[s] = Rat::one();
                tab.basis.push(s);
                s += 1;
            }
            Sense::Ge => {
                dense[s] = -Rat::one();
                s += 1;
                dense[a] = Rat::one();
                tab.basis.push(a);
                a += 1;
            }
            Sense::Eq => {
                dense[a] = Rat::one();
                tab.basis.push(a);
                a += 1;
            }
        }
        tab.rows.push(dense);
    }

    if n_art > 0 {
        let mut phase1 = vec![Rat::zero(); ncols];
        for c in phase1.iter_mut().skip(first_art) {
            *c = Rat::one();
        }
        tab.set_objective(&phase1);
        // Phase one is bounded below by zero.
        let _ = tab.run();
        if !tab.obj[ncols].is_zero() {
            return LpResult::infeasible(n);
        }
        // Drive zero-valued artificials out of the basis; rows where that is
        // impossible are linearly dependent on the others.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= first_art {
                match (0..first_art).find(|&c| !tab.rows[r][c].is_zero()) {
                    Some(c) => {
                        tab.pivot(r, c);
                        r += 1;
                    }
                    None => {
                        tab.rows.swap_remove(r);
                        tab.basis.swap_remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        for c in first_art..ncols {
            tab.blocked[c] = true;
        }
    }

    let mut cost = vec![Rat::zero(); ncols];
    cost[..n].clone_from_slice(&lp.objective);
    tab.set_objective(&cost);
    if let Outcome::Unbounded = tab.run() {
        return LpResult {
            status: LpStatus::Unbounded,
            point: vec![Rat::zero(); n],
            value: Rat::zero(),
            is_vertex: false,
        };
    }

    let mut point = lp.lower.clone();
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            point[b] += tab.rhs(r);
        }
    }
    let value = lp.objective_value(&point);
    let is_vertex = lp.is_vertex(&point);
    LpResult {
        status: LpStatus::Optimal,
        point,
        value,
        is_vertex,
    }
}

/// Exact rank of a set of sparse rows over `n` columns.
pub(super) fn rank(rows: &[Vec<(usize, Rat)>], n: usize) -> usize {
    // Echelon rows stored densely with their pivot column.
    let mut echelon: Vec<(usize, Vec<Rat>)> = Vec::new();
    for row in rows {
        if echelon.len() == n {
            break;
        }
        let mut dense = vec![Rat::zero(); n];
        for (c, v) in row {
            dense[*c] += v;
        }
        for (pc, e) in &echelon {
            if dense[*pc].is_zero() {
                continue;
            }
            let f = dense[*pc].clone();
            for (c, v) in e.iter().enumerate() {
                if !v.is_zero() {
                    dense[c] -= &f * v;
                }
            }
        }
        if let Some(pc) = dense.iter().position(|v| !v.is_zero()) {
            let inv = dense[pc].recip();
            for v in dense.iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            echelon.push((pc, dense));
        }
    }
    echelon.len()
}
