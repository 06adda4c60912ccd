//! Brute-force ground truth for small instances: the integral optimum by
//! subset enumeration, and the optima of the two rounding polytopes by grid
//! enumeration.

use serde::Serialize;

use crate::error::{PmmError, Result};
use crate::filter::Mode;
use crate::matroid::{MatroidSpec, PolytopeConstraints, RankOracle};
use crate::model::Instance;
use crate::pipeline::{run_with_lp, solve_relaxation};
use crate::rat::Rat;
use crate::stage_three::{h_objective, CenterClustering};
use crate::stage_two::{t_objective, HalfIntState, StageTwoSets};

pub const DEFAULT_OPT_CAP: usize = 14;
pub const DEFAULT_GRID_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub cost: Rat,
    /// Sorted facility indices; the first optimal set in subset order.
    pub open: Vec<usize>,
}

fn check_cap(what: &'static str, size: usize, cap: usize) -> Result<()> {
    if size > cap || size >= usize::BITS as usize {
        return Err(PmmError::EnumerationCap { what, size, cap });
    }
    Ok(())
}

/// `cover[i]`: bitset over clients that facility `i` serves within radius.
fn coverage(inst: &Instance) -> Vec<Vec<u64>> {
    let words = inst.nc().div_ceil(64);
    (0..inst.nf())
        .map(|i| {
            let mut w = vec![0u64; words];
            for j in 0..inst.nc() {
                if inst.dfc(i, j) <= &inst.clients[j].radius {
                    w[j / 64] |= 1 << (j % 64);
                }
            }
            w
        })
        .collect()
}

fn members(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Independent subsets that serve every client within its radius, in
/// increasing bitmask order.
fn feasible_masks(inst: &Instance, cap: usize) -> Result<impl Iterator<Item = usize> + '_> {
    check_cap("exact optimum", inst.nf(), cap)?;
    let (nf, nc) = (inst.nf(), inst.nc());
    let cover = coverage(inst);
    let full: Vec<u64> = (0..nc.div_ceil(64))
        .map(|w| if (w + 1) * 64 <= nc { u64::MAX } else { (1u64 << (nc % 64)) - 1 })
        .collect();
    Ok((0..1usize << nf).filter(move |&mask| {
        let mut got = vec![0u64; full.len()];
        for i in 0..nf {
            if mask >> i & 1 == 1 {
                for (g, c) in got.iter_mut().zip(&cover[i]) {
                    *g |= c;
                }
            }
        }
        got == full && inst.matroid.is_independent(&members(mask, nf))
    }))
}

/// Cost of opening `open` with every client at its nearest open facility.
pub fn nearest_open_cost(inst: &Instance, open: &[usize]) -> Rat {
    let mut total: Rat = open.iter().map(|&i| &inst.facilities[i].cost).sum();
    for (j, c) in inst.clients.iter().enumerate() {
        let d = open.iter().map(|&i| inst.dfc(i, j)).min().expect("a client needs an open facility");
        total += &c.demand * d;
    }
    total
}

/// The minimum cost over all feasible sets, or `None` if none exists.
pub fn exact_opt(inst: &Instance, cap: usize) -> Result<Option<Optimum>> {
    let mut best: Option<Optimum> = None;
    for mask in feasible_masks(inst, cap)? {
        let open = members(mask, inst.nf());
        let cost = nearest_open_cost(inst, &open);
        if best.as_ref().map_or(true, |b| cost < b.cost) {
            best = Some(Optimum { cost, open });
        }
    }
    Ok(best)
}

pub fn feasible_set_exists(inst: &Instance, cap: usize) -> Result<bool> {
    Ok(feasible_masks(inst, cap)?.next().is_some())
}

/// Explicit rank rows when the class has them; oracle classes are checked
/// at the leaves by separation.
fn explicit_rows(m: &MatroidSpec) -> Option<Vec<(Vec<usize>, Rat)>> {
    match m.polytope() {
        PolytopeConstraints::Explicit(rows) => {
            Some(rows.into_iter().map(|r| (r.set, Rat::from_int(r.cap as i64))).collect())
        }
        PolytopeConstraints::OracleSeparated { .. } => None,
    }
}

struct GridSearch<'a> {
    coeffs: &'a [Rat],
    values: &'a [Rat],
    /// `(members, lower, upper)`; `None` means unbounded on that side.
    rows: Vec<(Vec<usize>, Option<Rat>, Option<Rat>)>,
    /// For each row, how many members lie at positions `>= p`.
    tail: Vec<Vec<usize>>,
    /// Sum of `min(0, c)` over positions `>= p`.
    bound: Vec<Rat>,
    leaf: &'a dyn Fn(&[Rat]) -> Result<bool>,
    top: Rat,
    best: Option<Rat>,
}

impl GridSearch<'_> {
    fn new<'a>(
        coeffs: &'a [Rat],
        values: &'a [Rat],
        rows: Vec<(Vec<usize>, Option<Rat>, Option<Rat>)>,
        leaf: &'a dyn Fn(&[Rat]) -> Result<bool>,
    ) -> GridSearch<'a> {
        let n = coeffs.len();
        let top = values.iter().max().cloned().unwrap_or_else(Rat::zero);
        let tail = rows
            .iter()
            .map(|(set, _, _)| (0..=n).map(|p| set.iter().filter(|&&i| i >= p).count()).collect())
            .collect();
        let mut bound = vec![Rat::zero(); n + 1];
        for p in (0..n).rev() {
            let c = &coeffs[p];
            bound[p] = &bound[p + 1] + if c.is_negative() { c * &top } else { Rat::zero() };
        }
        GridSearch { coeffs, values, rows, tail, bound, leaf, top, best: None }
    }

    fn run(mut self) -> Result<Option<Rat>> {
        let n = self.coeffs.len();
        let mut point = vec![Rat::zero(); n];
        let mut sums = vec![Rat::zero(); self.rows.len()];
        self.visit(0, &mut point, &mut sums, Rat::zero())?;
        Ok(self.best)
    }

    fn visit(&mut self, p: usize, point: &mut Vec<Rat>, sums: &mut Vec<Rat>, value: Rat) -> Result<()> {
        for (r, (_, lo, hi)) in self.rows.iter().enumerate() {
            if hi.as_ref().is_some_and(|h| &sums[r] > h) {
                return Ok(());
            }
            if let Some(l) = lo {
                let reach = &sums[r] + &self.top * Rat::from_int(self.tail[r][p] as i64);
                if &reach < l {
                    return Ok(());
                }
            }
        }
        if let Some(b) = &self.best {
            if &(&value + &self.bound[p]) >= b {
                return Ok(());
            }
        }
        if p == point.len() {
            let exact = self.rows.iter().zip(sums.iter()).all(|((_, lo, hi), s)| {
                lo.as_ref().map_or(true, |l| s >= l) && hi.as_ref().map_or(true, |h| s <= h)
            });
            if exact && (self.leaf)(point)? {
                self.best = Some(value);
            }
            return Ok(());
        }
        for v in self.values {
            point[p] = v.clone();
            let touched: Vec<usize> = (0..self.rows.len()).filter(|&r| self.rows[r].0.contains(&p)).collect();
            for &r in &touched {
                sums[r] += v;
            }
            self.visit(p + 1, point, sums, &value + &self.coeffs[p] * v)?;
            for &r in &touched {
                sums[r] -= v;
            }
        }
        point[p] = Rat::zero();
        Ok(())
    }
}

fn matroid_leaf(m: &MatroidSpec) -> Box<dyn Fn(&[Rat]) -> Result<bool> + '_> {
    match explicit_rows(m) {
        Some(_) => Box::new(|_| Ok(true)),
        None => Box::new(move |v| Ok(m.separate(v)?.is_none())),
    }
}

/// Minimum of `T` over `{0, 1/2, 1}^F` subject to every row of `Q`,
/// including the constant term. `None` when no grid point lies in `Q`.
pub fn enumerate_q_optimum(red: &Instance, sets: &StageTwoSets, cap: usize) -> Result<Option<Rat>> {
    check_cap("Q grid", red.nf(), cap)?;
    let (coeffs, constant) = t_objective(red, sets);
    let (one, half) = (Rat::one(), Rat::half());
    let mut rows = Vec::new();
    for j in 0..red.nc() {
        rows.push((sets.f_prime[j].clone(), Some(half.clone()), None));
        rows.push((sets.g[j].clone(), None, Some(one.clone())));
        if sets.small[j] {
            rows.push((sets.b[j].clone(), Some(one.clone()), Some(one.clone())));
        }
    }
    for (set, cap) in explicit_rows(&red.matroid).unwrap_or_default() {
        rows.push((set, None, Some(cap)));
    }
    let values = [Rat::zero(), half, one];
    let leaf = matroid_leaf(&red.matroid);
    let best = GridSearch::new(&coeffs, &values, rows, &*leaf).run()?;
    Ok(best.map(|b| b + constant))
}

/// Minimum of `H` over independent 0/1 vectors with `z(S_j) = 1` for every
/// `j` in `C'`. `None` when no such vector exists.
pub fn enumerate_r_optimum(
    red: &Instance,
    half: &HalfIntState,
    cl: &CenterClustering,
    cap: usize,
) -> Result<Option<Rat>> {
    check_cap("R grid", red.nf(), cap)?;
    let coeffs = h_objective(red, half, cl);
    let one = Rat::one();
    let mut rows: Vec<(Vec<usize>, Option<Rat>, Option<Rat>)> =
        cl.cprime.iter().map(|&j| (cl.s[j].clone(), Some(one.clone()), Some(one.clone()))).collect();
    for (set, cap) in explicit_rows(&red.matroid).unwrap_or_default() {
        rows.push((set, None, Some(cap)));
    }
    let values = [Rat::zero(), one.clone()];
    let m = &red.matroid;
    let leaf = move |z: &[Rat]| -> Result<bool> {
        let open: Vec<usize> = (0..z.len()).filter(|&i| z[i].is_one()).collect();
        Ok(m.is_independent(&open))
    };
    GridSearch::new(&coeffs, &values, rows, &leaf).run()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Bound {
    Value(Rat),
    Infeasible(&'static str),
}

impl Bound {
    fn infeasible() -> Bound {
        Bound::Infeasible("infeasible")
    }

    pub fn value(&self) -> Option<&Rat> {
        match self {
            Bound::Value(v) => Some(v),
            Bound::Infeasible(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeComparison {
    pub mode: Mode,
    pub cost: Rat,
    /// Algorithm cost over the optimum; absent when the optimum is zero.
    pub ratio: Option<Rat>,
    pub max_dilation: Option<Rat>,
    pub ledger_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub exact_opt: Bound,
    pub best_set: Vec<String>,
    pub lp_opt: Bound,
    pub modes: Vec<ModeComparison>,
}

/// The optimum, the LP value, and every mode's result side by side.
pub fn oracle_report(inst: &Instance, cap: usize) -> Result<OracleReport> {
    let opt = exact_opt(inst, cap)?;
    let (exact_opt, best_set) = match &opt {
        Some(o) => (
            Bound::Value(o.cost.clone()),
            o.open.iter().map(|&i| inst.facilities[i].id.clone()).collect(),
        ),
        None => (Bound::infeasible(), Vec::new()),
    };
    let lp = match solve_relaxation(inst) {
        Ok(lp) => lp,
        Err(PmmError::Infeasible(_)) => {
            return Ok(OracleReport { exact_opt, best_set, lp_opt: Bound::infeasible(), modes: Vec::new() })
        }
        Err(e) => return Err(e),
    };
    let mut modes = Vec::new();
    for mode in Mode::ALL {
        if mode == Mode::Uniform && inst.uniform_radius().is_none() {
            continue;
        }
        let rep = run_with_lp(inst, &lp, mode)?;
        let ratio = opt
            .as_ref()
            .filter(|o| !o.cost.is_zero())
            .map(|o| &rep.solution.cost / &o.cost);
        modes.push(ModeComparison {
            mode,
            cost: rep.solution.cost.clone(),
            ratio,
            max_dilation: rep.max_dilation(),
            ledger_holds: rep.ledger.all_hold(),
        });
    }
    Ok(OracleReport { exact_opt, best_set, lp_opt: Bound::Value(lp.value), modes })
}
