//! Exact linear programming: a rational simplex that returns basic optimal
//! solutions, a cutting-plane driver for matroid polytope rows, and the
//! builders for the programs the rounding pipeline solves.

mod builders;
mod simplex;

use std::fmt::Write as _;

pub use builders::{assign_from_y, build_main_lp, MainLp};

use crate::error::{PmmError, Result};
use crate::matroid::{MatroidSpec, PolytopeConstraints};
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<(usize, Rat)>,
    pub sense: Sense,
    pub rhs: Rat,
}

impl Row {
    pub fn activity(&self, point: &[Rat]) -> Rat {
        self.coeffs.iter().map(|(v, a)| a * &point[*v]).sum()
    }

    pub fn satisfied_by(&self, point: &[Rat]) -> bool {
        let lhs = self.activity(point);
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
            Sense::Eq => lhs == self.rhs,
        }
    }
}

/// `minimize objective . v` subject to `rows` and `lower <= v <= upper`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearProgram {
    pub names: Vec<String>,
    pub objective: Vec<Rat>,
    pub rows: Vec<Row>,
    pub lower: Vec<Rat>,
    pub upper: Vec<Option<Rat>>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds a variable with bounds `[lower, upper]`, `lower >= 0`.
    pub fn add_var(&mut self, name: impl Into<String>, cost: Rat, lower: Rat, upper: Option<Rat>) -> usize {
        assert!(!lower.is_negative(), "lower bounds must be nonnegative");
        self.names.push(name.into());
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, Rat)>, sense: Sense, rhs: Rat) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    /// Lowers the upper bound of `v` to `hi` if that is tighter.
    pub fn tighten_upper(&mut self, v: usize, hi: Rat) {
        let tighter = match &self.upper[v] {
            Some(cur) => hi < *cur,
            None => true,
        };
        if tighter {
            self.upper[v] = Some(hi);
        }
    }

    pub fn objective_value(&self, point: &[Rat]) -> Rat {
        self.objective.iter().zip(point).map(|(c, x)| c * x).sum()
    }

    pub fn is_feasible(&self, point: &[Rat]) -> bool {
        point.len() == self.num_vars()
            && self.rows.iter().all(|r| r.satisfied_by(point))
            && point.iter().zip(&self.lower).all(|(x, lo)| x >= lo)
            && point
                .iter()
                .zip(&self.upper)
                .all(|(x, hi)| hi.as_ref().is_none_or(|h| x <= h))
    }

    /// Whether the constraints tight at `point` have full column rank.
    pub fn is_vertex(&self, point: &[Rat]) -> bool {
        let n = self.num_vars();
        let mut fixed = vec![false; n];
        for v in 0..n {
            if point[v] == self.lower[v] || self.upper[v].as_ref() == Some(&point[v]) {
                fixed[v] = true;
            }
        }
        let free: Vec<usize> = (0..n).filter(|&v| !fixed[v]).collect();
        let mut column = vec![usize::MAX; n];
        for (k, &v) in free.iter().enumerate() {
            column[v] = k;
        }
        let tight: Vec<Vec<(usize, Rat)>> = self
            .rows
            .iter()
            .filter(|r| r.sense == Sense::Eq || r.activity(point) == r.rhs)
            .map(|r| {
                r.coeffs
                    .iter()
                    .filter(|(v, a)| !fixed[*v] && !a.is_zero())
                    .map(|(v, a)| (column[*v], a.clone()))
                    .collect()
            })
            .collect();
        simplex::rank(&tight, free.len()) == free.len()
    }

    /// CPLEX-LP style text with rationals written as `p/q`.
    pub fn to_lp_text(&self, title: &str) -> String {
        let mut s = String::new();
        let term = |first: bool, a: &Rat, name: &str| -> String {
            let sign = if a.is_negative() { " -" } else if first { "" } else { " +" };
            let mag = a.abs();
            if mag.is_one() {
                format!("{} {}", sign, name)
            } else {
                format!("{} {} {}", sign, mag, name)
            }
        };
        let _ = writeln!(s, "\\ {}", title);
        let _ = writeln!(s, "Minimize");
        let mut line = String::from(" obj:");
        let mut first = true;
        for (v, c) in self.objective.iter().enumerate() {
            if !c.is_zero() {
                line.push_str(&term(first, c, &self.names[v]));
                first = false;
            }
        }
        if first {
            line.push_str(" 0");
        }
        let _ = writeln!(s, "{}", line);
        let _ = writeln!(s, "Subject To");
        for (k, r) in self.rows.iter().enumerate() {
            let mut line = format!(" r{}:", k);
            let mut first = true;
            for (v, a) in &r.coeffs {
                line.push_str(&term(first, a, &self.names[*v]));
                first = false;
            }
            if first {
                line.push_str(" 0");
            }
            let _ = writeln!(s, "{} {} {}", line, r.sense.symbol(), r.rhs);
        }
        let _ = writeln!(s, "Bounds");
        for v in 0..self.num_vars() {
            match &self.upper[v] {
                Some(hi) => {
                    let _ = writeln!(s, " {} <= {} <= {}", self.lower[v], self.names[v], hi);
                }
                None => {
                    let _ = writeln!(s, " {} >= {}", self.names[v], self.lower[v]);
                }
            }
        }
        let _ = writeln!(s, "End");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpResult {
    pub status: LpStatus,
    pub point: Vec<Rat>,
    pub value: Rat,
    /// The constraints tight at `point` have full column rank.
    pub is_vertex: bool,
}

impl LpResult {
    fn infeasible(n: usize) -> Self {
        LpResult {
            status: LpStatus::Infeasible,
            point: vec![Rat::zero(); n],
            value: Rat::zero(),
            is_vertex: false,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Exact optimum at a basic solution (two-phase simplex, Bland's rule).
pub fn solve(lp: &LinearProgram) -> LpResult {
    simplex::solve(lp)
}

/// A matroid whose ground element `e` is LP variable `vars[e]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatroidEmbedding {
    pub spec: MatroidSpec,
    pub vars: Vec<usize>,
}

/// Outcome of [`solve_over_matroid`]: the result together with the program
/// that produced it (explicit matroid rows and any cuts included).
#[derive(Debug, Clone)]
pub struct CuttingPlaneRun {
    pub result: LpResult,
    pub program: LinearProgram,
    pub cuts: usize,
}

/// Adds every explicit matroid row; singleton rows become upper bounds.
pub fn with_explicit_matroid_rows(lp: &LinearProgram, specs: &[MatroidEmbedding]) -> LinearProgram {
    let mut out = lp.clone();
    for emb in specs {
        if let PolytopeConstraints::Explicit(rows) = emb.spec.polytope() {
            for row in rows {
                if row.set.len() == 1 {
                    out.tighten_upper(emb.vars[row.set[0]], Rat::from_int(row.cap as i64));
                } else {
                    out.add_row(
                        row.set.iter().map(|&e| (emb.vars[e], Rat::one())).collect(),
                        Sense::Le,
                        Rat::from_int(row.cap as i64),
                    );
                }
            }
        } else {
            // Unit bounds are implied by rank({e}) <= 1 and cheap to state.
            for &v in &emb.vars {
                out.tighten_upper(v, Rat::one());
            }
        }
    }
    out
}

/// Minimizes `lp` over the intersection with each embedded matroid polytope.
///
/// Explicit classes contribute all their rows up front; oracle classes are
/// handled by repeatedly separating the current optimum and adding the most
/// violated row. The returned point is a basic solution of a relaxation that
/// contains the true feasible region and is itself feasible, hence a vertex
/// of the true region.
pub fn solve_over_matroid(lp: &LinearProgram, specs: &[MatroidEmbedding]) -> Result<CuttingPlaneRun> {
    let mut program = with_explicit_matroid_rows(lp, specs);
    let mut cuts = 0;
    loop {
        let result = solve(&program);
        if !result.is_optimal() {
            return Ok(CuttingPlaneRun {
                result,
                program,
                cuts,
            });
        }
        let mut added = false;
        for emb in specs {
            let v: Vec<Rat> = emb.vars.iter().map(|&x| result.point[x].clone()).collect();
            if let Some(viol) = emb.spec.separate(&v)? {
                if matches!(emb.spec.polytope(), PolytopeConstraints::Explicit(_)) {
                    return Err(PmmError::Internal(format!(
                        "explicit matroid row over {:?} violated after solve",
                        viol.row.set
                    )));
                }
                program.add_row(
                    viol.row.set.iter().map(|&e| (emb.vars[e], Rat::one())).collect(),
                    Sense::Le,
                    Rat::from_int(viol.row.cap as i64),
                );
                cuts += 1;
                added = true;
            }
        }
        if !added {
            return Ok(CuttingPlaneRun {
                result,
                program,
                cuts,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64) -> Rat {
        Rat::from_int(n)
    }

    #[test]
    fn single_lower_bound() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", r(1), r(0), None);
        lp.add_row(vec![(x, r(1))], Sense::Ge, r(3));
        let res = solve(&lp);
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.point, vec![r(3)]);
        assert_eq!(res.value, r(3));
        assert!(res.is_vertex);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", r(0), r(0), None);
        lp.add_row(vec![(x, r(1))], Sense::Le, r(1));
        lp.add_row(vec![(x, r(1))], Sense::Ge, r(2));
        assert_eq!(solve(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn empty_cover_row_is_infeasible() {
        let mut lp = LinearProgram::new();
        lp.add_var("y", r(1), r(0), Some(r(1)));
        lp.add_row(vec![], Sense::Ge, r(1));
        assert_eq!(solve(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", r(-1), r(0), None);
        lp.add_row(vec![(x, r(1))], Sense::Ge, r(1));
        assert_eq!(solve(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities_and_lower_bounds() {
        // x + y = 2 twice, x >= 1/2: minimize x - y.
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", r(1), Rat::new(1, 2), None);
        let y = lp.add_var("y", r(-1), r(0), None);
        for _ in 0..2 {
            lp.add_row(vec![(x, r(1)), (y, r(1))], Sense::Eq, r(2));
        }
        let res = solve(&lp);
        assert_eq!(res.point, vec![Rat::new(1, 2), Rat::new(3, 2)]);
        assert_eq!(res.value, r(-1));
        assert!(res.is_vertex);
    }

    #[test]
    fn vertex_certificate_rejects_interior_points() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", r(0), r(0), Some(r(1)));
        let y = lp.add_var("y", r(0), r(0), Some(r(1)));
        lp.add_row(vec![(x, r(1)), (y, r(1))], Sense::Le, r(1));
        assert!(!lp.is_vertex(&[Rat::new(1, 2), Rat::new(1, 4)]));
        assert!(!lp.is_vertex(&[Rat::new(1, 2), Rat::new(1, 2)]));
        assert!(lp.is_vertex(&[r(1), r(0)]));
    }

    fn triangle_lp() -> (LinearProgram, Vec<MatroidEmbedding>) {
        let mut lp = LinearProgram::new();
        let vars: Vec<usize> = (0..3).map(|e| lp.add_var(format!("v{e}"), r(-1), r(0), None)).collect();
        let spec = MatroidSpec::graphic(3, vec![(0, 1), (1, 2), (0, 2)]);
        (lp, vec![MatroidEmbedding { spec, vars }])
    }

    #[test]
    fn graphic_cutting_planes_reach_the_polytope() {
        // Vertices of the triangle's forest polytope are the 7 forests; the
        // best has value -2.
        let (lp, specs) = triangle_lp();
        let run = solve_over_matroid(&lp, &specs).unwrap();
        assert!(run.result.is_optimal());
        assert_eq!(run.result.value, r(-2));
        let total: Rat = run.result.point.iter().sum();
        assert_eq!(total, r(2));
        assert!(run.result.point.iter().all(|v| v.is_zero() || v.is_one()));
        assert!(run.cuts >= 1);
        assert!(run.result.is_vertex);
    }

    #[test]
    fn explicit_partition_matches_prebuilt_rows() {
        let mut lp = LinearProgram::new();
        let costs = [-3, -1, -2, -5];
        let vars: Vec<usize> = costs.iter().enumerate().map(|(e, &c)| lp.add_var(format!("v{e}"), r(c), r(0), None)).collect();
        let spec = MatroidSpec::partition(vec![vec![0, 1], vec![2, 3]], vec![1, 1]);
        let mut manual = lp.clone();
        manual.add_row(vec![(0, r(1)), (1, r(1))], Sense::Le, r(1));
        manual.add_row(vec![(2, r(1)), (3, r(1))], Sense::Le, r(1));
        for v in 0..4 {
            manual.upper[v] = Some(r(1));
        }
        let run = solve_over_matroid(&lp, &[MatroidEmbedding { spec, vars }]).unwrap();
        assert_eq!(run.result, solve(&manual));
        assert_eq!(run.result.value, r(-8));
    }

    #[test]
    fn vacuous_uniform_matches_plain_solve() {
        let mut lp = LinearProgram::new();
        let a = lp.add_var("a", r(2), r(0), Some(r(1)));
        let b = lp.add_var("b", r(3), r(0), Some(r(1)));
        lp.add_row(vec![(a, r(1)), (b, r(1))], Sense::Ge, Rat::new(3, 2));
        let run = solve_over_matroid(&lp, &[MatroidEmbedding { spec: MatroidSpec::uniform(2, 2), vars: vec![a, b] }]).unwrap();
        assert_eq!(run.result, solve(&lp));
    }

    #[test]
    fn lp_text_dump() {
        let mut lp = LinearProgram::new();
        let a = lp.add_var("a", Rat::new(1, 2), r(0), Some(r(1)));
        let b = lp.add_var("b", r(-1), r(0), None);
        lp.add_row(vec![(a, r(1)), (b, r(-3))], Sense::Ge, r(1));
        let text = lp.to_lp_text("t");
        assert!(text.contains(" obj: 1/2 a - b"));
        assert!(text.contains(" r0: a - 3 b >= 1"));
        assert!(text.contains(" 0 <= a <= 1"));
        assert!(text.contains(" b >= 0"));
    }

    /// Brute force: every basis of the bounded system `A v <= b, 0 <= v <= u`
    /// written as rows; solve each n x n subsystem by Gaussian elimination.
    fn basis_enumeration(lp: &LinearProgram) -> Option<Rat> {
        let n = lp.num_vars();
        let mut rows: Vec<(Vec<Rat>, Rat)> = Vec::new();
        for row in &lp.rows {
            let mut dense = vec![Rat::zero(); n];
            for (v, a) in &row.coeffs {
                dense[*v] += a;
            }
            rows.push((dense, row.rhs.clone()));
        }
        for v in 0..n {
            let mut e = vec![Rat::zero(); n];
            e[v] = Rat::one();
            rows.push((e.clone(), lp.lower[v].clone()));
            if let Some(hi) = &lp.upper[v] {
                rows.push((e, hi.clone()));
            }
        }
        let m = rows.len();
        let mut best: Option<Rat> = None;
        let mut choose = vec![0usize; n];
        fn next(choose: &mut [usize], m: usize) -> bool {
            let n = choose.len();
            let mut i = n;
            while i > 0 {
                i -= 1;
                if choose[i] < m - n + i {
                    choose[i] += 1;
                    for k in i + 1..n {
                        choose[k] = choose[k - 1] + 1;
                    }
                    return true;
                }
            }
            false
        }
        for (i, c) in choose.iter_mut().enumerate() {
            *c = i;
        }
        loop {
            // Gauss-Jordan on the chosen rows.
            let mut a: Vec<Vec<Rat>> = choose
                .iter()
                .map(|&k| {
                    let mut r = rows[k].0.clone();
                    r.push(rows[k].1.clone());
                    r
                })
                .collect();
            let mut ok = true;
            for col in 0..n {
                let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
                    ok = false;
                    break;
                };
                a.swap(col, p);
                let inv = a[col][col].recip();
                for v in a[col].iter_mut() {
                    *v *= &inv;
                }
                for r in 0..n {
                    if r != col && !a[r][col].is_zero() {
                        let f = a[r][col].clone();
                        let pivot = a[col].clone();
                        for (x, y) in a[r].iter_mut().zip(&pivot) {
                            *x -= &f * y;
                        }
                    }
                }
            }
            if ok {
                let point: Vec<Rat> = a.iter().map(|r| r[n].clone()).collect();
                if lp.is_feasible(&point) {
                    let val = lp.objective_value(&point);
                    if best.as_ref().is_none_or(|b| val < *b) {
                        best = Some(val);
                    }
                }
            }
            if !next(&mut choose, m) {
                break;
            }
        }
        best
    }

    fn arb_lp() -> impl Strategy<Value = LinearProgram> {
        (1usize..=4, 0usize..=5).prop_flat_map(|(n, m)| {
            (
                proptest::collection::vec(-5i64..=5, n),
                proptest::collection::vec((proptest::collection::vec(-3i64..=3, n), 0usize..3, -4i64..=8), m),
                proptest::collection::vec(1i64..=4, n),
            )
                .prop_map(move |(obj, rows, ub)| {
                    let mut lp = LinearProgram::new();
                    for v in 0..n {
                        lp.add_var(format!("v{v}"), Rat::from_int(obj[v]), Rat::zero(), Some(Rat::from_int(ub[v])));
                    }
                    for (coef, s, rhs) in rows {
                        let sense = [Sense::Le, Sense::Ge, Sense::Eq][s];
                        lp.add_row(
                            coef.iter().enumerate().map(|(v, &c)| (v, Rat::from_int(c))).collect(),
                            sense,
                            Rat::new(rhs, 2),
                        );
                    }
                    lp
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn simplex_matches_basis_enumeration(lp in arb_lp()) {
            let res = solve(&lp);
            let brute = basis_enumeration(&lp);
            match brute {
                None => prop_assert_eq!(res.status, LpStatus::Infeasible),
                Some(v) => {
                    prop_assert_eq!(res.status, LpStatus::Optimal);
                    prop_assert_eq!(&res.value, &v);
                    prop_assert!(lp.is_feasible(&res.point));
                    prop_assert!(res.is_vertex);
                }
            }
        }
    }
}
