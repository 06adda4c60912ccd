//! Rounding the filtered LP point to a half-integral vertex of the
//! auxiliary polytope `Q` and reading off primary and secondary facilities.
//!
//! Every function here works on the reduced instance, whose clients are
//! exactly the filter centers; "center `j`" is client `j` of that instance.

use std::fmt::Write as _;

use crate::error::{PmmError, Result};
use crate::filter::{ClusterOutput, Guarantees};
use crate::lp::{solve_over_matroid, CuttingPlaneRun, LinearProgram, MatroidEmbedding, Sense};
use crate::model::{lp_cost, FracSolution, Instance, Ledger};
use crate::rat::Rat;

/// Per-center facility sets. Every set is sorted by facility index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTwoSets {
    /// Center owning each facility: the nearest one, ties to the lower index.
    pub owner: Vec<usize>,
    pub f: Vec<Vec<usize>>,
    /// `{i in F_j : d(i,j) <= lambda(j)}`.
    pub f_prime: Vec<Vec<usize>>,
    /// Distance to the nearest facility owned by another center; `None`
    /// when `F_j` is every facility.
    pub gamma: Vec<Option<Rat>>,
    /// `{i in F_j : d(i,j) <= gamma_j}`.
    pub g: Vec<Vec<usize>>,
    /// Smallest distance at which `y` accumulates one unit around `j`.
    pub rho: Vec<Rat>,
    pub b: Vec<Vec<usize>>,
    /// Membership in `C_s`; the rest form `C_b`.
    pub small: Vec<bool>,
}

impl StageTwoSets {
    pub fn in_g(&self, i: usize, j: usize) -> bool {
        self.g[j].binary_search(&i).is_ok()
    }
}

fn sum_over(v: &[Rat], set: &[usize]) -> Rat {
    set.iter().map(|&i| &v[i]).sum()
}

pub fn build_sets(inst: &Instance, frac: &FracSolution, lambda: &[Rat]) -> Result<StageTwoSets> {
    let (nf, nc) = (inst.nf(), inst.nc());
    let owner: Vec<usize> = (0..nf)
        .map(|i| {
            (0..nc)
                .min_by(|&a, &b| inst.dfc(i, a).cmp(inst.dfc(i, b)).then(a.cmp(&b)))
                .unwrap_or(0)
        })
        .collect();
    let mut sets = StageTwoSets {
        owner,
        f: Vec::with_capacity(nc),
        f_prime: Vec::with_capacity(nc),
        gamma: Vec::with_capacity(nc),
        g: Vec::with_capacity(nc),
        rho: Vec::with_capacity(nc),
        b: Vec::with_capacity(nc),
        small: Vec::with_capacity(nc),
    };
    for j in 0..nc {
        let f: Vec<usize> = (0..nf).filter(|&i| sets.owner[i] == j).collect();
        let f_prime = f.iter().copied().filter(|&i| inst.dfc(i, j) <= &lambda[j]).collect();
        let gamma = (0..nf)
            .filter(|&i| sets.owner[i] != j)
            .map(|i| inst.dfc(i, j).clone())
            .min();
        let g = match &gamma {
            Some(gm) => f.iter().copied().filter(|&i| inst.dfc(i, j) <= gm).collect(),
            None => f.clone(),
        };
        let rho = unit_radius(inst, &frac.y, j).ok_or_else(|| {
            PmmError::Internal(format!(
                "opening vector holds less than one unit around center `{}`",
                inst.clients[j].id
            ))
        })?;
        let mut b: Vec<usize> = inst.ball(j, &rho);
        b.sort_unstable();
        let small = gamma.as_ref().is_none_or(|gm| rho < *gm);
        sets.f.push(f);
        sets.f_prime.push(f_prime);
        sets.gamma.push(gamma);
        sets.g.push(g);
        sets.rho.push(rho);
        sets.b.push(b);
        sets.small.push(small);
    }
    Ok(sets)
}

/// Smallest facility distance `t` with `y(B(j,t)) >= 1`.
fn unit_radius(inst: &Instance, y: &[Rat], j: usize) -> Option<Rat> {
    let mut order: Vec<usize> = (0..inst.nf()).collect();
    order.sort_by(|&a, &b| inst.dfc(a, j).cmp(inst.dfc(b, j)).then(a.cmp(&b)));
    let mut acc = Rat::zero();
    for (pos, &i) in order.iter().enumerate() {
        acc += &y[i];
        let last_at_distance = order
            .get(pos + 1)
            .is_none_or(|&n| inst.dfc(n, j) != inst.dfc(i, j));
        if last_at_distance && acc >= Rat::one() {
            return Some(inst.dfc(i, j).clone());
        }
    }
    None
}

/// Pairs of sets in the family that are neither nested nor disjoint.
pub fn laminar_violations(family: &[&[usize]]) -> usize {
    let mut bad = 0;
    for (a, s) in family.iter().enumerate() {
        for t in &family[a + 1..] {
            let common = s.iter().filter(|e| t.binary_search(e).is_ok()).count();
            if common != 0 && common != s.len() && common != t.len() {
                bad += 1;
            }
        }
    }
    bad
}

/// The `F'_j`, `G_j` and (for `C_s`) `B_j` sets that define `Q`.
pub fn q_family(sets: &StageTwoSets) -> Vec<&[usize]> {
    let mut fam: Vec<&[usize]> = Vec::new();
    for j in 0..sets.f.len() {
        fam.push(&sets.f_prime[j]);
        fam.push(&sets.g[j]);
        if sets.small[j] {
            fam.push(&sets.b[j]);
        }
    }
    fam
}

/// `y'_i = x_ij` for `i` in `G_j`, zero outside every `G_j`.
pub fn build_yprime(sets: &StageTwoSets, frac: &FracSolution) -> Vec<Rat> {
    (0..frac.y.len())
        .map(|i| {
            let j = sets.owner[i];
            if sets.g.get(j).is_some_and(|_| sets.in_g(i, j)) {
                frac.x_value(i, j)
            } else {
                Rat::zero()
            }
        })
        .collect()
}

/// `T(v) = coeffs . v + constant`. The `4 gamma_j (1 - v(G_j))` part is
/// emitted for `C_b` only; on `Q` it vanishes for `C_s`.
pub fn t_objective(inst: &Instance, sets: &StageTwoSets) -> (Vec<Rat>, Rat) {
    let mut coeffs: Vec<Rat> = inst.facilities.iter().map(|f| f.cost.clone()).collect();
    let mut constant = Rat::zero();
    let (two, four) = (Rat::from_int(2), Rat::from_int(4));
    for j in 0..inst.nc() {
        let a = &inst.clients[j].demand;
        for &i in &sets.g[j] {
            coeffs[i] += &two * a * inst.dfc(i, j);
        }
        if !sets.small[j] {
            let gamma = sets.gamma[j].as_ref().expect("C_b centers have finite gamma");
            let w = &four * a * gamma;
            for &i in &sets.g[j] {
                coeffs[i] -= &w;
            }
            constant += w;
        }
    }
    (coeffs, constant)
}

pub fn t_value(inst: &Instance, sets: &StageTwoSets, v: &[Rat]) -> Rat {
    let (coeffs, constant) = t_objective(inst, sets);
    coeffs.iter().zip(v).map(|(c, x)| c * x).sum::<Rat>() + constant
}

/// `Q` without its matroid rows, over variables `v_i = i`.
pub fn q_program(inst: &Instance, sets: &StageTwoSets) -> LinearProgram {
    let (coeffs, _) = t_objective(inst, sets);
    let mut lp = LinearProgram::new();
    for (i, c) in coeffs.into_iter().enumerate() {
        lp.add_var(format!("v_{}", inst.facilities[i].id), c, Rat::zero(), None);
    }
    let ones = |set: &[usize]| set.iter().map(|&i| (i, Rat::one())).collect::<Vec<_>>();
    for j in 0..inst.nc() {
        lp.add_row(ones(&sets.f_prime[j]), Sense::Ge, Rat::half());
        lp.add_row(ones(&sets.g[j]), Sense::Le, Rat::one());
        if sets.small[j] {
            lp.add_row(ones(&sets.b[j]), Sense::Eq, Rat::one());
        }
    }
    lp
}

/// Rows of `Q` violated by `v`, as messages.
pub fn q_violations(inst: &Instance, sets: &StageTwoSets, v: &[Rat]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, x) in v.iter().enumerate() {
        if x.is_negative() {
            out.push(format!("v[{}] = {} < 0", inst.facilities[i].id, x));
        }
    }
    for j in 0..inst.nc() {
        let cid = &inst.clients[j].id;
        let fp = sum_over(v, &sets.f_prime[j]);
        if fp < Rat::half() {
            out.push(format!("v(F'_{cid}) = {fp} < 1/2"));
        }
        let g = sum_over(v, &sets.g[j]);
        if g > Rat::one() {
            out.push(format!("v(G_{cid}) = {g} > 1"));
        }
        if sets.small[j] {
            let b = sum_over(v, &sets.b[j]);
            if !b.is_one() {
                out.push(format!("v(B_{cid}) = {b} != 1"));
            }
        }
    }
    if let Some(viol) = inst.matroid.separate(v)? {
        out.push(format!("matroid row over {:?}: {} > {}", viol.row.set, viol.lhs, viol.row.cap));
    }
    Ok(out)
}

pub fn is_half_integral(v: &[Rat]) -> bool {
    v.iter().all(|x| x.is_zero() || x.is_one() || *x == Rat::half())
}

#[derive(Debug, Clone)]
pub struct QSolve {
    pub yhat: Vec<Rat>,
    /// `T(yhat)`, constant included.
    pub value: Rat,
    pub run: CuttingPlaneRun,
}

/// Minimizes `T` over `Q`.
pub fn solve_q(inst: &Instance, sets: &StageTwoSets) -> Result<QSolve> {
    let lp = q_program(inst, sets);
    let emb = MatroidEmbedding {
        spec: inst.matroid.clone(),
        vars: (0..inst.nf()).collect(),
    };
    let run = solve_over_matroid(&lp, &[emb])?;
    if !run.result.is_optimal() {
        return Err(PmmError::Internal(format!(
            "minimizing T over Q ended {:?} although y' lies in Q",
            run.result.status
        )));
    }
    let (_, constant) = t_objective(inst, sets);
    Ok(QSolve {
        yhat: run.result.point.clone(),
        value: &run.result.value + constant,
        run,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfIntState {
    pub yprime: Vec<Rat>,
    pub yhat: Vec<Rat>,
    /// Per center, `(facility, value)`; the primary entry comes first.
    pub xhat: Vec<Vec<(usize, Rat)>>,
    pub sigma: Vec<usize>,
    pub i1: Vec<usize>,
    pub i2: Vec<usize>,
    pub chat: Vec<Rat>,
}

/// Facilities with positive `yhat` ordered by distance to `j`, preferring
/// members of `G_j` and then lower indices on ties.
fn positive_by_distance(inst: &Instance, sets: &StageTwoSets, yhat: &[Rat], j: usize) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..inst.nf()).filter(|&i| yhat[i].is_positive()).collect();
    pos.sort_by(|&a, &b| {
        inst.dfc(a, j)
            .cmp(inst.dfc(b, j))
            .then(sets.in_g(b, j).cmp(&sets.in_g(a, j)))
            .then(a.cmp(&b))
    });
    pos
}

pub fn derive_half_solution(
    inst: &Instance,
    sets: &StageTwoSets,
    yhat: &[Rat],
    yprime: Vec<Rat>,
) -> Result<HalfIntState> {
    let nc = inst.nc();
    let ordered: Vec<Vec<usize>> = (0..nc).map(|j| positive_by_distance(inst, sets, yhat, j)).collect();
    let mut i1 = Vec::with_capacity(nc);
    for (j, pos) in ordered.iter().enumerate() {
        let first = pos.first().copied().ok_or_else(|| {
            PmmError::Internal(format!("center `{}` sees no open facility", inst.clients[j].id))
        })?;
        i1.push(first);
    }
    let mut state = HalfIntState {
        yprime,
        yhat: yhat.to_vec(),
        xhat: Vec::with_capacity(nc),
        sigma: Vec::with_capacity(nc),
        i1: i1.clone(),
        i2: Vec::with_capacity(nc),
        chat: Vec::with_capacity(nc),
    };
    for j in 0..nc {
        let p = i1[j];
        let yg = sum_over(yhat, &sets.g[j]);
        let (sigma, secondary) = if yg.is_one() {
            if yhat[p].is_one() {
                (j, p)
            } else {
                let q = ordered[j].get(1).copied().ok_or_else(|| {
                    PmmError::Internal(format!(
                        "center `{}` has a half-open primary and no other open facility",
                        inst.clients[j].id
                    ))
                })?;
                (j, q)
            }
        } else if yg == Rat::half() {
            let s = (0..nc)
                .filter(|&k| k != j)
                .min_by(|&a, &b| inst.dcc(j, a).cmp(inst.dcc(j, b)).then(a.cmp(&b)))
                .ok_or_else(|| {
                    PmmError::Internal("yhat(G_j) < 1 with a single center".into())
                })?;
            (s, i1[s])
        } else {
            return Err(PmmError::Internal(format!(
                "yhat(G_{}) = {} is neither 1/2 nor 1",
                inst.clients[j].id, yg
            )));
        };
        let x = if secondary == p {
            vec![(p, Rat::one())]
        } else {
            let first = yhat[p].clone();
            let rest = Rat::one() - &first;
            vec![(p, first), (secondary, rest)]
        };
        let chat = (inst.dfc(p, j) + inst.dcc(j, sigma) + inst.dfc(secondary, sigma)) / Rat::from_int(2);
        state.xhat.push(x);
        state.sigma.push(sigma);
        state.i2.push(secondary);
        state.chat.push(chat);
    }
    Ok(state)
}

/// Everything stage two computed, ready for the last stage.
#[derive(Debug, Clone)]
pub struct StageTwo {
    pub sets: StageTwoSets,
    pub q: QSolve,
    pub half: HalfIntState,
    /// `T(y')`.
    pub t_yprime: Rat,
    /// `COST'(xhat, yhat)`.
    pub cost_half: Rat,
}

/// Runs the whole stage on the reduced instance `red` with its restricted
/// fractional point and per-center `lambda`.
pub fn run_stage_two(red: &Instance, frac: &FracSolution, lambda: &[Rat]) -> Result<StageTwo> {
    let sets = build_sets(red, frac, lambda)?;
    let yprime = build_yprime(&sets, frac);
    let t_yprime = t_value(red, &sets, &yprime);
    let q = solve_q(red, &sets)?;
    let half = derive_half_solution(red, &sets, &q.yhat, yprime)?;
    let half_frac = FracSolution::new(red, half.yhat.clone(), half.xhat.clone());
    let cost_half = lp_cost(red, &half_frac, None, &red.demands());
    Ok(StageTwo {
        sets,
        q,
        half,
        t_yprime,
        cost_half,
    })
}

/// Every stage-two fact as a ledger row. `inst` and `clusters` are the
/// original instance and the filter output that produced `red`.
pub fn stage_two_ledger(
    inst: &Instance,
    clusters: &ClusterOutput,
    red: &Instance,
    frac: &FracSolution,
    st: &StageTwo,
    g: Option<&Guarantees>,
) -> Result<Ledger> {
    let mut ledger = Ledger::default();
    let sets = &st.sets;
    let half = &st.half;
    let lambda = clusters.center_lambda();
    let nc = red.nc();
    let (two, three, four) = (Rat::from_int(2), Rat::from_int(3), Rat::from_int(4));

    let mut nesting = 0;
    let mut gamma_bad = 0;
    let mut ball_bad = 0;
    for j in 0..nc {
        let sub = |a: &[usize], b: &[usize]| a.iter().all(|e| b.binary_search(e).is_ok());
        if !sub(&sets.f_prime[j], &sets.g[j]) || !sub(&sets.g[j], &sets.f[j]) {
            nesting += 1;
        }
        if sets.gamma[j].as_ref().is_some_and(|gm| *gm <= lambda[j]) {
            gamma_bad += 1;
        }
        if sets.small[j] && !sub(&sets.b[j], &sets.g[j]) {
            ball_bad += 1;
        }
    }
    ledger.count_zero("stage2: F'_j within G_j within F_j", nesting);
    ledger.count_zero("stage2: gamma_j > lambda(j)", gamma_bad);
    ledger.count_zero("stage2: B_j within G_j for C_s", ball_bad);
    ledger.count_zero("stage2: F', G, B family is laminar", laminar_violations(&q_family(sets)));
    for j in 0..nc {
        let cid = &red.clients[j].id;
        ledger.le(format!("stage2: rho({cid}) <= r({cid})"), sets.rho[j].clone(), red.clients[j].radius.clone());
        let xf: Rat = sets.f_prime[j].iter().map(|&i| frac.x_value(i, j)).sum();
        if lambda[j] == red.clients[j].radius {
            ledger.equal(format!("stage2: x(F'_{cid}) = 1"), xf, Rat::one());
        } else {
            ledger.le(format!("stage2: 1/2 <= x(F'_{cid})"), Rat::half(), xf);
        }
    }

    ledger.count_zero("stage2: y' in Q", q_violations(red, sets, &half.yprime)?.len());
    let cost_prime = lp_cost(red, frac, None, &red.demands());
    ledger.le("stage2: T(y') <= 4 COST'(x,y)", st.t_yprime.clone(), &four * &cost_prime);
    ledger.le("stage2: T(yhat) <= T(y')", st.q.value.clone(), st.t_yprime.clone());
    ledger.le("stage2: COST'(xhat,yhat) <= T(yhat)", st.cost_half.clone(), st.q.value.clone());
    ledger.equal(
        "stage2: T(yhat) recomputed",
        t_value(red, sets, &half.yhat),
        st.q.value.clone(),
    );
    ledger.count_zero("stage2: yhat half-integral", usize::from(!is_half_integral(&half.yhat)));
    ledger.count_zero("stage2: yhat in Q", q_violations(red, sets, &half.yhat)?.len());
    ledger.count_zero("stage2: yhat is a vertex of Q", usize::from(!st.q.run.result.is_vertex));

    let mut shape = 0;
    for j in 0..nc {
        let yg = sum_over(&half.yhat, &sets.g[j]);
        if !(yg.is_one() || yg == Rat::half()) {
            shape += 1;
        }
        if sets.small[j] && !(yg.is_one() && sum_over(&half.yhat, &sets.b[j]).is_one()) {
            shape += 1;
        }
        if sets.f_prime[j].binary_search(&half.i1[j]).is_err() {
            shape += 1;
        }
        let total: Rat = half.xhat[j].iter().map(|(_, v)| v).sum();
        let primary_ok = half.xhat[j][0] == (half.i1[j], half.yhat[half.i1[j]].clone())
            || (half.i1[j] == half.i2[j] && half.xhat[j][0].0 == half.i1[j]);
        if !total.is_one() || !primary_ok || half.xhat[j].iter().any(|(i, v)| *v > half.yhat[*i]) {
            shape += 1;
        }
        if (half.sigma[j] == j) != yg.is_one() {
            shape += 1;
        }
        if half.sigma[j] != j && half.i2[j] != half.i1[half.sigma[j]] {
            shape += 1;
        }
    }
    ledger.count_zero("stage2: primary, secondary and sigma are well formed", shape);

    for j in 0..nc {
        let cid = &red.clients[j].id;
        let s = half.sigma[j];
        if s != j {
            let gamma = sets.gamma[j].clone().unwrap_or_else(Rat::zero);
            ledger.le(format!("stage2: d({cid}, sigma) <= 2 gamma({cid})"), red.dcc(j, s).clone(), &two * &gamma);
            ledger.le(
                format!("stage2: d(i2({cid}), {cid}) <= 3 gamma({cid})"),
                red.dfc(half.i2[j], j).clone(),
                &three * &gamma,
            );
        }
        let d1 = red.dfc(half.i1[j], j).clone();
        let d2 = red.dfc(half.i2[j], j).clone();
        ledger.le(format!("stage2: d({cid}, i1) <= lambda({cid})"), d1.clone(), lambda[j].clone());
        let (tag, reach) = if sets.small[j] {
            ("C_s", sets.rho[j].clone())
        } else {
            ("C_b", &three * &sets.rho[j])
        };
        let mult = if sets.small[j] { 1 } else { 3 };
        ledger.le(format!("stage2: {tag} d({cid}, i2) <= {mult} rho({cid})"), d2.clone(), reach);

        let Some(g) = g else { continue };
        for &k in &clusters.children[j] {
            let rk = &inst.clients[k].radius;
            let kid = &inst.clients[k].id;
            ledger.le(
                format!("stage2: d({cid}, i1) <= {} r({kid})", g.primary),
                d1.clone(),
                Rat::from_int(g.primary) * rk,
            );
            ledger.le(
                format!("stage2: rho({cid}) <= {} r({kid})", g.rho),
                sets.rho[j].clone(),
                Rat::from_int(g.rho) * rk,
            );
            let f = g.rho * mult;
            ledger.le(format!("stage2: {tag} d({cid}, i2) <= {f} r({kid})"), d2.clone(), Rat::from_int(f) * rk);
        }
    }
    Ok(ledger)
}

/// One line per center: lambda, gamma, rho, set sizes, class, i1, i2,
/// sigma and chat.
pub fn dump(red: &Instance, lambda: &[Rat], st: &StageTwo) -> String {
    let mut s = String::from("center\tlambda\tgamma\trho\t|F|\t|F'|\t|G|\tclass\ti1\ti2\tsigma\tchat\n");
    let (sets, half) = (&st.sets, &st.half);
    for j in 0..red.nc() {
        let gamma = sets.gamma[j].as_ref().map_or("inf".to_string(), |g| g.to_string());
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            red.clients[j].id,
            lambda[j],
            gamma,
            sets.rho[j],
            sets.f[j].len(),
            sets.f_prime[j].len(),
            sets.g[j].len(),
            if sets.small[j] { "C_s" } else { "C_b" },
            red.facilities[half.i1[j]].id,
            red.facilities[half.i2[j]].id,
            red.clients[half.sigma[j]].id,
            half.chat[j],
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::MatroidSpec;
    use crate::model::tests::{line_instance, r};

    fn frac_of(inst: &Instance, y: Vec<Rat>) -> FracSolution {
        crate::lp::assign_from_y(inst, &y).unwrap()
    }

    #[test]
    fn single_center_owns_everything() {
        let inst = line_instance(&[(1, 0), (2, 0)], &[(0, 5, 1)], MatroidSpec::uniform(2, 2));
        let frac = frac_of(&inst, vec![Rat::half(), Rat::half()]);
        let sets = build_sets(&inst, &frac, &[r(3)]).unwrap();
        assert_eq!(sets.f[0], vec![0, 1]);
        assert_eq!(sets.gamma[0], None);
        assert_eq!(sets.rho[0], r(2));
        assert!(sets.small[0]);
        assert_eq!(sets.b[0], vec![0, 1]);
    }

    #[test]
    fn two_private_facilities() {
        // Centers at 0 and 11, facilities at 1 and 10.
        let inst = line_instance(&[(1, 0), (10, 0)], &[(0, 2, 1), (11, 2, 1)], MatroidSpec::uniform(2, 2));
        let frac = frac_of(&inst, vec![r(1), r(1)]);
        let sets = build_sets(&inst, &frac, &[r(1), r(1)]).unwrap();
        assert_eq!(sets.gamma, vec![Some(r(10)), Some(r(10))]);
        assert_eq!(sets.g, sets.f);
        assert_eq!(sets.f, vec![vec![0], vec![1]]);
    }

    #[test]
    fn tie_between_rho_and_gamma_goes_to_c_b() {
        // Center 0 at position 0 sees its own facility at 2 and a foreign
        // one at -2 (owned by center 1 at -3). Half of each is open.
        let inst = line_instance(
            &[(2, 0), (-2, 0), (-4, 0)],
            &[(0, 2, 1), (-3, 2, 1)],
            MatroidSpec::uniform(3, 3),
        );
        let frac = frac_of(&inst, vec![Rat::half(), Rat::half(), Rat::half()]);
        let sets = build_sets(&inst, &frac, &[r(1), r(1)]).unwrap();
        assert_eq!(sets.gamma[0], Some(r(2)));
        assert_eq!(sets.rho[0], r(2));
        assert!(!sets.small[0]);
    }

    #[test]
    fn yprime_zero_outside_g() {
        // The facility at 30 is owned by center 0 but lies beyond gamma.
        let inst = line_instance(
            &[(1, 0), (9, 0), (-30, 0)],
            &[(0, 40, 1), (10, 40, 1)],
            MatroidSpec::uniform(3, 3),
        );
        let frac = frac_of(&inst, vec![Rat::half(), r(1), Rat::half()]);
        let sets = build_sets(&inst, &frac, &[r(1), r(1)]).unwrap();
        assert_eq!(sets.g[0], vec![0]);
        let yp = build_yprime(&sets, &frac);
        assert_eq!(yp, vec![Rat::half(), r(1), r(0)]);
    }

    #[test]
    fn zero_cost_colocated_facility() {
        let inst = line_instance(&[(0, 0)], &[(0, 0, 1)], MatroidSpec::uniform(1, 1));
        let frac = frac_of(&inst, vec![r(1)]);
        let st = run_stage_two(&inst, &frac, &[r(0)]).unwrap();
        assert_eq!(st.half.yhat, vec![r(1)]);
        assert_eq!(st.q.value, r(0));
        assert_eq!(st.half.i1, vec![0]);
        assert_eq!(st.half.i2, vec![0]);
        assert_eq!(st.half.chat, vec![r(0)]);
    }

    #[test]
    fn forced_ball_in_c_s() {
        // Two equidistant facilities, unit budget for y: v(B_j) = 1.
        let inst = line_instance(&[(-1, 1), (1, 1)], &[(0, 1, 1)], MatroidSpec::uniform(2, 1));
        let frac = frac_of(&inst, vec![Rat::half(), Rat::half()]);
        let st = run_stage_two(&inst, &frac, &[r(1)]).unwrap();
        assert!(st.sets.small[0]);
        assert_eq!(sum_over(&st.half.yhat, &st.sets.b[0]), r(1));
        assert!(st.q.value <= st.t_yprime);
        assert!(is_half_integral(&st.half.yhat));
    }

    #[test]
    fn half_open_center_borrows_from_nearest_center() {
        // Two centers, each with a private facility; a uniform budget of one
        // facility in total forces half of each to open. Facility at 2 is
        // cheap for center 0 but both need half.
        let inst = line_instance(&[(1, 0), (9, 0)], &[(0, 10, 1), (10, 10, 1)], MatroidSpec::uniform(2, 1));
        let frac = frac_of(&inst, vec![Rat::half(), Rat::half()]);
        let sets = build_sets(&inst, &frac, &[r(1), r(1)]).unwrap();
        assert_eq!(sets.small, vec![false, false]);
        let st = run_stage_two(&inst, &frac, &[r(1), r(1)]).unwrap();
        assert_eq!(st.half.yhat, vec![Rat::half(), Rat::half()]);
        assert_eq!(st.half.sigma, vec![1, 0]);
        assert_eq!(st.half.i2, vec![1, 0]);
        // d(i2, j) = 9 <= 3 gamma = 27, chat = (1 + 10 + 1) / 2.
        assert_eq!(st.half.chat, vec![r(6), r(6)]);
        assert_eq!(laminar_violations(&q_family(&st.sets)), 0);
    }

    #[test]
    fn laminar_check_detects_crossing() {
        let a = vec![0, 1];
        let b = vec![1, 2];
        let c = vec![0, 1, 2];
        assert_eq!(laminar_violations(&[&a, &c]), 0);
        assert_eq!(laminar_violations(&[&a, &b]), 1);
    }
}
