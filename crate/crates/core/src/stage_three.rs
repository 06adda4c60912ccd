//! From the half-integral point to an integral one: group centers whose
//! facility pairs overlap, then optimize `H` over the intersection of the
//! matroid polytope with the block constraints `z(S_j) = 1`.

use std::fmt::Write as _;

use crate::error::{PmmError, Result};
use crate::filter::{ClusterOutput, Guarantees};
use crate::lp::{solve_over_matroid, CuttingPlaneRun, LinearProgram, MatroidEmbedding, Sense};
use crate::matroid::RankOracle;
use crate::model::{Instance, IntegralSolution, Ledger};
use crate::rat::Rat;
use crate::stage_two::HalfIntState;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenterClustering {
    /// `C'` in selection order.
    pub cprime: Vec<usize>,
    /// The member of `C'` that removed each center (itself for `C'`).
    pub ctr: Vec<usize>,
    /// `S_j = {i1(j), i2(j)}`, sorted.
    pub s: Vec<Vec<usize>>,
}

impl CenterClustering {
    pub fn in_cprime(&self, j: usize) -> bool {
        self.ctr[j] == j
    }
}

fn intersects(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|e| b.contains(e))
}

/// Sweeps centers by `(chat, index)`; each pick claims every remaining
/// center whose pair overlaps its own.
pub fn cluster_centers(half: &HalfIntState) -> CenterClustering {
    let nc = half.i1.len();
    let s: Vec<Vec<usize>> = (0..nc)
        .map(|j| {
            let mut v = vec![half.i1[j], half.i2[j]];
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut order: Vec<usize> = (0..nc).collect();
    order.sort_by(|&a, &b| half.chat[a].cmp(&half.chat[b]).then(a.cmp(&b)));
    let mut ctr = vec![usize::MAX; nc];
    let mut cprime = Vec::new();
    for &j in &order {
        if ctr[j] != usize::MAX {
            continue;
        }
        cprime.push(j);
        for &k in &order {
            if ctr[k] == usize::MAX && intersects(&s[j], &s[k]) {
                ctr[k] = j;
            }
        }
    }
    CenterClustering { cprime, ctr, s }
}

/// Overlapping pairs whose pattern is none of: both facilities shared with
/// mutual `sigma`; one side's primary is the other's secondary; a shared
/// secondary borrowed from a common third center.
pub fn sj_case_violations(half: &HalfIntState, cl: &CenterClustering) -> usize {
    let nc = cl.s.len();
    let sigma = &half.sigma;
    let mutual = |a: usize, b: usize, inter: &[usize]| {
        inter == cl.s[a].as_slice() && sigma[a] == b && sigma[b] == a
    };
    let primary = |a: usize, b: usize, inter: &[usize]| {
        inter == [half.i1[a]] && sigma[b] == a && sigma[a] != b
    };
    let mut bad = 0;
    for a in 0..nc {
        for b in a + 1..nc {
            let inter: Vec<usize> = cl.s[a].iter().copied().filter(|e| cl.s[b].contains(e)).collect();
            if inter.is_empty() {
                continue;
            }
            let shared = inter == [half.i2[a]]
                && half.i2[a] == half.i2[b]
                && sigma[a] == sigma[b]
                && sigma[a] != a
                && sigma[a] != b;
            let ok = mutual(a, b, &inter)
                || mutual(b, a, &inter)
                || primary(a, b, &inter)
                || primary(b, a, &inter)
                || shared;
            if !ok {
                bad += 1;
            }
        }
    }
    bad
}

/// `xhat_ij` on the blocks `S_j` of `C'`, `yhat` elsewhere.
pub fn build_yhat_prime(half: &HalfIntState, cl: &CenterClustering) -> Vec<Rat> {
    let mut out = half.yhat.clone();
    for &j in &cl.cprime {
        for &i in &cl.s[j] {
            out[i] = half.xhat[j]
                .iter()
                .filter(|(f, _)| *f == i)
                .map(|(_, v)| v.clone())
                .sum();
        }
    }
    out
}

/// The linear terms of `L_j` for every center, as `(facility, coefficient)`.
pub fn l_terms(inst: &Instance, half: &HalfIntState, cl: &CenterClustering) -> Vec<Vec<(usize, Rat)>> {
    (0..inst.nc())
        .map(|j| {
            let a = &inst.clients[j].demand;
            let block = &cl.s[cl.ctr[j]];
            let p = half.i1[j];
            if block.contains(&p) {
                block.iter().map(|&i| (i, a * inst.dfc(i, j))).collect()
            } else {
                let s = half.sigma[j];
                let djs = inst.dcc(j, s);
                let mut terms: Vec<(usize, Rat)> =
                    block.iter().map(|&i| (i, a * (djs + inst.dfc(i, s)))).collect();
                let adj = inst.dfc(p, j) - djs - inst.dfc(half.i1[s], s);
                terms.push((p, a * adj));
                terms
            }
        })
        .collect()
}

/// Coefficients of `H(z) = sum f_i z_i + sum_j L_j(z)`.
pub fn h_objective(inst: &Instance, half: &HalfIntState, cl: &CenterClustering) -> Vec<Rat> {
    let mut coeffs: Vec<Rat> = inst.facilities.iter().map(|f| f.cost.clone()).collect();
    for terms in l_terms(inst, half, cl) {
        for (i, c) in terms {
            coeffs[i] += c;
        }
    }
    coeffs
}

pub fn h_value(coeffs: &[Rat], z: &[Rat]) -> Rat {
    coeffs.iter().zip(z).map(|(c, v)| c * v).sum()
}

/// `R` without its matroid rows.
pub fn r_program(inst: &Instance, cl: &CenterClustering, coeffs: &[Rat]) -> LinearProgram {
    let mut lp = LinearProgram::new();
    for (i, c) in coeffs.iter().enumerate() {
        lp.add_var(format!("z_{}", inst.facilities[i].id), c.clone(), Rat::zero(), None);
    }
    for &j in &cl.cprime {
        lp.add_row(cl.s[j].iter().map(|&i| (i, Rat::one())).collect(), Sense::Eq, Rat::one());
    }
    lp
}

pub fn r_violations(inst: &Instance, cl: &CenterClustering, z: &[Rat]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, v) in z.iter().enumerate() {
        if v.is_negative() {
            out.push(format!("z[{}] = {} < 0", inst.facilities[i].id, v));
        }
    }
    for &j in &cl.cprime {
        let total: Rat = cl.s[j].iter().map(|&i| &z[i]).sum();
        if !total.is_one() {
            out.push(format!("z(S_{}) = {} != 1", inst.clients[j].id, total));
        }
    }
    if let Some(viol) = inst.matroid.separate(z)? {
        out.push(format!("matroid row over {:?}: {} > {}", viol.row.set, viol.lhs, viol.row.cap));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RSolve {
    pub ytilde: Vec<Rat>,
    /// `H(ytilde)`.
    pub value: Rat,
    pub run: CuttingPlaneRun,
}

pub fn solve_r(inst: &Instance, half: &HalfIntState, cl: &CenterClustering) -> Result<RSolve> {
    let coeffs = h_objective(inst, half, cl);
    let lp = r_program(inst, cl, &coeffs);
    let emb = MatroidEmbedding {
        spec: inst.matroid.clone(),
        vars: (0..inst.nf()).collect(),
    };
    let run = solve_over_matroid(&lp, &[emb])?;
    if !run.result.is_optimal() {
        return Err(PmmError::Internal(format!(
            "minimizing H over R ended {:?} although yhat' lies in R",
            run.result.status
        )));
    }
    Ok(RSolve {
        ytilde: run.result.point.clone(),
        value: run.result.value.clone(),
        run,
    })
}

/// Opens `{i : ytilde_i = 1}`; `C'` uses its own block, every other center
/// uses its primary facility when open and its cluster's block otherwise.
pub fn extract_integral(
    inst: &Instance,
    half: &HalfIntState,
    cl: &CenterClustering,
    ytilde: &[Rat],
) -> Result<IntegralSolution> {
    if let Some(i) = ytilde.iter().position(|v| !(v.is_zero() || v.is_one())) {
        return Err(PmmError::Internal(format!(
            "ytilde[{}] = {} is not integral",
            inst.facilities[i].id, ytilde[i]
        )));
    }
    let open: Vec<usize> = (0..inst.nf()).filter(|&i| ytilde[i].is_one()).collect();
    let block_choice = |j: usize| -> Result<usize> {
        cl.s[j].iter().copied().find(|&i| ytilde[i].is_one()).ok_or_else(|| {
            PmmError::Internal(format!("no facility of S_{} is open", inst.clients[j].id))
        })
    };
    let mut assign = Vec::with_capacity(inst.nc());
    for j in 0..inst.nc() {
        let c = cl.ctr[j];
        let i = if c == j {
            block_choice(j)?
        } else if ytilde[half.i1[j]].is_one() {
            half.i1[j]
        } else {
            block_choice(c)?
        };
        assign.push(i);
    }
    IntegralSolution::new(inst, open, assign)
}

#[derive(Debug, Clone)]
pub struct StageThree {
    pub clustering: CenterClustering,
    pub yhat_prime: Vec<Rat>,
    /// `H(yhat')`.
    pub h_yhat_prime: Rat,
    pub r: RSolve,
    /// The integral solution of the reduced instance.
    pub solution: IntegralSolution,
}

pub fn run_stage_three(red: &Instance, half: &HalfIntState) -> Result<StageThree> {
    let clustering = cluster_centers(half);
    let yhat_prime = build_yhat_prime(half, &clustering);
    let coeffs = h_objective(red, half, &clustering);
    let h_yhat_prime = h_value(&coeffs, &yhat_prime);
    let r = solve_r(red, half, &clustering)?;
    let solution = extract_integral(red, half, &clustering, &r.ytilde)?;
    Ok(StageThree {
        clustering,
        yhat_prime,
        h_yhat_prime,
        r,
        solution,
    })
}

pub fn stage_three_ledger(
    inst: &Instance,
    clusters: &ClusterOutput,
    red: &Instance,
    half: &HalfIntState,
    t_yhat: &Rat,
    st: &StageThree,
    g: Option<&Guarantees>,
) -> Result<Ledger> {
    let mut ledger = Ledger::default();
    let cl = &st.clustering;
    let nc = red.nc();

    let mut overlaps = 0;
    for (a, &j) in cl.cprime.iter().enumerate() {
        for &k in &cl.cprime[a + 1..] {
            if intersects(&cl.s[j], &cl.s[k]) {
                overlaps += 1;
            }
        }
    }
    ledger.count_zero("stage3: blocks S_j over C' are disjoint", overlaps);
    let ctr_bad = (0..nc)
        .filter(|&j| {
            let c = cl.ctr[j];
            c != j && (!cl.in_cprime(c) || !intersects(&cl.s[c], &cl.s[j]) || half.chat[c] > half.chat[j])
        })
        .count();
    ledger.count_zero("stage3: ctr(j) overlaps S_j and has chat at most chat(j)", ctr_bad);
    ledger.count_zero("stage3: overlapping pairs match a known pattern", sj_case_violations(half, cl));

    ledger.count_zero("stage3: yhat' in R", r_violations(red, cl, &st.yhat_prime)?.len());
    let in_block: Vec<bool> = (0..red.nf())
        .map(|i| cl.cprime.iter().any(|&j| cl.s[j].contains(&i)))
        .collect();
    let yp_bad = (0..red.nf())
        .filter(|&i| {
            if in_block[i] {
                st.yhat_prime[i] > half.yhat[i]
            } else {
                st.yhat_prime[i] != half.yhat[i]
            }
        })
        .count();
    ledger.count_zero("stage3: yhat' agrees with yhat off the blocks and is below it on them", yp_bad);

    let coeffs = h_objective(red, half, cl);
    ledger.le("stage3: H(yhat') <= T(yhat)", st.h_yhat_prime.clone(), t_yhat.clone());
    ledger.le("stage3: H(ytilde) <= H(yhat')", st.r.value.clone(), st.h_yhat_prime.clone());
    ledger.equal("stage3: H(ytilde) recomputed", h_value(&coeffs, &st.r.ytilde), st.r.value.clone());
    ledger.le("stage3: COST'(xtilde,ytilde) <= H(ytilde)", st.solution.cost.clone(), st.r.value.clone());

    let ytilde = &st.r.ytilde;
    ledger.count_zero(
        "stage3: ytilde integral",
        ytilde.iter().filter(|v| !(v.is_zero() || v.is_one())).count(),
    );
    ledger.count_zero(
        "stage3: ytilde independent",
        usize::from(!red.matroid.is_independent(&st.solution.open)),
    );
    let block_bad = cl
        .cprime
        .iter()
        .filter(|&&j| !cl.s[j].iter().map(|&i| &ytilde[i]).sum::<Rat>().is_one())
        .count();
    ledger.count_zero("stage3: ytilde(S_j) = 1 on C'", block_bad);
    ledger.count_zero("stage3: ytilde is a vertex of R", usize::from(!st.r.run.result.is_vertex));

    let Some(g) = g else { return Ok(ledger) };
    for j in 0..nc {
        let cid = &red.clients[j].id;
        let dist = red.dfc(st.solution.assign[j], j);
        for &k in &clusters.children[j] {
            let kid = &inst.clients[k].id;
            ledger.le(
                format!("stage3: d({cid}, served) <= {} r({kid})", g.center),
                dist.clone(),
                Rat::from_int(g.center) * &inst.clients[k].radius,
            );
        }
    }
    Ok(ledger)
}

/// `C'`, `ctr`, the blocks and every `L_j` term.
pub fn dump(red: &Instance, half: &HalfIntState, st: &StageThree) -> String {
    let cl = &st.clustering;
    let fid = |i: usize| red.facilities[i].id.as_str();
    let mut s = String::new();
    let names: Vec<&str> = cl.cprime.iter().map(|&j| red.clients[j].id.as_str()).collect();
    let _ = writeln!(s, "C' = [{}]", names.join(", "));
    let terms = l_terms(red, half, cl);
    for j in 0..red.nc() {
        let block: Vec<&str> = cl.s[j].iter().map(|&i| fid(i)).collect();
        let l: Vec<String> = terms[j].iter().map(|(i, c)| format!("{} {}", c, fid(*i))).collect();
        let _ = writeln!(
            s,
            "{}\tctr={}\tS=[{}]\tL=[{}]",
            red.clients[j].id,
            red.clients[cl.ctr[j]].id,
            block.join(", "),
            l.join(", ")
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::MatroidSpec;
    use crate::model::tests::{line_instance, r};

    fn half_state(i1: Vec<usize>, i2: Vec<usize>, sigma: Vec<usize>, chat: Vec<i64>, yhat: Vec<Rat>) -> HalfIntState {
        let xhat = i1
            .iter()
            .zip(&i2)
            .map(|(&p, &q)| {
                if p == q {
                    vec![(p, r(1))]
                } else {
                    vec![(p, Rat::half()), (q, Rat::half())]
                }
            })
            .collect();
        HalfIntState {
            yprime: yhat.clone(),
            yhat,
            xhat,
            sigma,
            i1,
            i2,
            chat: chat.into_iter().map(r).collect(),
        }
    }

    #[test]
    fn disjoint_blocks_keep_every_center() {
        let h = half_state(vec![0, 1], vec![0, 1], vec![0, 1], vec![3, 1], vec![r(1), r(1)]);
        let cl = cluster_centers(&h);
        assert_eq!(cl.cprime, vec![1, 0]);
        assert_eq!(cl.ctr, vec![0, 1]);
        assert_eq!(sj_case_violations(&h, &cl), 0);
    }

    #[test]
    fn shared_secondary_goes_to_smaller_chat() {
        // Centers 0 and 1 both borrow facility 2 from center 2.
        let half = Rat::half();
        let h = half_state(
            vec![0, 1, 2],
            vec![2, 2, 2],
            vec![2, 2, 2],
            vec![5, 4, 1],
            vec![half.clone(), half.clone(), r(1)],
        );
        let cl = cluster_centers(&h);
        // Center 2 is picked first and claims both others.
        assert_eq!(cl.cprime, vec![2]);
        assert_eq!(cl.ctr, vec![2, 2, 2]);
    }

    #[test]
    fn four_center_trace() {
        // 0 and 1 borrow from each other; 2 borrows from 3 whose pair is
        // its own two half facilities; 3 is cheapest.
        let half = Rat::half();
        let h = half_state(
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 4],
            vec![1, 0, 3, 3],
            vec![2, 3, 4, 1],
            vec![half.clone(), half.clone(), half.clone(), half.clone(), half.clone()],
        );
        let cl = cluster_centers(&h);
        assert_eq!(cl.cprime, vec![3, 0]);
        assert_eq!(cl.ctr, vec![0, 0, 3, 3]);
        assert_eq!(sj_case_violations(&h, &cl), 0);
        let yp = build_yhat_prime(&h, &cl);
        assert_eq!(yp, vec![half.clone(), half.clone(), half.clone(), half.clone(), half]);
    }

    #[test]
    fn unknown_overlap_pattern_is_flagged() {
        let h = half_state(vec![0, 0], vec![1, 2], vec![0, 1], vec![1, 1], vec![r(1), r(1), r(1)]);
        let cl = cluster_centers(&h);
        assert_eq!(sj_case_violations(&h, &cl), 1);
    }

    #[test]
    fn single_block_single_facility() {
        let inst = line_instance(&[(0, 3)], &[(1, 2, 1)], MatroidSpec::uniform(1, 1));
        let h = half_state(vec![0], vec![0], vec![0], vec![1], vec![r(1)]);
        let st = run_stage_three(&inst, &h).unwrap();
        assert_eq!(st.r.ytilde, vec![r(1)]);
        assert_eq!(st.solution.open, vec![0]);
        assert_eq!(st.solution.cost, r(4));
    }

    /// H value of the best independent 0/1 vector with one facility per block.
    fn best_by_enumeration(inst: &Instance, coeffs: &[Rat], cl: &CenterClustering) -> Rat {
        let nf = inst.nf();
        let mut best: Option<Rat> = None;
        for mask in 0u32..(1 << nf) {
            let set: Vec<usize> = (0..nf).filter(|i| mask >> i & 1 == 1).collect();
            if !inst.matroid.is_independent(&set) {
                continue;
            }
            if cl.cprime.iter().any(|&j| cl.s[j].iter().filter(|i| set.contains(i)).count() != 1) {
                continue;
            }
            let v: Rat = set.iter().map(|&i| &coeffs[i]).sum();
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
        best.unwrap()
    }

    #[test]
    fn two_blocks_open_the_cheaper_each() {
        let inst = line_instance(
            &[(0, 5), (1, 1), (20, 1), (21, 7)],
            &[(0, 3, 1), (20, 3, 1)],
            MatroidSpec::uniform(4, 2),
        );
        let half = Rat::half();
        let h = half_state(vec![0, 2], vec![1, 3], vec![0, 1], vec![1, 1], vec![half.clone(), half.clone(), half.clone(), half]);
        let st = run_stage_three(&inst, &h).unwrap();
        assert_eq!(st.solution.open, vec![1, 2]);
        let coeffs = h_objective(&inst, &h, &st.clustering);
        assert_eq!(st.r.value, best_by_enumeration(&inst, &coeffs, &st.clustering));
    }

    #[test]
    fn negative_adjustment_opens_primary_outside_blocks() {
        // Center 1 borrows center 0's primary; its own primary (facility 1)
        // sits outside every block of C' and is free, so H prefers it.
        let inst = line_instance(
            &[(0, 0), (10, 0), (3, 0)],
            &[(1, 5, 1), (10, 5, 1)],
            MatroidSpec::uniform(3, 2),
        );
        let half = Rat::half();
        let h = HalfIntState {
            yprime: vec![half.clone(), half.clone(), half.clone()],
            yhat: vec![half.clone(), half.clone(), half.clone()],
            xhat: vec![vec![(0, half.clone()), (2, half.clone())], vec![(1, half.clone()), (0, half.clone())]],
            sigma: vec![0, 0],
            i1: vec![0, 1],
            i2: vec![2, 0],
            chat: vec![r(2), r(10)],
        };
        let cl = cluster_centers(&h);
        assert_eq!(cl.cprime, vec![0]);
        assert_eq!(cl.ctr, vec![0, 0]);
        let terms = l_terms(&inst, &h, &cl);
        // i1(1) = 1 is not in S_0 = {0, 2}: adjustment d(1,c1) - d(c1,c0) - d(0,c0) = 0 - 9 - 1.
        assert!(terms[1].contains(&(1, r(-10))));
        let st = run_stage_three(&inst, &h).unwrap();
        let coeffs = h_objective(&inst, &h, &cl);
        assert_eq!(st.r.value, best_by_enumeration(&inst, &coeffs, &cl));
        assert!(st.solution.open.contains(&1));
        assert_eq!(st.solution.assign[1], 1);
    }
}
