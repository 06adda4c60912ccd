//! The filtering step: pick well-separated centers in increasing `phi`
//! order, let each absorb nearby clients, and move their demand onto it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PmmError, Result};
use crate::model::{lp_cost, FracSolution, Instance, IntegralSolution, Ledger};
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `phi = lambda = min(r, 2 cbar)`: radius factor 21, cost factor 12.
    General21,
    /// `phi = cbar`, `lambda = 2 cbar`: radius factor 36, cost factor 8.
    General36,
    /// Equal radii `L`; `phi = cbar`, `lambda = min(L, 2 cbar)`: 9 and 8.
    Uniform,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::General21, Mode::General36, Mode::Uniform];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::General21 => "general21",
            Mode::General36 => "general36",
            Mode::Uniform => "uniform",
        }
    }

    pub fn guarantees(self) -> Guarantees {
        match self {
            Mode::General21 => Guarantees {
                filter_cost: 2,
                final_cost: 12,
                filter_radius: 2,
                primary: 1,
                rho: 3,
                center: 19,
                radius: 21,
            },
            Mode::General36 => Guarantees {
                filter_cost: 1,
                final_cost: 8,
                filter_radius: 4,
                primary: 2,
                rho: 5,
                center: 32,
                radius: 36,
            },
            Mode::Uniform => Guarantees {
                filter_cost: 1,
                final_cost: 8,
                filter_radius: 2,
                primary: 1,
                rho: 1,
                center: 7,
                radius: 9,
            },
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = PmmError;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "general21" => Ok(Mode::General21),
            "general36" => Ok(Mode::General36),
            "uniform" => Ok(Mode::Uniform),
            other => Err(PmmError::Parse(format!(
                "unknown mode `{other}` (expected general21, general36 or uniform)"
            ))),
        }
    }
}

/// Multipliers of `r_k` in the bounds a mode certifies for a client `k`
/// whose center is `j`. In uniform mode every `r_k` equals `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guarantees {
    /// `COST'(x,y) <= filter_cost * COST(x,y)`.
    pub filter_cost: i64,
    /// Final cost at most this multiple of the LP value.
    pub final_cost: i64,
    /// `d(j,k)`.
    pub filter_radius: i64,
    /// `d(j, i1(j))`.
    pub primary: i64,
    /// `rho_j`; secondary facilities lie within `rho` (small) or `3 rho`.
    pub rho: i64,
    /// `d(j, facility serving j)` after the last stage.
    pub center: i64,
    /// `d(k, S)` end to end.
    pub radius: i64,
}

/// Output of the filter. Centers are listed in increasing client index and
/// `children[t]` (which contains `centers[t]`) is aligned with them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterOutput {
    pub centers: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    /// Position in `centers` of the center that absorbed each client.
    pub center_of: Vec<usize>,
    /// Accumulated demand per client; zero for non-centers.
    pub new_demands: Vec<Rat>,
    pub phi: Vec<Rat>,
    pub lambda: Vec<Rat>,
}

impl ClusterOutput {
    /// `a'` restricted to the centers, in center order.
    pub fn center_demands(&self) -> Vec<Rat> {
        self.centers.iter().map(|&j| self.new_demands[j].clone()).collect()
    }

    pub fn center_lambda(&self) -> Vec<Rat> {
        self.centers.iter().map(|&j| self.lambda[j].clone()).collect()
    }
}

/// The `(phi, lambda)` tables a mode prescribes for `frac`.
pub fn phi_lambda(inst: &Instance, frac: &FracSolution, mode: Mode) -> Result<(Vec<Rat>, Vec<Rat>)> {
    let two = Rat::from_int(2);
    let cbar = &frac.cbar;
    Ok(match mode {
        Mode::General21 => {
            let m: Vec<Rat> = inst
                .clients
                .iter()
                .zip(cbar)
                .map(|(c, cb)| c.radius.clone().min(&two * cb))
                .collect();
            (m.clone(), m)
        }
        Mode::General36 => (cbar.clone(), cbar.iter().map(|c| &two * c).collect()),
        Mode::Uniform => {
            let l = match inst.uniform_radius() {
                Some(l) => l,
                None if inst.nc() == 0 => Rat::zero(),
                None => {
                    return Err(PmmError::InvalidInstance(vec![
                        "uniform mode requires every client radius to be equal".into(),
                    ]))
                }
            };
            (
                cbar.clone(),
                cbar.iter().map(|c| l.clone().min(&two * c)).collect(),
            )
        }
    })
}

/// Clients sorted by `(phi, index)` must have nondecreasing `lambda`, and
/// equal `phi` must give equal `lambda` so that every tie order works.
pub fn check_compatible(phi: &[Rat], lambda: &[Rat]) -> Result<()> {
    if phi.len() != lambda.len() {
        return Err(PmmError::Incompatible(format!(
            "{} phi values but {} lambda values",
            phi.len(),
            lambda.len()
        )));
    }
    let order = phi_order(phi);
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        let bad = if phi[a] == phi[b] {
            lambda[a] != lambda[b]
        } else {
            lambda[a] > lambda[b]
        };
        if bad {
            return Err(PmmError::Incompatible(format!(
                "clients {a} and {b}: phi {} <= {} but lambda {} vs {}",
                phi[a], phi[b], lambda[a], lambda[b]
            )));
        }
    }
    Ok(())
}

fn phi_order(phi: &[Rat]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| phi[a].cmp(&phi[b]).then(a.cmp(&b)));
    order
}

pub fn run_filter(inst: &Instance, frac: &FracSolution, mode: Mode) -> Result<ClusterOutput> {
    let (phi, lambda) = phi_lambda(inst, frac, mode)?;
    run_filter_with(inst, phi, lambda)
}

/// Filter with caller-supplied tables.
pub fn run_filter_with(inst: &Instance, phi: Vec<Rat>, lambda: Vec<Rat>) -> Result<ClusterOutput> {
    let nc = inst.nc();
    if phi.len() != nc {
        return Err(PmmError::Incompatible(format!("{} phi values for {} clients", phi.len(), nc)));
    }
    check_compatible(&phi, &lambda)?;
    let two = Rat::from_int(2);
    let order = phi_order(&phi);
    let mut covered = vec![false; nc];
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for &j in &order {
        if covered[j] {
            continue;
        }
        let mut kids = Vec::new();
        for &k in &order {
            if !covered[k] && *inst.dcc(j, k) <= &two * &lambda[k] {
                covered[k] = true;
                kids.push(k);
            }
        }
        kids.sort_unstable();
        groups.push((j, kids));
    }
    groups.sort_by_key(|g| g.0);
    let mut center_of = vec![0; nc];
    let mut new_demands = vec![Rat::zero(); nc];
    for (t, (j, kids)) in groups.iter().enumerate() {
        for &k in kids {
            center_of[k] = t;
            new_demands[*j] += &inst.clients[k].demand;
        }
    }
    let (centers, children) = groups.into_iter().unzip();
    Ok(ClusterOutput {
        centers,
        children,
        center_of,
        new_demands,
        phi,
        lambda,
    })
}

/// The instance on the centers alone, carrying the accumulated demands.
pub fn reduce_instance(inst: &Instance, clusters: &ClusterOutput) -> Instance {
    inst.restrict_clients(&clusters.centers, &clusters.center_demands())
}

/// A solution of the reduced instance carried back to every client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackTranslation {
    /// Each client served where its center is served.
    pub routed: IntegralSolution,
    /// Each client served by its nearest open facility.
    pub nearest: IntegralSolution,
}

pub fn translate_back(
    inst: &Instance,
    clusters: &ClusterOutput,
    reduced: &IntegralSolution,
) -> Result<BackTranslation> {
    if reduced.assign.len() != clusters.centers.len() {
        return Err(PmmError::Internal(format!(
            "reduced solution assigns {} of {} centers",
            reduced.assign.len(),
            clusters.centers.len()
        )));
    }
    let assign = clusters
        .center_of
        .iter()
        .map(|&t| reduced.assign[t])
        .collect();
    let routed = IntegralSolution::new(inst, reduced.open.clone(), assign)?;
    let nearest = IntegralSolution::nearest_open(inst, reduced.open.clone())?;
    Ok(BackTranslation { routed, nearest })
}

/// Structural and metric facts about the filter output, plus the cost
/// comparison `COST'(x,y) <= filter_cost * COST(x,y)`.
/// Rows that depend on the mode's factors are skipped when `g` is `None`.
pub fn filter_ledger(inst: &Instance, frac: &FracSolution, clusters: &ClusterOutput, g: Option<&Guarantees>) -> Ledger {
    let mut ledger = Ledger::default();
    let two = Rat::from_int(2);
    let nc = inst.nc();

    let mut seen = vec![0usize; nc];
    for kids in &clusters.children {
        for &k in kids {
            seen[k] += 1;
        }
    }
    ledger.count_zero(
        "filter: children partition the clients",
        seen.iter().filter(|&&c| c != 1).count(),
    );

    let mut order_bad = 0;
    for (t, kids) in clusters.children.iter().enumerate() {
        let j = clusters.centers[t];
        if !kids.contains(&j) {
            order_bad += 1;
        }
        for &k in kids {
            if clusters.phi[j] > clusters.phi[k] || clusters.lambda[j] > clusters.lambda[k] {
                order_bad += 1;
            }
        }
    }
    ledger.count_zero("filter: phi and lambda of a center at most those of its children", order_bad);

    for (t, kids) in clusters.children.iter().enumerate() {
        let j = clusters.centers[t];
        for &k in kids {
            let (cid, kid) = (&inst.clients[j].id, &inst.clients[k].id);
            ledger.le(
                format!("filter: d({cid},{kid}) <= 2 lambda({kid})"),
                inst.dcc(j, k).clone(),
                &two * &clusters.lambda[k],
            );
            if let Some(g) = g {
                ledger.le(
                    format!("filter: d({cid},{kid}) <= {} r({kid})", g.filter_radius),
                    inst.dcc(j, k).clone(),
                    Rat::from_int(g.filter_radius) * &inst.clients[k].radius,
                );
            }
        }
    }

    let mut close_pairs = 0;
    let mut ball_overlaps = 0;
    for (a, &j) in clusters.centers.iter().enumerate() {
        for &j2 in &clusters.centers[a + 1..] {
            let lam = clusters.lambda[j].clone().max(clusters.lambda[j2].clone());
            if *inst.dcc(j, j2) <= &two * &lam {
                close_pairs += 1;
            }
            let shared = (0..inst.nf()).any(|i| {
                inst.dfc(i, j) <= &clusters.lambda[j] && inst.dfc(i, j2) <= &clusters.lambda[j2]
            });
            if shared {
                ball_overlaps += 1;
            }
        }
    }
    ledger.count_zero("filter: centers separated by more than 2 max(lambda)", close_pairs);
    ledger.count_zero("filter: balls B(j, lambda(j)) over centers are disjoint", ball_overlaps);

    if let Some(g) = g {
        let restricted = lp_cost(inst, frac, Some(&clusters.centers), &clusters.new_demands);
        let full = lp_cost(inst, frac, None, &inst.demands());
        ledger.le(
            format!("filter: COST'(x,y) <= {} COST(x,y)", g.filter_cost),
            restricted,
            Rat::from_int(g.filter_cost) * full,
        );
    }
    ledger
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::MatroidSpec;
    use crate::model::tests::{line_instance, r};
    use proptest::prelude::*;

    fn lam(inst: &Instance, values: &[i64]) -> ClusterOutput {
        let t: Vec<Rat> = values.iter().map(|&v| r(v)).collect();
        let phi: Vec<Rat> = (0..inst.nc() as i64).map(r).collect();
        run_filter_with(inst, phi, t).unwrap()
    }

    #[test]
    fn single_client_is_its_own_center() {
        let inst = line_instance(&[(0, 1)], &[(3, 5, 4)], MatroidSpec::uniform(1, 1));
        let out = lam(&inst, &[2]);
        assert_eq!(out.centers, vec![0]);
        assert_eq!(out.new_demands, vec![r(4)]);
    }

    #[test]
    fn colocated_clients_merge() {
        let inst = line_instance(&[(0, 1)], &[(3, 5, 1), (3, 5, 2)], MatroidSpec::uniform(1, 1));
        let out = lam(&inst, &[0, 0]);
        assert_eq!(out.centers, vec![0]);
        assert_eq!(out.children, vec![vec![0, 1]]);
        assert_eq!(out.new_demands, vec![r(3), r(0)]);
    }

    #[test]
    fn hand_run_on_a_line() {
        // Clients at 0, 1, 10 with lambda = 1, swept in index order: the
        // first absorbs the second (1 <= 2), the third stays apart.
        let inst = line_instance(
            &[(0, 0)],
            &[(0, 20, 1), (1, 20, 1), (10, 20, 1)],
            MatroidSpec::uniform(1, 1),
        );
        let out = lam(&inst, &[1, 1, 1]);
        assert_eq!(out.centers, vec![0, 2]);
        assert_eq!(out.children, vec![vec![0, 1], vec![2]]);
        assert_eq!(out.center_of, vec![0, 0, 1]);
        assert_eq!(out.new_demands, vec![r(2), r(0), r(1)]);
    }

    #[test]
    fn zero_lambda_absorbs_only_colocated() {
        let inst = line_instance(&[(0, 0)], &[(0, 5, 1), (0, 5, 1), (1, 5, 1)], MatroidSpec::uniform(1, 1));
        let out = lam(&inst, &[0, 0, 0]);
        assert_eq!(out.centers, vec![0, 2]);
    }

    #[test]
    fn incompatible_tables_are_rejected() {
        let err = check_compatible(&[r(1), r(2)], &[r(3), r(1)]).unwrap_err();
        assert!(matches!(err, PmmError::Incompatible(_)));
        assert!(check_compatible(&[r(1), r(1)], &[r(1), r(2)]).is_err());
        assert!(check_compatible(&[r(2), r(1)], &[r(5), r(1)]).is_ok());
    }

    #[test]
    fn uniform_mode_needs_equal_radii() {
        let inst = line_instance(&[(0, 0)], &[(0, 5, 1), (1, 6, 1)], MatroidSpec::uniform(1, 1));
        let frac = FracSolution::new(&inst, vec![r(1)], vec![vec![(0, r(1))], vec![(0, r(1))]]);
        assert!(matches!(
            run_filter(&inst, &frac, Mode::Uniform),
            Err(PmmError::InvalidInstance(_))
        ));
        assert!(run_filter(&inst, &frac, Mode::General21).is_ok());
    }

    #[test]
    fn reduce_with_every_client_a_center() {
        let inst = line_instance(&[(0, 0)], &[(0, 5, 1), (9, 9, 2)], MatroidSpec::uniform(1, 1));
        let out = lam(&inst, &[0, 0]);
        let reduced = reduce_instance(&inst, &out);
        assert_eq!(reduced, inst);
    }

    #[test]
    fn translate_back_identity_and_colocated() {
        let inst = line_instance(&[(0, 1), (8, 1)], &[(1, 5, 1), (1, 5, 1), (7, 5, 1)], MatroidSpec::uniform(2, 2));
        let out = lam(&inst, &[0, 0, 0]);
        assert_eq!(out.centers, vec![0, 2]);
        let reduced = reduce_instance(&inst, &out);
        let sol = IntegralSolution::new(&reduced, vec![0, 1], vec![0, 1]).unwrap();
        let back = translate_back(&inst, &out, &sol).unwrap();
        assert_eq!(back.routed.assign, vec![0, 0, 1]);
        // The co-located child pays exactly its center's distance.
        assert_eq!(inst.dfc(0, 1), inst.dfc(0, 0));
        assert_eq!(back.routed, back.nearest);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("general".parse::<Mode>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn filter_invariants_hold(
            cpos in proptest::collection::vec(0i64..30, 1..9),
            lam_raw in proptest::collection::vec(0i64..6, 9),
        ) {
            let cli: Vec<(i64, i64, i64)> = cpos.iter().map(|&x| (x, 10, 1)).collect();
            let inst = line_instance(&[(0, 0), (15, 0)], &cli, MatroidSpec::uniform(2, 2));
            // phi = lambda is always compatible.
            let t: Vec<Rat> = lam_raw[..cli.len()].iter().map(|&v| r(v)).collect();
            let out = run_filter_with(&inst, t.clone(), t).unwrap();
            let mut total = Rat::zero();
            for a in &out.new_demands { total += a; }
            prop_assert_eq!(total, r(cli.len() as i64));
            let mut seen = vec![0; cli.len()];
            for (c, kids) in out.centers.iter().zip(&out.children) {
                for &k in kids {
                    seen[k] += 1;
                    prop_assert!(*inst.dcc(*c, k) <= r(2) * &out.lambda[k]);
                    prop_assert!(out.phi[*c] <= out.phi[k]);
                }
            }
            prop_assert!(seen.iter().all(|&s| s == 1));
            for (a, &j) in out.centers.iter().enumerate() {
                for &j2 in &out.centers[a + 1..] {
                    let m = out.lambda[j].clone().max(out.lambda[j2].clone());
                    prop_assert!(*inst.dcc(j, j2) > r(2) * m);
                }
            }
        }
    }
}
