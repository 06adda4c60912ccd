//! End-to-end run: LP relaxation, filter, both rounding stages, and the
//! translation back to the original clients, with the full ledger.

use crate::error::{PmmError, Result};
use crate::filter::{
    filter_ledger, phi_lambda, reduce_instance, run_filter_with, translate_back, ClusterOutput, Guarantees, Mode,
};
use crate::lp::{assign_from_y, build_main_lp, solve_over_matroid, CuttingPlaneRun, LpStatus, MainLp};
use crate::matroid::RankOracle;
use crate::model::{lp_cost, validate_instance, FracSolution, Instance, IntegralSolution, Ledger};
use crate::rat::Rat;
use crate::stage_three::{run_stage_three, stage_three_ledger, StageThree};
use crate::stage_two::{run_stage_two, stage_two_ledger, StageTwo};

/// The solved relaxation, shared by every mode.
#[derive(Debug, Clone)]
pub struct LpStage {
    pub main: MainLp,
    pub run: CuttingPlaneRun,
    /// `y` from the optimum with `x` recomputed nearest-first.
    pub frac: FracSolution,
    pub value: Rat,
}

pub fn solve_relaxation(inst: &Instance) -> Result<LpStage> {
    let main = build_main_lp(inst);
    let run = solve_over_matroid(&main.program, std::slice::from_ref(&main.matroid))?;
    match run.result.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(PmmError::Infeasible(
                "the LP relaxation is infeasible, so no independent set serves every client within its radius"
                    .into(),
            ))
        }
        LpStatus::Unbounded => return Err(PmmError::Internal("the LP relaxation is unbounded".into())),
    }
    let y = main.y_of(&run.result.point);
    let frac = assign_from_y(inst, &y).map_err(|e| PmmError::Internal(format!("LP optimum: {e}")))?;
    let value = run.result.value.clone();
    Ok(LpStage { main, run, frac, value })
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// `None` for caller-supplied `(phi, lambda)` tables.
    pub mode: Option<Mode>,
    pub lp_value: Rat,
    /// `COST'(x,y)`.
    pub cost_filtered: Rat,
    pub t_yprime: Rat,
    pub t_yhat: Rat,
    pub h_yhat_prime: Rat,
    pub h_ytilde: Rat,
    /// `COST'(xtilde, ytilde)`.
    pub cost_reduced: Rat,
    /// Each client served where its center is served.
    pub routed: IntegralSolution,
    /// The returned solution: every client at its nearest open facility.
    pub solution: IntegralSolution,
    pub ledger: Ledger,
    pub clusters: ClusterOutput,
    pub reduced: Instance,
    pub stage_two: StageTwo,
    pub stage_three: StageThree,
    pub lp_cuts: usize,
}

impl RunReport {
    /// Final cost over LP value; `None` when the LP value is zero.
    pub fn cost_ratio(&self) -> Option<Rat> {
        (!self.lp_value.is_zero()).then(|| &self.solution.cost / &self.lp_value)
    }

    pub fn max_dilation(&self) -> Option<Rat> {
        self.solution.max_dilation()
    }
}

fn check_valid(inst: &Instance) -> Result<()> {
    let v = validate_instance(inst);
    if v.is_empty() {
        Ok(())
    } else {
        Err(PmmError::InvalidInstance(v.iter().map(|x| x.to_string()).collect()))
    }
}

/// Validates, solves the relaxation and runs `mode`.
pub fn run(inst: &Instance, mode: Mode) -> Result<RunReport> {
    check_valid(inst)?;
    let lp = solve_relaxation(inst)?;
    run_with_lp(inst, &lp, mode)
}

pub fn run_with_lp(inst: &Instance, lp: &LpStage, mode: Mode) -> Result<RunReport> {
    let (phi, lambda) = phi_lambda(inst, &lp.frac, mode)?;
    let g = mode.guarantees();
    let mut report = run_tables(inst, lp, phi, lambda, Some(&g))?;
    report.mode = Some(mode);
    Ok(report)
}

/// Runs with caller-supplied tables. Only mode-independent rows enter the
/// ledger; no radius or cost factor is claimed.
pub fn run_with_tables(inst: &Instance, lp: &LpStage, phi: Vec<Rat>, lambda: Vec<Rat>) -> Result<RunReport> {
    run_tables(inst, lp, phi, lambda, None)
}

fn run_tables(
    inst: &Instance,
    lp: &LpStage,
    phi: Vec<Rat>,
    lambda: Vec<Rat>,
    g: Option<&Guarantees>,
) -> Result<RunReport> {
    let frac = &lp.frac;
    let mut ledger = Ledger::default();
    ledger.count_zero("lp: optimum is a vertex", usize::from(!lp.run.result.is_vertex));
    ledger.count_zero("lp: (x,y) satisfies every LP row", frac.check(inst)?.len());
    let cost_xy = lp_cost(inst, frac, None, &inst.demands());
    ledger.equal("lp: COST(x,y) = LP value", cost_xy.clone(), lp.value.clone());

    let clusters = run_filter_with(inst, phi, lambda)?;
    ledger.extend(filter_ledger(inst, frac, &clusters, g));
    let red = reduce_instance(inst, &clusters);
    let red_frac = frac.restrict(&clusters.centers);
    let cost_filtered = lp_cost(&red, &red_frac, None, &red.demands());

    let two = run_stage_two(&red, &red_frac, &clusters.center_lambda())?;
    ledger.extend(stage_two_ledger(inst, &clusters, &red, &red_frac, &two, g)?);
    let three = run_stage_three(&red, &two.half)?;
    ledger.extend(stage_three_ledger(inst, &clusters, &red, &two.half, &two.q.value, &three, g)?);

    let back = translate_back(inst, &clusters, &three.solution)?;
    let four = Rat::from_int(4);
    ledger.le(
        "final: center-routed assignment cost <= COST'(xtilde,ytilde) + 4 COST(x,y)",
        back.routed.cost.clone(),
        &three.solution.cost + &four * &cost_xy,
    );
    ledger.le(
        "final: nearest-open cost <= center-routed assignment cost",
        back.nearest.cost.clone(),
        back.routed.cost.clone(),
    );
    ledger.count_zero(
        "final: open set independent",
        usize::from(!inst.matroid.is_independent(&back.nearest.open)),
    );
    if let Some(g) = g {
        ledger.le(
            format!("final: cost <= {} LP", g.final_cost),
            back.nearest.cost.clone(),
            Rat::from_int(g.final_cost) * &lp.value,
        );
        let factor = Rat::from_int(g.radius);
        for (k, c) in inst.clients.iter().enumerate() {
            let bound = &factor * &c.radius;
            ledger.le(
                format!("final: d({}, routed facility) <= {} r({})", c.id, g.radius, c.id),
                inst.dfc(back.routed.assign[k], k).clone(),
                bound.clone(),
            );
            ledger.le(
                format!("final: d({}, S) <= {} r({})", c.id, g.radius, c.id),
                inst.dfc(back.nearest.assign[k], k).clone(),
                bound,
            );
        }
    }

    let mut solution = back.nearest;
    solution.ledger = ledger.clone();
    Ok(RunReport {
        mode: None,
        lp_value: lp.value.clone(),
        cost_filtered,
        t_yprime: two.t_yprime.clone(),
        t_yhat: two.q.value.clone(),
        h_yhat_prime: three.h_yhat_prime.clone(),
        h_ytilde: three.r.value.clone(),
        cost_reduced: three.solution.cost.clone(),
        routed: back.routed,
        solution,
        ledger,
        clusters,
        reduced: red,
        stage_two: two,
        stage_three: three,
        lp_cuts: lp.run.cuts,
    })
}
