use super::{LinearProgram, MatroidEmbedding, Sense};
use crate::error::{PmmError, Result};
use crate::model::{FracSolution, Instance};
use crate::rat::Rat;

/// The facility-location relaxation of an instance.
#[derive(Debug, Clone)]
pub struct MainLp {
    pub program: LinearProgram,
    /// `y_vars[i]` is the opening variable of facility `i`.
    pub y_vars: Vec<usize>,
    /// Per client, `(facility, variable)` for each facility within its radius.
    pub x_vars: Vec<Vec<(usize, usize)>>,
    pub matroid: MatroidEmbedding,
}

impl MainLp {
    pub fn y_of(&self, point: &[Rat]) -> Vec<Rat> {
        self.y_vars.iter().map(|&v| point[v].clone()).collect()
    }
}

/// Builds: minimize `sum f_i y_i + sum_j sum_i a_j d(i,j) x_ij` subject to
/// `sum_i x_ij >= 1`, `x_ij <= y_i`, `y` in the matroid polytope. Assignment
/// variables exist only for pairs with `d(i,j) <= r_j`.
pub fn build_main_lp(inst: &Instance) -> MainLp {
    let mut program = LinearProgram::new();
    let y_vars: Vec<usize> = inst
        .facilities
        .iter()
        .map(|f| program.add_var(format!("y_{}", f.id), f.cost.clone(), Rat::zero(), None))
        .collect();
    let mut x_vars = Vec::with_capacity(inst.nc());
    for (j, c) in inst.clients.iter().enumerate() {
        let mut row = Vec::new();
        for i in inst.ball(j, &c.radius) {
            let cost = &c.demand * inst.dfc(i, j);
            let v = program.add_var(format!("x_{}_{}", inst.facilities[i].id, c.id), cost, Rat::zero(), None);
            row.push((i, v));
        }
        x_vars.push(row);
    }
    for row in &x_vars {
        program.add_row(
            row.iter().map(|&(_, v)| (v, Rat::one())).collect(),
            Sense::Ge,
            Rat::one(),
        );
    }
    for row in &x_vars {
        for &(i, v) in row {
            program.add_row(vec![(v, Rat::one()), (y_vars[i], -Rat::one())], Sense::Le, Rat::zero());
        }
    }
    let matroid = MatroidEmbedding {
        spec: inst.matroid.clone(),
        vars: y_vars.clone(),
    };
    MainLp {
        program,
        y_vars,
        x_vars,
        matroid,
    }
}

/// The cheapest assignment for a fixed opening vector: each client fills one
/// unit from the facilities within its radius, nearest first.
pub fn assign_from_y(inst: &Instance, y: &[Rat]) -> Result<FracSolution> {
    let mut x = Vec::with_capacity(inst.nc());
    for (j, c) in inst.clients.iter().enumerate() {
        let mut remaining = Rat::one();
        let mut row = Vec::new();
        for i in inst.ball(j, &c.radius) {
            if remaining.is_zero() {
                break;
            }
            if y[i].is_zero() {
                continue;
            }
            let take = y[i].clone().min(remaining.clone());
            remaining -= &take;
            row.push((i, take));
        }
        if !remaining.is_zero() {
            return Err(PmmError::Infeasible(format!(
                "opening vector covers only {} of client `{}` within its radius",
                Rat::one() - remaining,
                c.id
            )));
        }
        x.push(row);
    }
    Ok(FracSolution::new(inst, y.to_vec(), x))
}
