//! The JSON run report printed by `pmm solve`.

use std::time::Duration;

use pmm_core::model::Ledger;
use pmm_core::pipeline::RunReport;
use pmm_core::Rat;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Approx {
    pub lp_value: f64,
    pub cost: f64,
    pub cost_ratio: Option<f64>,
    pub max_dilation: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ReportDoc<'a> {
    pub mode: &'static str,
    pub lp_value: &'a Rat,
    /// `COST'(x,y)`.
    pub cost_filtered: &'a Rat,
    pub t_yprime: &'a Rat,
    pub t_yhat: &'a Rat,
    pub h_yhat_prime: &'a Rat,
    pub h_ytilde: &'a Rat,
    /// `COST'(xtilde,ytilde)`.
    pub cost_reduced: &'a Rat,
    pub routed_cost: &'a Rat,
    pub cost: &'a Rat,
    pub cost_ratio: Option<Rat>,
    /// `null` when a zero-radius client is served at positive distance.
    pub max_dilation: Option<Rat>,
    pub centers: usize,
    pub lp_cuts: usize,
    pub ledger_holds: bool,
    pub first_failure: Option<&'a str>,
    pub ledger: &'a Ledger,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub approx: Option<Approx>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

impl<'a> ReportDoc<'a> {
    pub fn new(rep: &'a RunReport, decimal: bool, elapsed: Option<Duration>) -> ReportDoc<'a> {
        let cost_ratio = rep.cost_ratio();
        let max_dilation = rep.max_dilation();
        let approx = decimal.then(|| Approx {
            lp_value: rep.lp_value.to_f64(),
            cost: rep.solution.cost.to_f64(),
            cost_ratio: cost_ratio.as_ref().map(Rat::to_f64),
            max_dilation: max_dilation.as_ref().map(Rat::to_f64),
        });
        ReportDoc {
            mode: rep.mode.map_or("custom", |m| m.as_str()),
            lp_value: &rep.lp_value,
            cost_filtered: &rep.cost_filtered,
            t_yprime: &rep.t_yprime,
            t_yhat: &rep.t_yhat,
            h_yhat_prime: &rep.h_yhat_prime,
            h_ytilde: &rep.h_ytilde,
            cost_reduced: &rep.cost_reduced,
            routed_cost: &rep.routed.cost,
            cost: &rep.solution.cost,
            cost_ratio,
            max_dilation,
            centers: rep.clusters.centers.len(),
            lp_cuts: rep.lp_cuts,
            ledger_holds: rep.ledger.all_hold(),
            first_failure: rep.ledger.first_failure().map(|e| e.name.as_str()),
            ledger: &rep.ledger,
            approx,
            seconds: elapsed.map(|d| d.as_secs_f64()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
