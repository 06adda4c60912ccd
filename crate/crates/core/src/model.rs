//! Instances, fractional and integral solutions, and the cost evaluators
//! shared by every stage.
//!
//! Points are indexed facilities first (`0..nf`) and clients after
//! (`nf..nf + nc`). Tie-breaks that mention "lowest id" throughout the crate
//! refer to these input-order indices.

use std::fmt;

use serde::Serialize;

use crate::error::{PmmError, Result};
use crate::matroid::{MatroidSpec, RankOracle};
use crate::rat::Rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facility {
    pub id: String,
    pub cost: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Client {
    pub id: String,
    pub radius: Rat,
    pub demand: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Metric {
    /// Full distance matrix over all points.
    Matrix(Vec<Vec<Rat>>),
    /// Rational coordinates per point; distance is the L1 norm.
    L1(Vec<Vec<Rat>>),
}

impl Metric {
    pub fn point_count(&self) -> usize {
        match self {
            Metric::Matrix(rows) => rows.len(),
            Metric::L1(points) => points.len(),
        }
    }

    fn distance(&self, p: usize, q: usize) -> Rat {
        match self {
            Metric::Matrix(rows) => rows[p][q].clone(),
            Metric::L1(points) => points[p]
                .iter()
                .zip(&points[q])
                .map(|(a, b)| (a - b).abs())
                .sum(),
        }
    }

    /// Keeps the listed points, in the given order.
    fn restrict(&self, keep: &[usize]) -> Metric {
        match self {
            Metric::Matrix(rows) => Metric::Matrix(
                keep.iter()
                    .map(|&p| keep.iter().map(|&q| rows[p][q].clone()).collect())
                    .collect(),
            ),
            Metric::L1(points) => Metric::L1(keep.iter().map(|&p| points[p].clone()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub facilities: Vec<Facility>,
    pub clients: Vec<Client>,
    pub metric: Metric,
    pub matroid: MatroidSpec,
    dist: Vec<Vec<Rat>>,
}

impl Instance {
    /// Builds an instance and caches all pairwise distances. Malformed metrics
    /// (wrong dimensions) yield an instance whose `validate` reports them.
    pub fn new(
        facilities: Vec<Facility>,
        clients: Vec<Client>,
        metric: Metric,
        matroid: MatroidSpec,
    ) -> Result<Instance> {
        let n = facilities.len() + clients.len();
        let shape_ok = match &metric {
            Metric::Matrix(rows) => rows.len() == n && rows.iter().all(|r| r.len() == n),
            Metric::L1(points) => {
                points.len() == n
                    && points
                        .first()
                        .map(|p0| points.iter().all(|p| p.len() == p0.len()))
                        .unwrap_or(true)
            }
        };
        if !shape_ok {
            return Err(PmmError::InvalidInstance(vec![format!(
                "metric does not cover exactly the {} facility and client points",
                n
            )]));
        }
        let dist = (0..n)
            .map(|p| (0..n).map(|q| metric.distance(p, q)).collect())
            .collect();
        Ok(Instance {
            facilities,
            clients,
            metric,
            matroid,
            dist,
        })
    }

    pub fn nf(&self) -> usize {
        self.facilities.len()
    }

    pub fn nc(&self) -> usize {
        self.clients.len()
    }

    /// Distance between points (facilities first, then clients).
    pub fn d(&self, p: usize, q: usize) -> &Rat {
        &self.dist[p][q]
    }

    /// Facility `i` to client `j`.
    pub fn dfc(&self, i: usize, j: usize) -> &Rat {
        &self.dist[i][self.nf() + j]
    }

    /// Client to client.
    pub fn dcc(&self, j: usize, k: usize) -> &Rat {
        let nf = self.nf();
        &self.dist[nf + j][nf + k]
    }

    pub fn demands(&self) -> Vec<Rat> {
        self.clients.iter().map(|c| c.demand.clone()).collect()
    }

    /// Facilities within `radius` of client `j`, sorted by (distance, index).
    pub fn ball(&self, j: usize, radius: &Rat) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.nf()).filter(|&i| self.dfc(i, j) <= radius).collect();
        out.sort_by(|&a, &b| self.dfc(a, j).cmp(self.dfc(b, j)).then(a.cmp(&b)));
        out
    }

    /// The same facilities, metric and matroid with only the listed clients,
    /// which receive the given demands.
    pub fn restrict_clients(&self, keep: &[usize], demands: &[Rat]) -> Instance {
        let nf = self.nf();
        let mut points: Vec<usize> = (0..nf).collect();
        points.extend(keep.iter().map(|&j| nf + j));
        let clients = keep
            .iter()
            .zip(demands)
            .map(|(&j, a)| Client {
                id: self.clients[j].id.clone(),
                radius: self.clients[j].radius.clone(),
                demand: a.clone(),
            })
            .collect();
        let dist = points
            .iter()
            .map(|&p| points.iter().map(|&q| self.dist[p][q].clone()).collect())
            .collect();
        Instance {
            facilities: self.facilities.clone(),
            clients,
            metric: self.metric.restrict(&points),
            matroid: self.matroid.clone(),
            dist,
        }
    }

    pub fn point_id(&self, p: usize) -> &str {
        if p < self.nf() {
            &self.facilities[p].id
        } else {
            &self.clients[p - self.nf()].id
        }
    }

    pub fn facility_index(&self, id: &str) -> Option<usize> {
        self.facilities.iter().position(|f| f.id == id)
    }

    pub fn client_index(&self, id: &str) -> Option<usize> {
        self.clients.iter().position(|c| c.id == id)
    }

    /// Largest client radius if all radii agree.
    pub fn uniform_radius(&self) -> Option<Rat> {
        let first = self.clients.first()?.radius.clone();
        self.clients
            .iter()
            .all(|c| c.radius == first)
            .then_some(first)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceViolation {
    Triangle { a: String, b: String, c: String },
    Asymmetric { a: String, b: String },
    NegativeDistance { a: String, b: String },
    NonzeroSelfDistance { a: String },
    NegativeValue { what: &'static str, id: String },
    DuplicateId { id: String },
    Matroid(String),
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceViolation::Triangle { a, b, c } => {
                write!(f, "triangle inequality fails: d({a},{c}) > d({a},{b}) + d({b},{c})")
            }
            InstanceViolation::Asymmetric { a, b } => write!(f, "d({a},{b}) != d({b},{a})"),
            InstanceViolation::NegativeDistance { a, b } => write!(f, "d({a},{b}) < 0"),
            InstanceViolation::NonzeroSelfDistance { a } => write!(f, "d({a},{a}) != 0"),
            InstanceViolation::NegativeValue { what, id } => write!(f, "{what} of `{id}` is negative"),
            InstanceViolation::DuplicateId { id } => write!(f, "id `{id}` is used twice"),
            InstanceViolation::Matroid(m) => write!(f, "matroid: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    /// Skip the cubic triangle-inequality check on explicit matrices.
    pub skip_triangle: bool,
}

pub fn validate_instance(inst: &Instance) -> Vec<InstanceViolation> {
    validate_instance_with(inst, ValidateOptions::default())
}

pub fn validate_instance_with(inst: &Instance, opts: ValidateOptions) -> Vec<InstanceViolation> {
    let mut out = Vec::new();
    let n = inst.nf() + inst.nc();
    let mut ids: Vec<&str> = (0..n).map(|p| inst.point_id(p)).collect();
    ids.sort_unstable();
    for w in ids.windows(2) {
        if w[0] == w[1] {
            out.push(InstanceViolation::DuplicateId { id: w[0].to_string() });
        }
    }
    for f in &inst.facilities {
        if f.cost.is_negative() {
            out.push(InstanceViolation::NegativeValue { what: "opening cost", id: f.id.clone() });
        }
    }
    for c in &inst.clients {
        if c.radius.is_negative() {
            out.push(InstanceViolation::NegativeValue { what: "radius", id: c.id.clone() });
        }
        if c.demand.is_negative() {
            out.push(InstanceViolation::NegativeValue { what: "demand", id: c.id.clone() });
        }
    }
    if inst.matroid.ground_size != inst.nf() {
        out.push(InstanceViolation::Matroid(format!(
            "ground set has {} elements but there are {} facilities",
            inst.matroid.ground_size,
            inst.nf()
        )));
    }
    out.extend(inst.matroid.validate().into_iter().map(InstanceViolation::Matroid));
    if let Metric::Matrix(rows) = &inst.metric {
        let id = |p: usize| inst.point_id(p).to_string();
        for p in 0..n {
            if !rows[p][p].is_zero() {
                out.push(InstanceViolation::NonzeroSelfDistance { a: id(p) });
            }
            for q in 0..n {
                if rows[p][q].is_negative() {
                    out.push(InstanceViolation::NegativeDistance { a: id(p), b: id(q) });
                }
                if p < q && rows[p][q] != rows[q][p] {
                    out.push(InstanceViolation::Asymmetric { a: id(p), b: id(q) });
                }
            }
        }
        if !opts.skip_triangle {
            for a in 0..n {
                for c in a + 1..n {
                    for b in 0..n {
                        if b == a || b == c {
                            continue;
                        }
                        if rows[a][c] > &rows[a][b] + &rows[b][c] {
                            out.push(InstanceViolation::Triangle { a: id(a), b: id(b), c: id(c) });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Fractional LP point: opening vector `y`, sparse assignment rows `x[j]`
/// of `(facility, value)` pairs, and per-client connection cost `cbar`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FracSolution {
    pub y: Vec<Rat>,
    pub x: Vec<Vec<(usize, Rat)>>,
    pub cbar: Vec<Rat>,
}

impl FracSolution {
    /// Computes `cbar` from `x`.
    pub fn new(inst: &Instance, y: Vec<Rat>, x: Vec<Vec<(usize, Rat)>>) -> FracSolution {
        let cbar = x
            .iter()
            .enumerate()
            .map(|(j, row)| row.iter().map(|(i, v)| inst.dfc(*i, j) * v).sum())
            .collect();
        FracSolution { y, x, cbar }
    }

    pub fn x_value(&self, i: usize, j: usize) -> Rat {
        self.x[j]
            .iter()
            .find(|(f, _)| *f == i)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(Rat::zero)
    }

    /// Rows for the listed clients only, in that order.
    pub fn restrict(&self, keep: &[usize]) -> FracSolution {
        FracSolution {
            y: self.y.clone(),
            x: keep.iter().map(|&j| self.x[j].clone()).collect(),
            cbar: keep.iter().map(|&j| self.cbar[j].clone()).collect(),
        }
    }

    /// Violated LP constraints, as messages; empty when feasible.
    pub fn check(&self, inst: &Instance) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for (i, y) in self.y.iter().enumerate() {
            if y.is_negative() || *y > Rat::one() {
                out.push(format!("y[{}] = {} outside [0,1]", inst.facilities[i].id, y));
            }
        }
        for (j, row) in self.x.iter().enumerate() {
            let cid = &inst.clients[j].id;
            let total: Rat = row.iter().map(|(_, v)| v).sum();
            if total < Rat::one() {
                out.push(format!("client {cid}: sum of x = {total} < 1"));
            }
            for (i, v) in row {
                let fid = &inst.facilities[*i].id;
                if v.is_negative() || *v > self.y[*i] {
                    out.push(format!("x[{fid},{cid}] = {v} not in [0, y]"));
                }
                if !v.is_zero() && inst.dfc(*i, j) > &inst.clients[j].radius {
                    out.push(format!("x[{fid},{cid}] > 0 beyond the client radius"));
                }
            }
            let cbar: Rat = row.iter().map(|(i, v)| inst.dfc(*i, j) * v).sum();
            if cbar != self.cbar[j] {
                out.push(format!("client {cid}: stored connection cost is stale"));
            }
            if self.cbar[j] > inst.clients[j].radius {
                out.push(format!("client {cid}: connection cost exceeds radius"));
            }
        }
        if let Some(v) = inst.matroid.separate(&self.y)? {
            out.push(format!(
                "y violates matroid row over {:?}: {} > {}",
                v.row.set, v.lhs, v.row.cap
            ));
        }
        Ok(out)
    }
}

/// `sum_i f_i y_i + sum_j demands[j] * cbar_j`, over `restrict_to` clients
/// when given, otherwise over all of them.
pub fn lp_cost(
    inst: &Instance,
    frac: &FracSolution,
    restrict_to: Option<&[usize]>,
    demands: &[Rat],
) -> Rat {
    let opening: Rat = inst
        .facilities
        .iter()
        .zip(&frac.y)
        .map(|(f, y)| &f.cost * y)
        .sum();
    let connection: Rat = match restrict_to {
        Some(set) => set.iter().map(|&j| &demands[j] * &frac.cbar[j]).sum(),
        None => demands.iter().zip(&frac.cbar).map(|(a, c)| a * c).sum(),
    };
    opening + connection
}

/// How far a client is served relative to its radius.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dilation {
    Ratio(Rat),
    /// `r = 0`: satisfied iff served at distance 0.
    ZeroRadius { satisfied: bool },
}

impl Dilation {
    pub fn of(distance: &Rat, radius: &Rat) -> Dilation {
        if radius.is_zero() {
            Dilation::ZeroRadius {
                satisfied: distance.is_zero(),
            }
        } else {
            Dilation::Ratio(distance / radius)
        }
    }

    /// Whether `distance <= factor * radius`.
    pub fn within(&self, factor: &Rat) -> bool {
        match self {
            Dilation::Ratio(r) => r <= factor,
            Dilation::ZeroRadius { satisfied } => *satisfied,
        }
    }
}

/// The largest dilation, or `None` when some zero-radius client is served at
/// positive distance (unbounded).
pub fn max_dilation(dilations: &[Dilation]) -> Option<Rat> {
    let mut best = Rat::zero();
    for d in dilations {
        match d {
            Dilation::Ratio(r) => {
                if *r > best {
                    best = r.clone();
                }
            }
            Dilation::ZeroRadius { satisfied: false } => return None,
            Dilation::ZeroRadius { satisfied: true } => {}
        }
    }
    Some(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub name: String,
    pub lhs: Rat,
    pub rhs: Rat,
    pub relation: Relation,
    pub holds: bool,
}

/// Every inequality asserted during a run, with exact values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Ledger {
    pub entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn le(&mut self, name: impl Into<String>, lhs: Rat, rhs: Rat) -> bool {
        let holds = lhs <= rhs;
        self.entries.push(LedgerEntry {
            name: name.into(),
            lhs,
            rhs,
            relation: Relation::Le,
            holds,
        });
        holds
    }

    pub fn equal(&mut self, name: impl Into<String>, lhs: Rat, rhs: Rat) -> bool {
        let holds = lhs == rhs;
        self.entries.push(LedgerEntry {
            name: name.into(),
            lhs,
            rhs,
            relation: Relation::Eq,
            holds,
        });
        holds
    }

    /// Records a structural check as `violations == 0`.
    pub fn count_zero(&mut self, name: impl Into<String>, violations: usize) -> bool {
        self.equal(name, Rat::from_int(violations as i64), Rat::zero())
    }

    pub fn first_failure(&self) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| !e.holds)
    }

    pub fn all_hold(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn extend(&mut self, other: Ledger) {
        self.entries.extend(other.entries);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralSolution {
    pub open: Vec<usize>,
    pub assign: Vec<usize>,
    pub cost: Rat,
    pub dilation: Vec<Dilation>,
    pub ledger: Ledger,
}

impl IntegralSolution {
    /// Evaluates cost and dilation of `assign` with facilities `open`.
    pub fn new(inst: &Instance, mut open: Vec<usize>, assign: Vec<usize>) -> Result<IntegralSolution> {
        open.sort_unstable();
        open.dedup();
        let cost = cost(inst, &open, &assign)?;
        let dilation = assign
            .iter()
            .enumerate()
            .map(|(j, &i)| Dilation::of(inst.dfc(i, j), &inst.clients[j].radius))
            .collect();
        Ok(IntegralSolution {
            open,
            assign,
            cost,
            dilation,
            ledger: Ledger::default(),
        })
    }

    /// Every client to its nearest open facility (ties: lowest index).
    pub fn nearest_open(inst: &Instance, open: Vec<usize>) -> Result<IntegralSolution> {
        if open.is_empty() && inst.nc() > 0 {
            return Err(PmmError::Internal("no open facility to assign clients to".into()));
        }
        let mut sorted = open.clone();
        sorted.sort_unstable();
        let assign = (0..inst.nc())
            .map(|j| {
                *sorted
                    .iter()
                    .min_by(|&&a, &&b| inst.dfc(a, j).cmp(inst.dfc(b, j)).then(a.cmp(&b)))
                    .expect("nonempty")
            })
            .collect();
        IntegralSolution::new(inst, open, assign)
    }

    pub fn max_dilation(&self) -> Option<Rat> {
        max_dilation(&self.dilation)
    }
}

/// `sum_{i in open} f_i + sum_j a_j d(j, assign(j))`.
pub fn cost(inst: &Instance, open: &[usize], assign: &[usize]) -> Result<Rat> {
    if assign.len() != inst.nc() {
        return Err(PmmError::Internal(format!(
            "assignment covers {} of {} clients",
            assign.len(),
            inst.nc()
        )));
    }
    let mut total = Rat::zero();
    for &i in open {
        let f = inst.facilities.get(i).ok_or_else(|| PmmError::UnknownId {
            kind: "facility",
            id: i.to_string(),
        })?;
        total += &f.cost;
    }
    for (j, &i) in assign.iter().enumerate() {
        if i >= inst.nf() {
            return Err(PmmError::UnknownId {
                kind: "facility",
                id: i.to_string(),
            });
        }
        total += &inst.clients[j].demand * inst.dfc(i, j);
    }
    Ok(total)
}

/// Whether `open` is independent and serves every client within its radius.
pub fn is_feasible_set(inst: &Instance, open: &[usize]) -> bool {
    inst.matroid.is_independent(open)
        && (0..inst.nc()).all(|j| {
            open.iter()
                .any(|&i| inst.dfc(i, j) <= &inst.clients[j].radius)
        })
}
