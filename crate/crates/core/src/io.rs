//! JSON formats for instances and solutions, and independent verification
//! of a solution file against its instance.

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{PmmError, Result};
use crate::matroid::{indicator, MatroidKind, MatroidSpec, RankOracle};
use crate::model::{max_dilation, Client, Dilation, Facility, Instance, IntegralSolution, Ledger, Metric};
use crate::rat::Rat;

/// Whether the generator confirmed the instance feasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeasibleTag {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FacilityDoc {
    id: String,
    cost: Rat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ClientDoc {
    id: String,
    radius: Rat,
    #[serde(default = "Rat::one")]
    demand: Rat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum MetricDoc {
    /// Rows in point order: facilities, then clients, unless `ids` says otherwise.
    Matrix {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ids: Option<Vec<String>>,
        rows: Vec<Vec<Rat>>,
    },
    L1 { points: BTreeMap<String, Vec<Rat>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum MatroidDoc {
    Uniform { k: usize },
    Partition { parts: Vec<Vec<String>>, caps: Vec<usize> },
    Laminar { sets: Vec<Vec<String>>, caps: Vec<usize> },
    Graphic { vertices: usize, edges: BTreeMap<String, [usize; 2]> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceDoc {
    facilities: Vec<FacilityDoc>,
    clients: Vec<ClientDoc>,
    metric: MetricDoc,
    matroid: MatroidDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feasible: Option<FeasibleTag>,
}

fn unknown(kind: &'static str, id: &str) -> PmmError {
    PmmError::UnknownId { kind, id: id.to_string() }
}

fn facility_indices(facilities: &[Facility], ids: &[String]) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| facilities.iter().position(|f| &f.id == id).ok_or_else(|| unknown("facility", id)))
        .collect()
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_tagged(text).map(|(inst, _)| inst)
}

pub fn parse_instance_tagged(text: &str) -> Result<(Instance, Option<FeasibleTag>)> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    let facilities: Vec<Facility> = doc
        .facilities
        .into_iter()
        .map(|f| Facility { id: f.id, cost: f.cost })
        .collect();
    let clients: Vec<Client> = doc
        .clients
        .into_iter()
        .map(|c| Client { id: c.id, radius: c.radius, demand: c.demand })
        .collect();
    let point_ids: Vec<&str> = facilities
        .iter()
        .map(|f| f.id.as_str())
        .chain(clients.iter().map(|c| c.id.as_str()))
        .collect();
    let n = point_ids.len();
    let metric = match doc.metric {
        MetricDoc::Matrix { ids: None, rows } => Metric::Matrix(rows),
        MetricDoc::Matrix { ids: Some(ids), rows } => {
            if ids.len() != rows.len() {
                return Err(PmmError::Parse(format!("matrix has {} rows but {} ids", rows.len(), ids.len())));
            }
            let pos: Vec<usize> = point_ids
                .iter()
                .map(|p| ids.iter().position(|x| x == p).ok_or_else(|| unknown("point", p)))
                .collect::<Result<_>>()?;
            if rows.iter().any(|r| r.len() != ids.len()) {
                return Err(PmmError::Parse("matrix is not square".into()));
            }
            Metric::Matrix(pos.iter().map(|&p| pos.iter().map(|&q| rows[p][q].clone()).collect()).collect())
        }
        MetricDoc::L1 { mut points } => {
            let mut out = Vec::with_capacity(n);
            for p in &point_ids {
                out.push(points.remove(*p).ok_or_else(|| unknown("point", p))?);
            }
            if let Some(extra) = points.keys().next() {
                return Err(unknown("point", extra));
            }
            Metric::L1(out)
        }
    };
    let nf = facilities.len();
    let matroid = match doc.matroid {
        MatroidDoc::Uniform { k } => MatroidSpec::uniform(nf, k),
        MatroidDoc::Partition { parts, caps } => {
            let parts = parts.iter().map(|p| facility_indices(&facilities, p)).collect::<Result<_>>()?;
            MatroidSpec::partition(parts, caps)
        }
        MatroidDoc::Laminar { sets, caps } => {
            let sets = sets.iter().map(|s| facility_indices(&facilities, s)).collect::<Result<_>>()?;
            MatroidSpec::laminar(nf, sets, caps)
        }
        MatroidDoc::Graphic { vertices, mut edges } => {
            let mut list = Vec::with_capacity(nf);
            for f in &facilities {
                let [u, v] = edges
                    .remove(&f.id)
                    .ok_or_else(|| PmmError::Parse(format!("graphic matroid has no edge for facility `{}`", f.id)))?;
                list.push((u, v));
            }
            if let Some(extra) = edges.keys().next() {
                return Err(unknown("facility", extra));
            }
            MatroidSpec::graphic(vertices, list)
        }
    };
    Ok((Instance::new(facilities, clients, metric, matroid)?, doc.feasible))
}

fn ids_of(inst: &Instance, set: &[usize]) -> Vec<String> {
    set.iter().map(|&i| inst.facilities[i].id.clone()).collect()
}

pub fn instance_to_json(inst: &Instance, feasible: Option<FeasibleTag>) -> String {
    let metric = match &inst.metric {
        Metric::Matrix(rows) => MetricDoc::Matrix { ids: None, rows: rows.clone() },
        Metric::L1(points) => MetricDoc::L1 {
            points: points
                .iter()
                .enumerate()
                .map(|(p, x)| (inst.point_id(p).to_string(), x.clone()))
                .collect(),
        },
    };
    let matroid = match &inst.matroid.kind {
        MatroidKind::Uniform { k } => MatroidDoc::Uniform { k: *k },
        MatroidKind::Partition { parts, caps } => MatroidDoc::Partition {
            parts: parts.iter().map(|p| ids_of(inst, p)).collect(),
            caps: caps.clone(),
        },
        MatroidKind::Laminar { sets, caps } => MatroidDoc::Laminar {
            sets: sets.iter().map(|s| ids_of(inst, s)).collect(),
            caps: caps.clone(),
        },
        MatroidKind::Graphic { vertices, edges } => MatroidDoc::Graphic {
            vertices: *vertices,
            edges: edges
                .iter()
                .enumerate()
                .map(|(e, &(u, v))| (inst.facilities[e].id.clone(), [u, v]))
                .collect(),
        },
    };
    let doc = InstanceDoc {
        facilities: inst
            .facilities
            .iter()
            .map(|f| FacilityDoc { id: f.id.clone(), cost: f.cost.clone() })
            .collect(),
        clients: inst
            .clients
            .iter()
            .map(|c| ClientDoc { id: c.id.clone(), radius: c.radius.clone(), demand: c.demand.clone() })
            .collect(),
        metric,
        matroid,
        feasible,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("instance serializes");
    s.push('\n');
    s
}

/// Client-to-facility map serialized in client input order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment(pub Vec<(String, String)>);

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (c, f) in &self.0 {
            m.serialize_entry(c, f)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = BTreeMap::<String, String>::deserialize(d)?;
        Ok(Assignment(m.into_iter().collect()))
    }
}

/// A ledger row as stored in a solution file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub name: String,
    pub lhs: Rat,
    pub rhs: Rat,
    pub relation: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub open: Vec<String>,
    pub assign: Assignment,
    pub cost: Rat,
    /// `None` when some zero-radius client is served at positive distance.
    pub max_dilation: Option<Rat>,
    #[serde(default)]
    pub ledger: Vec<LedgerRow>,
}

fn ledger_rows(ledger: &Ledger) -> Vec<LedgerRow> {
    let v = serde_json::to_value(ledger).expect("ledger serializes");
    serde_json::from_value(v).expect("ledger rows round-trip")
}

impl SolutionDoc {
    pub fn from_solution(inst: &Instance, sol: &IntegralSolution, mode: Option<&str>) -> SolutionDoc {
        SolutionDoc {
            mode: mode.map(str::to_string),
            open: ids_of(inst, &sol.open),
            assign: Assignment(
                sol.assign
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| (inst.clients[j].id.clone(), inst.facilities[i].id.clone()))
                    .collect(),
            ),
            cost: sol.cost.clone(),
            max_dilation: sol.max_dilation(),
            ledger: ledger_rows(&sol.ledger),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<SolutionDoc> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One disagreement between a solution file and a recomputation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub field: String,
    pub detail: String,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.detail)
    }
}

/// Recomputes independence, assignment validity, cost, dilation and each
/// stored ledger row, and lists every disagreement with the file.
pub fn verify_solution(inst: &Instance, doc: &SolutionDoc) -> Vec<Mismatch> {
    let mut out = Vec::new();
    let mut miss = |field: &str, detail: String| out.push(Mismatch { field: field.to_string(), detail });

    let mut open = Vec::new();
    for id in &doc.open {
        match inst.facility_index(id) {
            Some(i) if open.contains(&i) => miss("open", format!("facility `{id}` listed twice")),
            Some(i) => open.push(i),
            None => miss("open", format!("unknown facility `{id}`")),
        }
    }
    if !inst.matroid.is_independent(&open) {
        let detail = match inst.matroid.separate(&indicator(inst.nf(), &open)) {
            Ok(Some(v)) => format!(
                "open set is dependent: rank row {{{}}} allows {} but {} are open",
                ids_of(inst, &v.row.set).join(","),
                v.row.cap,
                v.lhs
            ),
            _ => "open set is dependent".to_string(),
        };
        miss("open", detail);
    }

    let mut assign = vec![None; inst.nc()];
    for (c, f) in &doc.assign.0 {
        let Some(j) = inst.client_index(c) else {
            miss("assign", format!("unknown client `{c}`"));
            continue;
        };
        match inst.facility_index(f) {
            Some(i) if open.contains(&i) => assign[j] = Some(i),
            Some(_) => miss("assign", format!("client `{c}` is assigned to closed facility `{f}`")),
            None => miss("assign", format!("unknown facility `{f}`")),
        }
    }
    for (j, a) in assign.iter().enumerate() {
        if a.is_none() && !doc.assign.0.iter().any(|(c, _)| c == &inst.clients[j].id) {
            miss("assign", format!("client `{}` is unassigned", inst.clients[j].id));
        }
    }

    if let Some(assign) = assign.iter().copied().collect::<Option<Vec<usize>>>() {
        match crate::model::cost(inst, &open, &assign) {
            Ok(c) if c != doc.cost => miss("cost", format!("file says {} but recomputed {}", doc.cost, c)),
            Ok(_) => {}
            Err(e) => miss("cost", e.to_string()),
        }
        let dil: Vec<Dilation> = assign
            .iter()
            .enumerate()
            .map(|(j, &i)| Dilation::of(inst.dfc(i, j), &inst.clients[j].radius))
            .collect();
        let md = max_dilation(&dil);
        if md != doc.max_dilation {
            let show = |x: &Option<Rat>| x.as_ref().map_or("unbounded".to_string(), Rat::to_string);
            miss(
                "max_dilation",
                format!("file says {} but recomputed {}", show(&doc.max_dilation), show(&md)),
            );
        }
    }

    for row in &doc.ledger {
        let holds = match row.relation.as_str() {
            "<=" => row.lhs <= row.rhs,
            "==" => row.lhs == row.rhs,
            other => {
                miss("ledger", format!("row `{}` has unknown relation `{other}`", row.name));
                continue;
            }
        };
        if holds != row.holds {
            miss("ledger", format!("row `{}` claims holds={} but {} {} {} is {}", row.name, row.holds, row.lhs, row.relation, row.rhs, holds));
        } else if !holds {
            miss("ledger", format!("row `{}` fails: {} {} {}", row.name, row.lhs, row.relation, row.rhs));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
      "facilities": [{"id": "A", "cost": "0"}, {"id": "B", "cost": 10}],
      "clients": [{"id": "c", "radius": "5"}],
      "metric": {"kind": "matrix", "ids": ["c", "A", "B"],
                 "rows": [["0", "5", "1"], ["5", "0", "4.5"], ["1", "4.5", "0"]]},
      "matroid": {"type": "uniform", "k": 1}
    }"#;

    #[test]
    fn matrix_with_ids_is_reordered() {
        let inst = parse_instance(SAMPLE).unwrap();
        assert_eq!(inst.dfc(0, 0), &Rat::from_int(5));
        assert_eq!(inst.dfc(1, 0), &Rat::one());
        assert_eq!(inst.d(0, 1), &Rat::new(9, 2));
        assert_eq!(inst.clients[0].demand, Rat::one());
    }

    #[test]
    fn instance_round_trip() {
        let inst = parse_instance(SAMPLE).unwrap();
        let text = instance_to_json(&inst, Some(FeasibleTag::Yes));
        let (back, tag) = parse_instance_tagged(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(tag, Some(FeasibleTag::Yes));
    }

    #[test]
    fn l1_partition_and_graphic() {
        let text = r#"{
          "facilities": [{"id": "a", "cost": "1/2"}, {"id": "b", "cost": 1}, {"id": "e", "cost": 2}],
          "clients": [{"id": "x", "radius": 3, "demand": "3/2"}],
          "metric": {"kind": "l1", "points": {"a": [0, 0], "b": [1, 2], "e": ["1/2", 0], "x": [2, 2]}},
          "matroid": {"type": "partition", "parts": [["a", "e"], ["b"]], "caps": [1, 1]}
        }"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.dfc(0, 0), &Rat::from_int(4));
        assert_eq!(inst.matroid, MatroidSpec::partition(vec![vec![0, 2], vec![1]], vec![1, 1]));
        assert_eq!(parse_instance(&instance_to_json(&inst, None)).unwrap(), inst);

        let g = text.replace(
            r#"{"type": "partition", "parts": [["a", "e"], ["b"]], "caps": [1, 1]}"#,
            r#"{"type": "graphic", "vertices": 3, "edges": {"a": [0, 1], "b": [1, 2], "e": [0, 2]}}"#,
        );
        let inst = parse_instance(&g).unwrap();
        assert_eq!(inst.matroid, MatroidSpec::graphic(3, vec![(0, 1), (1, 2), (0, 2)]));
    }

    #[test]
    fn unknown_ids_are_reported() {
        let bad = SAMPLE.replace("\"ids\": [\"c\"", "\"ids\": [\"z\"");
        assert!(matches!(parse_instance(&bad), Err(PmmError::UnknownId { .. })));
        assert!(matches!(parse_instance("{"), Err(PmmError::Parse(_))));
    }

    #[test]
    fn verify_catches_tampering() {
        let inst = parse_instance(SAMPLE).unwrap();
        let sol = IntegralSolution::nearest_open(&inst, vec![0]).unwrap();
        let doc = SolutionDoc::from_solution(&inst, &sol, None);
        assert!(verify_solution(&inst, &doc).is_empty());
        assert_eq!(SolutionDoc::parse(&doc.to_json()).unwrap(), doc);

        let mut t = doc.clone();
        t.cost = Rat::from_int(4);
        assert_eq!(verify_solution(&inst, &t)[0].field, "cost");

        let mut t = doc.clone();
        t.open.push("B".into());
        let m = verify_solution(&inst, &t);
        assert_eq!(m[0].field, "open");
        assert!(m[0].detail.contains("rank row {A,B} allows 1"), "{}", m[0].detail);
    }
}
