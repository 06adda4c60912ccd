//! Matroids over the facility set: rank, independence, and separation over
//! the matroid polytope `{v >= 0 : v(T) <= rank(T) for all T}`.
//!
//! Ground elements are facility indices `0..ground_size`. Uniform, partition
//! and laminar matroids expose their polytope as an explicit list of rows;
//! graphic matroids are separated by enumerating subsets, which is exact up to
//! [`DEFAULT_ENUMERATION_CAP`] elements.

use std::cmp::Ordering;

use crate::error::PmmError;
use crate::rat::Rat;

pub const DEFAULT_ENUMERATION_CAP: usize = 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatroidKind {
    /// Independent iff at most `k` elements.
    Uniform { k: usize },
    /// `parts` partition the ground set; at most `caps[t]` elements of part `t`.
    Partition { parts: Vec<Vec<usize>>, caps: Vec<usize> },
    /// At most `caps[t]` elements of `sets[t]`; the sets form a laminar family.
    Laminar { sets: Vec<Vec<usize>>, caps: Vec<usize> },
    /// Element `e` is the edge `edges[e]`; independent iff acyclic.
    Graphic { vertices: usize, edges: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatroidSpec {
    pub ground_size: usize,
    pub kind: MatroidKind,
}

/// A row `v(set) <= cap` of the matroid polytope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankRow {
    pub set: Vec<usize>,
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolytopeConstraints {
    /// Exactly the matroid polytope, together with `0 <= v`.
    Explicit(Vec<RankRow>),
    /// Separated by subset enumeration up to `cap` ground elements.
    OracleSeparated { cap: usize },
}

/// A violated polytope row found by [`MatroidSpec::separate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub row: RankRow,
    pub lhs: Rat,
}

impl Violation {
    pub fn excess(&self) -> Rat {
        &self.lhs - Rat::from_int(self.row.cap as i64)
    }
}

/// Rank and independence queries.
pub trait RankOracle {
    fn ground_size(&self) -> usize;
    fn rank(&self, set: &[usize]) -> usize;
    fn is_independent(&self, set: &[usize]) -> bool {
        let mut s = set.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len() == set.len() && self.rank(set) == set.len()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

impl MatroidSpec {
    pub fn uniform(ground_size: usize, k: usize) -> Self {
        MatroidSpec {
            ground_size,
            kind: MatroidKind::Uniform { k },
        }
    }

    pub fn partition(parts: Vec<Vec<usize>>, caps: Vec<usize>) -> Self {
        let ground_size = parts.iter().map(Vec::len).sum();
        MatroidSpec {
            ground_size,
            kind: MatroidKind::Partition { parts, caps },
        }
    }

    pub fn laminar(ground_size: usize, sets: Vec<Vec<usize>>, caps: Vec<usize>) -> Self {
        MatroidSpec {
            ground_size,
            kind: MatroidKind::Laminar { sets, caps },
        }
    }

    pub fn graphic(vertices: usize, edges: Vec<(usize, usize)>) -> Self {
        MatroidSpec {
            ground_size: edges.len(),
            kind: MatroidKind::Graphic { vertices, edges },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            MatroidKind::Uniform { .. } => "uniform",
            MatroidKind::Partition { .. } => "partition",
            MatroidKind::Laminar { .. } => "laminar",
            MatroidKind::Graphic { .. } => "graphic",
        }
    }

    /// Structural problems with the specification, as human-readable strings.
    pub fn validate(&self) -> Vec<String> {
        let n = self.ground_size;
        let mut out = Vec::new();
        let check_ids = |sets: &[Vec<usize>], what: &str, out: &mut Vec<String>| {
            for (t, s) in sets.iter().enumerate() {
                for &e in s {
                    if e >= n {
                        out.push(format!("{} {} references unknown element {}", what, t, e));
                    }
                }
                let mut sorted = s.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != s.len() {
                    out.push(format!("{} {} lists an element twice", what, t));
                }
            }
        };
        match &self.kind {
            MatroidKind::Uniform { .. } => {}
            MatroidKind::Partition { parts, caps } => {
                if parts.len() != caps.len() {
                    out.push(format!(
                        "partition has {} parts but {} caps",
                        parts.len(),
                        caps.len()
                    ));
                }
                check_ids(parts, "part", &mut out);
                let mut seen = vec![0usize; n];
                for p in parts {
                    for &e in p {
                        if e < n {
                            seen[e] += 1;
                        }
                    }
                }
                for (e, &c) in seen.iter().enumerate() {
                    if c == 0 {
                        out.push(format!("element {} is not covered by any part", e));
                    } else if c > 1 {
                        out.push(format!("element {} lies in {} parts", e, c));
                    }
                }
            }
            MatroidKind::Laminar { sets, caps } => {
                if sets.len() != caps.len() {
                    out.push(format!(
                        "laminar family has {} sets but {} caps",
                        sets.len(),
                        caps.len()
                    ));
                }
                check_ids(sets, "set", &mut out);
                for a in 0..sets.len() {
                    for b in a + 1..sets.len() {
                        let inter = sets[a].iter().filter(|e| sets[b].contains(e)).count();
                        if inter != 0 && inter != sets[a].len() && inter != sets[b].len() {
                            out.push(format!("sets {} and {} cross", a, b));
                        }
                    }
                }
            }
            MatroidKind::Graphic { vertices, edges } => {
                for (e, &(u, v)) in edges.iter().enumerate() {
                    if u >= *vertices || v >= *vertices {
                        out.push(format!("edge {} references a vertex >= {}", e, vertices));
                    }
                }
            }
        }
        out
    }

    /// Rows describing the polytope, or the oracle fallback.
    pub fn polytope(&self) -> PolytopeConstraints {
        let n = self.ground_size;
        let unit_rows = (0..n).map(|e| RankRow { set: vec![e], cap: 1 });
        match &self.kind {
            MatroidKind::Uniform { k } => {
                let mut rows: Vec<RankRow> = Vec::new();
                if *k < n {
                    rows.push(RankRow {
                        set: (0..n).collect(),
                        cap: *k,
                    });
                }
                rows.extend((0..n).map(|e| RankRow {
                    set: vec![e],
                    cap: (*k).min(1),
                }));
                PolytopeConstraints::Explicit(rows)
            }
            MatroidKind::Partition { parts, caps } | MatroidKind::Laminar { sets: parts, caps } => {
                // rank(set) <= cap, and the tighter value keeps rows equal to
                // (T, rank(T)) pairs.
                let mut rows: Vec<RankRow> = parts
                    .iter()
                    .zip(caps)
                    .map(|(p, &c)| {
                        let mut set = p.clone();
                        set.sort_unstable();
                        let cap = c.min(self.rank(&set));
                        RankRow { set, cap }
                    })
                    .collect();
                rows.extend(unit_rows);
                PolytopeConstraints::Explicit(rows)
            }
            MatroidKind::Graphic { .. } => PolytopeConstraints::OracleSeparated {
                cap: DEFAULT_ENUMERATION_CAP,
            },
        }
    }

    /// Finds the most violated polytope row at `v`, or `None` if `v` lies in
    /// the matroid polytope (assuming `v >= 0`).
    ///
    /// Ties on the violation amount go to the smaller set, then to the
    /// lexicographically smaller sorted element list.
    pub fn separate(&self, v: &[Rat]) -> Result<Option<Violation>, PmmError> {
        self.separate_with_cap(v, DEFAULT_ENUMERATION_CAP)
    }

    pub fn separate_with_cap(&self, v: &[Rat], cap: usize) -> Result<Option<Violation>, PmmError> {
        assert_eq!(v.len(), self.ground_size, "vector length != ground size");
        let mut best: Option<Violation> = None;
        let mut consider = |set: Vec<usize>, rank: usize, lhs: Rat| {
            let rank_q = Rat::from_int(rank as i64);
            if lhs <= rank_q {
                return;
            }
            let cand = Violation {
                row: RankRow { set, cap: rank },
                lhs,
            };
            let better = match &best {
                None => true,
                Some(b) => match cand.excess().cmp(&b.excess()) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => {
                        (cand.row.set.len(), &cand.row.set) < (b.row.set.len(), &b.row.set)
                    }
                },
            };
            if better {
                best = Some(cand);
            }
        };
        match self.polytope() {
            PolytopeConstraints::Explicit(rows) => {
                for row in rows {
                    let lhs: Rat = row.set.iter().map(|&e| &v[e]).sum();
                    consider(row.set, row.cap, lhs);
                }
            }
            PolytopeConstraints::OracleSeparated { .. } => {
                let n = self.ground_size;
                if n > cap {
                    return Err(PmmError::EnumerationCap {
                        what: "matroid separation",
                        size: n,
                        cap,
                    });
                }
                for mask in 1u64..(1u64 << n) {
                    let set: Vec<usize> = (0..n).filter(|&e| mask >> e & 1 == 1).collect();
                    let lhs: Rat = set.iter().map(|&e| &v[e]).sum();
                    if lhs <= Rat::zero() {
                        continue;
                    }
                    let r = self.rank(&set);
                    consider(set, r, lhs);
                }
            }
        }
        Ok(best)
    }

    fn independent_incremental(&self) -> IncrementalIndependence<'_> {
        let state = match &self.kind {
            MatroidKind::Uniform { .. } => IncState::Count(0),
            MatroidKind::Partition { parts, .. } | MatroidKind::Laminar { sets: parts, .. } => {
                let mut member: Vec<Vec<usize>> = vec![Vec::new(); self.ground_size];
                for (t, p) in parts.iter().enumerate() {
                    for &e in p {
                        member[e].push(t);
                    }
                }
                IncState::Counts {
                    used: vec![0; parts.len()],
                    member,
                }
            }
            MatroidKind::Graphic { vertices, .. } => IncState::Forest(UnionFind::new(*vertices)),
        };
        IncrementalIndependence { spec: self, state }
    }
}

enum IncState {
    Count(usize),
    Counts {
        used: Vec<usize>,
        member: Vec<Vec<usize>>,
    },
    Forest(UnionFind),
}

/// Greedy builder: `try_add` keeps the current set independent.
struct IncrementalIndependence<'a> {
    spec: &'a MatroidSpec,
    state: IncState,
}

impl IncrementalIndependence<'_> {
    fn try_add(&mut self, e: usize) -> bool {
        match (&self.spec.kind, &mut self.state) {
            (MatroidKind::Uniform { k }, IncState::Count(c)) => {
                if *c < *k {
                    *c += 1;
                    true
                } else {
                    false
                }
            }
            (
                MatroidKind::Partition { caps, .. } | MatroidKind::Laminar { caps, .. },
                IncState::Counts { used, member },
            ) => {
                if member[e].iter().all(|&t| used[t] < caps[t]) {
                    for &t in &member[e] {
                        used[t] += 1;
                    }
                    true
                } else {
                    false
                }
            }
            (MatroidKind::Graphic { edges, .. }, IncState::Forest(uf)) => {
                let (u, v) = edges[e];
                u != v && uf.union(u, v)
            }
            _ => unreachable!("state built from the same spec"),
        }
    }
}

impl RankOracle for MatroidSpec {
    fn ground_size(&self) -> usize {
        self.ground_size
    }

    fn rank(&self, set: &[usize]) -> usize {
        let mut seen = vec![false; self.ground_size];
        let mut inc = self.independent_incremental();
        let mut r = 0;
        for &e in set {
            assert!(e < self.ground_size, "element {} outside ground set", e);
            if seen[e] {
                continue;
            }
            seen[e] = true;
            if inc.try_add(e) {
                r += 1;
            }
        }
        r
    }
}

/// Indicator of `set` as a rational vector of length `n`.
pub fn indicator(n: usize, set: &[usize]) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); n];
    for &e in set {
        v[e] = Rat::one();
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> MatroidSpec {
        MatroidSpec::graphic(3, vec![(0, 1), (1, 2), (0, 2)])
    }

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(MatroidSpec::uniform(5, 2).rank(&[0, 1, 2]), 2);
        let p = MatroidSpec::partition(vec![vec![0, 1], vec![2]], vec![1, 1]);
        assert_eq!(p.rank(&[0, 1]), 1);
        assert_eq!(triangle().rank(&[0, 1, 2]), 2);
    }

    #[test]
    fn independence_examples() {
        for m in [MatroidSpec::uniform(3, 0), triangle(), MatroidSpec::uniform(2, 1)] {
            assert!(m.is_independent(&[]));
        }
        assert!(!MatroidSpec::uniform(2, 1).is_independent(&[0, 1]));
        assert!(!MatroidSpec::uniform(3, 3).is_independent(&[1, 1]));
    }

    #[test]
    fn separation_examples() {
        let u1 = MatroidSpec::uniform(2, 1);
        let viol = u1.separate(&[q(7, 10), q(7, 10)]).unwrap().unwrap();
        assert_eq!(viol.row.set, vec![0, 1]);
        assert_eq!(viol.lhs, q(14, 10));
        assert_eq!(viol.row.cap, 1);

        let u2 = MatroidSpec::uniform(4, 2);
        assert!(u2.separate(&[q(1, 2), q(1, 2), q(1, 2), q(1, 2)]).unwrap().is_none());

        let t = triangle();
        assert!(t.separate(&[q(1, 2), q(1, 2), q(1, 2)]).unwrap().is_none());
        let v = t.separate(&[q(3, 4), q(3, 4), q(3, 4)]).unwrap().unwrap();
        assert_eq!(v.row.set, vec![0, 1, 2]);
        assert_eq!(v.lhs, q(9, 4));
        assert_eq!(v.row.cap, 2);
    }

    #[test]
    fn triangle_separation_matches_subset_enumeration() {
        // All 8 subsets of the triangle: rank is min(|T|, 2).
        let t = triangle();
        for mask in 0u32..8 {
            let set: Vec<usize> = (0..3).filter(|&e| mask >> e & 1 == 1).collect();
            assert_eq!(t.rank(&set), set.len().min(2));
        }
    }

    #[test]
    fn ties_prefer_smaller_then_lexicographic() {
        // Unit rows on elements 0 and 1 both exceed by 1/2; part {0,1} cap 2
        // exceeds by 1 and wins.
        let p = MatroidSpec::partition(vec![vec![0, 1], vec![2]], vec![2, 1]);
        let v = p.separate(&[q(3, 2), q(3, 2), q(0, 1)]).unwrap().unwrap();
        assert_eq!(v.row.set, vec![0, 1]);
        let v = p.separate(&[q(3, 2), q(0, 1), q(3, 2)]).unwrap().unwrap();
        assert_eq!(v.row.set, vec![0]);
    }

    #[test]
    fn loops_force_zero() {
        let g = MatroidSpec::graphic(2, vec![(0, 0), (0, 1)]);
        assert_eq!(g.rank(&[0]), 0);
        let v = g.separate(&[q(1, 3), q(0, 1)]).unwrap().unwrap();
        assert_eq!(v.row.set, vec![0]);
        assert_eq!(v.row.cap, 0);
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let edges: Vec<(usize, usize)> = (0..5).map(|e| (e, e + 1)).collect();
        let g = MatroidSpec::graphic(6, edges);
        let err = g.separate_with_cap(&vec![Rat::zero(); 5], 4).unwrap_err();
        assert!(matches!(err, PmmError::EnumerationCap { .. }));
    }

    #[test]
    fn validation_flags_bad_specs() {
        let p = MatroidSpec {
            ground_size: 3,
            kind: MatroidKind::Partition {
                parts: vec![vec![0, 1], vec![1]],
                caps: vec![1],
            },
        };
        let v = p.validate();
        assert!(v.iter().any(|s| s.contains("caps")));
        assert!(v.iter().any(|s| s.contains("element 1 lies in 2 parts")));
        assert!(v.iter().any(|s| s.contains("element 2 is not covered")));
        let l = MatroidSpec::laminar(4, vec![vec![0, 1], vec![1, 2]], vec![1, 1]);
        assert!(l.validate().iter().any(|s| s.contains("cross")));
        let g = MatroidSpec::graphic(2, vec![(0, 2)]);
        assert_eq!(g.validate().len(), 1);
    }

    pub(crate) fn arb_matroid(max_n: usize) -> impl Strategy<Value = MatroidSpec> {
        (1..=max_n).prop_flat_map(|n| {
            prop_oneof![
                (0..=n).prop_map(move |k| MatroidSpec::uniform(n, k)),
                (proptest::collection::vec(0..3usize, n), proptest::collection::vec(0..3usize, 3))
                    .prop_map(move |(lab, caps)| {
                        let mut parts = vec![Vec::new(); 3];
                        for (e, &l) in lab.iter().enumerate() {
                            parts[l].push(e);
                        }
                        let (parts, caps): (Vec<_>, Vec<_>) = parts
                            .into_iter()
                            .zip(caps)
                            .filter(|(p, _)| !p.is_empty())
                            .unzip();
                        MatroidSpec::partition(parts, caps)
                    }),
                (1..=n, 0..=n, 0..=2usize).prop_map(move |(a, ka, kb)| {
                    // {0..a} nested in the whole set, plus singleton {n-1}.
                    let inner: Vec<usize> = (0..a).collect();
                    let all: Vec<usize> = (0..n).collect();
                    MatroidSpec::laminar(n, vec![inner, all, vec![n - 1]], vec![ka, kb + 1, 1])
                }),
                proptest::collection::vec((0..4usize, 0..4usize), n)
                    .prop_map(|edges| MatroidSpec::graphic(4, edges)),
            ]
        })
    }

    fn subsets(n: usize) -> Vec<Vec<usize>> {
        (0u32..(1 << n))
            .map(|m| (0..n).filter(|&e| m >> e & 1 == 1).collect())
            .collect()
    }

    proptest! {
        #[test]
        fn matroid_axioms(m in arb_matroid(7)) {
            let n = m.ground_size;
            let all = subsets(n);
            let indep: Vec<&Vec<usize>> = all.iter().filter(|s| m.is_independent(s)).collect();
            prop_assert!(m.is_independent(&[]));
            for a in &indep {
                // downward closure
                for drop in 0..a.len() {
                    let mut b = (*a).clone();
                    b.remove(drop);
                    prop_assert!(m.is_independent(&b));
                }
            }
            for a in &indep {
                for b in &indep {
                    if a.len() < b.len() {
                        let ok = b.iter().any(|e| {
                            if a.contains(e) { return false; }
                            let mut c = (*a).clone();
                            c.push(*e);
                            m.is_independent(&c)
                        });
                        prop_assert!(ok, "exchange fails for {:?} {:?}", a, b);
                    }
                }
            }
        }

        #[test]
        fn rank_is_submodular(m in arb_matroid(6)) {
            let n = m.ground_size;
            let all = subsets(n);
            prop_assert_eq!(m.rank(&[]), 0);
            for a in &all {
                prop_assert_eq!(m.is_independent(a), m.rank(a) == a.len());
                for e in 0..n {
                    prop_assert!(m.rank(&[e]) <= 1);
                }
                for b in &all {
                    let union: Vec<usize> = (0..n).filter(|e| a.contains(e) || b.contains(e)).collect();
                    let inter: Vec<usize> = a.iter().copied().filter(|e| b.contains(e)).collect();
                    prop_assert!(m.rank(a) + m.rank(b) >= m.rank(&union) + m.rank(&inter));
                    if a.iter().all(|e| b.contains(e)) {
                        prop_assert!(m.rank(a) <= m.rank(b));
                    }
                }
            }
        }

        #[test]
        fn separation_matches_enumeration(
            m in arb_matroid(8),
            raw in proptest::collection::vec(0i64..=4, 8),
        ) {
            let n = m.ground_size;
            let v: Vec<Rat> = raw[..n].iter().map(|&x| Rat::new(x, 4)).collect();
            let violated = subsets(n).into_iter().any(|s| {
                let lhs: Rat = s.iter().map(|&e| &v[e]).sum();
                lhs > Rat::from_int(m.rank(&s) as i64)
            });
            let sep = m.separate(&v).unwrap();
            prop_assert_eq!(sep.is_some(), violated);
            if let Some(viol) = sep {
                prop_assert!(viol.lhs > Rat::from_int(viol.row.cap as i64));
                prop_assert_eq!(viol.row.cap, m.rank(&viol.row.set));
            }
        }
    }
}
