//! Seeded random instances on an integer grid under the L1 metric.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PmmError, Result};
use crate::io::FeasibleTag;
use crate::matroid::MatroidSpec;
use crate::model::{Client, Facility, Instance, Metric};
use crate::oracle::{feasible_set_exists, DEFAULT_OPT_CAP};
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatroidFamily {
    Uniform,
    Partition,
    Laminar,
    Graphic,
}

impl std::str::FromStr for MatroidFamily {
    type Err = PmmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(MatroidFamily::Uniform),
            "partition" => Ok(MatroidFamily::Partition),
            "laminar" => Ok(MatroidFamily::Laminar),
            "graphic" => Ok(MatroidFamily::Graphic),
            other => Err(PmmError::Parse(format!("unknown matroid kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub seed: u64,
    pub facilities: usize,
    pub clients: usize,
    pub matroid: MatroidFamily,
    /// Radius is the distance to the `q`-th nearest facility, times `slack`.
    pub q: usize,
    pub slack: Rat,
    /// One radius for every client: the largest of the per-client radii.
    pub uniform_radius: bool,
    /// Shrinks one client's radius below its distance to every facility.
    pub plant_infeasible: bool,
    pub grid: i64,
    pub dims: usize,
    pub max_cost: i64,
    pub max_demand: i64,
    pub attempts: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 0,
            facilities: 8,
            clients: 8,
            matroid: MatroidFamily::Uniform,
            q: 2,
            slack: Rat::one(),
            uniform_radius: false,
            plant_infeasible: false,
            grid: 20,
            dims: 2,
            max_cost: 20,
            max_demand: 3,
            attempts: 25,
        }
    }
}

fn random_matroid(rng: &mut ChaCha8Rng, nf: usize, family: MatroidFamily) -> MatroidSpec {
    let mut order: Vec<usize> = (0..nf).collect();
    order.shuffle(rng);
    match family {
        MatroidFamily::Uniform => MatroidSpec::uniform(nf, rng.gen_range(nf.div_ceil(3)..=(2 * nf).div_ceil(3))),
        MatroidFamily::Partition => {
            let parts_n = rng.gen_range(1..=nf.min(4));
            let mut parts = vec![Vec::new(); parts_n];
            for (t, &i) in order.iter().enumerate() {
                parts[t % parts_n].push(i);
            }
            for p in &mut parts {
                p.sort_unstable();
            }
            let caps = parts.iter().map(|p| rng.gen_range(p.len().div_ceil(2)..=p.len())).collect();
            MatroidSpec::partition(parts, caps)
        }
        MatroidFamily::Laminar => {
            // The whole ground set over up to three disjoint blocks.
            let blocks = rng.gen_range(1..=nf.min(3));
            let mut sets = vec![Vec::new(); blocks];
            for (t, &i) in order.iter().enumerate() {
                sets[t % blocks].push(i);
            }
            let mut caps: Vec<usize> = sets.iter().map(|s| rng.gen_range(s.len().div_ceil(2)..=s.len())).collect();
            for s in &mut sets {
                s.sort_unstable();
            }
            let total: usize = caps.iter().sum();
            sets.push((0..nf).collect());
            caps.push(rng.gen_range(total.div_ceil(2)..=total));
            MatroidSpec::laminar(nf, sets, caps)
        }
        MatroidFamily::Graphic => {
            let vertices = (nf / 2 + 1).max(2);
            let edges = (0..nf)
                .map(|_| {
                    let u = rng.gen_range(0..vertices);
                    let mut v = rng.gen_range(0..vertices - 1);
                    if v >= u {
                        v += 1;
                    }
                    (u.min(v), u.max(v))
                })
                .collect();
            MatroidSpec::graphic(vertices, edges)
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, p: &GenParams) -> Result<Instance> {
    let (nf, nc) = (p.facilities, p.clients);
    let point = |rng: &mut ChaCha8Rng| -> Vec<Rat> {
        (0..p.dims).map(|_| Rat::from_int(rng.gen_range(0..=p.grid))).collect()
    };
    let mut points: Vec<Vec<Rat>> = (0..nf + nc).map(|_| point(rng)).collect();
    let facilities: Vec<Facility> = (0..nf)
        .map(|i| Facility { id: format!("f{i}"), cost: Rat::from_int(rng.gen_range(0..=p.max_cost)) })
        .collect();
    let demands: Vec<Rat> = (0..nc).map(|_| Rat::from_int(rng.gen_range(1..=p.max_demand))).collect();
    let matroid = random_matroid(rng, nf, p.matroid);
    let planted = p.plant_infeasible.then(|| rng.gen_range(0..nc));
    if let Some(j) = planted {
        let pj = &points[nf + j];
        if (0..nf).any(|i| &points[i] == pj) {
            points[nf + j][0] += Rat::half();
        }
    }

    let l1 = |a: &[Rat], b: &[Rat]| -> Rat { a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum() };
    let q = p.q.clamp(1, nf);
    let mut radii: Vec<Rat> = (0..nc)
        .map(|j| {
            let mut d: Vec<Rat> = (0..nf).map(|i| l1(&points[i], &points[nf + j])).collect();
            d.sort();
            &d[q - 1] * &p.slack
        })
        .collect();
    if p.uniform_radius {
        let l = radii.iter().max().cloned().unwrap_or_else(Rat::zero);
        radii = vec![l; nc];
    }
    if let Some(j) = planted {
        let nearest = (0..nf).map(|i| l1(&points[i], &points[nf + j])).min().expect("facilities exist");
        let r = &nearest * Rat::half();
        if p.uniform_radius {
            radii = vec![r; nc];
        } else {
            radii[j] = r;
        }
    }
    let clients = (0..nc)
        .map(|j| Client { id: format!("c{j}"), radius: radii[j].clone(), demand: demands[j].clone() })
        .collect();
    Instance::new(facilities, clients, Metric::L1(points), matroid)
}

/// Draws instances until one is confirmed feasible. Planted instances are
/// infeasible by construction; instances above the oracle cap are tagged
/// unknown.
pub fn generate(p: &GenParams) -> Result<(Instance, FeasibleTag)> {
    if p.facilities == 0 || p.clients == 0 {
        return Err(PmmError::Parse("need at least one facility and one client".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    if p.plant_infeasible {
        return Ok((draw(&mut rng, p)?, FeasibleTag::No));
    }
    if p.facilities > DEFAULT_OPT_CAP {
        return Ok((draw(&mut rng, p)?, FeasibleTag::Unknown));
    }
    let mut last = None;
    for _ in 0..p.attempts.max(1) {
        let inst = draw(&mut rng, p)?;
        if feasible_set_exists(&inst, DEFAULT_OPT_CAP)? {
            return Ok((inst, FeasibleTag::Yes));
        }
        last = Some(inst);
    }
    Ok((last.expect("at least one attempt"), FeasibleTag::No))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::instance_to_json;
    use crate::model::validate_instance;

    #[test]
    fn same_seed_same_bytes() {
        let p = GenParams { seed: 7, matroid: MatroidFamily::Partition, ..GenParams::default() };
        let a = generate(&p).unwrap();
        let b = generate(&p).unwrap();
        assert_eq!(instance_to_json(&a.0, Some(a.1)), instance_to_json(&b.0, Some(b.1)));
        let c = generate(&GenParams { seed: 8, ..p }).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn every_family_is_valid() {
        for family in [MatroidFamily::Uniform, MatroidFamily::Partition, MatroidFamily::Laminar, MatroidFamily::Graphic] {
            for seed in 0..10 {
                let p = GenParams { seed, matroid: family, ..GenParams::default() };
                let (inst, tag) = generate(&p).unwrap();
                assert!(validate_instance(&inst).is_empty(), "{family:?} {seed}");
                assert_eq!(tag, FeasibleTag::Yes, "{family:?} {seed}");
            }
        }
    }

    #[test]
    fn planted_client_cannot_be_served() {
        for seed in 0..20 {
            let p = GenParams { seed, plant_infeasible: true, ..GenParams::default() };
            let (inst, tag) = generate(&p).unwrap();
            assert_eq!(tag, FeasibleTag::No);
            assert!((0..inst.nc()).any(|j| (0..inst.nf()).all(|i| inst.dfc(i, j) > &inst.clients[j].radius)));
        }
    }

    #[test]
    fn uniform_radius_is_shared() {
        let p = GenParams { seed: 3, uniform_radius: true, ..GenParams::default() };
        let (inst, _) = generate(&p).unwrap();
        assert!(inst.uniform_radius().is_some());
    }
}
