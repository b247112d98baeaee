//! Seeded construction of random and pool-sampled instances, plus the
//! standard benchmark grids.
//!
//! Node ids are laid out as: depot `0`, then the type-I nodes, then the
//! wells, then the key centers. Draw order for a spec: coordinates for every
//! node in id order (x then y), service times for ids `1..`, then the
//! round-robin well-to-center list is shuffled. See [`crate::rng`] for the
//! exact stream definitions.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{rounded_euclidean, Instance, InstanceError, NodeKind, PhysicalNode, TravelSource};
use crate::rng;

pub const GRID_MAX: i64 = 100;
pub const SERVICE_MIN: i64 = 20;
pub const SERVICE_MAX: i64 = 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoordSource {
    /// Integer coordinates uniform in `0..=100`.
    UniformGrid,
    /// Distinct locations sampled from a file of `x y` lines.
    LocationPool(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n_demand: usize,
    pub n_wells: usize,
    pub n_centers: usize,
    pub num_vehicles: usize,
    pub seed: u64,
    pub coord_source: CoordSource,
    /// Replicate index `u` within a subset, used only for naming.
    pub replicate: usize,
}

impl GenSpec {
    pub fn uniform(n_demand: usize, n_wells: usize, n_centers: usize, num_vehicles: usize, seed: u64) -> Self {
        Self { n_demand, n_wells, n_centers, num_vehicles, seed, coord_source: CoordSource::UniformGrid, replicate: 1 }
    }

    pub fn subset(&self) -> (usize, usize, usize, usize) {
        (self.n_demand, self.n_wells, self.n_centers, self.num_vehicles)
    }

    pub fn name(&self) -> String {
        format!("vrpwdn_{}_{}_{}_{}_{}", self.n_demand, self.n_wells, self.n_centers, self.num_vehicles, self.replicate)
    }

    pub fn file_name(&self) -> String {
        format!("{}.txt", self.name())
    }

    fn check(&self) -> Result<(), GenError> {
        if self.n_demand == 0 {
            return Err(GenError::Impossible("at least one demand node is required".into()));
        }
        if self.n_wells > self.n_demand {
            return Err(GenError::Impossible(format!("{} wells exceed {} demand nodes", self.n_wells, self.n_demand)));
        }
        if self.n_wells > 0 && self.n_centers == 0 {
            return Err(GenError::Impossible("wells need at least one key center".into()));
        }
        if self.num_vehicles == 0 {
            return Err(GenError::Impossible("fleet size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("impossible spec: {0}")]
    Impossible(String),
    #[error("location pool holds {available} locations, {needed} needed")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("location pool line {line}: {message}")]
    PoolFormat { line: usize, message: String },
    #[error("at least two physical nodes are needed to compute the duration cap")]
    SingleNode,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_location_pool(path: &Path) -> Result<Vec<(f64, f64)>, GenError> {
    let text = fs::read_to_string(path)?;
    let mut pool = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: &str| GenError::PoolFormat { line: i + 1, message: message.to_string() };
        let mut t = line.split_whitespace();
        let x: f64 = t.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("invalid x"))?;
        let y: f64 = t.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("invalid y"))?;
        if t.next().is_some() || !x.is_finite() || !y.is_finite() {
            return Err(bad("expected exactly two finite numbers"));
        }
        pool.push((x, y));
    }
    Ok(pool)
}

/// Duration cap `1.5 * (A + K * B) / K`, where `A` sums the mean outgoing
/// travel of the demand nodes and `B` the same for depot and key centers.
/// Means are taken over the other physical nodes, so the depot is counted once.
pub fn compute_max_duration(nodes: &[PhysicalNode], travel: impl Fn(usize, usize) -> f64, num_vehicles: usize) -> Result<f64, GenError> {
    if nodes.len() < 2 {
        return Err(GenError::SingleNode);
    }
    let others = (nodes.len() - 1) as f64;
    let mut demand_sum = 0.0;
    let mut fixed_sum = 0.0;
    for node in nodes {
        let mean = nodes.iter().filter(|o| o.id != node.id).map(|o| travel(node.id, o.id)).sum::<f64>() / others;
        if node.kind.is_demand() {
            demand_sum += mean;
        } else {
            fixed_sum += mean;
        }
    }
    let k = num_vehicles as f64;
    Ok(1.5 * (demand_sum + k * fixed_sum) / k)
}

pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    spec.check()?;
    let n_type1 = spec.n_demand - spec.n_wells;
    let count = 1 + spec.n_demand + spec.n_centers;
    let mut rng = rng::seeded(spec.seed);

    let coords: Vec<(f64, f64)> = match &spec.coord_source {
        CoordSource::UniformGrid => (0..count)
            .map(|_| {
                let x = rng::int_inclusive(&mut rng, 0, GRID_MAX) as f64;
                let y = rng::int_inclusive(&mut rng, 0, GRID_MAX) as f64;
                (x, y)
            })
            .collect(),
        CoordSource::LocationPool(path) => {
            let pool = read_location_pool(path)?;
            if pool.len() < count {
                return Err(GenError::PoolTooSmall { needed: count, available: pool.len() });
            }
            // Partial Fisher-Yates: position i takes a uniform pick of the
            // untouched tail.
            let mut order: Vec<usize> = (0..pool.len()).collect();
            for i in 0..count {
                let j = i + rng::index(&mut rng, pool.len() - i);
                order.swap(i, j);
            }
            order[..count].iter().map(|&i| pool[i]).collect()
        }
    };

    let kind_of = |id: usize| match id {
        0 => NodeKind::Depot,
        i if i <= n_type1 => NodeKind::TypeI,
        i if i <= spec.n_demand => NodeKind::TypeII,
        _ => NodeKind::KeyCenter,
    };
    let mut nodes: Vec<PhysicalNode> = coords.iter().enumerate().map(|(id, &(x, y))| PhysicalNode { id, kind: kind_of(id), x, y, service_time: 0.0 }).collect();
    for node in nodes.iter_mut().skip(1) {
        node.service_time = rng::int_inclusive(&mut rng, SERVICE_MIN, SERVICE_MAX) as f64;
    }

    let first_well = 1 + n_type1;
    let first_center = 1 + spec.n_demand;
    let mut assignment: Vec<usize> = (0..spec.n_wells).map(|j| first_center + j % spec.n_centers.max(1)).collect();
    rng::shuffle(&mut rng, &mut assignment);
    let key_of: BTreeMap<usize, usize> = assignment.iter().enumerate().map(|(j, &c)| (first_well + j, c)).collect();

    let travel = |i: usize, j: usize| rounded_euclidean((nodes[i].x, nodes[i].y), (nodes[j].x, nodes[j].y));
    let lmax = compute_max_duration(&nodes, travel, spec.num_vehicles)?;
    Ok(Instance::new(spec.name(), nodes, key_of, spec.num_vehicles, lmax, TravelSource::RoundedEuclidean)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    RandomSmall,
    RandomLarge,
    Realistic,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::RandomSmall, Suite::RandomLarge, Suite::Realistic];

    pub fn label(self) -> &'static str {
        match self {
            Suite::RandomSmall => "random-small",
            Suite::RandomLarge => "random-large",
            Suite::Realistic => "realistic",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.label() == label)
    }

    /// Subset tuples `(n_demand, n_wells, n_centers, K)`.
    pub fn subsets(self) -> Vec<(usize, usize, usize, usize)> {
        let grid = |n: usize, pairs: &[(usize, usize)], fleets: &[usize]| {
            let mut out = Vec::new();
            for &(w, c) in pairs {
                for &k in fleets {
                    out.push((n, w, c, k));
                }
            }
            out
        };
        match self {
            Suite::RandomSmall => [
                grid(10, &[(1, 1), (2, 1), (2, 2)], &[1, 2]),
                grid(15, &[(3, 2), (3, 3), (4, 2), (4, 3)], &[2, 3]),
                grid(20, &[(2, 2), (3, 2), (3, 3), (5, 3)], &[2, 3]),
            ]
            .concat(),
            Suite::RandomLarge => [
                grid(50, &[(5, 5), (8, 8), (10, 5), (10, 8)], &[5, 8]),
                grid(100, &[(5, 5), (10, 5), (10, 10), (15, 10)], &[10, 15]),
                grid(200, &[(10, 10), (20, 10), (20, 20), (30, 20)], &[15, 20]),
            ]
            .concat(),
            Suite::Realistic => {
                let mut out = vec![
                    (10, 1, 1, 1),
                    (10, 1, 1, 2),
                    (10, 2, 1, 1),
                    (10, 2, 2, 2),
                    (15, 1, 1, 1),
                    (15, 1, 1, 2),
                    (15, 2, 1, 2),
                    (15, 2, 2, 3),
                    (20, 1, 1, 2),
                    (20, 1, 1, 3),
                    (20, 2, 1, 2),
                    (20, 2, 2, 3),
                ];
                for n in [40, 50, 60] {
                    out.extend([(n, 4, 2, 2), (n, 4, 3, 3), (n, 6, 2, 2), (n, 6, 3, 3)]);
                }
                for n in [100, 150, 200] {
                    out.extend([(n, 8, 4, 4), (n, 8, 5, 5), (n, 10, 4, 4), (n, 10, 5, 5)]);
                }
                out
            }
        }
    }

    pub fn specs(self, master_seed: u64, pool: Option<&Path>) -> Vec<GenSpec> {
        let coord_source = match (self, pool) {
            (Suite::Realistic, Some(p)) => CoordSource::LocationPool(p.to_path_buf()),
            _ => CoordSource::UniformGrid,
        };
        let mut out = Vec::new();
        for (n, w, c, k) in self.subsets() {
            for u in 1..=3 {
                let seed = rng::derive_seed(master_seed, &[self as u64, n as u64, w as u64, c as u64, k as u64, u]);
                out.push(GenSpec { n_demand: n, n_wells: w, n_centers: c, num_vehicles: k, seed, coord_source: coord_source.clone(), replicate: u as usize });
            }
        }
        out
    }
}

/// All three grids: 66 small random, 72 medium/large random and 108
/// realistic specs, three replicates per subset.
pub fn standard_suites(master_seed: u64, pool: Option<&Path>) -> Vec<GenSpec> {
    Suite::ALL.iter().flat_map(|s| s.specs(master_seed, pool)).collect()
}
