//! Sort-tile-recursive packed R-tree over unit envelopes.

use super::polygon::{point_in_polygon, Point};
use super::GeoUnit;

const NODE_CAPACITY: usize = 16;

type Envelope = [f64; 4];

fn env_contains(env: &Envelope, pt: Point) -> bool {
    pt.lon >= env[0] && pt.lon <= env[2] && pt.lat >= env[1] && pt.lat <= env[3]
}

fn env_union(a: &Envelope, b: &Envelope) -> Envelope {
    [
        a[0].min(b[0]),
        a[1].min(b[1]),
        a[2].max(b[2]),
        a[3].max(b[3]),
    ]
}

fn center(env: &Envelope) -> (f64, f64) {
    ((env[0] + env[2]) * 0.5, (env[1] + env[3]) * 0.5)
}

#[derive(Debug)]
struct Node {
    env: Envelope,
    /// Unit indices for leaves, node indices otherwise.
    entries: Vec<usize>,
    leaf: bool,
}

/// Immutable after construction; queries only take `&self`.
#[derive(Debug)]
pub struct SpatialIndex {
    units: Vec<GeoUnit>,
    envs: Vec<Envelope>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

/// One STR packing pass: groups `items` into runs of at most NODE_CAPACITY,
/// tiled by x-center then y-center.
fn str_pack(mut items: Vec<(usize, Envelope)>) -> Vec<Vec<(usize, Envelope)>> {
    let n = items.len();
    let groups = n.div_ceil(NODE_CAPACITY);
    let slices = (groups as f64).sqrt().ceil() as usize;
    let per_slice = slices * NODE_CAPACITY;
    items.sort_by(|a, b| {
        center(&a.1)
            .0
            .total_cmp(&center(&b.1).0)
            .then(a.0.cmp(&b.0))
    });
    let mut out = Vec::with_capacity(groups);
    for slice in items.chunks_mut(per_slice.max(1)) {
        slice.sort_by(|a, b| {
            center(&a.1)
                .1
                .total_cmp(&center(&b.1).1)
                .then(a.0.cmp(&b.0))
        });
        out.extend(slice.chunks(NODE_CAPACITY).map(|c| c.to_vec()));
    }
    out
}

impl SpatialIndex {
    /// Bulk-load the tree. Units with empty boundaries are kept but never match.
    pub fn build(units: Vec<GeoUnit>) -> Self {
        let envs: Vec<Envelope> = units
            .iter()
            .map(|u| u.boundary.envelope().unwrap_or([f64::NAN; 4]))
            .collect();
        let mut nodes = Vec::new();
        let mut level: Vec<(usize, Envelope)> = envs
            .iter()
            .enumerate()
            .filter(|(_, e)| !e[0].is_nan())
            .map(|(i, e)| (i, *e))
            .collect();
        if level.is_empty() {
            return SpatialIndex {
                units,
                envs,
                nodes,
                root: None,
            };
        }
        let mut leaf = true;
        loop {
            let mut next = Vec::new();
            for group in str_pack(level) {
                let env = group
                    .iter()
                    .map(|(_, e)| *e)
                    .reduce(|a, b| env_union(&a, &b))
                    .expect("non-empty group");
                nodes.push(Node {
                    env,
                    entries: group.iter().map(|(i, _)| *i).collect(),
                    leaf,
                });
                next.push((nodes.len() - 1, env));
            }
            leaf = false;
            if next.len() == 1 {
                let root = next[0].0;
                return SpatialIndex {
                    units,
                    envs,
                    nodes,
                    root: Some(root),
                };
            }
            level = next;
        }
    }

    pub fn units(&self) -> &[GeoUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Indices of units whose envelope contains `pt`.
    pub fn candidates(&self, pt: Point) -> Vec<usize> {
        let mut out = Vec::new();
        let Some(root) = self.root else {
            return out;
        };
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !env_contains(&node.env, pt) {
                continue;
            }
            if node.leaf {
                out.extend(
                    node.entries
                        .iter()
                        .copied()
                        .filter(|&i| env_contains(&self.envs[i], pt)),
                );
            } else {
                stack.extend(node.entries.iter().copied());
            }
        }
        out
    }

    /// Number of leaf slots referring to each unit. Exposed for tests.
    #[doc(hidden)]
    pub fn leaf_occurrences(&self) -> Vec<usize> {
        let mut counts = vec![0; self.units.len()];
        for node in self.nodes.iter().filter(|n| n.leaf) {
            for &i in &node.entries {
                counts[i] += 1;
            }
        }
        counts
    }
}

/// Geoid of the unit containing `pt`; the smallest geoid wins when several
/// boundaries touch the point.
pub fn assign_geoid(pt: Point, idx: &SpatialIndex) -> Option<&str> {
    idx.candidates(pt)
        .into_iter()
        .map(|i| &idx.units[i])
        .filter(|u| point_in_polygon(pt, &u.boundary))
        .map(|u| u.geoid.as_str())
        .min()
}
