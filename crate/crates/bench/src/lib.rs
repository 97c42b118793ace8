//! Shared inputs for the benchmarks.

use geodemo::geomap::{GeoUnit, PolygonSet, SpatialIndex};
use geodemo::{Point, SparseVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "morning", "coffee", "traffic", "game", "tonight", "love", "weather", "work", "lunch",
    "friends", "weekend", "music", "happy", "tired", "beach", "church", "school", "party",
];

const EXTRAS: &[&str] = &[
    "#texas",
    "@friend",
    ":)",
    "!!!",
    "http://t.co/x1",
    "&amp;",
    "Don’t",
    "🎉",
];

/// Short messages mixing plain words with hashtags, mentions, emoticons and URLs.
pub fn messages(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(4..14);
            (0..len)
                .map(|_| {
                    if rng.random_bool(0.15) {
                        EXTRAS[rng.random_range(0..EXTRAS.len())]
                    } else {
                        WORDS[rng.random_range(0..WORDS.len())]
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// A `side` x `side` grid of unit squares with block geoids.
pub fn block_grid(side: usize) -> Vec<GeoUnit> {
    (0..side * side)
        .map(|i| {
            let (x, y) = ((i % side) as f64, (i / side) as f64);
            let geoid = format!("48001{:06}{:04}", i / 10_000, i % 10_000);
            GeoUnit::new(geoid, PolygonSet::rectangle(x, y, x + 1.0, y + 1.0))
                .expect("valid square")
        })
        .collect()
}

pub fn grid_index(side: usize) -> SpatialIndex {
    SpatialIndex::build(block_grid(side))
}

/// Points spread over a slightly larger area than `block_grid(side)`.
pub fn points(n: usize, side: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = side as f64 + 1.0;
    (0..n)
        .map(|_| Point::new(rng.random_range(-1.0..hi), rng.random_range(-1.0..hi)))
        .collect()
}

/// Sparse regression problem with `nnz` stored entries per row.
pub fn sparse_problem(
    n: usize,
    dim: usize,
    nnz: usize,
    seed: u64,
) -> (Vec<SparseVector>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let xs: Vec<SparseVector> = (0..n)
        .map(|_| {
            let mut idx: Vec<usize> = (0..nnz).map(|_| rng.random_range(0..dim)).collect();
            idx.sort_unstable();
            idx.dedup();
            SparseVector::new(
                dim,
                idx.into_iter().map(|i| (i, rng.random_range(0.0..1.0))),
            )
            .expect("sorted indices")
        })
        .collect();
    let ys = xs
        .iter()
        .map(|x| x.dot(&w) + rng.random_range(-0.05..0.05))
        .collect();
    (xs, ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use geodemo::geomap::assign_geoid;

    #[test]
    fn inputs_are_usable() {
        assert_eq!(messages(10, 1).len(), 10);
        let index = grid_index(10);
        assert_eq!(index.len(), 100);
        assert!(assign_geoid(Point::new(3.5, 4.5), &index).is_some());
        assert!(points(50, 10, 2)
            .iter()
            .all(|p| p.lon >= -1.0 && p.lon < 11.0));
        let (xs, ys) = sparse_problem(20, 100, 10, 3);
        assert_eq!((xs.len(), ys.len()), (20, 20));
        assert!(xs.iter().all(|x| x.dim() == 100 && x.nnz() <= 10));
    }
}
