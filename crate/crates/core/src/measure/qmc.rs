//! Sobol points with random-shift (Cranley–Patterson) replicates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Aabb, IntegrationResult, Method};

/// Primitive polynomial degree, coefficients and initial direction numbers (Joe–Kuo) for the
/// second and third Sobol coordinates; the first is the van der Corput sequence.
const SOBOL_PARAMS: [(u32, u32, &[u32]); 2] = [(1, 0, &[1]), (2, 1, &[1, 3])];

const BITS: usize = 32;
const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone)]
pub struct Sobol {
    dim: usize,
    directions: [[u32; BITS]; 3],
}

impl Sobol {
    pub fn new(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "Sobol dimension {dim} not supported");
        let mut directions = [[0u32; BITS]; 3];
        for (k, v) in directions[0].iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - k);
        }
        for (d, &(s, a, m)) in SOBOL_PARAMS.iter().enumerate() {
            let s = s as usize;
            let v = &mut directions[d + 1];
            for k in 0..s {
                v[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut x = v[k - s] ^ (v[k - s] >> s);
                for j in 1..s {
                    if (a >> (s - 1 - j)) & 1 == 1 {
                        x ^= v[k - j];
                    }
                }
                v[k] = x;
            }
        }
        Sobol { dim, directions }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Integer coordinates of the point at Gray-code position `index`.
    fn gray_point(&self, index: u32) -> [u32; 3] {
        let g = index ^ (index >> 1);
        let mut x = [0u32; 3];
        for (d, xd) in x.iter_mut().enumerate().take(self.dim) {
            for k in 0..BITS {
                if (g >> k) & 1 == 1 {
                    *xd ^= self.directions[d][k];
                }
            }
        }
        x
    }

    /// Points `start..end` in Gray-code order, as coordinates in [0, 1).
    pub fn for_each_in(&self, start: u32, end: u32, mut f: impl FnMut(&[f64])) {
        let scale = 1.0 / (1u64 << BITS) as f64;
        let mut x = self.gray_point(start);
        let mut p = [0.0; 3];
        for i in start..end {
            for d in 0..self.dim {
                p[d] = x[d] as f64 * scale;
            }
            f(&p[..self.dim]);
            let c = (i.trailing_ones()) as usize;
            if c < BITS {
                for d in 0..self.dim {
                    x[d] ^= self.directions[d][c];
                }
            }
        }
    }
}

/// Budget for randomized quasi-Monte Carlo integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QmcConfig {
    pub replicates: usize,
    pub points: usize,
    pub seed: u64,
}

impl Default for QmcConfig {
    fn default() -> Self {
        QmcConfig {
            replicates: 8,
            points: 1 << 17,
            seed: 0x5eed_0001,
        }
    }
}

/// Estimates the measure of `{y ∈ box : inside(y)}` by point counting. Counts are integers
/// reduced in replicate order, so the result does not depend on the worker count.
pub fn integrate_indicator<F>(bbox: &Aabb, config: &QmcConfig, inside: F) -> IntegrationResult
where
    F: Fn(&[f64]) -> bool + Sync,
{
    assert!(config.replicates >= 2, "need at least two replicates for an error estimate");
    assert!(config.points >= 1 && config.points <= u32::MAX as usize);
    let dim = bbox.dim();
    let box_volume = bbox.volume();
    if box_volume <= 0.0 {
        return IntegrationResult {
            value: 0.0,
            stderr: 0.0,
            method: Method::Qmc,
            sample_count: 0,
        };
    }
    let sobol = Sobol::new(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shifts: Vec<[f64; 3]> = (0..config.replicates)
        .map(|_| {
            let mut s = [0.0; 3];
            for c in s.iter_mut().take(dim) {
                *c = rng.random::<f64>();
            }
            s
        })
        .collect();

    let n = config.points as u32;
    let chunks: Vec<(usize, u32, u32)> = (0..config.replicates)
        .flat_map(|r| {
            (0..n.div_ceil(CHUNK as u32)).map(move |c| {
                let start = c * CHUNK as u32;
                (r, start, (start + CHUNK as u32).min(n))
            })
        })
        .collect();
    let lo = bbox.lo();
    let extent = bbox.extent();
    let counts: Vec<(usize, u64)> = chunks
        .par_iter()
        .map(|&(r, start, end)| {
            let shift = &shifts[r];
            let mut hits = 0u64;
            let mut y = [0.0; 3];
            sobol.for_each_in(start, end, |p| {
                for d in 0..dim {
                    let mut t = p[d] + shift[d];
                    if t >= 1.0 {
                        t -= 1.0;
                    }
                    y[d] = lo[d] + t * extent[d];
                }
                if inside(&y[..dim]) {
                    hits += 1;
                }
            });
            (r, hits)
        })
        .collect();

    let mut per_replicate = vec![0u64; config.replicates];
    for (r, h) in counts {
        per_replicate[r] += h;
    }
    let estimates: Vec<f64> = per_replicate
        .iter()
        .map(|&h| box_volume * h as f64 / config.points as f64)
        .collect();
    let m = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
    IntegrationResult {
        value: mean,
        stderr: (var / m).sqrt(),
        method: Method::Qmc,
        sample_count: config.replicates * config.points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_of_the_sequence() {
        let s = Sobol::new(3);
        let mut pts = Vec::new();
        s.for_each_in(0, 4, |p| pts.push(p.to_vec()));
        assert_eq!(pts[0], vec![0.0, 0.0, 0.0]);
        assert_eq!(pts[1], vec![0.5, 0.5, 0.5]);
        // Gray-code order visits the same set of points as natural order.
        let mut sorted: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn each_coordinate_is_stratified() {
        // Any 2^m consecutive-from-zero points hit every dyadic interval of length 2^-m once.
        let s = Sobol::new(3);
        let m = 10;
        for d in 0..3 {
            let mut seen = vec![false; 1 << m];
            s.for_each_in(0, 1 << m, |p| {
                let cell = (p[d] * (1 << m) as f64) as usize;
                assert!(!seen[cell]);
                seen[cell] = true;
            });
        }
    }

    #[test]
    fn chunked_iteration_matches_sequential() {
        let s = Sobol::new(2);
        let mut a = Vec::new();
        s.for_each_in(0, 100, |p| a.push(p.to_vec()));
        let mut b = Vec::new();
        s.for_each_in(0, 37, |p| b.push(p.to_vec()));
        s.for_each_in(37, 100, |p| b.push(p.to_vec()));
        assert_eq!(a, b);
    }

    #[test]
    fn disk_area_and_error_shrinkage() {
        let bbox = Aabb::new(&[-1.0, -1.0], &[1.0, 1.0]);
        let inside = |y: &[f64]| y[0] * y[0] + y[1] * y[1] <= 1.0;
        let small = integrate_indicator(&bbox, &QmcConfig { replicates: 8, points: 1 << 10, seed: 7 }, inside);
        let big = integrate_indicator(&bbox, &QmcConfig { replicates: 8, points: 1 << 16, seed: 7 }, inside);
        assert!((big.value - std::f64::consts::PI).abs() < 4.0 * big.stderr + 1e-6);
        assert!(big.stderr < small.stderr);
        assert_eq!(big.sample_count, 8 << 16);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let bbox = Aabb::new(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
        let cfg = QmcConfig { replicates: 4, points: 5000, seed: 11 };
        let f = |y: &[f64]| y.iter().sum::<f64>() < 1.2;
        let a = integrate_indicator(&bbox, &cfg, f);
        let b = integrate_indicator(&bbox, &cfg, f);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
