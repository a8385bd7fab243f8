use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::flow::FlowMap;
use super::LagrangianError;
use crate::par;

/// Default number of random cross-tile pairs.
pub const CROSS_PAIRS: usize = 1_000_000;

/// Index pairs of particles on an `n`-cell grid (row-major cell centers).
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub pairs: Vec<(u32, u32)>,
    pub intra_tile: usize,
    pub neighbor: usize,
    pub cross: usize,
}

impl PairSample {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Pairs for stretch statistics on an `n x n` particle grid tiled by
/// `tiles_per_side^2` tiles: every pair inside a tile when they number at
/// most `intra_budget` (otherwise a proportional random subset), the
/// 4-neighbourhood pairs of every particle, and `cross` random pairs
/// stratified over the first particle. Deterministic in `seed`.
pub fn grid_pairs(
    n: usize,
    tiles_per_side: usize,
    intra_budget: usize,
    cross: usize,
    seed: u64,
) -> PairSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n * n;
    let tps = tiles_per_side.clamp(1, n.max(1));
    let tc = n / tps;
    let members_per_tile = tc * tc;
    let tile_pairs = members_per_tile * members_per_tile.saturating_sub(1) / 2;
    let all_intra = tile_pairs * tps * tps;
    let mut pairs = Vec::new();
    let member = |tx: usize, ty: usize, m: usize| -> u32 {
        let (a, b) = (m % tc, m / tc);
        ((ty * tc + b) * n + tx * tc + a) as u32
    };
    for ty in 0..tps {
        for tx in 0..tps {
            if all_intra <= intra_budget {
                for p in 0..members_per_tile {
                    for q in p + 1..members_per_tile {
                        pairs.push((member(tx, ty, p), member(tx, ty, q)));
                    }
                }
            } else if members_per_tile > 1 {
                let quota = intra_budget.div_ceil(tps * tps);
                for _ in 0..quota {
                    let p = rng.gen_range(0..members_per_tile);
                    let mut q = rng.gen_range(0..members_per_tile - 1);
                    if q >= p {
                        q += 1;
                    }
                    pairs.push((member(tx, ty, p), member(tx, ty, q)));
                }
            }
        }
    }
    let intra_tile = pairs.len();
    for j in 0..n {
        for i in 0..n {
            let k = (j * n + i) as u32;
            if i + 1 < n {
                pairs.push((k, k + 1));
            }
            if j + 1 < n {
                pairs.push((k, k + n as u32));
                if i + 1 < n {
                    pairs.push((k, k + n as u32 + 1));
                }
                if i > 0 {
                    pairs.push((k, k + n as u32 - 1));
                }
            }
        }
    }
    let neighbor = pairs.len() - intra_tile;
    if total > 1 {
        for m in 0..cross {
            let p = m % total;
            let mut q = rng.gen_range(0..total - 1);
            if q >= p {
                q += 1;
            }
            pairs.push((p as u32, q as u32));
        }
    }
    PairSample {
        intra_tile,
        neighbor,
        cross: if total > 1 { cross } else { 0 },
        pairs,
    }
}

/// Restricted Lipschitz constant of a map after removing an exceptional set.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StretchStatistics {
    pub eta: f64,
    /// Largest stretch over retained pairs.
    pub lip: f64,
    /// Removed particle indices, in removal order.
    pub exceptional: Vec<u32>,
    pub removed_measure: f64,
    pub pairs: usize,
    /// Pair realizing `lip`, if any pair is retained.
    pub worst_pair: Option<(u32, u32)>,
}

/// `|end_p - end_q| / |start_p - start_q|` for every pair.
pub fn pair_stretches(map: &FlowMap, pairs: &[(u32, u32)]) -> Vec<f64> {
    par::map_collect(0..pairs.len(), |m| {
        let (p, q) = (pairs[m].0 as usize, pairs[m].1 as usize);
        let d0 = (map.start[p][0] - map.start[q][0]).hypot(map.start[p][1] - map.start[q][1]);
        let d1 = (map.end[p][0] - map.end[q][0]).hypot(map.end[p][1] - map.end[q][1]);
        if d0 > 0.0 {
            d1 / d0
        } else {
            0.0
        }
    })
}

/// Greedy exceptional sets for several measures at once.
///
/// Pairs are visited from the largest stretch down; while the budget allows,
/// the endpoint of the current worst retained pair that takes part in more of
/// the worst pairs is removed. Each particle carries measure `1 / len`. The
/// removal order does not depend on `eta`, so the result is nonincreasing in it.
pub fn restricted_lipschitz_curve(
    map: &FlowMap,
    etas: &[f64],
    pairs: &PairSample,
) -> Result<Vec<StretchStatistics>, LagrangianError> {
    for &eta in etas {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(LagrangianError::InvalidEta(eta));
        }
    }
    if pairs.len() < map.len() {
        return Err(LagrangianError::PairBudgetTooSmall {
            pairs: pairs.len(),
            particles: map.len(),
        });
    }
    let stretch = pair_stretches(map, &pairs.pairs);
    let mut order: Vec<u32> = (0..stretch.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        stretch[b as usize]
            .total_cmp(&stretch[a as usize])
            .then(a.cmp(&b))
    });

    let total = map.len();
    let budget = |eta: f64| (eta * total as f64).floor() as usize;
    let max_budget = etas.iter().map(|&e| budget(e)).max().unwrap_or(0);
    let window = (8 * max_budget + 1024).min(order.len());
    let mut badness = vec![0u32; total];
    for &m in &order[..window] {
        let (p, q) = pairs.pairs[m as usize];
        badness[p as usize] += 1;
        badness[q as usize] += 1;
    }

    let mut removed = vec![false; total];
    let mut sequence: Vec<u32> = Vec::new();
    // (stretch, pair) of the worst retained pair after each removal count
    let mut worst_after: Vec<Option<(f64, (u32, u32))>> = Vec::with_capacity(max_budget + 1);
    let mut cursor = 0usize;
    loop {
        while cursor < order.len() {
            let (p, q) = pairs.pairs[order[cursor] as usize];
            if !removed[p as usize] && !removed[q as usize] {
                break;
            }
            cursor += 1;
        }
        if cursor == order.len() {
            worst_after.push(None);
            break;
        }
        let pair = pairs.pairs[order[cursor] as usize];
        worst_after.push(Some((stretch[order[cursor] as usize], pair)));
        if sequence.len() == max_budget {
            break;
        }
        let (p, q) = pair;
        let victim = if badness[q as usize] > badness[p as usize] {
            q
        } else {
            p
        };
        removed[victim as usize] = true;
        sequence.push(victim);
    }

    Ok(etas
        .iter()
        .map(|&eta| {
            let k = budget(eta).min(worst_after.len() - 1);
            let worst = worst_after[k];
            StretchStatistics {
                eta,
                lip: worst.map_or(0.0, |w| w.0),
                exceptional: sequence[..k.min(sequence.len())].to_vec(),
                removed_measure: k.min(sequence.len()) as f64 / total as f64,
                pairs: pairs.len(),
                worst_pair: worst.map(|w| w.1),
            }
        })
        .collect())
}

/// Restricted Lipschitz constant of `map` off a greedy exceptional set of measure at most `eta`.
pub fn restricted_lipschitz(
    map: &FlowMap,
    eta: f64,
    pairs: &PairSample,
) -> Result<StretchStatistics, LagrangianError> {
    Ok(restricted_lipschitz_curve(map, &[eta], pairs)?.remove(0))
}
