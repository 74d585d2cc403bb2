//! Seed placement: uniform lattice, pseudorandom, and Sobol quasirandom.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Domain, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedingStrategy {
    Uniform,
    Random,
    Sobol,
}

impl fmt::Display for SeedingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeedingStrategy::Uniform => "uniform",
            SeedingStrategy::Random => "random",
            SeedingStrategy::Sobol => "sobol",
        })
    }
}

impl FromStr for SeedingStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "random" => Ok(Self::Random),
            "sobol" => Ok(Self::Sobol),
            other => Err(format!("unknown seeding strategy `{other}`")),
        }
    }
}

/// A set of seed positions plus the token needed to regenerate it.
///
/// `token` is the RNG seed for `Random`, the sequence skip for `Sobol`, and
/// `nx << 32 | ny` for `Uniform`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSet {
    pub positions: Vec<Vec3>,
    pub strategy: SeedingStrategy,
    pub token: u64,
    pub domain: Domain,
}

impl SeedSet {
    /// Seeds given explicitly, e.g. by an interactive client.
    pub fn explicit(positions: Vec<Vec3>, domain: Domain) -> Self {
        Self { positions, strategy: SeedingStrategy::Random, token: 0, domain }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Vertex-centered `nx × ny` lattice including the domain boundary; an axis
/// with a single node uses the domain midpoint. Ordered with x varying fastest.
pub fn seed_uniform(domain: Domain, nx: NonZeroUsize, ny: NonZeroUsize) -> SeedSet {
    let xs = lattice(domain.x_min, domain.x_max, nx.get());
    let ys = lattice(domain.y_min, domain.y_max, ny.get());
    let positions = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Vec3::xy(x, y)))
        .collect();
    SeedSet {
        positions,
        strategy: SeedingStrategy::Uniform,
        token: ((nx.get() as u64) << 32) | ny.get() as u64,
        domain,
    }
}

/// `n` i.i.d. uniform positions, reproducible from `rng_seed`.
pub fn seed_random(domain: Domain, n: NonZeroUsize, rng_seed: u64) -> SeedSet {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let positions = (0..n.get())
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            domain.from_unit(u, v)
        })
        .collect();
    SeedSet { positions, strategy: SeedingStrategy::Random, token: rng_seed, domain }
}

/// Points `skip .. skip + n` of the two-dimensional Sobol sequence mapped
/// onto the domain.
pub fn seed_sobol(domain: Domain, n: NonZeroUsize, skip: u64) -> SeedSet {
    let sobol = Sobol2d::new();
    let positions = (skip..skip + n.get() as u64)
        .map(|i| {
            let [u, v] = sobol.point(i);
            domain.from_unit(u, v)
        })
        .collect();
    SeedSet { positions, strategy: SeedingStrategy::Sobol, token: skip, domain }
}

/// Regenerates a seed set from its strategy and token. For `Uniform`, `n` is
/// ignored and the lattice shape is decoded from the token.
pub fn regenerate(
    strategy: SeedingStrategy,
    domain: Domain,
    n: NonZeroUsize,
    token: u64,
) -> SeedSet {
    match strategy {
        SeedingStrategy::Uniform => {
            let nx = NonZeroUsize::new((token >> 32) as usize).unwrap_or(NonZeroUsize::MIN);
            let ny = NonZeroUsize::new((token & 0xffff_ffff) as usize).unwrap_or(NonZeroUsize::MIN);
            seed_uniform(domain, nx, ny)
        }
        SeedingStrategy::Random => seed_random(domain, n, token),
        SeedingStrategy::Sobol => seed_sobol(domain, n, token),
    }
}

/// Two-dimensional Sobol generator, Gray-code ordered, 32-bit resolution.
///
/// Dimension 0 is the van der Corput sequence; dimension 1 uses the first
/// Joe–Kuo entry (s = 1, a = 0, m = [1]).
#[derive(Debug, Clone)]
pub struct Sobol2d {
    directions: [[u32; 32]; 2],
}

impl Default for Sobol2d {
    fn default() -> Self {
        Self::new()
    }
}

impl Sobol2d {
    pub fn new() -> Self {
        let mut directions = [[0u32; 32]; 2];
        for k in 0..32 {
            directions[0][k] = 1u32 << (31 - k);
        }
        directions[1][0] = 1u32 << 31;
        for k in 1..32 {
            let prev = directions[1][k - 1];
            directions[1][k] = prev ^ (prev >> 1);
        }
        Self { directions }
    }

    /// The `index`-th point in `[0, 1)²`.
    pub fn point(&self, index: u64) -> [f64; 2] {
        let gray = index ^ (index >> 1);
        let mut acc = [0u32; 2];
        for bit in 0..32 {
            if (gray >> bit) & 1 == 1 {
                acc[0] ^= self.directions[0][bit];
                acc[1] ^= self.directions[1][bit];
            }
        }
        let scale = 1.0 / 4_294_967_296.0;
        [acc[0] as f64 * scale, acc[1] as f64 * scale]
    }
}
