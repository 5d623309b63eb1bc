//! Reference and initialisation point patterns.
//!
//! All seeded samplers draw from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded
//! with `seed_from_u64`, so outputs are bit-reproducible across platforms.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, PointSet, Result};

/// The first 16 primes, used as Halton/Hammersley bases.
pub const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_shape(count: usize, dim: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::usage("point count must be at least 1"));
    }
    if dim == 0 {
        return Err(Error::usage("dimension must be at least 1"));
    }
    Ok(())
}

/// i.i.d. uniform points.
pub fn random_points(count: usize, dim: usize, seed: u64) -> Result<PointSet> {
    check_shape(count, dim)?;
    let mut rng = rng_from_seed(seed);
    let coords = (0..count * dim).map(|_| rng.gen::<f64>()).collect();
    PointSet::new(dim, coords)
}

fn strata_per_axis(count: usize, dim: usize) -> Result<usize> {
    let k = (count as f64).powf(1.0 / dim as f64).round() as usize;
    let pow = |k: usize| k.checked_pow(dim as u32).unwrap_or(usize::MAX);
    if pow(k) == count {
        return Ok(k);
    }
    let lo = (count as f64).powf(1.0 / dim as f64).floor().max(1.0) as usize;
    let (below, above) = (pow(lo), pow(lo + 1));
    let nearest = if count - below <= above.saturating_sub(count) { below } else { above };
    Err(Error::usage(format!(
        "jittered sampling needs a perfect {dim}-th power point count; {count} is not (nearest valid: {nearest})"
    )))
}

/// One uniform point per cell of a `k^n` stratification; requires `count = k^n`.
/// Points are emitted in row-major cell order.
pub fn jittered_points(count: usize, dim: usize, seed: u64) -> Result<PointSet> {
    check_shape(count, dim)?;
    let k = strata_per_axis(count, dim)?;
    let mut rng = rng_from_seed(seed);
    let mut coords = Vec::with_capacity(count * dim);
    for cell in 0..count {
        let mut digits = vec![0usize; dim];
        let mut c = cell;
        for d in (0..dim).rev() {
            digits[d] = c % k;
            c /= k;
        }
        for digit in digits {
            let v = (digit as f64 + rng.gen::<f64>()) / k as f64;
            coords.push(v.min(1.0 - f64::EPSILON / 2.0));
        }
    }
    PointSet::new(dim, coords)
}

/// Digit reversal of `index` in `base` about the radix point.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    assert!(base >= 2, "radical inverse base must be at least 2");
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % b) as f64 * factor;
        index /= b;
        factor *= inv;
    }
    out
}

fn check_prime_budget(dim: usize) -> Result<()> {
    if dim > PRIMES.len() {
        return Err(Error::usage(format!(
            "at most {} dimensions are supported by the prime table, got {dim}",
            PRIMES.len()
        )));
    }
    Ok(())
}

/// Halton points over indices `1..=count` (the origin is skipped).
pub fn halton_points(count: usize, dim: usize) -> Result<PointSet> {
    check_shape(count, dim)?;
    check_prime_budget(dim)?;
    let coords = (1..=count as u64)
        .flat_map(|i| PRIMES[..dim].iter().map(move |b| radical_inverse(i, *b)))
        .collect();
    PointSet::new(dim, coords)
}

/// Hammersley points: `i/count` in dimension 0, radical inverses in the rest.
pub fn hammersley_points(count: usize, dim: usize) -> Result<PointSet> {
    check_shape(count, dim)?;
    check_prime_budget(dim)?;
    let mut coords = Vec::with_capacity(count * dim);
    for i in 0..count as u64 {
        coords.push(i as f64 / count as f64);
        coords.extend(PRIMES[..dim - 1].iter().map(|b| radical_inverse(i, *b)));
    }
    PointSet::new(dim, coords)
}

/// N-rooks sampling: each of the `count` strata of every axis holds one point.
pub fn latin_hypercube_points(count: usize, dim: usize, seed: u64) -> Result<PointSet> {
    check_shape(count, dim)?;
    let mut rng = rng_from_seed(seed);
    let mut coords = vec![0.0; count * dim];
    let mut perm: Vec<usize> = (0..count).collect();
    for d in 0..dim {
        perm.shuffle(&mut rng);
        for (i, stratum) in perm.iter().enumerate() {
            let v = (*stratum as f64 + rng.gen::<f64>()) / count as f64;
            coords[i * dim + d] = v.min(1.0 - f64::EPSILON / 2.0);
        }
    }
    PointSet::new(dim, coords)
}

/// Disk radius of the densest hexagonal packing of `count` points in the
/// unit square, `sqrt(2 / (√3·count))`; the customary scale for Poisson-disk radii.
pub fn hex_packing_radius(count: usize) -> f64 {
    (2.0 / (3f64.sqrt() * count as f64)).sqrt()
}

/// Toroidal dart throwing: uniform candidates are accepted when no accepted
/// point lies closer than `radius`.
pub fn poisson_disk_points(count: usize, dim: usize, radius: f64, seed: u64) -> Result<PointSet> {
    check_shape(count, dim)?;
    let max_attempts = 10_000 * count;
    let mut rng = rng_from_seed(seed);
    let mut coords: Vec<f64> = Vec::with_capacity(count * dim);
    let r2 = radius * radius;
    let mut candidate = vec![0.0; dim];
    for _ in 0..max_attempts {
        if coords.len() == count * dim {
            break;
        }
        candidate.iter_mut().for_each(|c| *c = rng.gen());
        if coords
            .chunks_exact(dim)
            .all(|p| crate::torus::dist_sq(p, &candidate) >= r2)
        {
            coords.extend_from_slice(&candidate);
        }
    }
    if coords.len() < count * dim {
        return Err(Error::usage(format!(
            "dart throwing placed only {} of {count} points at radius {radius}",
            coords.len() / dim
        )));
    }
    PointSet::new(dim, coords)
}

/// A named pattern generator, as accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampler {
    Random,
    Jittered,
    Halton,
    Hammersley,
    LatinHypercube,
    /// Dart throwing with radius `relative_radius · hex_packing_radius(N)`.
    PoissonDisk { relative_radius: f64 },
}

impl Sampler {
    pub const DEFAULT_POISSON_RELATIVE_RADIUS: f64 = 0.65;

    pub fn generate(&self, count: usize, dim: usize, seed: u64) -> Result<PointSet> {
        match self {
            Sampler::Random => random_points(count, dim, seed),
            Sampler::Jittered => jittered_points(count, dim, seed),
            Sampler::Halton => halton_points(count, dim),
            Sampler::Hammersley => hammersley_points(count, dim),
            Sampler::LatinHypercube => latin_hypercube_points(count, dim, seed),
            Sampler::PoissonDisk { relative_radius } => {
                let r = relative_radius * hex_packing_radius(count);
                poisson_disk_points(count, dim, r, seed)
            }
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Sampler::Random => "random".to_string(),
            Sampler::Jittered => "jittered".to_string(),
            Sampler::Halton => "halton".to_string(),
            Sampler::Hammersley => "hammersley".to_string(),
            Sampler::LatinHypercube => "lhc".to_string(),
            Sampler::PoissonDisk { relative_radius } => format!("poisson:{relative_radius}"),
        };
        f.pad(&name)
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => Sampler::Random,
            "jitter" | "jittered" => Sampler::Jittered,
            "halton" => Sampler::Halton,
            "hammersley" => Sampler::Hammersley,
            "lhc" | "latin" | "nrooks" => Sampler::LatinHypercube,
            "poisson" => Sampler::PoissonDisk {
                relative_radius: Self::DEFAULT_POISSON_RELATIVE_RADIUS,
            },
            other => {
                if let Some(r) = other.strip_prefix("poisson:") {
                    let relative_radius = r
                        .parse::<f64>()
                        .ok()
                        .filter(|r| *r > 0.0)
                        .ok_or_else(|| Error::usage(format!("bad poisson radius '{r}'")))?;
                    Sampler::PoissonDisk { relative_radius }
                } else {
                    return Err(Error::usage(format!(
                        "unknown sampler '{other}' (expected random, jittered, halton, hammersley, lhc, poisson[:r])"
                    )));
                }
            }
        })
    }
}
