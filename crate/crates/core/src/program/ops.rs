use std::ops::Range;

use rand::Rng;

use crate::samplers::rng_from_seed;
use crate::{Error, PointSet, Result};

/// Keeps the listed dimensions, in the listed order.
pub fn project(points: &PointSet, dims: &[usize]) -> Result<PointSet> {
    if dims.is_empty() {
        return Err(Error::usage("projection needs at least one dimension"));
    }
    for (i, d) in dims.iter().enumerate() {
        if *d >= points.dim() {
            return Err(Error::usage(format!(
                "dimension {d} out of range for {}-dimensional points",
                points.dim()
            )));
        }
        if dims[..i].contains(d) {
            return Err(Error::usage(format!("dimension {d} listed twice")));
        }
    }
    let mut coords = Vec::with_capacity(points.len() * dims.len());
    for p in points.points() {
        coords.extend(dims.iter().map(|d| p[*d]));
    }
    let free = dims.iter().map(|d| points.free_dims()[*d]).collect();
    Ok(PointSet::from_parts(dims.len(), coords, free))
}

/// Index ranges evaluated by `prog`: the full sequence, both halves and one
/// random window whose length is a power of two no shorter than `len / 8`.
pub fn progressive_ranges(len: usize, seed: u64) -> Result<Vec<Range<usize>>> {
    if len < 2 {
        return Err(Error::usage(format!(
            "progressive evaluation needs at least 2 points, got {len}"
        )));
    }
    let half = len / 2;
    let lengths: Vec<usize> = std::iter::successors(Some(1usize), |l| l.checked_mul(2))
        .take_while(|l| *l <= len)
        .filter(|l| l * 8 >= len)
        .collect();
    let mut rng = rng_from_seed(seed);
    let l = lengths[rng.gen_range(0..lengths.len())];
    let start = rng.gen_range(0..=len - l);
    Ok(vec![0..len, 0..half, half..len, start..start + l])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_selects_and_reorders() {
        let p = PointSet::new(3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
            .unwrap()
            .with_free_dims(vec![true, false, true])
            .unwrap();
        let q = project(&p, &[2, 1]).unwrap();
        assert_eq!(q.coords(), &[0.3, 0.2, 0.6, 0.5]);
        assert_eq!(q.free_dims(), &[true, false]);
        assert!(project(&p, &[3]).is_err());
        assert!(project(&p, &[1, 1]).is_err());
        assert!(project(&p, &[]).is_err());
    }

    #[test]
    fn ranges_cover_halves_and_power_of_two() {
        for len in [2usize, 3, 7, 64, 100, 1000] {
            for seed in 0..50 {
                let r = progressive_ranges(len, seed).unwrap();
                assert_eq!(r[0], 0..len);
                assert_eq!(r[1], 0..len / 2);
                assert_eq!(r[2], len / 2..len);
                let w = &r[3];
                let l = w.end - w.start;
                assert!(l.is_power_of_two() && l * 8 >= len && w.end <= len);
            }
        }
        assert!(progressive_ranges(1, 0).is_err());
    }
}
