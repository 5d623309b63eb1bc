//! Arithmetic on the unit torus and fixed-radius neighbour search.

use crate::{Error, PointSet, Result};

/// `x mod 1` mapped into `[0,1)`, including the rounding case where the
/// naive remainder lands on exactly 1.
#[inline]
pub fn unit_mod(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Toroidal difference of two coordinates, in `[-0.5, 0.5)`.
#[inline]
pub fn diff_component(a: f64, b: f64) -> f64 {
    unit_mod(a - b + 0.5) - 0.5
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = diff_component(*x, *y);
            d * d
        })
        .sum()
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::usage(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `a ⊖ b`: per-component `((a−b+0.5) mod 1) − 0.5`.
///
/// The antipodal offset is represented as `−0.5` in both directions.
pub fn toroidal_diff(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_dims(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| diff_component(*x, *y)).collect())
}

/// Euclidean length of the toroidal difference; at most `0.5·√n`.
pub fn toroidal_dist(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    Ok(dist_sq(a, b).sqrt())
}

/// Maps every component into `[0,1)`.
pub fn wrap(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(c) = p.iter().find(|c| !c.is_finite()) {
        return Err(Error::numeric(format!("cannot wrap non-finite component {c}")));
    }
    Ok(p.iter().map(|c| unit_mod(*c)).collect())
}

/// Uniform bucket grid over the torus whose cells are at least `radius` wide,
/// so a fixed-radius query only has to visit the 3^n surrounding cells.
#[derive(Clone, Debug)]
pub struct NeighborGrid {
    dim: usize,
    cells_per_axis: usize,
    cell_size: f64,
    buckets: Vec<Vec<usize>>,
    point_count: usize,
    /// Flattened offsets of the distinct cells around any cell.
    stencil: Vec<Vec<isize>>,
}

impl NeighborGrid {
    pub fn build(points: &PointSet, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= 0.5) {
            return Err(Error::usage(format!(
                "neighbour radius {radius} outside (0, 0.5]"
            )));
        }
        let dim = points.dim();
        let cells_per_axis = ((1.0 / radius).floor() as usize).max(1);
        // Past 3 cells per axis the stencil would repeat cells; cap the bucket
        // count so high-dimensional grids stay small.
        let total = cells_per_axis
            .checked_pow(dim as u32)
            .filter(|t| *t <= 1 << 20)
            .unwrap_or(0);
        let (cells_per_axis, total) = if total == 0 { (1, 1) } else { (cells_per_axis, total) };
        let mut buckets = vec![Vec::new(); total];
        let cell_size = 1.0 / cells_per_axis as f64;
        let mut grid = Self {
            dim,
            cells_per_axis,
            cell_size,
            buckets: Vec::new(),
            point_count: points.len(),
            stencil: Vec::new(),
        };
        for (i, p) in points.points().enumerate() {
            buckets[grid.cell_of(p)].push(i);
        }
        grid.buckets = buckets;
        grid.stencil = grid.build_stencil();
        Ok(grid)
    }

    fn cell_coord(&self, c: f64) -> usize {
        ((c / self.cell_size) as usize).min(self.cells_per_axis - 1)
    }

    fn cell_of(&self, p: &[f64]) -> usize {
        p.iter()
            .fold(0, |acc, c| acc * self.cells_per_axis + self.cell_coord(*c))
    }

    fn build_stencil(&self) -> Vec<Vec<isize>> {
        let span: Vec<isize> = match self.cells_per_axis {
            1 => vec![0],
            2 => vec![0, 1],
            _ => vec![-1, 0, 1],
        };
        let mut out = vec![Vec::new()];
        for _ in 0..self.dim {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    span.iter().map(move |s| {
                        let mut v = prefix.clone();
                        v.push(*s);
                        v
                    })
                })
                .collect();
        }
        out
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// Point indices stored in the cell with the given integer coordinates.
    pub fn bucket(&self, cell: &[usize]) -> &[usize] {
        let idx = cell.iter().fold(0, |acc, c| acc * self.cells_per_axis + c);
        &self.buckets[idx]
    }

    /// Indices `j ≠ i` with `toroidal_dist(x_i, x_j) ≤ radius`, ascending.
    pub fn query(&self, points: &PointSet, i: usize, radius: f64) -> Result<Vec<usize>> {
        if points.len() != self.point_count || points.dim() != self.dim {
            return Err(Error::usage(format!(
                "stale neighbour grid: built for {} points, queried with {}",
                self.point_count,
                points.len()
            )));
        }
        if i >= points.len() {
            return Err(Error::usage(format!("point index {i} out of range")));
        }
        let mut out = Vec::new();
        self.neighbors_into(points, i, radius, &mut out);
        Ok(out)
    }

    /// Unchecked query used by the filter hot loop.
    pub(crate) fn neighbors_into(
        &self,
        points: &PointSet,
        i: usize,
        radius: f64,
        out: &mut Vec<usize>,
    ) {
        out.clear();
        let xi = points.point(i);
        let r2 = radius * radius;
        if radius > self.cell_size || self.stencil.len() == self.buckets.len() {
            for (j, xj) in points.points().enumerate() {
                if j != i && dist_sq(xi, xj) <= r2 {
                    out.push(j);
                }
            }
            return;
        }
        let home: Vec<usize> = xi.iter().map(|c| self.cell_coord(*c)).collect();
        let n = self.cells_per_axis as isize;
        for offset in &self.stencil {
            let idx = home.iter().zip(offset).fold(0usize, |acc, (h, o)| {
                acc * self.cells_per_axis + (*h as isize + o).rem_euclid(n) as usize
            });
            for &j in &self.buckets[idx] {
                if j != i && dist_sq(xi, points.point(j)) <= r2 {
                    out.push(j);
                }
            }
        }
        out.sort_unstable();
    }
}
