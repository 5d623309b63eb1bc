use std::ops::Range;

use crate::torus::unit_mod;
use crate::{Error, Result};

/// A list of points in the unit torus `[0,1)^n`, stored row-major.
///
/// `free_dims` marks the dimensions a filter is allowed to move; the others
/// are carried through filtering bit-for-bit (gridded patterns).
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    free_dims: Vec<bool>,
}

impl PointSet {
    /// Builds a point set from row-major coordinates; every coordinate must lie in `[0,1)`.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("point dimension must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::usage(format!(
                "{} coordinates do not form {dim}-dimensional points",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(Error::usage(format!("coordinate {c} outside [0,1)")));
        }
        Ok(Self {
            dim,
            coords,
            free_dims: vec![true; dim],
        })
    }

    /// Builds a point set from arbitrary finite coordinates, wrapping each into `[0,1)`.
    pub fn from_wrapped(dim: usize, mut coords: Vec<f64>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::numeric(format!("non-finite coordinate {c}")));
        }
        coords.iter_mut().for_each(|c| *c = unit_mod(*c));
        Self::new(dim, coords)
    }

    pub(crate) fn from_parts(dim: usize, coords: Vec<f64>, free_dims: Vec<bool>) -> Self {
        debug_assert_eq!(free_dims.len(), dim);
        debug_assert_eq!(coords.len() % dim, 0);
        Self {
            dim,
            coords,
            free_dims,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn free_dims(&self) -> &[bool] {
        &self.free_dims
    }

    /// Replaces the free-dimension mask.
    pub fn with_free_dims(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.dim {
            return Err(Error::usage(format!(
                "free-dimension mask has {} entries for {} dimensions",
                mask.len(),
                self.dim
            )));
        }
        self.free_dims = mask;
        Ok(self)
    }

    /// Toroidal translation `x ⊕ t` of every point.
    pub fn translated(&self, t: &[f64]) -> Result<Self> {
        if t.len() != self.dim {
            return Err(Error::usage("translation dimension mismatch"));
        }
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, c)| unit_mod(c + t[i % self.dim]))
            .collect();
        Ok(Self::from_parts(self.dim, coords, self.free_dims.clone()))
    }

    /// Reorders points so that output point `i` is input point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for &p in perm {
            coords.extend_from_slice(self.point(p));
        }
        Self::from_parts(self.dim, coords, self.free_dims.clone())
    }

    /// Contiguous run of points, zero-based half-open.
    pub fn subset(&self, range: Range<usize>) -> Self {
        let coords = self.coords[range.start * self.dim..range.end * self.dim].to_vec();
        Self::from_parts(self.dim, coords, self.free_dims.clone())
    }
}
