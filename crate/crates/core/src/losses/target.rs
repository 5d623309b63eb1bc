use std::f64::consts::PI;

use crate::{Error, Result};

/// Analytic target shapes, parameterised by the natural frequency scale
/// `f = N^{1/n}` of the point set they are applied to. These are
/// approximations; file-loaded tables are authoritative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinTarget {
    /// Radial step from 0 to 1 at `0.85·f·ρ_n`, ramped over 2 lattice units.
    BlueNoise,
    /// `1 − sinc(r/f)^{2n}`, the radial profile of a stratified pattern.
    Jitter,
    /// Mid-band peak around `f/2`, suppressed lows.
    Green,
    /// Low-frequency-heavy `min(4, f/(2r))`.
    Pink,
}

impl BuiltinTarget {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "bn" => BuiltinTarget::BlueNoise,
            "jitter" => BuiltinTarget::Jitter,
            "green" => BuiltinTarget::Green,
            "pink" => BuiltinTarget::Pink,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinTarget::BlueNoise => "bn",
            BuiltinTarget::Jitter => "jitter",
            BuiltinTarget::Green => "green",
            BuiltinTarget::Pink => "pink",
        }
    }

    /// Packing constant scaling the blue-noise cutoff: hexagonal packing in 2D.
    fn packing_constant(dim: usize) -> f64 {
        match dim {
            2 => 1.0 / (2.0 / 3f64.sqrt()).sqrt(),
            _ => 1.0,
        }
    }

    /// Target power at lattice radius `r` for `count` points in `dim` dimensions.
    pub fn value(&self, r: f64, count: usize, dim: usize) -> f64 {
        let f = (count as f64).powf(1.0 / dim as f64);
        match self {
            BuiltinTarget::BlueNoise => {
                let cutoff = 0.85 * f * Self::packing_constant(dim);
                ((r - (cutoff - 1.0)) / 2.0).clamp(0.0, 1.0)
            }
            BuiltinTarget::Jitter => {
                let x = PI * r / f;
                let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
                1.0 - sinc.powi(2 * dim as i32)
            }
            BuiltinTarget::Green => {
                let peak = ((r - 0.5 * f) / (0.15 * f)).powi(2);
                let low = (r / (0.2 * f)).powi(2);
                (1.0 + 1.5 * (-peak).exp() - (-low).exp()).max(0.0)
            }
            BuiltinTarget::Pink => (0.5 * f / r.max(1e-9)).min(4.0),
        }
    }
}

/// Radially symmetric target `radius,power`, linearly interpolated.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable {
    radius: Vec<f64>,
    power: Vec<f64>,
}

impl RadialTable {
    pub fn new(radius: Vec<f64>, power: Vec<f64>) -> Result<Self> {
        if radius.is_empty() || radius.len() != power.len() {
            return Err(Error::usage("radial table needs matching, non-empty radius and power columns"));
        }
        if radius.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::usage("radial table radii must be strictly increasing"));
        }
        if power.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::usage("radial table powers must be finite and nonnegative"));
        }
        Ok(Self { radius, power })
    }

    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    /// Interpolated power; `None` outside the tabulated radii.
    pub fn lookup(&self, r: f64) -> Option<f64> {
        let last = *self.radius.last()?;
        let tol = 1e-9 * last.max(1.0);
        if r < self.radius[0] - tol || r > last + tol {
            return None;
        }
        let idx = self.radius.partition_point(|x| *x <= r);
        if idx == 0 {
            return Some(self.power[0]);
        }
        if idx == self.radius.len() {
            return Some(*self.power.last()?);
        }
        let (r0, r1) = (self.radius[idx - 1], self.radius[idx]);
        let t = (r - r0) / (r1 - r0);
        Some(self.power[idx - 1] * (1.0 - t) + self.power[idx] * t)
    }
}

/// The spectrum a spectral loss pulls towards.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpectrum {
    /// Evaluated at `‖k‖` in lattice units.
    Radial(RadialTable),
    /// Full 2D table indexed by `(k0 + K, k1 + K)`, row-major over `k0`.
    Full { extent: usize, power: Vec<f64> },
    Builtin(BuiltinTarget),
}

impl TargetSpectrum {
    /// Target values on the whole `[-K, K]^n` lattice for point sets of `count` points.
    pub(crate) fn lattice_values(&self, extent: usize, count: usize, dim: usize) -> Result<Vec<f64>> {
        let side = 2 * extent + 1;
        let size = side.pow(dim as u32);
        let mut out = Vec::with_capacity(size);
        if let TargetSpectrum::Full { extent: e, power } = self {
            if dim != 2 || *e != extent {
                return Err(Error::usage(format!(
                    "full target table is 2D with extent {e}; loss needs {dim}D extent {extent}"
                )));
            }
            return Ok(power.clone());
        }
        let mut k = vec![0i64; dim];
        for idx in 0..size {
            lattice_point(idx, extent, &mut k);
            let r = k.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt();
            let value = match self {
                TargetSpectrum::Radial(table) => table.lookup(r).ok_or_else(|| {
                    Error::usage(format!(
                        "radial target undefined at frequency radius {r:.3} (table covers {:.3}..{:.3})",
                        table.radius[0],
                        table.radius.last().copied().unwrap_or(0.0)
                    ))
                })?,
                TargetSpectrum::Builtin(b) => b.value(r, count, dim),
                TargetSpectrum::Full { .. } => unreachable!(),
            };
            out.push(value);
        }
        Ok(out)
    }
}

/// Integer frequency of lattice index `idx` (row-major over `[-K, K]^n`, dimension 0 slowest).
pub(crate) fn lattice_point(mut idx: usize, extent: usize, k: &mut [i64]) {
    let side = 2 * extent + 1;
    for d in (0..k.len()).rev() {
        k[d] = (idx % side) as i64 - extent as i64;
        idx /= side;
    }
}
