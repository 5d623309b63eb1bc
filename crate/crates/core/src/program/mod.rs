//! Sample programs: a tiny language combining losses and point operators.
//!
//! ```text
//! Program   := Term ('+' Term)*
//! Term      := [Number '*'] Loss '(' PointExpr (',' Arg)* ')'
//! Loss      := 'bn' | 'spec' | 'pcf' | 'aniso' | 'disc' | 'task'
//! PointExpr := 's'
//!            | 'proj' '(' DimList ',' PointExpr ')'
//!            | 'prog' '(' PointExpr ')'
//!            | 'grid' '(' DimList ',' PointExpr ')'
//! DimList   := Int (',' Int)*
//! Arg       := any run of characters other than whitespace, ',' and ')'
//! ```
//!
//! `bn` is `spec` with the built-in blue-noise target. `spec` takes a target
//! file or a built-in name (`bn`, `jitter`, `green`, `pink`), `pcf` a
//! histogram file and `task` an 8-bit PGM image. Losses are always
//! outermost: write `bn(proj(0, s))`, not `proj(bn(s))`. The long names
//! `spectral`, `differential`, `anisotropy` and `discrepancy` are accepted as
//! aliases and printed in short form.
//!
//! Radial projection is not a point operator: spectral and anisotropy losses
//! already reduce the frequency lattice radially.

mod eval;
mod ops;
mod parser;

use std::fmt;

pub use eval::{evaluate_program, evaluate_program_with_grad, LossContext, StepDraws};
pub(crate) use eval::evaluate_impl;
pub use ops::{progressive_ranges, project};
pub use parser::{parse, parse_for_dim};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Loss {
    /// Spectral loss against the built-in blue-noise target.
    Bn,
    /// Spectral loss against a named target (file path or built-in name).
    Spec(String),
    /// Differential (pair-correlation) loss against a histogram file.
    Pcf(String),
    Aniso,
    Disc,
    /// Task integral over an image file.
    Task(String),
}

impl Loss {
    pub fn name(&self) -> &'static str {
        match self {
            Loss::Bn => "bn",
            Loss::Spec(_) => "spec",
            Loss::Pcf(_) => "pcf",
            Loss::Aniso => "aniso",
            Loss::Disc => "disc",
            Loss::Task(_) => "task",
        }
    }

    pub fn argument(&self) -> Option<&str> {
        match self {
            Loss::Spec(a) | Loss::Pcf(a) | Loss::Task(a) => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointExpr {
    Var,
    Proj(Vec<usize>, Box<PointExpr>),
    Prog(Box<PointExpr>),
    Grid(Vec<usize>, Box<PointExpr>),
}

impl PointExpr {
    /// Output dimension given the dimension of `s`.
    pub fn output_dim(&self, dim: usize) -> usize {
        match self {
            PointExpr::Var => dim,
            PointExpr::Proj(dims, _) => dims.len(),
            PointExpr::Prog(e) | PointExpr::Grid(_, e) => e.output_dim(dim),
        }
    }

    /// For each output dimension, the dimension of `s` it comes from.
    fn source_dims(&self, dim: usize) -> Vec<usize> {
        match self {
            PointExpr::Var => (0..dim).collect(),
            PointExpr::Proj(dims, e) => {
                let inner = e.source_dims(dim);
                dims.iter().map(|d| inner[*d]).collect()
            }
            PointExpr::Prog(e) | PointExpr::Grid(_, e) => e.source_dims(dim),
        }
    }

    fn collect_fixed(&self, dim: usize, fixed: &mut [bool]) {
        match self {
            PointExpr::Var => {}
            PointExpr::Proj(_, e) | PointExpr::Prog(e) => e.collect_fixed(dim, fixed),
            PointExpr::Grid(dims, e) => {
                let src = e.source_dims(dim);
                for d in dims {
                    fixed[src[*d]] = true;
                }
                e.collect_fixed(dim, fixed);
            }
        }
    }

    /// Checks every dimension list against the dimension flowing into it.
    fn check_dims(&self, dim: usize) -> Result<()> {
        match self {
            PointExpr::Var => Ok(()),
            PointExpr::Prog(e) => e.check_dims(dim),
            PointExpr::Proj(dims, e) | PointExpr::Grid(dims, e) => {
                e.check_dims(dim)?;
                let inner = e.output_dim(dim);
                match dims.iter().find(|d| **d >= inner) {
                    Some(d) => Err(Error::usage(format!(
                        "dimension {d} out of range for {inner}-dimensional points"
                    ))),
                    None => Ok(()),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub weight: f64,
    pub loss: Loss,
    pub expr: PointExpr,
}

/// A parsed sample program: a weighted sum of loss terms.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgramAst {
    pub terms: Vec<Term>,
}

impl ProgramAst {
    /// The same program with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    weight: t.weight * factor,
                    ..t.clone()
                })
                .collect(),
        }
    }

    pub fn check_dims(&self, dim: usize) -> Result<()> {
        self.terms.iter().try_for_each(|t| t.expr.check_dims(dim))
    }

    /// Dimensions pinned by `grid` operators anywhere in the program.
    pub fn fixed_dims(&self, dim: usize) -> Result<Vec<bool>> {
        self.check_dims(dim)?;
        let mut fixed = vec![false; dim];
        for t in &self.terms {
            t.expr.collect_fixed(dim, &mut fixed);
        }
        Ok(fixed)
    }

    /// Free-dimension mask for filtering (complement of [`Self::fixed_dims`]).
    pub fn free_dims(&self, dim: usize) -> Result<Vec<bool>> {
        let free: Vec<bool> = self.fixed_dims(dim)?.into_iter().map(|f| !f).collect();
        if !free.iter().any(|f| *f) {
            return Err(Error::usage("grid operators fix every dimension; nothing left to filter"));
        }
        Ok(free)
    }
}

fn write_dims(f: &mut fmt::Formatter<'_>, dims: &[usize]) -> fmt::Result {
    for d in dims {
        write!(f, "{d}, ")?;
    }
    Ok(())
}

impl fmt::Display for PointExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointExpr::Var => f.write_str("s"),
            PointExpr::Proj(dims, e) => {
                f.write_str("proj(")?;
                write_dims(f, dims)?;
                write!(f, "{e})")
            }
            PointExpr::Prog(e) => write!(f, "prog({e})"),
            PointExpr::Grid(dims, e) => {
                f.write_str("grid(")?;
                write_dims(f, dims)?;
                write!(f, "{e})")
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weight != 1.0 {
            write!(f, "{}*", self.weight)?;
        }
        write!(f, "{}({}", self.loss.name(), self.expr)?;
        if let Some(arg) = self.loss.argument() {
            write!(f, ", {arg}")?;
        }
        f.write_str(")")
    }
}

/// Canonical text form; `parse(&ast.to_string())` reproduces `ast`.
impl fmt::Display for ProgramAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Canonical text of a program.
pub fn print(ast: &ProgramAst) -> String {
    ast.to_string()
}
