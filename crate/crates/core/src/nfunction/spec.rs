use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    compose_linear, make_aniso, make_cosh, make_cosh_conjugate, make_exponential, make_power,
    Kind, NFunction,
};
use crate::error::{Error, Result};
use crate::ConvexFunction;

/// JSON description of an [`NFunction`].
///
/// ```json
/// {"kind": "power", "p": 2.0, "dim": 2}
/// {"kind": "aniso", "p1": 2.0, "p2": 4.0, "d1": 1, "d2": 1}
/// {"kind": "exp", "dim": 2}
/// {"kind": "composed", "dim": 2, "parts": [{"inner": {...}, "rows": 1, "matrix": [1.0, -1.0]}]}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NFunctionSpec {
    Power { p: f64, dim: usize },
    Aniso { p1: f64, p2: f64, d1: usize, d2: usize },
    Exp { dim: usize },
    Cosh { dim: usize },
    CoshConj { dim: usize },
    Composed { dim: usize, parts: Vec<PartSpec> },
}

/// One part of a composed function; `matrix` holds `rows x dim` entries in
/// row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    pub inner: NFunctionSpec,
    pub rows: usize,
    pub matrix: Vec<f64>,
}

impl NFunctionSpec {
    pub fn build(&self) -> Result<NFunction> {
        match self {
            NFunctionSpec::Power { p, dim } => make_power(*p, *dim),
            NFunctionSpec::Aniso { p1, p2, d1, d2 } => make_aniso(*p1, *p2, *d1, *d2),
            NFunctionSpec::Exp { dim } => make_exponential(*dim),
            NFunctionSpec::Cosh { dim } => make_cosh(*dim),
            NFunctionSpec::CoshConj { dim } => make_cosh_conjugate(*dim),
            NFunctionSpec::Composed { dim, parts } => {
                let built = parts
                    .iter()
                    .map(|part| {
                        if part.matrix.len() != part.rows * dim {
                            return Err(Error::DimensionMismatch {
                                expected: part.rows * dim,
                                found: part.matrix.len(),
                            });
                        }
                        let map = DMatrix::from_row_slice(part.rows, *dim, &part.matrix);
                        Ok((part.inner.build()?, map))
                    })
                    .collect::<Result<Vec<_>>>()?;
                compose_linear(built)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            NFunctionSpec::Power { dim, .. }
            | NFunctionSpec::Exp { dim }
            | NFunctionSpec::Cosh { dim }
            | NFunctionSpec::CoshConj { dim }
            | NFunctionSpec::Composed { dim, .. } => *dim,
            NFunctionSpec::Aniso { d1, d2, .. } => d1 + d2,
        }
    }
}

impl NFunction {
    /// The serializable description, or `None` for custom functions.
    pub fn to_spec(&self) -> Option<NFunctionSpec> {
        let dim = self.dim();
        Some(match self.kind() {
            Kind::Power { p } => NFunctionSpec::Power { p: *p, dim },
            Kind::Aniso { p1, p2, d1, d2 } => {
                NFunctionSpec::Aniso { p1: *p1, p2: *p2, d1: *d1, d2: *d2 }
            }
            Kind::Exponential => NFunctionSpec::Exp { dim },
            Kind::Cosh => NFunctionSpec::Cosh { dim },
            Kind::CoshConjugate => NFunctionSpec::CoshConj { dim },
            Kind::Composed(parts) => NFunctionSpec::Composed {
                dim,
                parts: parts
                    .iter()
                    .map(|part| {
                        let rows = part.map.nrows();
                        let matrix = (0..rows)
                            .flat_map(|i| (0..dim).map(move |j| (i, j)))
                            .map(|(i, j)| part.map[(i, j)])
                            .collect();
                        part.inner.to_spec().map(|inner| PartSpec { inner, rows, matrix })
                    })
                    .collect::<Option<Vec<_>>>()?,
            },
            Kind::Custom { .. } => return None,
        })
    }
}
