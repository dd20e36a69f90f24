//! Built-in state spaces and the JSON model file format.
//!
//! A model file is a single JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "name": "gbit",
//!   "dimension": 2,
//!   "vertices": [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]],
//!   "effects": {
//!     "e_x": { "affine": [0.5, 0.5, 0.0] },
//!     "e_y": { "vertex_values": [1.0, 0.0, 1.0, 0.0] }
//!   }
//! }
//! ```
//!
//! Effects are given either by affine coefficients `(c0, c1, ..., cd)` or by
//! their values at the listed vertices; the latter must be reproducible by an
//! affine functional. Saved files always use the affine form, with numbers
//! written as shortest round-trip decimals.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpt::{Effect, StateSpace};
use crate::linalg::least_squares;
use crate::scalar::{Scalar, SolverTolerances};

pub const MODEL_FILE_VERSION: u32 = 1;

/// Zoo names shown by `zoo list`; other sizes of each family are accepted too.
pub const ZOO_NAMES: &[&str] = &[
    "simplex-2",
    "simplex-3",
    "simplex-4",
    "gbit",
    "hypercube-3",
    "polygon-4",
    "polygon-5",
    "polygon-6",
];

const MAX_HYPERCUBE_DIM: usize = 16;

/// A state space together with named effects on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T = f64> {
    pub space: StateSpace<T>,
    pub effects: BTreeMap<String, Effect<T>>,
}

impl<T: Scalar> Model<T> {
    pub fn new(space: StateSpace<T>) -> Self {
        Self {
            space,
            effects: BTreeMap::new(),
        }
    }

    pub fn effect(&self, name: &str) -> Result<&Effect<T>> {
        self.effects.get(name).ok_or_else(|| Error::Schema {
            field: format!("effects.{name}"),
            message: format!(
                "no such effect in model `{}` (available: {})",
                self.space.name(),
                self.effects.keys().cloned().collect::<Vec<_>>().join(", ")
            ),
        })
    }

    fn with_affine(mut self, name: &str, coefficients: Vec<T>) -> Result<Self> {
        let e = self
            .space
            .effect_from_affine(coefficients, &SolverTolerances::default())
            .map_err(|source| Error::Effect {
                name: name.into(),
                source: Box::new(source),
            })?;
        self.effects.insert(name.into(), e);
        Ok(self)
    }

    fn with_unit(mut self) -> Self {
        self.effects.insert("u".into(), self.space.unit());
        self
    }
}

fn zoo_space<T: Scalar>(vertices: Vec<Vec<f64>>, name: String) -> Result<StateSpace<T>> {
    let vertices = vertices
        .into_iter()
        .map(|v| v.into_iter().map(T::lit).collect())
        .collect();
    StateSpace::unchecked(vertices, name, &SolverTolerances::default())
}

/// The classical simplex with `n` vertices: the origin and the unit vectors
/// of `R^(n-1)`.
pub fn simplex<T: Scalar>(n: usize) -> Result<StateSpace<T>> {
    if n < 1 {
        return Err(Error::InvalidParameter("simplex needs n >= 1".into()));
    }
    let d = n - 1;
    let vertices = (0..n)
        .map(|i| (0..d).map(|c| if i == c + 1 { 1.0 } else { 0.0 }).collect())
        .collect();
    zoo_space(vertices, format!("simplex-{n}"))
}

/// The square with vertices `(±1, ±1)`, ordered `(1,1), (1,-1), (-1,1), (-1,-1)`.
pub fn gbit_square<T: Scalar>() -> StateSpace<T> {
    let vertices = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
    zoo_space(vertices, "gbit".into()).expect("fixed vertex set")
}

/// The cube `{±1}^d`, vertices in lexicographic order with `+1` first.
pub fn hypercube<T: Scalar>(d: usize) -> Result<StateSpace<T>> {
    if !(1..=MAX_HYPERCUBE_DIM).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "hypercube dimension must be in 1..={MAX_HYPERCUBE_DIM}, got {d}"
        )));
    }
    let vertices = (0..1usize << d)
        .map(|bits| {
            (0..d)
                .map(|c| if bits >> (d - 1 - c) & 1 == 0 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect();
    zoo_space(vertices, format!("hypercube-{d}"))
}

/// Vertices `(cos 2πj/n, sin 2πj/n)`, `j = 0..n`.
pub fn regular_polygon<T: Scalar>(n: usize) -> Result<StateSpace<T>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("polygon needs n >= 3, got {n}")));
    }
    let vertices = (0..n)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / n as f64;
            vec![a.cos(), a.sin()]
        })
        .collect();
    zoo_space(vertices, format!("polygon-{n}"))
}

/// `(x_axis - min) / (max - min)` over the vertex set.
fn rescaled_coordinate<T: Scalar>(space: &StateSpace<T>, axis: usize) -> Vec<T> {
    let lo = space.vertices().iter().map(|v| v[axis]).fold(T::infinity(), T::min);
    let hi = space.vertices().iter().map(|v| v[axis]).fold(T::neg_infinity(), T::max);
    let w = hi - lo;
    let mut c = vec![T::zero(); space.dimension() + 1];
    c[0] = -lo / w;
    c[axis + 1] = T::one() / w;
    c
}

/// A built-in model with its named effects.
///
/// * `simplex-n`: vertex indicators `v0 .. v{n-1}`; `simplex-3` also has `p`, `q`
///   with vertex values `(0.2, 0.9, 0.4)` and `(0.8, 0.1, 0.5)`.
/// * `gbit`: sharp `e_x = (1 + x)/2`, `e_y = (1 + y)/2`.
/// * `hypercube-d`: sharp `e_1 .. e_d`.
/// * `polygon-n`: coordinates rescaled to `[0, 1]`, `e_x` and `e_y`.
///
/// Every model also carries `u`.
pub fn zoo_model<T: Scalar>(name: &str) -> Result<Model<T>> {
    let unknown = || Error::InvalidParameter(format!("unknown zoo model `{name}`"));
    let sized = |prefix: &str| -> Option<Result<usize>> {
        name.strip_prefix(prefix)
            .map(|n| n.parse::<usize>().map_err(|_| unknown()))
    };
    let tol = SolverTolerances::<T>::default();
    if name == "gbit" {
        let m = Model::new(gbit_square()).with_unit();
        return m
            .with_affine("e_x", vec![T::lit(0.5), T::lit(0.5), T::zero()])?
            .with_affine("e_y", vec![T::lit(0.5), T::zero(), T::lit(0.5)]);
    }
    if let Some(n) = sized("simplex-") {
        let n = n?;
        let mut m = Model::new(simplex(n)?).with_unit();
        for i in 0..n {
            let values: Vec<T> = (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect();
            let e = m.space.effect_from_vertex_values(&values, &tol)?;
            m.effects.insert(format!("v{i}"), e);
        }
        if n == 3 {
            for (label, vals) in [("p", [0.2, 0.9, 0.4]), ("q", [0.8, 0.1, 0.5])] {
                let values: Vec<T> = vals.iter().map(|&x| T::lit(x)).collect();
                let e = m.space.effect_from_vertex_values(&values, &tol)?;
                m.effects.insert(label.into(), e);
            }
        }
        return Ok(m);
    }
    if let Some(d) = sized("hypercube-") {
        let d = d?;
        let mut m = Model::new(hypercube(d)?).with_unit();
        for axis in 0..d {
            let mut c = vec![T::zero(); d + 1];
            c[0] = T::lit(0.5);
            c[axis + 1] = T::lit(0.5);
            m = m.with_affine(&format!("e_{}", axis + 1), c)?;
        }
        return Ok(m);
    }
    if let Some(n) = sized("polygon-") {
        let space = regular_polygon(n?)?;
        let (cx, cy) = (rescaled_coordinate(&space, 0), rescaled_coordinate(&space, 1));
        return Model::new(space)
            .with_unit()
            .with_affine("e_x", cx)?
            .with_affine("e_y", cy);
    }
    Err(unknown())
}

/// Applies `x ↦ A x + b` to every vertex and carries the effects along, so that
/// each effect takes the same values at corresponding vertices.
pub fn affine_image<T: Scalar>(
    space: &StateSpace<T>,
    effects: &[Effect<T>],
    matrix: &[Vec<T>],
    shift: &[T],
) -> Result<(StateSpace<T>, Vec<Effect<T>>)> {
    let d = space.dimension();
    if matrix.len() != d || matrix.iter().any(|r| r.len() != d) || shift.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: matrix.len(),
        });
    }
    let vertices: Vec<Vec<T>> = space
        .vertices()
        .iter()
        .map(|v| {
            (0..d)
                .map(|r| matrix[r].iter().zip(v).map(|(&a, &x)| a * x).sum::<T>() + shift[r])
                .collect()
        })
        .collect();
    let image = StateSpace::unchecked(vertices, space.name(), &SolverTolerances::default())?;
    // f(x) = c0 + c·x = c0' + c'·(A x + b)  ⇒  Aᵀ c' = c,  c0' = c0 - c'·b
    let transposed: Vec<Vec<T>> = (0..d).map(|r| (0..d).map(|c| matrix[c][r]).collect()).collect();
    let tol = SolverTolerances::default();
    let mapped = effects
        .iter()
        .map(|e| {
            let (linear, rank) = least_squares(&transposed, &e.coefficients()[1..]);
            if rank < d {
                return Err(Error::InvalidParameter("affine map is singular".into()));
            }
            let c0 = e.coefficients()[0] - linear.iter().zip(shift).map(|(&c, &b)| c * b).sum::<T>();
            let coeffs = std::iter::once(c0).chain(linear).collect();
            image.effect_from_affine(coeffs, &tol)
        })
        .collect::<Result<_>>()?;
    Ok((image, mapped))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EffectSpec<T> {
    Affine(Vec<T>),
    VertexValues(Vec<T>),
}

/// On-disk layout of a model file.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile<T> {
    pub version: u32,
    pub name: String,
    pub dimension: usize,
    pub vertices: Vec<Vec<T>>,
    #[serde(default)]
    pub effects: BTreeMap<String, EffectSpec<T>>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

impl<T: Scalar> ModelFile<T> {
    pub fn from_model(model: &Model<T>) -> Self {
        Self {
            version: MODEL_FILE_VERSION,
            name: model.space.name().to_string(),
            dimension: model.space.dimension(),
            vertices: model.space.vertices().to_vec(),
            effects: model
                .effects
                .iter()
                .map(|(k, e)| (k.clone(), EffectSpec::Affine(e.coefficients().to_vec())))
                .collect(),
        }
    }

    pub fn into_model(self, tol: &SolverTolerances<T>) -> Result<Model<T>> {
        if self.version != MODEL_FILE_VERSION {
            return Err(schema(
                "version",
                format!("unsupported version {}, expected {MODEL_FILE_VERSION}", self.version),
            ));
        }
        if self.vertices.is_empty() {
            return Err(schema("vertices", "at least one vertex is required"));
        }
        if let Some((i, v)) = self
            .vertices
            .iter()
            .enumerate()
            .find(|(_, v)| v.len() != self.dimension)
        {
            return Err(schema(
                format!("vertices[{i}]"),
                format!("has {} coordinates, dimension is {}", v.len(), self.dimension),
            ));
        }
        let space = StateSpace::with_tolerances(self.vertices, self.name, tol)?;
        let mut model = Model::new(space);
        for (name, spec) in self.effects {
            let built = match spec {
                EffectSpec::Affine(c) => model.space.effect_from_affine(c, tol),
                EffectSpec::VertexValues(v) => model.space.effect_from_vertex_values(&v, tol),
            };
            let e = built.map_err(|source| Error::Effect {
                name: name.clone(),
                source: Box::new(source),
            })?;
            model.effects.insert(name, e);
        }
        Ok(model)
    }
}

pub fn parse_model<T: Scalar>(text: &str, tol: &SolverTolerances<T>) -> Result<Model<T>> {
    let file: ModelFile<T> = serde_json::from_str(text)?;
    file.into_model(tol)
}

pub fn model_to_string<T: Scalar>(model: &Model<T>) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_model(model))?;
    s.push('\n');
    Ok(s)
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>, tol: &SolverTolerances<T>) -> Result<Model<T>> {
    parse_model(&fs::read_to_string(path)?, tol)
}

pub fn save_model<T: Scalar>(model: &Model<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_string(model)?)?;
    Ok(())
}
