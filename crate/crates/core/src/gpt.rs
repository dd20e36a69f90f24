//! State spaces, affine functionals, effects and finite-outcome observables.
//!
//! A state space is the convex hull of finitely many vertices in `R^d`. An
//! affine functional `f(x) = c0 + c·x` is stored by its `d + 1` coefficients;
//! since the hull is spanned by its vertices, every order or range check on
//! the hull reduces to the same check at the vertices.

use std::ops::Deref;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::lp::{check_feasible, LpProblem, Relation};
use crate::scalar::{Scalar, SolverTolerances};

/// Vertex sets larger than this skip the interior-vertex scan (one LP per vertex).
const REDUNDANCY_SCAN_LIMIT: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateSpace<T = f64> {
    name: String,
    dimension: usize,
    vertices: Vec<Vec<T>>,
    /// Indices of supplied vertices lying in the hull of the others.
    redundant: Vec<usize>,
}

impl<T: Scalar> StateSpace<T> {
    /// Builds the convex hull of `vertices`, with default tolerances.
    pub fn new(vertices: Vec<Vec<T>>, name: impl Into<String>) -> Result<Self> {
        Self::with_tolerances(vertices, name, &SolverTolerances::default())
    }

    /// Builds the space, dropping vertices that coincide within `eps_geom` and
    /// flagging (but keeping) vertices that lie in the hull of the others.
    pub fn with_tolerances(vertices: Vec<Vec<T>>, name: impl Into<String>, tol: &SolverTolerances<T>) -> Result<Self> {
        let mut space = Self::unchecked(vertices, name, tol)?;
        if space.vertices.len() > 1 && space.vertices.len() <= REDUNDANCY_SCAN_LIMIT {
            space.redundant = (0..space.vertices.len())
                .filter_map(|i| match space.in_hull_of_others(i, tol) {
                    Ok(true) => Some(Ok(i)),
                    Ok(false) => None,
                    Err(e) => Some(Err(e)),
                })
                .collect::<Result<_>>()?;
        }
        Ok(space)
    }

    /// Deduplicates and validates shape only; used by the zoo, whose vertex sets
    /// are known to be in convex position.
    pub(crate) fn unchecked(vertices: Vec<Vec<T>>, name: impl Into<String>, tol: &SolverTolerances<T>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::EmptyStateSpace);
        };
        let dimension = first.len();
        let mut kept: Vec<Vec<T>> = Vec::with_capacity(vertices.len());
        for (index, v) in vertices.into_iter().enumerate() {
            if v.len() != dimension {
                return Err(Error::RaggedVertices {
                    index,
                    expected: dimension,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "vertex {index} has non-finite coordinates"
                )));
            }
            let duplicate = kept
                .iter()
                .any(|w| w.iter().zip(&v).all(|(&a, &b)| (a - b).abs() <= tol.eps_geom));
            if !duplicate {
                kept.push(v);
            }
        }
        Ok(Self {
            name: name.into(),
            dimension,
            vertices: kept,
            redundant: Vec::new(),
        })
    }

    fn in_hull_of_others(&self, i: usize, tol: &SolverTolerances<T>) -> Result<bool> {
        let others: Vec<&Vec<T>> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, w)| w)
            .collect();
        let mut lp = LpProblem::feasibility(others.len()).nonnegative();
        lp.add_constraint(vec![T::one(); others.len()], Relation::Eq, T::one());
        for c in 0..self.dimension {
            lp.add_constraint(others.iter().map(|w| w[c]).collect(), Relation::Eq, self.vertices[i][c]);
        }
        check_feasible(&lp, tol)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Supplied vertices found inside the hull of the others. Harmless: they only
    /// add redundant constraints.
    pub fn redundant_vertices(&self) -> &[usize] {
        &self.redundant
    }

    pub fn has_redundancy_warning(&self) -> bool {
        !self.redundant.is_empty()
    }

    /// `(1, v_1, ..., v_d)`: the row pairing a vertex with affine coefficients.
    pub fn lifted_vertex(&self, i: usize) -> Vec<T> {
        std::iter::once(T::one())
            .chain(self.vertices[i].iter().copied())
            .collect()
    }

    /// True when the vertices are affinely independent, i.e. the hull is a simplex.
    pub fn is_simplex(&self) -> bool {
        let rows: Vec<Vec<T>> = (0..self.num_vertices()).map(|i| self.lifted_vertex(i)).collect();
        // rank of the transposed system equals rank of the lifted vertex matrix
        let cols: Vec<Vec<T>> = (0..=self.dimension)
            .map(|c| rows.iter().map(|r| r[c]).collect())
            .collect();
        let (_, rank) = least_squares(&cols, &vec![T::zero(); cols.len()]);
        rank == self.num_vertices()
    }

    pub fn unit(&self) -> Effect<T> {
        Effect::unit(self.dimension)
    }

    pub fn zero(&self) -> Effect<T> {
        Effect::zero(self.dimension)
    }

    pub fn vertex_values(&self, f: &AffineFunctional<T>) -> Result<Vec<T>> {
        self.check_dim(f)?;
        Ok(self.vertices.iter().map(|v| f.eval_unchecked(v)).collect())
    }

    fn check_dim(&self, f: &AffineFunctional<T>) -> Result<()> {
        if f.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension + 1,
                found: f.coefficients.len(),
            });
        }
        Ok(())
    }

    /// Validates `0 <= f(v) <= 1` at every vertex and wraps `f` as an effect.
    pub fn effect(&self, f: AffineFunctional<T>, tol: &SolverTolerances<T>) -> Result<Effect<T>> {
        self.check_dim(&f)?;
        if f.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite effect coefficient".into()));
        }
        for (vertex, v) in self.vertices.iter().enumerate() {
            let value = f.eval_unchecked(v);
            if value < -tol.eps_geom || value > T::one() + tol.eps_geom {
                return Err(Error::EffectOutOfRange {
                    vertex,
                    point: v.iter().map(|x| x.as_f64()).collect(),
                    value: value.as_f64(),
                });
            }
        }
        Ok(Effect(f))
    }

    /// The effect with affine coefficients `(c0, c1, ..., cd)`.
    pub fn effect_from_affine(&self, coefficients: Vec<T>, tol: &SolverTolerances<T>) -> Result<Effect<T>> {
        if coefficients.len() != self.dimension + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dimension + 1,
                found: coefficients.len(),
            });
        }
        self.effect(AffineFunctional::new(coefficients), tol)
    }

    /// Fits affine coefficients to prescribed vertex values. Fails when no affine
    /// functional reproduces the values within `eps_geom` at every vertex.
    pub fn effect_from_vertex_values(&self, values: &[T], tol: &SolverTolerances<T>) -> Result<Effect<T>> {
        if values.len() != self.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: self.num_vertices(),
                found: values.len(),
            });
        }
        let rows: Vec<Vec<T>> = (0..self.num_vertices()).map(|i| self.lifted_vertex(i)).collect();
        let (coefficients, _) = least_squares(&rows, values);
        let f = AffineFunctional::new(coefficients);
        for (vertex, (v, &want)) in self.vertices.iter().zip(values).enumerate() {
            let residual = (f.eval_unchecked(v) - want).abs();
            if residual > tol.eps_geom {
                return Err(Error::NotRepresentable {
                    vertex,
                    residual: residual.as_f64(),
                });
            }
        }
        self.effect(f, tol)
    }

    /// `f <= g` on the whole space, i.e. at every vertex up to `eps_geom`.
    pub fn leq(&self, f: &AffineFunctional<T>, g: &AffineFunctional<T>, tol: &SolverTolerances<T>) -> Result<bool> {
        self.check_dim(f)?;
        self.check_dim(g)?;
        Ok(self
            .vertices
            .iter()
            .all(|v| f.eval_unchecked(v) <= g.eval_unchecked(v) + tol.eps_geom))
    }

    /// An effect distinguishing vertices `i` and `j`: the coordinate on which they
    /// differ most, rescaled to `[0, 1]` over the vertex set.
    pub fn separating_effect(&self, i: usize, j: usize) -> Option<Effect<T>> {
        let (vi, vj) = (self.vertices.get(i)?, self.vertices.get(j)?);
        let (axis, gap) = (0..self.dimension).map(|c| (c, (vi[c] - vj[c]).abs())).fold(
            None,
            |acc: Option<(usize, T)>, x| match acc {
                Some(best) if best.1 >= x.1 => Some(best),
                _ => Some(x),
            },
        )?;
        if gap <= T::zero() {
            return None;
        }
        let lo = self.vertices.iter().map(|v| v[axis]).fold(T::infinity(), T::min);
        let hi = self.vertices.iter().map(|v| v[axis]).fold(T::neg_infinity(), T::max);
        let width = hi - lo;
        let mut coefficients = vec![T::zero(); self.dimension + 1];
        coefficients[0] = -lo / width;
        coefficients[axis + 1] = T::one() / width;
        Some(Effect(AffineFunctional::new(coefficients)))
    }

    /// Diagnostics for `obs` as an observable on this space; empty when valid.
    pub fn observable_diagnostics(&self, obs: &Observable<T>, tol: &SolverTolerances<T>) -> Vec<String> {
        let mut problems = Vec::new();
        if obs.outcomes.len() != obs.effects.len() {
            problems.push(format!(
                "{} outcome labels for {} effects",
                obs.outcomes.len(),
                obs.effects.len()
            ));
        }
        for (label, e) in obs.outcomes.iter().zip(&obs.effects) {
            if let Err(err) = self.effect(e.0.clone(), tol) {
                problems.push(format!("outcome {label}: {err}"));
            }
        }
        if obs.effects.iter().any(|e| e.dimension() != self.dimension) {
            return problems;
        }
        let total = obs
            .effects
            .iter()
            .fold(AffineFunctional::zero(self.dimension), |acc, e| acc.add(e));
        let unit = AffineFunctional::unit(self.dimension);
        for (k, (s, u)) in total.coefficients.iter().zip(&unit.coefficients).enumerate() {
            if (*s - *u).abs() > tol.eps_geom {
                problems.push(format!("effects sum to {s} in coefficient {k}, expected {u}"));
            }
        }
        problems
    }

    /// Components are effects on this space and sum to the unit functional.
    pub fn is_observable(&self, obs: &Observable<T>, tol: &SolverTolerances<T>) -> bool {
        self.observable_diagnostics(obs, tol).is_empty()
    }
}

/// `f(x) = c0 + c1 x1 + ... + cd xd`, not necessarily bounded on any space.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AffineFunctional<T = f64> {
    coefficients: Vec<T>,
}

impl<T: Scalar> AffineFunctional<T> {
    /// Panics on an empty coefficient vector: at least the constant term is required.
    pub fn new(coefficients: Vec<T>) -> Self {
        assert!(!coefficients.is_empty(), "affine functional needs a constant term");
        Self { coefficients }
    }

    pub fn zero(dimension: usize) -> Self {
        Self::new(vec![T::zero(); dimension + 1])
    }

    pub fn unit(dimension: usize) -> Self {
        let mut c = vec![T::zero(); dimension + 1];
        c[0] = T::one();
        Self::new(c)
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn dimension(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn evaluate(&self, point: &[T]) -> Result<T> {
        if point.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[T]) -> T {
        self.coefficients[1..]
            .iter()
            .zip(point)
            .fold(self.coefficients[0], |acc, (&c, &x)| acc + c * x)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.coefficients.len(), other.coefficients.len(), "dimension mismatch");
        Self::new(
            self.coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(self.coefficients.iter().map(|&c| c * k).collect())
    }
}

/// An affine functional with values in `[0, 1]` on the space it was validated on.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Effect<T = f64>(AffineFunctional<T>);

impl<T: Scalar> Effect<T> {
    pub fn unit(dimension: usize) -> Self {
        Effect(AffineFunctional::unit(dimension))
    }

    pub fn zero(dimension: usize) -> Self {
        Effect(AffineFunctional::zero(dimension))
    }

    /// Wraps `f` without range validation. Callers must guarantee `0 <= f <= u`.
    pub(crate) fn trusted(f: AffineFunctional<T>) -> Self {
        Effect(f)
    }

    pub fn as_functional(&self) -> &AffineFunctional<T> {
        &self.0
    }

    pub fn into_functional(self) -> AffineFunctional<T> {
        self.0
    }

    /// `u - f`.
    pub fn complement(&self) -> Effect<T> {
        let mut c: Vec<T> = self.0.coefficients.iter().map(|&x| -x).collect();
        c[0] = T::one() - self.0.coefficients[0];
        Effect(AffineFunctional::new(c))
    }

    /// `f / k` for `k >= 1`, which stays an effect.
    pub fn shrink(&self, k: T) -> Result<Effect<T>> {
        if !(k >= T::one()) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "shrink factor must be finite and >= 1, got {k}"
            )));
        }
        Ok(Effect(self.0.scale(T::one() / k)))
    }
}

impl<T> Deref for Effect<T> {
    type Target = AffineFunctional<T>;

    fn deref(&self) -> &AffineFunctional<T> {
        &self.0
    }
}

/// A finite-outcome observable: one effect per outcome, summing to `u`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observable<T = f64> {
    outcomes: Vec<String>,
    effects: Vec<Effect<T>>,
}

impl<T: Scalar> Observable<T> {
    /// Pairs labels with effects. Normalization is checked by
    /// [`StateSpace::is_observable`], not here.
    pub fn new(outcomes: Vec<String>, effects: Vec<Effect<T>>) -> Result<Self> {
        if outcomes.len() != effects.len() || effects.is_empty() {
            return Err(Error::InvalidObservable(vec![format!(
                "{} labels for {} effects",
                outcomes.len(),
                effects.len()
            )]));
        }
        Ok(Self { outcomes, effects })
    }

    /// `{f, u - f}` with outcomes `1` and `0`.
    pub fn dichotomic(f: Effect<T>) -> Self {
        let c = f.complement();
        Self {
            outcomes: vec!["1".into(), "0".into()],
            effects: vec![f, c],
        }
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[Effect<T>] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn component(&self, outcome: &str) -> Option<&Effect<T>> {
        self.outcomes
            .iter()
            .position(|o| o == outcome)
            .map(|i| &self.effects[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> SolverTolerances<f64> {
        SolverTolerances::default()
    }

    fn gbit() -> StateSpace {
        StateSpace::new(
            vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]],
            "gbit",
        )
        .unwrap()
    }

    fn segment() -> StateSpace {
        StateSpace::new(vec![vec![0.0], vec![1.0]], "bit").unwrap()
    }

    fn triangle() -> StateSpace {
        StateSpace::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], "triangle").unwrap()
    }

    #[test]
    fn construction_examples() {
        let s = segment();
        assert_eq!((s.dimension(), s.num_vertices()), (1, 2));
        assert!(!s.has_redundancy_warning());
        let g = gbit();
        assert_eq!((g.dimension(), g.num_vertices()), (2, 4));
        assert!(!g.has_redundancy_warning());
        let t = StateSpace::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.25, 0.25]],
            "triangle+interior",
        )
        .unwrap();
        assert_eq!(t.num_vertices(), 4);
        assert_eq!(t.redundant_vertices(), &[3]);
    }

    #[test]
    fn construction_errors_and_dedup() {
        assert!(matches!(
            StateSpace::<f64>::new(vec![], "x"),
            Err(Error::EmptyStateSpace)
        ));
        assert!(matches!(
            StateSpace::new(vec![vec![0.0], vec![1.0, 2.0]], "x"),
            Err(Error::RaggedVertices { index: 1, .. })
        ));
        let s = StateSpace::new(vec![vec![0.0], vec![1.0], vec![1.0], vec![1e-12]], "x").unwrap();
        assert_eq!(s.num_vertices(), 2);
    }

    #[test]
    fn sharp_x_effect_on_gbit() {
        let g = gbit();
        let ex = g.effect_from_affine(vec![0.5, 0.5, 0.0], &tol()).unwrap();
        assert_eq!(g.vertex_values(&ex).unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(ex.evaluate(&[1.0, 1.0]).unwrap(), 1.0);
        let c = ex.complement();
        assert_eq!(g.vertex_values(&c).unwrap(), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn unit_and_zero() {
        let g = gbit();
        let u = g.effect_from_affine(vec![1.0, 0.0, 0.0], &tol()).unwrap();
        assert_eq!(u, g.unit());
        assert_eq!(u.evaluate(&[0.3, -0.2]).unwrap(), 1.0);
        assert_eq!(g.zero().evaluate(&[0.3, -0.2]).unwrap(), 0.0);
        assert_eq!(g.unit().complement(), g.zero());
        assert_eq!(g.zero().complement(), g.unit());
    }

    #[test]
    fn out_of_range_names_vertex() {
        let err = segment().effect_from_affine(vec![0.0, 2.0], &tol()).unwrap_err();
        match err {
            Error::EffectOutOfRange { vertex, value, .. } => {
                assert_eq!(vertex, 1);
                assert_eq!(value, 2.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        assert!(matches!(
            gbit().unit().evaluate(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vertex_values_on_simplex_are_exact() {
        let t = triangle();
        let e = t.effect_from_vertex_values(&[0.2, 0.9, 0.4], &tol()).unwrap();
        let got = t.vertex_values(&e).unwrap();
        for (a, b) in got.iter().zip([0.2, 0.9, 0.4]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn non_affine_values_on_square_rejected() {
        // affine f on the square obeys f(v1) + f(v4) = f(v2) + f(v3)
        let err = gbit()
            .effect_from_vertex_values(&[1.0, 0.0, 0.0, 1.0], &tol())
            .unwrap_err();
        assert!(matches!(err, Error::NotRepresentable { .. }));
        assert!(gbit().effect_from_vertex_values(&[1.0, 0.0, 1.0, 0.0], &tol()).is_ok());
    }

    #[test]
    fn constant_values_give_multiple_of_unit() {
        let g = gbit();
        let e = g.effect_from_vertex_values(&[0.3; 4], &tol()).unwrap();
        let c = e.coefficients();
        assert!((c[0] - 0.3).abs() < 1e-15 && c[1].abs() < 1e-15 && c[2].abs() < 1e-15);
    }

    #[test]
    fn ordering_examples() {
        let s = segment();
        let f = s.effect_from_vertex_values(&[0.5, 0.2], &tol()).unwrap();
        let g = s.effect_from_vertex_values(&[0.4, 0.9], &tol()).unwrap();
        assert!(!s.leq(&f, &g, &tol()).unwrap());
        assert!(s.leq(&f, &s.unit(), &tol()).unwrap());
        assert!(s.leq(&s.zero(), &f, &tol()).unwrap());
    }

    #[test]
    fn observable_examples() {
        let g = gbit();
        let f = g.effect_from_affine(vec![0.4, 0.1, 0.3], &tol()).unwrap();
        assert!(g.is_observable(&Observable::dichotomic(f), &tol()));
        let uu = Observable::new(vec!["a".into(), "b".into()], vec![g.unit(), g.unit()]).unwrap();
        assert!(!g.is_observable(&uu, &tol()));
        let diag = g.observable_diagnostics(&uu, &tol());
        assert!(diag[0].contains("sum"));
        let third = g.effect_from_affine(vec![0.25, 0.0, 0.0], &tol()).unwrap();
        let half = g.effect_from_affine(vec![0.5, 0.0, 0.0], &tol()).unwrap();
        let three = Observable::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![half, third.clone(), third],
        )
        .unwrap();
        assert!(g.is_observable(&three, &tol()));
    }

    #[test]
    fn separating_effect_distinguishes_vertices() {
        let g = gbit();
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let h = g.separating_effect(i, j).unwrap();
                g.effect(h.as_functional().clone(), &tol()).unwrap();
                let (a, b) = (
                    h.evaluate(&g.vertices()[i]).unwrap(),
                    h.evaluate(&g.vertices()[j]).unwrap(),
                );
                assert!((a - b).abs() > 0.0);
            }
        }
        assert!(g.separating_effect(0, 0).is_none());
    }

    #[test]
    fn simplex_detection() {
        assert!(segment().is_simplex());
        assert!(triangle().is_simplex());
        assert!(!gbit().is_simplex());
        assert!(StateSpace::new(vec![Vec::<f64>::new()], "point").unwrap().is_simplex());
    }

    #[test]
    fn single_precision_space() {
        let g = StateSpace::<f32>::new(
            vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]],
            "gbit32",
        )
        .unwrap();
        let e = g
            .effect_from_affine(vec![0.5, 0.5, 0.0], &SolverTolerances::default())
            .unwrap();
        assert_eq!(g.vertex_values(&e).unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
    }
}
