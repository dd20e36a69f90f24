//! Independent checks on `λ0` that share no code with the simplex solver:
//! the closed form on simplices and exhaustive grid search over affine `g`.
//!
//! Used by tests and the hidden `oracle` CLI subcommand only.

use serde::Serialize;

use crate::compat::compute_lambda0;
use crate::error::{Error, Result};
use crate::gpt::{Effect, StateSpace};
use crate::scalar::{Scalar, SolverTolerances};

pub const MAX_GRID_DIMENSION: usize = 3;

/// On a simplex `g` can be chosen freely at each vertex, so the optimum takes
/// `g_i = min(e_i, f_i)` and `λ0 = max_i max(e_i, f_i)`.
pub fn simplex_lambda0_closed_form<T: Scalar>(e_values: &[T], f_values: &[T]) -> Result<T> {
    if e_values.len() != f_values.len() {
        return Err(Error::DimensionMismatch {
            expected: e_values.len(),
            found: f_values.len(),
        });
    }
    if e_values.is_empty() {
        return Err(Error::InvalidParameter("no vertex values".into()));
    }
    let mut best = T::zero();
    for &x in e_values.iter().chain(f_values) {
        if !(x >= T::zero() && x <= T::one()) {
            return Err(Error::InvalidParameter(format!("vertex value {x} outside [0, 1]")));
        }
        best = best.max(x);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult<T = f64> {
    /// Best `max_v (e + f - g)(v)` over grid candidates `g` satisfying
    /// `0 <= g <= min(e, f)` at the vertices; an upper bound on `λ0`.
    pub value: T,
    /// `max_v max(e(v), f(v))`; a lower bound on `λ0`.
    pub lower_bound: T,
    pub step: T,
    /// Half-width of the coefficient box searched.
    pub box_half_width: T,
    /// The box was widened beyond `[-1, 1]` to cover the coefficients of `e` or `f`.
    pub box_expanded: bool,
    pub feasible_candidates: usize,
    pub best_candidate: Vec<T>,
}

/// Exhaustive search over `g` with coefficients on a uniform grid of
/// `resolution` points per axis in `[-B, B]^(d+1)`, `B = max(1, |coeffs of e, f|)`.
///
/// `g = 0` is always feasible and is scored even when the grid misses it.
pub fn grid_lambda0<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    resolution: usize,
    tol: &SolverTolerances<T>,
) -> Result<GridResult<T>> {
    let d = space.dimension();
    if d > MAX_GRID_DIMENSION {
        return Err(Error::InvalidParameter(format!(
            "grid oracle supports dimension <= {MAX_GRID_DIMENSION}, got {d}"
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution must be >= 2, got {resolution}"
        )));
    }
    let e_vals = space.vertex_values(e)?;
    let f_vals = space.vertex_values(f)?;
    let caps: Vec<T> = e_vals.iter().zip(&f_vals).map(|(&a, &b)| a.min(b)).collect();
    let sums: Vec<T> = e_vals.iter().zip(&f_vals).map(|(&a, &b)| a + b).collect();
    let lower_bound = e_vals.iter().chain(&f_vals).copied().fold(T::zero(), T::max);

    let widest = e
        .coefficients()
        .iter()
        .chain(f.coefficients())
        .map(|c| c.abs())
        .fold(T::one(), T::max);
    let box_expanded = widest > T::one();
    let step = (widest + widest) / T::lit((resolution - 1) as f64);
    let axis: Vec<T> = (0..resolution)
        .map(|i| {
            // symmetric construction keeps the midpoint exactly zero
            let j = T::lit(2.0 * i as f64 - (resolution - 1) as f64);
            widest * j / T::lit((resolution - 1) as f64)
        })
        .collect();

    let lifted: Vec<Vec<T>> = (0..space.num_vertices()).map(|i| space.lifted_vertex(i)).collect();
    let score = |g: &[T]| -> Option<T> {
        let mut worst = T::neg_infinity();
        for ((row, &cap), &sum) in lifted.iter().zip(&caps).zip(&sums) {
            let gv: T = row.iter().zip(g).map(|(&a, &b)| a * b).sum();
            if gv < -tol.eps_geom || gv > cap + tol.eps_geom {
                return None;
            }
            worst = worst.max(sum - gv);
        }
        Some(worst)
    };

    let zero = vec![T::zero(); d + 1];
    let mut best_candidate = zero.clone();
    let mut value = score(&zero).expect("g = 0 is feasible for effects");
    let mut feasible = 0usize;
    let mut index = vec![0usize; d + 1];
    let mut g = vec![axis[0]; d + 1];
    loop {
        if let Some(s) = score(&g) {
            feasible += 1;
            if s < value {
                value = s;
                best_candidate.clone_from(&g);
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos > d {
                return Ok(GridResult {
                    value,
                    lower_bound,
                    step,
                    box_half_width: widest,
                    box_expanded,
                    feasible_candidates: feasible,
                    best_candidate,
                });
            }
            index[pos] += 1;
            if index[pos] < resolution {
                g[pos] = axis[index[pos]];
                break;
            }
            index[pos] = 0;
            g[pos] = axis[0];
            pos += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheckReport<T = f64> {
    pub lp_lambda0: T,
    pub grid: GridResult<T>,
    pub closed_form: Option<T>,
    /// `(grid - lp) / step`: the empirical grid-convergence constant.
    pub grid_gap_in_steps: T,
    pub discrepancies: Vec<String>,
}

impl<T> CrossCheckReport<T> {
    pub fn agrees(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Runs the LP, the grid oracle and (on simplices) the closed form, and lists
/// every disagreement beyond tolerance.
pub fn cross_check<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    resolution: usize,
    tol: &SolverTolerances<T>,
) -> Result<CrossCheckReport<T>> {
    let lp = compute_lambda0(space, e, f, tol)?.lambda0;
    let grid = grid_lambda0(space, e, f, resolution, tol)?;
    let closed_form = if space.is_simplex() {
        Some(simplex_lambda0_closed_form(
            &space.vertex_values(e)?,
            &space.vertex_values(f)?,
        )?)
    } else {
        None
    };
    let mut discrepancies = Vec::new();
    if lp < grid.lower_bound - tol.eps_opt {
        discrepancies.push(format!("LP {lp} below lower bound {}", grid.lower_bound));
    }
    if lp > grid.value + grid.step {
        discrepancies.push(format!("LP {lp} above grid {} + step {}", grid.value, grid.step));
    }
    if lp > grid.value + tol.eps_opt + tol.eps_geom {
        discrepancies.push(format!("LP {lp} above a feasible grid candidate {}", grid.value));
    }
    if let Some(cf) = closed_form {
        if (lp - cf).abs() > tol.eps_opt {
            discrepancies.push(format!("LP {lp} differs from closed form {cf}"));
        }
    }
    Ok(CrossCheckReport {
        lp_lambda0: lp,
        grid_gap_in_steps: (grid.value - lp) / grid.step,
        grid,
        closed_form,
        discrepancies,
    })
}
