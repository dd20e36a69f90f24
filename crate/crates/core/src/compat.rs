//! Joint measurability of two effects.
//!
//! Two effects `e`, `f` are jointly measurable iff some effect `g` satisfies
//! `g <= e`, `g <= f` and `e + f <= g + u`. Relaxing the last inequality to
//! `e + f <= g + λu` gives a set of admissible `λ` whose infimum `λ0` is
//! attained; the pair is compatible iff `λ0 <= 1`. Since `λ` enters linearly,
//! `λ0` is the optimum of a single LP over `(g, λ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gpt::{AffineFunctional, Effect, Observable, StateSpace};
use crate::lp::{check_feasible, solve_lp, LpProblem, Relation};
use crate::scalar::{Scalar, SolverTolerances};

/// Outcome labels of the joint observable built from a witness.
pub const JOINT_OUTCOMES: [&str; 4] = ["(1,1)", "(1,0)", "(0,1)", "(0,0)"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompatReport<T = f64> {
    pub lambda0: T,
    pub sigma0: T,
    pub compatible: bool,
    /// Optimal `g`; it satisfies the joint-measurability inequalities at `λ0`.
    pub witness: Effect<T>,
    pub lp_iterations: usize,
    pub tolerances: SolverTolerances<T>,
}

/// Column-stochastic 2x2 matrix acting on the outcomes of a dichotomic observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarkovKernel2x2<T = f64> {
    pub mu11: T,
    pub mu12: T,
    pub mu21: T,
    pub mu22: T,
}

impl<T: Scalar> MarkovKernel2x2<T> {
    /// Checks entries lie in `[0, 1]` and each column sums to one, within `eps`.
    pub fn new(mu11: T, mu12: T, mu21: T, mu22: T, eps: T) -> Result<Self> {
        let k = Self { mu11, mu12, mu21, mu22 };
        k.validate(eps)?;
        Ok(k)
    }

    pub fn identity() -> Self {
        Self {
            mu11: T::one(),
            mu12: T::zero(),
            mu21: T::zero(),
            mu22: T::one(),
        }
    }

    pub fn validate(&self, eps: T) -> Result<()> {
        let entries = [self.mu11, self.mu12, self.mu21, self.mu22];
        if entries.iter().any(|&m| !(m >= -eps && m <= T::one() + eps)) {
            return Err(Error::InvalidKernel(format!("entries {entries:?} must lie in [0, 1]")));
        }
        if (self.mu11 + self.mu21 - T::one()).abs() > eps || (self.mu12 + self.mu22 - T::one()).abs() > eps {
            return Err(Error::InvalidKernel(format!("columns of {entries:?} must sum to 1")));
        }
        Ok(())
    }

    /// Both columns are probability vectors and so are both rows.
    pub fn is_doubly_stochastic(&self, eps: T) -> bool {
        self.validate(eps).is_ok()
            && (self.mu11 + self.mu12 - T::one()).abs() <= eps
            && (self.mu21 + self.mu22 - T::one()).abs() <= eps
    }
}

/// `max(0, 2(1 - 1/λ0))`: the scaling noise needed to make the pair compatible.
pub fn sigma0<T: Scalar>(lambda0: T) -> Result<T> {
    if !(lambda0 > T::zero()) || !lambda0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda0 must be positive, got {lambda0}"
        )));
    }
    let two = T::lit(2.0);
    Ok((two * (T::one() - T::one() / lambda0)).max(T::zero()))
}

fn check_pair<T: Scalar>(space: &StateSpace<T>, e: &Effect<T>, f: &Effect<T>, tol: &SolverTolerances<T>) -> Result<()> {
    tol.validate()?;
    space.effect(e.as_functional().clone(), tol)?;
    space.effect(f.as_functional().clone(), tol)?;
    Ok(())
}

/// The LP over `(g_0..g_d, λ)`: minimize `λ` subject to, at every vertex,
/// `0 <= g(v) <= min(e(v), f(v))` and `g(v) + λ >= e(v) + f(v)`.
///
/// With `fixed_lambda = Some(l)` the `λ` column is pinned to `l` and the
/// objective is irrelevant, which turns the LP into the plain feasibility
/// question for the joint-measurability inequalities.
pub fn lambda_problem<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    fixed_lambda: Option<T>,
) -> LpProblem<T> {
    let d = space.dimension();
    let mut objective = vec![T::zero(); d + 2];
    objective[d + 1] = T::one();
    let mut lp = LpProblem::new(objective);
    if let Some(l) = fixed_lambda {
        lp.set_bounds(d + 1, Some(l), Some(l));
    }
    for (i, v) in space.vertices().iter().enumerate() {
        let row = space.lifted_vertex(i);
        let (ev, fv) = (e.eval_unchecked(v), f.eval_unchecked(v));
        let with_lambda = |lam: T| row.iter().copied().chain(std::iter::once(lam)).collect::<Vec<T>>();
        lp.add_constraint(with_lambda(T::zero()), Relation::Ge, T::zero());
        lp.add_constraint(with_lambda(T::zero()), Relation::Le, ev);
        lp.add_constraint(with_lambda(T::zero()), Relation::Le, fv);
        lp.add_constraint(with_lambda(T::one()), Relation::Ge, ev + fv);
    }
    lp
}

/// Computes `λ0`, `σ0`, the verdict and the optimal witness `g`.
pub fn compute_lambda0<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    tol: &SolverTolerances<T>,
) -> Result<CompatReport<T>> {
    check_pair(space, e, f, tol)?;
    let d = space.dimension();
    let result = solve_lp(&lambda_problem(space, e, f, None), tol)?;
    let iterations = result.iterations;
    let (lambda0, point) = result.expect_optimal("lambda0 program")?;
    let witness_tol = SolverTolerances {
        eps_geom: tol.eps_geom.max(tol.eps_feas),
        ..*tol
    };
    let witness = space
        .effect(AffineFunctional::new(point[..=d].to_vec()), &witness_tol)
        .map_err(|err| Error::SolverFailure(format!("optimal g is not an effect: {err}")))?;
    Ok(CompatReport {
        lambda0,
        sigma0: sigma0(lambda0.max(T::min_positive_value()))?,
        compatible: lambda0 <= T::one() + tol.eps_compat,
        witness,
        lp_iterations: iterations,
        tolerances: *tol,
    })
}

/// `λ0 <= 1 + eps_compat`.
pub fn is_compatible<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    tol: &SolverTolerances<T>,
) -> Result<bool> {
    Ok(compute_lambda0(space, e, f, tol)?.compatible)
}

/// Direct feasibility of the joint-measurability inequalities at `λ = 1`,
/// decided by phase one alone. Independent of the `λ0` optimum.
pub fn compatible_by_feasibility<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    tol: &SolverTolerances<T>,
) -> Result<bool> {
    check_pair(space, e, f, tol)?;
    check_feasible(&lambda_problem(space, e, f, Some(T::one())), tol)
}

/// Largest violation of `g <= e`, `g <= f`, `e + f <= g + λu` (and `g >= 0`)
/// over the vertices, with the inequality and vertex where it occurs.
pub fn joint_condition_violation<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    g: &AffineFunctional<T>,
    lambda: T,
) -> (T, &'static str, usize) {
    let mut worst = (T::neg_infinity(), "g <= e", 0);
    for (i, v) in space.vertices().iter().enumerate() {
        let (ev, fv, gv) = (e.eval_unchecked(v), f.eval_unchecked(v), g.eval_unchecked(v));
        for (amount, name) in [
            (-gv, "g >= 0"),
            (gv - ev, "g <= e"),
            (gv - fv, "g <= f"),
            (ev + fv - gv - lambda, "e + f <= g + lambda u"),
        ] {
            if amount > worst.0 {
                worst = (amount, name, i);
            }
        }
    }
    worst
}

/// The four-outcome observable `{g, e - g, f - g, u - e - f + g}` whose margins
/// are the dichotomic observables of `e` and `f`.
pub fn joint_observable_from_witness<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    g: &Effect<T>,
    tol: &SolverTolerances<T>,
) -> Result<Observable<T>> {
    check_pair(space, e, f, tol)?;
    let (amount, inequality, vertex) = joint_condition_violation(space, e, f, g, T::one());
    if amount > tol.eps_geom {
        return Err(Error::JointConditionViolated {
            inequality,
            vertex,
            amount: amount.as_f64(),
        });
    }
    let u = AffineFunctional::unit(space.dimension());
    let g = g.as_functional();
    let parts = [g.clone(), e.sub(g), f.sub(g), u.sub(e).sub(f).add(g)];
    // each part is nonnegative by one of the checked inequalities and bounded
    // by 1 since the four sum to u
    let effects = parts.into_iter().map(Effect::trusted).collect();
    Observable::new(JOINT_OUTCOMES.iter().map(|s| s.to_string()).collect(), effects)
}

/// Computes `λ0` and, when compatible, the joint observable from its witness.
pub fn joint_observable<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    tol: &SolverTolerances<T>,
) -> Result<(CompatReport<T>, Option<Observable<T>>)> {
    let report = compute_lambda0(space, e, f, tol)?;
    if !report.compatible {
        return Ok((report, None));
    }
    // the witness satisfies the inequalities at λ0 <= 1 + eps_compat; accept
    // that slack when checking them at λ = 1
    let slack = SolverTolerances {
        eps_geom: tol.eps_geom.max(tol.eps_compat + tol.eps_feas),
        ..*tol
    };
    let obs = joint_observable_from_witness(space, e, f, &report.witness, &slack)?;
    Ok((report, Some(obs)))
}

/// `{μ11 = 1/k, μ12 = 0, μ21 = 1 - 1/k, μ22 = 1}`: smearing `e` into `e/k`.
pub fn scaling_kernel<T: Scalar>(k: T) -> Result<MarkovKernel2x2<T>> {
    if !(k >= T::one()) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scaling kernel needs finite k >= 1, got {k}"
        )));
    }
    let inv = T::one() / k;
    Ok(MarkovKernel2x2 {
        mu11: inv,
        mu12: T::zero(),
        mu21: T::one() - inv,
        mu22: T::one(),
    })
}

/// Doubly stochastic kernel with `μ11 = μ22 = (1 + t)/2`; smears `e` into
/// `t e + (1 - t) u/2`.
pub fn depolarizing_kernel<T: Scalar>(t: T) -> Result<MarkovKernel2x2<T>> {
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "depolarizing parameter must lie in [0, 1], got {t}"
        )));
    }
    let half = T::lit(0.5);
    let stay = half * (T::one() + t);
    let flip = half * (T::one() - t);
    Ok(MarkovKernel2x2 {
        mu11: stay,
        mu12: flip,
        mu21: flip,
        mu22: stay,
    })
}

/// `{μ11 e + μ12 e', μ21 e + μ22 e'}` for a dichotomic `{e, e' = u - e}`.
pub fn smear<T: Scalar>(
    obs: &Observable<T>,
    kernel: &MarkovKernel2x2<T>,
    tol: &SolverTolerances<T>,
) -> Result<Observable<T>> {
    kernel.validate(tol.eps_geom)?;
    let [e, e_c] = obs.effects() else {
        return Err(Error::InvalidObservable(vec![format!(
            "smearing needs a two-outcome observable, got {} outcomes",
            obs.len()
        )]));
    };
    let total = e.add(e_c);
    let unit = AffineFunctional::unit(e.dimension());
    if total
        .coefficients()
        .iter()
        .zip(unit.coefficients())
        .any(|(a, b)| (*a - *b).abs() > tol.eps_geom)
    {
        return Err(Error::InvalidObservable(vec!["components do not sum to u".into()]));
    }
    let mix = |a: T, b: T| Effect::trusted(e.scale(a).add(&e_c.scale(b)));
    Observable::new(
        obs.outcomes().to_vec(),
        vec![mix(kernel.mu11, kernel.mu12), mix(kernel.mu21, kernel.mu22)],
    )
}

fn smeared_effect<T: Scalar>(
    e: &Effect<T>,
    kernel: &MarkovKernel2x2<T>,
    tol: &SolverTolerances<T>,
) -> Result<Effect<T>> {
    let obs = smear(&Observable::dichotomic(e.clone()), kernel, tol)?;
    Ok(obs.effects()[0].clone())
}

/// Least `k >= 1` for which `e/k`, `f/k` are compatible: `1` for compatible
/// pairs, `λ0` otherwise.
///
/// The answer is confirmed by re-solving: `e/k*`, `f/k*` must test compatible
/// and `e/k`, `f/k` incompatible at `k = 1 + j (k* - 1)/4`, `j = 1..3`.
pub fn min_scaling_noise<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    tol: &SolverTolerances<T>,
) -> Result<T> {
    let report = compute_lambda0(space, e, f, tol)?;
    if report.compatible {
        return Ok(T::one());
    }
    let k_star = report.lambda0;
    let at = |k: T| -> Result<CompatReport<T>> { compute_lambda0(space, &e.shrink(k)?, &f.shrink(k)?, tol) };
    if !at(k_star)?.compatible {
        return Err(Error::SolverFailure(format!(
            "e/{k_star} and f/{k_star} should be compatible"
        )));
    }
    for j in 1..=3 {
        let k = T::one() + T::lit(j as f64) * (k_star - T::one()) / T::lit(4.0);
        // below this margin the verdict at k is decided by eps_compat, not by λ0
        if k_star / k - T::one() <= T::lit(2.0) * tol.eps_compat {
            continue;
        }
        if at(k)?.compatible {
            return Err(Error::SolverFailure(format!(
                "e/{k} and f/{k} should be incompatible below k* = {k_star}"
            )));
        }
    }
    Ok(k_star)
}

/// Largest `t ∈ [0, 1]` for which `t e + (1 - t) u/2` and `t f + (1 - t) u/2`
/// are compatible, by bisection to `2^-steps`.
pub fn min_depolarizing_noise<T: Scalar>(
    space: &StateSpace<T>,
    e: &Effect<T>,
    f: &Effect<T>,
    tol: &SolverTolerances<T>,
    bisection_steps: usize,
) -> Result<T> {
    if bisection_steps == 0 {
        return Err(Error::InvalidParameter("bisection_steps must be at least 1".into()));
    }
    let compatible_at = |t: T| -> Result<bool> {
        let kernel = depolarizing_kernel(t)?;
        is_compatible(
            space,
            &smeared_effect(e, &kernel, tol)?,
            &smeared_effect(f, &kernel, tol)?,
            tol,
        )
    };
    if compatible_at(T::one())? {
        return Ok(T::one());
    }
    // t = 0 maps both effects to u/2, which is compatible with itself
    let (mut lo, mut hi) = (T::zero(), T::one());
    let half = T::lit(0.5);
    for _ in 0..bisection_steps {
        let mid = half * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if compatible_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
