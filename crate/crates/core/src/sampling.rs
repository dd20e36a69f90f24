//! Seeded random effects for property suites and scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gpt::{AffineFunctional, Effect, StateSpace};
use crate::scalar::Scalar;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random effect: affine coefficients drawn uniformly from `[-1, 1]`, then
/// shifted and rescaled so that the vertex values span a random subinterval
/// `[lo, hi]` of `[0, 1]`. Draws that are constant on the vertices are
/// rejected; on a single-point space a constant effect is returned.
pub fn random_effect<T: Scalar, R: Rng + ?Sized>(space: &StateSpace<T>, rng: &mut R) -> Effect<T> {
    let d = space.dimension();
    if space.num_vertices() < 2 {
        let mut c = vec![T::zero(); d + 1];
        c[0] = T::lit(rng.gen_range(0.0..=1.0));
        return Effect::trusted(AffineFunctional::new(c));
    }
    loop {
        let raw: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let h = AffineFunctional::new(raw.iter().map(|&x| T::lit(x)).collect());
        let values = space.vertex_values(&h).expect("matching dimension");
        let min = values.iter().copied().fold(T::infinity(), T::min);
        let max = values.iter().copied().fold(T::neg_infinity(), T::max);
        if max - min < T::lit(1e-6) {
            continue;
        }
        let (a, b): (f64, f64) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
        let (lo, hi) = (T::lit(a.min(b)), T::lit(a.max(b)));
        let k = (hi - lo) / (max - min);
        let mut c: Vec<T> = h.coefficients().iter().map(|&x| x * k).collect();
        c[0] = lo + (h.coefficients()[0] - min) * k;
        let f = AffineFunctional::new(c);
        // rounding can push an endpoint a few ulps outside [0, 1]
        let vals = space.vertex_values(&f).expect("matching dimension");
        if vals.iter().all(|&v| v >= T::zero() && v <= T::one()) {
            return Effect::trusted(f);
        }
    }
}

pub fn random_effect_pair<T: Scalar, R: Rng + ?Sized>(space: &StateSpace<T>, rng: &mut R) -> (Effect<T>, Effect<T>) {
    let e = random_effect(space, rng);
    let f = random_effect(space, rng);
    (e, f)
}
