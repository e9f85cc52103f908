//! Seeded random instances for property checks and demos.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::lns::{FiberSpace, FiniteSet, ModuleVector};
use crate::stone::{ComplexCoefficient, StoneElement};

pub type Rng64 = ChaCha8Rng;

/// A complex number uniform in the disc of radius `r`.
pub fn random_in_disc<R: Rng>(rng: &mut R, r: f64) -> Complex64 {
    Complex64::from_polar(r * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// A vector uniform in the complex unit ball of dimension `d`, scaled by `r`.
pub fn random_fiber<R: Rng>(rng: &mut R, d: usize, r: f64) -> Vec<Complex64> {
    let raw: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(gauss(rng), gauss(rng)))
        .collect();
    let norm = raw.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    let radius = r * rng.gen::<f64>().powf(1.0 / (2 * d) as f64);
    raw.into_iter().map(|v| v * (radius / norm)).collect()
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// A module element with `|x| ≤ r·1`.
pub fn random_vector<R: Rng>(rng: &mut R, space: &FiberSpace, r: f64) -> ModuleVector {
    ModuleVector::new(space.dims().iter().map(|&d| random_fiber(rng, d, r)).collect())
}

pub fn random_set<R: Rng>(rng: &mut R, space: &FiberSpace, k: usize, r: f64) -> FiniteSet {
    FiniteSet::new(space.clone(), (0..k).map(|_| random_vector(rng, space, r)).collect())
        .expect("shapes follow the space")
}

/// `λ` with `|λ| ≤ r` pointwise.
pub fn random_coefficient<R: Rng>(rng: &mut R, n: usize, r: f64) -> ComplexCoefficient {
    ComplexCoefficient::new((0..n).map(|_| random_in_disc(rng, r)).collect())
}

pub fn random_positive<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> StoneElement {
    StoneElement::new((0..n).map(|_| rng.gen_range(lo..hi)).collect())
}

/// A random element `Σ λ_j e_j` of the span of a suborthonormal basis with
/// `|x| ≤ c·1`.
pub fn random_in_span<R: Rng>(rng: &mut R, basis: &FiniteSet, c: f64) -> ModuleVector {
    let n = basis.space().len();
    let d = basis.len();
    let mut x = basis.space().zero();
    for w in 0..n {
        let coeffs = random_fiber(rng, d.max(1), c);
        for (j, e) in basis.elements().iter().enumerate() {
            let lambda = coeffs[j];
            for (xi, ei) in x.fiber_mut(w).iter_mut().zip(e.fiber(w)) {
                *xi += ei * lambda;
            }
        }
    }
    x
}
