//! Distance to an `A`-zonotope `Z_F = {Σ λ_y y : |λ_y| ≤ 1}`.
//!
//! Fiber by fiber the distance is a convex program over a product of complex
//! unit discs. It is solved by accelerated projected gradient with step `1/L`
//! (`L` the largest eigenvalue of the fiber Gram matrix) and stopped once the
//! Frank–Wolfe duality gap certifies the distance to within `tol`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{fiber_norm, FiniteSet, ModuleVector};
use crate::error::{Error, Result};
use crate::stone::{ComplexCoefficient, StoneElement};

#[derive(Clone, Debug, Serialize)]
pub struct Zonotope {
    pub generators: FiniteSet,
}

impl Zonotope {
    pub fn new(generators: FiniteSet) -> Self {
        Self { generators }
    }

    /// `Σ_y λ_y y` for coefficients clamped to the unit disc.
    pub fn point(&self, coeffs: &[ComplexCoefficient]) -> Result<ModuleVector> {
        if coeffs.len() != self.generators.len() {
            return Err(Error::Dimension { expected: self.generators.len(), found: coeffs.len() });
        }
        let mut out = self.generators.space().zero();
        for (y, l) in self.generators.elements().iter().zip(coeffs) {
            let clamped = ComplexCoefficient::new(l.values().iter().map(|&z| project_disc(z)).collect());
            out = out.add(&y.mul_coeff(&clamped)?)?;
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 10_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ZonotopeSolution {
    /// Distance attained by the returned coefficients (an upper bound on the optimum).
    pub distance: StoneElement,
    /// Certified bound on `distance − optimum`, per point.
    pub gap_bound: StoneElement,
    pub coefficients: Vec<ComplexCoefficient>,
    pub iterations: Vec<usize>,
}

fn project_disc(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 1.0 {
        z / r
    } else {
        z
    }
}

struct FiberOutcome {
    dist: f64,
    bound: f64,
    lambda: Vec<Complex64>,
    iters: usize,
    converged: bool,
}

fn residual(cols: &[&[Complex64]], b: &[Complex64], lambda: &[Complex64], r: &mut [Complex64]) {
    r.copy_from_slice(b);
    for v in r.iter_mut() {
        *v = -*v;
    }
    for (col, l) in cols.iter().zip(lambda) {
        for (ri, c) in r.iter_mut().zip(col.iter()) {
            *ri += c * l;
        }
    }
}

fn gradient(cols: &[&[Complex64]], r: &[Complex64], g: &mut [Complex64]) {
    for (gj, col) in g.iter_mut().zip(cols) {
        *gj = col.iter().zip(r).map(|(c, ri)| c.conj() * ri).sum();
    }
}

/// `min(d, 2·gap/d, √(2·gap))` bounds `d − d*` from the Frank–Wolfe gap.
fn certified_bound(d: f64, lambda: &[Complex64], g: &[Complex64]) -> f64 {
    let gap: f64 = lambda.iter().zip(g).map(|(l, gj)| (gj.conj() * l).re + gj.norm()).sum();
    let gap = gap.max(0.0);
    let mut b = d.min((2.0 * gap).sqrt());
    if d > 0.0 {
        b = b.min(2.0 * gap / d);
    }
    b
}

fn solve_fiber(cols: &[&[Complex64]], b: &[Complex64], tol: f64, max_iter: usize) -> FiberOutcome {
    let k = cols.len();
    let dim = b.len();
    let gram = DMatrix::from_fn(k, k, |i, j| cols[i].iter().zip(cols[j]).map(|(u, v)| u.conj() * v).sum::<Complex64>());
    let lip = if k == 0 { 0.0 } else { gram.symmetric_eigenvalues().max() };
    if lip <= 1e-300 {
        return FiberOutcome { dist: fiber_norm(b), bound: 0.0, lambda: vec![Complex64::new(0.0, 0.0); k], iters: 0, converged: true };
    }
    let step = 1.0 / lip;
    let mut lambda = vec![Complex64::new(0.0, 0.0); k];
    let mut prev = lambda.clone();
    let mut probe = lambda.clone();
    let mut r = vec![Complex64::new(0.0, 0.0); dim];
    let mut g = vec![Complex64::new(0.0, 0.0); k];
    let mut t = 1.0f64;
    let mut best = (f64::INFINITY, f64::INFINITY, lambda.clone());

    for it in 0..=max_iter {
        // certify the current iterate
        residual(cols, b, &lambda, &mut r);
        let d = fiber_norm(&r);
        gradient(cols, &r, &mut g);
        let bound = certified_bound(d, &lambda, &g);
        if bound < best.1 || (bound == best.1 && d < best.0) {
            best = (d, bound, lambda.clone());
        }
        if bound <= tol {
            return FiberOutcome { dist: d, bound, lambda, iters: it, converged: true };
        }
        if it == max_iter {
            break;
        }
        // gradient step from the extrapolated point
        residual(cols, b, &probe, &mut r);
        gradient(cols, &r, &mut g);
        let next: Vec<Complex64> = probe.iter().zip(&g).map(|(p, gj)| project_disc(p - gj * step)).collect();
        // adaptive restart when the step points uphill
        let uphill: f64 = g
            .iter()
            .zip(next.iter().zip(&lambda))
            .map(|(gj, (n, l))| (gj.conj() * (n - l)).re)
            .sum();
        let t_next = if uphill > 0.0 { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let beta = if uphill > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        prev.clone_from(&lambda);
        lambda = next;
        probe = lambda.iter().zip(&prev).map(|(l, p)| l + (l - p) * beta).collect();
        t = t_next;
    }
    FiberOutcome { dist: best.0, bound: best.1, lambda: best.2, iters: max_iter, converged: false }
}

/// Pointwise distance from `x` to the zonotope `z`.
pub fn zonotope_distance(x: &ModuleVector, z: &Zonotope, opts: SolverOptions) -> Result<ZonotopeSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let space = z.generators.space();
    space.check(x)?;
    let n = space.len();
    let k = z.generators.len();
    let mut dist = Vec::with_capacity(n);
    let mut bounds = Vec::with_capacity(n);
    let mut iters = Vec::with_capacity(n);
    let mut coeffs = vec![Vec::with_capacity(n); k];
    let mut failed = false;
    for w in 0..n {
        let cols: Vec<&[Complex64]> = z.generators.elements().iter().map(|y| y.fiber(w)).collect();
        let out = solve_fiber(&cols, x.fiber(w), opts.tol, opts.max_iter);
        failed |= !out.converged;
        dist.push(out.dist);
        bounds.push(out.bound);
        iters.push(out.iters);
        for (c, l) in coeffs.iter_mut().zip(out.lambda) {
            c.push(l);
        }
    }
    let best = StoneElement::new(dist);
    if failed {
        let gap = bounds.iter().copied().fold(0.0, f64::max);
        return Err(Error::IterationLimit { iterations: opts.max_iter, gap, best });
    }
    Ok(ZonotopeSolution {
        distance: best,
        gap_bound: StoneElement::new(bounds),
        coefficients: coeffs.into_iter().map(ComplexCoefficient::new).collect(),
        iterations: iters,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CpReport {
    pub verdict: bool,
    pub eps: f64,
    pub distances: Vec<StoneElement>,
    pub passes: Vec<bool>,
}

/// Checks `M ⊆ Z_F + B[0; ε]` pointwise, up to the solver tolerance.
pub fn cp_check(m: &FiniteSet, f: &FiniteSet, eps: f64, opts: SolverOptions) -> Result<CpReport> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {eps}")));
    }
    let z = Zonotope::new(f.clone());
    let mut distances = Vec::with_capacity(m.len());
    let mut passes = Vec::with_capacity(m.len());
    for x in m.elements() {
        let sol = zonotope_distance(x, &z, opts)?;
        passes.push(sol.distance.le_const(eps, opts.tol));
        distances.push(sol.distance);
    }
    Ok(CpReport { verdict: passes.iter().all(|&p| p), eps, distances, passes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lns::FiberSpace;
    use crate::random::{random_coefficient, random_set, Rng64};
    use rand::SeedableRng;

    #[test]
    fn distance_to_unit_segment() {
        let space = FiberSpace::uniform(1, 1).unwrap();
        let f = FiniteSet::new(space, vec![ModuleVector::from_real(vec![vec![1.0]])]).unwrap();
        let x = ModuleVector::from_real(vec![vec![2.0]]);
        let sol = zonotope_distance(&x, &Zonotope::new(f), SolverOptions::default()).unwrap();
        assert!((sol.distance.values()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn members_have_zero_distance() {
        let mut rng = Rng64::seed_from_u64(23);
        let space = FiberSpace::with_dims(vec![1, 2, 3]).unwrap();
        for _ in 0..20 {
            let f = random_set(&mut rng, &space, 3, 1.0);
            let z = Zonotope::new(f);
            let coeffs: Vec<_> = (0..3).map(|_| random_coefficient(&mut rng, 3, 1.0)).collect();
            let x = z.point(&coeffs).unwrap();
            let sol = zonotope_distance(&x, &z, SolverOptions { tol: 1e-8, max_iter: 10_000 }).unwrap();
            assert!(sol.distance.le_const(1e-8, 0.0), "{:?}", sol.distance);
        }
    }

    #[test]
    fn iteration_limit_reports_best() {
        let space = FiberSpace::uniform(1, 2).unwrap();
        let f = FiniteSet::new(
            space,
            vec![
                ModuleVector::from_real(vec![vec![1.0, 0.0]]),
                ModuleVector::from_real(vec![vec![1.0, 1e-3]]),
            ],
        )
        .unwrap();
        let x = ModuleVector::from_real(vec![vec![0.5, 4e-4]]);
        let err = zonotope_distance(&x, &Zonotope::new(f), SolverOptions { tol: 1e-12, max_iter: 2 }).unwrap_err();
        match err {
            Error::IterationLimit { best, .. } => assert!(best.values()[0].is_finite()),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn cp_check_examples() {
        let space = FiberSpace::uniform(1, 1).unwrap();
        let e1 = FiniteSet::new(space.clone(), vec![ModuleVector::from_real(vec![vec![1.0]])]).unwrap();
        let far = FiniteSet::new(space, vec![ModuleVector::from_real(vec![vec![2.0]])]).unwrap();
        assert!(!cp_check(&far, &e1, 0.5, SolverOptions::default()).unwrap().verdict);
        assert!(cp_check(&e1, &e1, 1e-3, SolverOptions::default()).unwrap().verdict);
    }

    #[test]
    fn zero_generators_give_norm() {
        let space = FiberSpace::uniform(2, 2).unwrap();
        let f = FiniteSet::singleton_zero(space);
        let x = ModuleVector::from_real(vec![vec![3.0, 4.0], vec![0.0, 1.0]]);
        let sol = zonotope_distance(&x, &Zonotope::new(f), SolverOptions::default()).unwrap();
        assert_eq!(sol.distance.values(), &[5.0, 1.0]);
    }
}
