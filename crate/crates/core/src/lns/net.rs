//! Finite ε-nets: polar grids of complex discs and Heine–Borel nets over
//! suborthonormal bases.

use num_complex::Complex64;

use super::{FiniteSet, ModuleVector};
use crate::error::{Error, Result};

/// Default upper bound on the number of elements a net may have.
pub const DEFAULT_NET_CAP: usize = 1_000_000;

/// A finite subset of `ℂ` whose `rho`-balls cover the closed disc of radius `c`.
///
/// Rings sit at radial spacing `rho·√2` (radial error at most `rho/√2`); each
/// ring carries enough equally spaced points to keep the angular error at most
/// `rho/√2` for every radius that rounds to it.
pub fn disc_net(c: f64, rho: f64) -> Vec<Complex64> {
    assert!(rho > 0.0, "mesh must be positive");
    if c <= rho {
        return vec![Complex64::new(0.0, 0.0)];
    }
    let h = rho * std::f64::consts::SQRT_2;
    let rings = (c / h).ceil() as usize;
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for k in 1..=rings {
        let r = (k as f64 * h).min(c);
        let s_max = (r + h / 2.0).min(c);
        // need 4·s·r·sin²(π/2m) ≤ rho²/2
        let a = rho / (8.0 * s_max * r).sqrt();
        let m = if a >= 1.0 {
            1
        } else {
            (std::f64::consts::PI / (2.0 * a.asin())).ceil() as usize
        };
        pts.extend((0..m).map(|i| Complex64::from_polar(r, 2.0 * std::f64::consts::PI * i as f64 / m as f64)));
    }
    pts
}

/// Checks that `basis` is fiberwise suborthonormal within `tol`.
pub fn check_suborthonormal(basis: &FiniteSet, tol: f64) -> Result<()> {
    let n = basis.space().len();
    for (i, e) in basis.elements().iter().enumerate() {
        for (w, v) in e.lattice_norm().values().iter().enumerate() {
            if v.abs() > tol && (v - 1.0).abs() > tol {
                return Err(Error::Argument(format!("basis element {i} has norm {v} at point {w}")));
            }
        }
        for (j, f) in basis.elements().iter().enumerate().skip(i + 1) {
            let ip = e.inner(f)?;
            for w in 0..n {
                if ip.values()[w].norm() > tol {
                    return Err(Error::Argument(format!("basis elements {i} and {j} are not orthogonal at point {w}")));
                }
            }
        }
    }
    Ok(())
}

/// All combinations `Σ_j z_j e_j` with `z_j` drawn from a disc net.
fn combinations(basis: &FiniteSet, grid: &[Complex64], cap: usize) -> Result<FiniteSet> {
    let d = basis.len();
    let size = (grid.len() as f64).powi(d as i32);
    if size > cap as f64 {
        return Err(Error::SizeCap { size, cap });
    }
    let mut out = FiniteSet::empty(basis.space().clone());
    if d == 0 {
        out.push(basis.space().zero())?;
        return Ok(out);
    }
    let mut idx = vec![0usize; d];
    loop {
        let mut y: ModuleVector = basis.space().zero();
        for (j, &g) in idx.iter().enumerate() {
            y = y.add(&basis.get(j).scale(grid[g]))?;
        }
        out.push(y)?;
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == d {
                return Ok(out);
            }
            idx[pos] += 1;
            if idx[pos] < grid.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// A finite `F` such that every `x` in the submodule spanned by `basis` with
/// `|x| ≤ c·1` satisfies `inf_{y∈F} |x − y| ≤ ε·1`.
pub fn heine_borel_net(basis: &FiniteSet, c: f64, eps: f64, cap: usize, tol: f64) -> Result<FiniteSet> {
    if c < 0.0 {
        return Err(Error::Argument(format!("bound must be nonnegative, got {c}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {eps}")));
    }
    check_suborthonormal(basis, tol)?;
    if c == 0.0 || basis.is_empty() {
        return Ok(FiniteSet::singleton_zero(basis.space().clone()));
    }
    let rho = eps / (basis.len() as f64).sqrt();
    let grid = disc_net(c, rho);
    combinations(basis, &grid, cap)
}

/// A net of the zonotope hull `Σ_j B_A[0;1]·y_j`: returns the net and the
/// slack `δ = ρ · max_ω Σ_j |y_j|(ω)`, so that `M ⊆ Z_F + B[0;ε]` implies
/// `defect(M, net) ≤ (ε + δ)·1`.
pub fn zonotope_net(generators: &FiniteSet, rho: f64, cap: usize) -> Result<(FiniteSet, f64)> {
    if !(rho > 0.0) {
        return Err(Error::Argument(format!("mesh must be positive, got {rho}")));
    }
    let grid = disc_net(1.0, rho);
    let net = combinations(generators, &grid, cap)?;
    let n = generators.space().len();
    let mut total = vec![0.0; n];
    for y in generators.elements() {
        for (t, v) in total.iter_mut().zip(y.lattice_norm().values()) {
            *t += v;
        }
    }
    let s = total.into_iter().fold(0.0, f64::max);
    Ok((net, rho * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lns::{defect, FiberSpace};
    use crate::random::Rng64;
    use rand::{Rng, SeedableRng};

    #[test]
    fn disc_net_covers_disc() {
        let mut rng = Rng64::seed_from_u64(5);
        for &(c, rho) in &[(1.0, 0.5), (1.0, 0.1), (2.5, 0.3), (0.05, 0.4)] {
            let net = disc_net(c, rho);
            for _ in 0..2000 {
                let r = c * rng.gen::<f64>().sqrt();
                let z = Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
                let d = net.iter().map(|g| (z - g).norm()).fold(f64::INFINITY, f64::min);
                assert!(d <= rho + 1e-12, "c={c} rho={rho} z={z} d={d}");
            }
            assert!(net.iter().all(|g| g.norm() <= c + 1e-12));
        }
    }

    fn unit_basis(n: usize, dim: usize, d: usize) -> FiniteSet {
        let space = FiberSpace::uniform(n, dim).unwrap();
        let els = (0..d)
            .map(|j| {
                let mut f = vec![vec![0.0; dim]; n];
                for fib in f.iter_mut() {
                    fib[j] = 1.0;
                }
                ModuleVector::from_real(f)
            })
            .collect();
        FiniteSet::new(space, els).unwrap()
    }

    #[test]
    fn heine_borel_examples() {
        let basis = unit_basis(2, 2, 1);
        let f = heine_borel_net(&basis, 0.0, 0.1, DEFAULT_NET_CAP, 1e-9).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.get(0).lattice_norm().sup_norm(), 0.0);

        let f = heine_borel_net(&basis, 1.0, 2.0, DEFAULT_NET_CAP, 1e-9).unwrap();
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn heine_borel_rejects_bad_basis_and_cap() {
        let space = FiberSpace::uniform(1, 2).unwrap();
        let not_ortho = FiniteSet::new(
            space.clone(),
            vec![
                ModuleVector::from_real(vec![vec![1.0, 0.0]]),
                ModuleVector::from_real(vec![vec![0.6, 0.8]]),
            ],
        )
        .unwrap();
        assert!(heine_borel_net(&not_ortho, 1.0, 0.5, DEFAULT_NET_CAP, 1e-9).is_err());
        let basis = unit_basis(1, 2, 2);
        assert!(matches!(
            heine_borel_net(&basis, 1.0, 0.01, 1000, 1e-9),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn heine_borel_covers_samples() {
        let mut rng = Rng64::seed_from_u64(17);
        let basis = unit_basis(3, 3, 2);
        let f = heine_borel_net(&basis, 1.0, 0.5, DEFAULT_NET_CAP, 1e-9).unwrap();
        for _ in 0..300 {
            let x = crate::random::random_in_span(&mut rng, &basis, 1.0);
            assert!(x.lattice_norm().le_const(1.0, 1e-12));
            let m = FiniteSet::new(basis.space().clone(), vec![x]).unwrap();
            assert!(defect(&m, &f).unwrap().value.le_const(0.5, 1e-9));
        }
    }
}
