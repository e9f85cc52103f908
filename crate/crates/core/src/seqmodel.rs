//! Truncated `ℓ∞(ℕ; H)`: a set that is totally order-bounded but not
//! uniformly so.
//!
//! Coordinates `1..=N` are points `0..N` of the base; point `N` is the tail
//! standing in for every coordinate beyond `N`. Every fiber is `ℂ^N` with
//! orthonormal basis `e_1..e_N`. All elements built here have zero tail.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lns::{defect, nearest, FiberSpace, FiniteSet, ModuleVector};
use crate::relstruct::egoroff_localize;
use crate::stone::{Idempotent, StoneElement};

pub const HALF_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug, Serialize)]
pub struct SeqSpace {
    n: usize,
    space: FiberSpace,
}

impl SeqSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument(format!("truncation length must be at least 2, got {n}")));
        }
        let mut labels: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
        labels.push("tail".into());
        let base = crate::stone::PointSet::new(labels)?;
        Ok(Self { n, space: FiberSpace::new(base, vec![n; n + 1])? })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &FiberSpace {
        &self.space
    }

    pub fn tail(&self) -> usize {
        self.n
    }

    fn unit(&self, j: usize) -> Vec<Complex64> {
        let mut e = vec![Complex64::new(0.0, 0.0); self.n];
        e[j - 1] = Complex64::new(1.0, 0.0);
        e
    }

    /// `1_{k} ⊗ e_j` (1-based).
    pub fn indicator_tensor(&self, k: usize, j: usize) -> ModuleVector {
        let mut v = self.space.zero();
        *v.fiber_mut(k - 1) = self.unit(j);
        v
    }

    /// `1 ⊗ e_l` on the prefix, zero tail.
    pub fn constant_tensor(&self, l: usize) -> ModuleVector {
        let mut v = self.space.zero();
        for k in 0..self.n {
            *v.fiber_mut(k) = self.unit(l);
        }
        v
    }

    /// The prefix `{1..=m}` as an idempotent (tail excluded).
    pub fn prefix(&self, m: usize) -> Idempotent {
        Idempotent::new((0..=self.n).map(|w| w < m).collect())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub seq: SeqSpace,
    /// `{1_{k} ⊗ e_j : 1 ≤ j ≤ k ≤ N}`.
    pub m: FiniteSet,
    /// `F_n = {0} ∪ {1 ⊗ e_l : l ≤ n}` for `n = 1..=N`.
    pub nets: Vec<FiniteSet>,
}

impl Counterexample {
    pub fn net(&self, n: usize) -> &FiniteSet {
        &self.nets[n - 1]
    }
}

pub fn build_counterexample(n: usize) -> Result<Counterexample> {
    let seq = SeqSpace::new(n)?;
    let mut m = FiniteSet::empty(seq.space.clone());
    for k in 1..=n {
        for j in 1..=k {
            m.push(seq.indicator_tensor(k, j))?;
        }
    }
    let mut nets = Vec::with_capacity(n);
    let mut f = FiniteSet::singleton_zero(seq.space.clone());
    for l in 1..=n {
        f.push(seq.constant_tensor(l))?;
        nets.push(f.clone());
    }
    Ok(Counterexample { seq, m, nets })
}

#[derive(Clone, Debug, Serialize)]
pub struct TobBound {
    pub n: usize,
    pub verdict: bool,
    pub defect: StoneElement,
}

/// `defect(M, F_n)`: zero on `1..=n`, at most `√2` beyond.
pub fn verify_tob_bound(ce: &Counterexample, n: usize, tol: f64) -> Result<TobBound> {
    let big_n = ce.seq.n;
    if n == 0 || n > big_n {
        return Err(Error::Argument(format!("net index must lie in 1..={big_n}, got {n}")));
    }
    let d = defect(&ce.m, ce.net(n))?.value;
    let verdict = d
        .values()
        .iter()
        .enumerate()
        .all(|(w, &v)| if w < n { v <= tol } else { v <= std::f64::consts::SQRT_2 + tol });
    Ok(TobBound { n, verdict, defect: d })
}

/// `defect(M, F_n)` for every `n`, one row per net.
pub fn defect_table(ce: &Counterexample) -> Result<Vec<StoneElement>> {
    ce.nets.iter().map(|f| Ok(defect(&ce.m, f)?.value)).collect()
}

pub fn defect_table_csv(ce: &Counterexample) -> Result<String> {
    let mut out = String::from("n");
    for label in ce.seq.space.base().labels() {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (i, row) in defect_table(ce)?.iter().enumerate() {
        out.push_str(&(i + 1).to_string());
        for v in row.values() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NotUtobWitness {
    /// Coordinate (1-based).
    pub n: usize,
    /// Basis index (1-based).
    pub i: usize,
    /// `min_j ‖e_i − g_j(n)‖`.
    pub distance: f64,
}

/// For `|F| = d < N`, finds `n` and `i ≤ n` with `min_j ‖e_i − g_j(n)‖ ≥ √2/2`.
/// Coordinates are scanned upward from 1; some `n ≤ d + 1` always works, since
/// `d` open balls of radius `√2/2` hold at most `d` of the `e_i`. An empty `F`
/// is treated as `{0}`.
pub fn verify_not_utob(seq: &SeqSpace, f: &FiniteSet) -> Result<NotUtobWitness> {
    let f = if f.is_empty() { FiniteSet::singleton_zero(seq.space.clone()) } else { f.clone() };
    seq.space.check(f.get(0))?;
    let d = f.len();
    if d >= seq.n {
        return Err(Error::Argument(format!("need |F| < N, got {d} ≥ {}", seq.n)));
    }
    for n in 1..=seq.n {
        for i in 1..=n {
            let x = seq.indicator_tensor(n, i);
            let (inf, _) = nearest(&x, &f)?;
            let dist = inf.values()[n - 1];
            if dist >= HALF_SQRT2 {
                return Ok(NotUtobWitness { n, i, distance: dist });
            }
        }
    }
    Err(Error::Internal("no separating coordinate found; the pigeonhole argument guarantees one".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct EgoroffDemo {
    pub delta: f64,
    /// `A = {1..=m}`.
    pub m: usize,
    pub set: Idempotent,
    /// `μ(A^c)`, tail included.
    pub excluded_mass: f64,
    pub tail_mass: f64,
    pub thresholds: Vec<(f64, Option<usize>)>,
    /// `sup_A defect(1_A M, 1_A F_m)`.
    pub defect_on_set: f64,
    pub witness: FiniteSet,
}

/// Weights `μ({k}) = 2^{-k}` for `k ≤ N`, the remaining `2^{-N}` on the tail.
pub fn dyadic_weights(n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (1..=n).map(|k| 0.5f64.powi(k as i32)).collect();
    w.push(0.5f64.powi(n as i32));
    w
}

/// Localizes the counterexample to a prefix `A` with `μ(A^c) ≤ δ` on which the
/// defects of `(F_n)` converge uniformly.
///
/// The tail never converges within the truncation and is always excluded.
pub fn egoroff_demo(n: usize, delta: f64, tol: f64) -> Result<EgoroffDemo> {
    let ce = build_counterexample(n)?;
    let weights = dyadic_weights(n);
    let tail_mass = weights[n];
    if delta < tail_mass {
        return Err(Error::Infeasible(format!(
            "delta {delta} is below the tail mass {tail_mass} at truncation {n}"
        )));
    }
    let prefix_seq: Vec<StoneElement> = defect_table(&ce)?
        .into_iter()
        .map(|row| StoneElement::new(row.values()[..n].to_vec()))
        .collect();
    let eps_grid = [1.0, 0.5, 0.1];
    let rep = egoroff_localize(&prefix_seq, &weights[..n], delta - tail_mass + 1e-15, &eps_grid, tol)?;
    let m = rep.set.mask().iter().take_while(|&&b| b).count();
    if rep.set.count() != m {
        return Err(Error::Internal("localized set is not a prefix".into()));
    }
    let set = ce.seq.prefix(m);
    let excluded_mass = rep.excluded_mass + tail_mass;
    let witness = if m == 0 { FiniteSet::singleton_zero(ce.seq.space.clone()) } else { ce.net(m).clone() };
    let localized_m = ce.m.map(|x| x.restrict(&set).expect("same base"))?;
    let localized_f = witness.map(|x| x.restrict(&set).expect("same base"))?;
    let d = defect(&localized_m, &localized_f)?.value;
    Ok(EgoroffDemo {
        delta,
        m,
        defect_on_set: set.points().map(|w| d.values()[w]).fold(0.0, f64::max),
        set,
        excluded_mass,
        tail_mass,
        thresholds: rep.thresholds,
        witness: localized_f,
    })
}
