//! The defect functional `F ↦ sup_{x∈M} inf_{y∈F} |x − y|` and the
//! constructions built on it.

use serde::Serialize;

use super::{fiber_dist, FiniteSet, ModuleVector};
use crate::error::{Error, Result};
use crate::stone::{PartitionOfUnity, StoneElement};

/// Value of the defect functional with the data that witnesses it.
#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    pub value: StoneElement,
    pub witness: FiniteSet,
    /// `argmin[i][ω]`: index in `witness` nearest to `M[i]` at `ω` (lowest index on ties).
    pub argmin: Vec<Vec<usize>>,
    /// `worst[ω]`: index in `M` attaining the supremum at `ω` (lowest index on ties).
    pub worst: Vec<usize>,
}

impl DefectReport {
    /// One CSV row per point of `Ω`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,defect,worst_element,nearest_witness\n");
        let labels = self.witness.space().base().labels();
        for (w, v) in self.value.values().iter().enumerate() {
            let (worst, nearest) = match self.worst.get(w) {
                Some(&i) => (i.to_string(), self.argmin[i][w].to_string()),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!("{},{:.12e},{},{}\n", labels[w], v, worst, nearest));
        }
        out
    }
}

/// `inf_{y∈F} |x − y|` pointwise, with the lowest-index argmin per point.
pub fn nearest(x: &ModuleVector, f: &FiniteSet) -> Result<(StoneElement, Vec<usize>)> {
    if f.is_empty() {
        return Err(Error::Argument("the infimum over an empty set is undefined".into()));
    }
    f.space().check(x)?;
    let n = f.space().len();
    let mut best = vec![f64::INFINITY; n];
    let mut arg = vec![0usize; n];
    for (j, y) in f.elements().iter().enumerate() {
        for w in 0..n {
            let d = fiber_dist(x.fiber(w), y.fiber(w));
            if d < best[w] {
                best[w] = d;
                arg[w] = j;
            }
        }
    }
    Ok((StoneElement::new(best), arg))
}

/// Evaluates the defect of `m` against the finite set `f`.
pub fn defect(m: &FiniteSet, f: &FiniteSet) -> Result<DefectReport> {
    if m.is_empty() || f.is_empty() {
        return Err(Error::Argument("defect needs nonempty M and F".into()));
    }
    if m.space().dims() != f.space().dims() {
        return Err(Error::Dimension { expected: m.space().len(), found: f.space().len() });
    }
    let n = m.space().len();
    let mut value = vec![f64::NEG_INFINITY; n];
    let mut worst = vec![0usize; n];
    let mut argmin = Vec::with_capacity(m.len());
    for (i, x) in m.elements().iter().enumerate() {
        let (d, arg) = nearest(x, f)?;
        for (w, &v) in d.values().iter().enumerate() {
            if v > value[w] {
                value[w] = v;
                worst[w] = i;
            }
        }
        argmin.push(arg);
    }
    Ok(DefectReport { value: StoneElement::new(value), witness: f.clone(), argmin, worst })
}

/// Outcome of a uniform total order-boundedness check.
#[derive(Clone, Debug, Serialize)]
pub struct UtobReport {
    pub verdict: bool,
    pub eps: f64,
    /// Smallest greedy prefix achieving `defect ≤ ε·1`.
    pub witness: FiniteSet,
    pub witness_indices: Vec<usize>,
    pub defect: StoneElement,
    /// The full farthest-point ordering of `M`.
    pub order: Vec<usize>,
    /// `radii[k]`: sup-norm of the defect of the first `k + 1` greedy elements.
    pub radii: Vec<f64>,
}

/// Farthest-point ordering of `m`, seeded by the element of largest lattice
/// norm. Returns the ordering and the covering radius after each prefix.
pub fn greedy_order(m: &FiniteSet) -> (Vec<usize>, Vec<f64>) {
    let k = m.len();
    if k == 0 {
        return (Vec::new(), Vec::new());
    }
    let n = m.space().len();
    let norms: Vec<f64> = m.elements().iter().map(|x| x.lattice_norm().sup_norm()).collect();
    let mut first = 0;
    for (i, &v) in norms.iter().enumerate() {
        if v > norms[first] {
            first = i;
        }
    }
    let mut chosen = vec![false; k];
    let mut residual: Vec<Vec<f64>> = vec![vec![f64::INFINITY; n]; k];
    let mut order = Vec::with_capacity(k);
    let mut radii = Vec::with_capacity(k);
    let mut next = first;
    for _ in 0..k {
        chosen[next] = true;
        order.push(next);
        let y = m.get(next);
        for (i, x) in m.elements().iter().enumerate() {
            for w in 0..n {
                let d = fiber_dist(x.fiber(w), y.fiber(w));
                if d < residual[i][w] {
                    residual[i][w] = d;
                }
            }
        }
        let mut far = f64::NEG_INFINITY;
        let mut far_idx = None;
        let mut radius: f64 = 0.0;
        for i in 0..k {
            let r = residual[i].iter().fold(0.0f64, |a, &b| a.max(b));
            radius = radius.max(r);
            if !chosen[i] && r > far {
                far = r;
                far_idx = Some(i);
            }
        }
        radii.push(radius);
        match far_idx {
            Some(i) => next = i,
            None => break,
        }
    }
    (order, radii)
}

/// Decides whether `m` admits a finite `F` with `defect(M, F) ≤ ε·1`
/// (within `tol`). For an explicit finite `m` the answer is always yes; the
/// report carries the smallest greedy farthest-point prefix that works.
pub fn is_utob(m: &FiniteSet, eps: f64, tol: f64) -> Result<UtobReport> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {eps}")));
    }
    if m.is_empty() {
        let witness = FiniteSet::singleton_zero(m.space().clone());
        return Ok(UtobReport {
            verdict: true,
            eps,
            witness,
            witness_indices: Vec::new(),
            defect: StoneElement::zero(m.space().len()),
            order: Vec::new(),
            radii: Vec::new(),
        });
    }
    let (order, radii) = greedy_order(m);
    let k = radii.iter().position(|&r| r <= eps + tol).map_or(order.len(), |p| p + 1);
    let witness_indices = order[..k].to_vec();
    let witness = m.select(&witness_indices);
    let report = defect(m, &witness)?;
    let verdict = report.value.le_const(eps, tol);
    Ok(UtobReport { verdict, eps, witness, witness_indices, defect: report.value, order, radii })
}

/// Replaces every `y ∈ F` by `p·y` with `p = ⟦|y| ≤ 2r·1⟧`.
///
/// For `x` with `|x| ≤ r·1` this never increases `inf_{y∈F} |x − y|`.
pub fn truncate_to_ball(f: &FiniteSet, r: f64) -> Result<FiniteSet> {
    if !(r > 0.0) {
        return Err(Error::Argument(format!("radius must be positive, got {r}")));
    }
    f.map(|y| {
        let p = y.lattice_norm().level_le(2.0 * r);
        y.restrict(&p).expect("same base")
    })
}

/// Idempotent selections showing `M ⊆ Z_F + B[0; ε]`.
#[derive(Clone, Debug, Serialize)]
pub struct CpWitness {
    pub generators: FiniteSet,
    pub eps: f64,
    /// For every `x ∈ M`, the partition `(p_y)_{y∈F}` with `p_y |x − y| ≤ ε·1`.
    pub selections: Vec<PartitionOfUnity>,
}

impl CpWitness {
    /// `Σ_y p_y y ∈ Z_F` for the `i`-th element.
    pub fn approximant(&self, i: usize) -> ModuleVector {
        let sel = &self.selections[i];
        let n = self.generators.space().len();
        let mut out = self.generators.space().zero();
        for w in 0..n {
            let j = sel.part_of(w);
            *out.fiber_mut(w) = self.generators.get(j).fiber(w).to_vec();
        }
        out
    }

    /// `p_y |x − y| ≤ ε·1` for every part of the `i`-th selection.
    pub fn holds_for(&self, i: usize, x: &ModuleVector, tol: f64) -> Result<bool> {
        for (j, p) in self.selections[i].parts().iter().enumerate() {
            let d = x.dist(self.generators.get(j))?.restrict(p)?;
            if !d.le_const(self.eps, tol) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Builds the selections for a given `F0` with `defect(M, F0) ≤ ε·1`.
pub fn cp_witness_for(m: &FiniteSet, f0: &FiniteSet, eps: f64, tol: f64) -> Result<CpWitness> {
    let report = defect(m, f0)?;
    if !report.value.le_const(eps, tol) {
        return Err(Error::Precondition(format!(
            "defect {} exceeds epsilon {eps}",
            report.value.sup_norm()
        )));
    }
    let selections = report
        .argmin
        .iter()
        .map(|arg| PartitionOfUnity::from_assignment(f0.len(), arg))
        .collect::<Result<Vec<_>>>()?;
    Ok(CpWitness { generators: f0.clone(), eps, selections })
}

/// Runs [`is_utob`] and turns its witness into zonotope selections.
pub fn cp_witness_from_utob(m: &FiniteSet, eps: f64, tol: f64) -> Result<CpWitness> {
    let utob = is_utob(m, eps, tol)?;
    if !utob.verdict {
        return Err(Error::Precondition(format!("M is not uniformly totally order-bounded at {eps}")));
    }
    if m.is_empty() {
        return Ok(CpWitness { generators: utob.witness, eps, selections: Vec::new() });
    }
    cp_witness_for(m, &utob.witness, eps, tol)
}
