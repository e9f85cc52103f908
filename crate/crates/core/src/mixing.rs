//! The canonical `𝔹`-set structure of a lattice-normed module, mixings over
//! partitions of unity, and cyclic-compactness witnesses.
//!
//! `⟦x = y⟧` is the complement of the support of `|x − y|`. A mixing
//! `x = Σ_α p_α x_α` agrees with `x_α` on `p_α`; in the fiberwise model this is
//! a pointwise selection. Mix-closures are never materialised, only tested.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lns::{defect, greedy_order, nearest, truncate_to_ball, FiniteSet, ModuleVector};
use crate::stone::{exhaustion, Idempotent, PartitionOfUnity, StoneElement};

/// `⟦x = y⟧`.
pub fn eq_idempotent(x: &ModuleVector, y: &ModuleVector, tol: f64) -> Result<Idempotent> {
    Ok(x.dist(y)?.supp(tol).complement())
}

/// `⟦x ≠ y⟧ = supp |x − y|`.
pub fn neq_idempotent(x: &ModuleVector, y: &ModuleVector, tol: f64) -> Result<Idempotent> {
    Ok(x.dist(y)?.supp(tol))
}

/// The mixing `Σ_α p_α x_α`.
pub fn mix(partition: &PartitionOfUnity, family: &[ModuleVector]) -> Result<ModuleVector> {
    if family.len() != partition.len() {
        return Err(Error::Argument(format!(
            "partition has {} parts but the family has {} elements",
            partition.len(),
            family.len()
        )));
    }
    let first = family.first().ok_or_else(|| Error::Argument("empty family".into()))?;
    let n = first.base_len();
    if partition.base_len() != n {
        return Err(Error::Dimension { expected: n, found: partition.base_len() });
    }
    for x in family {
        if x.dims() != first.dims() {
            return Err(Error::Dimension { expected: n, found: x.base_len() });
        }
    }
    let mut out = first.clone();
    for w in 0..n {
        let a = partition.part_of(w);
        *out.fiber_mut(w) = family[a].fiber(w).to_vec();
    }
    Ok(out)
}

/// Mixing of real elements of `A` (used for the `𝔹`-set map law).
pub fn mix_scalars(partition: &PartitionOfUnity, family: &[StoneElement]) -> Result<StoneElement> {
    if family.len() != partition.len() {
        return Err(Error::Argument("family and partition lengths differ".into()));
    }
    let n = partition.base_len();
    let mut out = vec![0.0; n];
    for (w, v) in out.iter_mut().enumerate() {
        let a = partition.part_of(w);
        if family[a].len() != n {
            return Err(Error::Dimension { expected: n, found: family[a].len() });
        }
        *v = family[a].values()[w];
    }
    Ok(StoneElement::new(out))
}

/// Records how `x` arises as a mixing of elements of a set.
#[derive(Clone, Debug, Serialize)]
pub struct MixWitness {
    pub partition: PartitionOfUnity,
    /// Index into the mixed family for every part.
    pub assignment: Vec<usize>,
}

/// Decides whether `x ∈ mix(M)`: every fiber of `x` must coincide (within
/// `tol`) with the fiber of some `m ∈ M`. The lowest such index is used.
pub fn mix_membership(x: &ModuleVector, m: &FiniteSet, tol: f64) -> Result<Option<MixWitness>> {
    m.space().check(x)?;
    let n = m.space().len();
    let mut pick = Vec::with_capacity(n);
    for w in 0..n {
        let found = m
            .elements()
            .iter()
            .position(|y| crate::lns::fiber_dist(x.fiber(w), y.fiber(w)) <= tol);
        match found {
            Some(i) => pick.push(i),
            None => return Ok(None),
        }
    }
    let mut assignment: Vec<usize> = pick.clone();
    assignment.sort_unstable();
    assignment.dedup();
    let labels: Vec<usize> = pick
        .iter()
        .map(|i| assignment.binary_search(i).expect("present"))
        .collect();
    let partition = PartitionOfUnity::from_assignment(assignment.len(), &labels)?;
    Ok(Some(MixWitness { partition, assignment }))
}

/// Fiberwise nearest selection from `f`: the element of `mix(F)` closest to `x`
/// at every point, together with its partition.
pub fn nearest_mixing(x: &ModuleVector, f: &FiniteSet) -> Result<(ModuleVector, PartitionOfUnity)> {
    let (_, arg) = nearest(x, f)?;
    let partition = PartitionOfUnity::from_assignment(f.len(), &arg)?;
    let z = mix(&partition, f.elements())?;
    Ok((z, partition))
}

/// A part `(q_n, F_n)` of a cyclic-compactness witness.
#[derive(Clone, Debug, Serialize)]
pub struct CyclicPart {
    pub cardinality: usize,
    pub region: Idempotent,
    pub generators: FiniteSet,
}

/// `(q_n)_n` partition of unity with finite sets `F_n` such that every `x ∈ M`
/// has `z_n ∈ mix(F_n)` with `q_n |x − z_n| ≤ ε·1`.
#[derive(Clone, Debug, Serialize)]
pub struct CyclicWitness {
    pub eps: f64,
    pub radius: f64,
    pub parts: Vec<CyclicPart>,
}

impl CyclicWitness {
    pub fn partition(&self) -> Result<PartitionOfUnity> {
        PartitionOfUnity::new(self.parts.iter().map(|p| p.region.clone()).collect())
    }
}

/// Runs the exhaustion construction for an explicit candidate family of finite
/// subsets of `B[0; 2r]`.
///
/// Each point is assigned (first fit, ascending cardinality, then list order)
/// to a candidate `F` whose defect is at most `ε` there, giving `(p_F)`. The
/// parts `q_n = ⋁_{#F = n} p_F` carry the mixed generators
/// `y_j^n = Σ_{#F=n} p_F y_j^F` (zero outside `q_n`).
pub fn cyclic_witness_from_candidates(
    m: &FiniteSet,
    eps: f64,
    r: f64,
    candidates: &[FiniteSet],
    tol: f64,
) -> Result<CyclicWitness> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {eps}")));
    }
    let n = m.space().len();
    if m.is_empty() {
        return Ok(CyclicWitness {
            eps,
            radius: r,
            parts: vec![CyclicPart {
                cardinality: 1,
                region: Idempotent::one(n),
                generators: FiniteSet::singleton_zero(m.space().clone()),
            }],
        });
    }
    let candidates: Vec<&FiniteSet> = candidates.iter().filter(|f| !f.is_empty()).collect();
    if candidates.is_empty() {
        return Err(Error::Construction("no nonempty candidate sets".into()));
    }
    for f in &candidates {
        if !f.sup_norm_bound().le_const(2.0 * r, tol) {
            return Err(Error::Argument("candidate sets must lie in B[0; 2r]".into()));
        }
    }
    let cover: Vec<Idempotent> = candidates
        .iter()
        .map(|f| Ok(defect(m, f)?.value.level_le(eps + tol)))
        .collect::<Result<_>>()?;
    let mut priority: Vec<usize> = (0..candidates.len()).collect();
    priority.sort_by_key(|&i| (candidates[i].len(), i));
    let p = exhaustion(&cover, Some(&priority)).map_err(|e| match e {
        Error::IncompleteCover { point } => Error::Construction(format!(
            "no candidate reaches defect {eps} at point {point}; M is not totally order-bounded at this level over the ball"
        )),
        other => other,
    })?;

    let mut sizes: Vec<usize> = candidates.iter().map(|f| f.len()).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut parts = Vec::new();
    for card in sizes {
        let members: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].len() == card).collect();
        let mut region = Idempotent::zero(n);
        for &i in &members {
            region = region.or(&p.parts()[i])?;
        }
        if region.is_zero() {
            continue;
        }
        let mut gens = vec![m.space().zero(); card];
        for &i in &members {
            let pf = &p.parts()[i];
            for w in pf.points() {
                for (j, g) in gens.iter_mut().enumerate() {
                    *g.fiber_mut(w) = candidates[i].get(j).fiber(w).to_vec();
                }
            }
        }
        parts.push(CyclicPart { cardinality: card, region, generators: FiniteSet::new(m.space().clone(), gens)? });
    }
    Ok(CyclicWitness { eps, radius: r, parts })
}

/// Cyclic-compactness witness for a finite `M ⊆ B[0; r]` at level `ε`.
///
/// The candidate family is the chain of greedy farthest-point prefixes of `M`
/// (sizes `1..=|M|`), each truncated to `B[0; 2r]`.
pub fn cyclic_witness(m: &FiniteSet, eps: f64, r: f64, tol: f64) -> Result<CyclicWitness> {
    if !(r > 0.0) {
        return Err(Error::Argument(format!("radius must be positive, got {r}")));
    }
    let (order, _) = greedy_order(m);
    let candidates = (1..=order.len())
        .map(|k| truncate_to_ball(&m.select(&order[..k]), r))
        .collect::<Result<Vec<_>>>()?;
    cyclic_witness_from_candidates(m, eps, r, &candidates, tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct CyclicVerdict {
    pub verdict: bool,
    pub partition_ok: bool,
    /// `(element, part)` pairs where `q_n |x − z_n| ≤ ε·1` failed.
    pub failures: Vec<(usize, usize)>,
    /// `q_n · inf_{y∈F_n} |x − y| ≤ ε·1` for every `x` and `n`.
    pub localized_defect_ok: bool,
}

/// Checks a cyclic witness against `M`.
pub fn verify_cyclic(m: &FiniteSet, eps: f64, w: &CyclicWitness, tol: f64) -> Result<CyclicVerdict> {
    let partition_ok = w.partition().is_ok();
    let mut failures = Vec::new();
    let mut localized_defect_ok = true;
    for (i, x) in m.elements().iter().enumerate() {
        for (k, part) in w.parts.iter().enumerate() {
            let (z, _) = nearest_mixing(x, &part.generators)?;
            if !x.dist(&z)?.restrict(&part.region)?.le_const(eps, tol) {
                failures.push((i, k));
            }
            let (inf, _) = nearest(x, &part.generators)?;
            localized_defect_ok &= inf.restrict(&part.region)?.le_const(eps, tol);
        }
    }
    Ok(CyclicVerdict {
        verdict: partition_ok && failures.is_empty() && localized_defect_ok,
        partition_ok,
        failures,
        localized_defect_ok,
    })
}
