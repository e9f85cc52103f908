//! Finite Stone algebras: real functions on a finite point set `Ω`.
//!
//! The algebra `A = C(Ω)` is represented by [`StoneElement`], its Boolean
//! algebra of idempotents by [`Idempotent`], and finite partitions of unity by
//! [`PartitionOfUnity`]. All comparisons are pointwise. On a finite discrete
//! `Ω` every level set is clopen, so interiors of level sets are the level sets
//! themselves.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for pointwise comparisons of floating-point fibers.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Ordered, labelled points of `Ω`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet {
    labels: Vec<String>,
}

impl PointSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Argument("point set must contain at least one point".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Argument(format!("duplicate point label {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// Points labelled `0..n`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension { expected: a, found: b });
    }
    Ok(())
}

/// An element of the finite Stone algebra `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StoneElement(Vec<f64>);

impl StoneElement {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, 1.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Lattice join.
    pub fn sup(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    /// Lattice meet.
    pub fn inf(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    /// `max_ω |a(ω)|`, the natural norm of `A`.
    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise `self ≤ other + tol`.
    pub fn le(&self, other: &Self, tol: f64) -> Result<bool> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| *a <= *b + tol))
    }

    /// Pointwise `self ≤ c·1 + tol`.
    pub fn le_const(&self, c: f64, tol: f64) -> bool {
        self.0.iter().all(|a| *a <= c + tol)
    }

    /// Pointwise `|self − other| ≤ tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> Result<bool> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| (a - b).abs() <= tol))
    }

    /// Support idempotent: true exactly where `|a(ω)| > tol`.
    pub fn supp(&self, tol: f64) -> Idempotent {
        Idempotent(self.0.iter().map(|v| v.abs() > tol).collect())
    }

    /// The idempotent of the level set `{ω : a(ω) ≤ c}`.
    pub fn level_le(&self, c: f64) -> Idempotent {
        Idempotent(self.0.iter().map(|v| *v <= c).collect())
    }

    /// Multiply by an idempotent (restrict to its support).
    pub fn restrict(&self, p: &Idempotent) -> Result<Self> {
        check_len(self.len(), p.len())?;
        Ok(Self(
            self.0.iter().zip(&p.0).map(|(v, &m)| if m { *v } else { 0.0 }).collect(),
        ))
    }

    /// Pointwise supremum of a nonempty family.
    pub fn sup_all<'a>(items: impl IntoIterator<Item = &'a StoneElement>) -> Option<Self> {
        let mut it = items.into_iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, x| Self(acc.0.iter().zip(&x.0).map(|(a, b)| a.max(*b)).collect())))
    }
}

/// Complex-valued scalars `λ ∈ A_ℂ` acting on modules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexCoefficient(Vec<Complex64>);

impl ComplexCoefficient {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self(values)
    }

    pub fn from_real(a: &StoneElement) -> Self {
        Self(a.values().iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        Self(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    /// Pointwise modulus `|λ|`.
    pub fn modulus(&self) -> StoneElement {
        StoneElement(self.0.iter().map(|z| z.norm()).collect())
    }
}

/// An element of the Boolean algebra `𝔹` of idempotents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Idempotent(Vec<bool>);

impl Idempotent {
    pub fn new(mask: Vec<bool>) -> Self {
        Self(mask)
    }

    pub fn one(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// Indicator of a single point.
    pub fn point(n: usize, i: usize) -> Self {
        let mut m = vec![false; n];
        m[i] = true;
        Self(m)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn is_zero(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| !b).collect())
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect()))
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| *a || *b).collect()))
    }

    /// `self ≤ other` in `𝔹`.
    pub fn le(&self, other: &Self) -> Result<bool> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| !*a || *b))
    }

    pub fn disjoint(&self, other: &Self) -> Result<bool> {
        check_len(self.len(), other.len())?;
        Ok(!self.0.iter().zip(&other.0).any(|(a, b)| *a && *b))
    }

    /// Canonical `𝔹`-set equality `⟦p = q⟧ = pq ∨ pᶜqᶜ`.
    pub fn bool_eq(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a == b).collect()))
    }

    pub fn as_element(&self) -> StoneElement {
        StoneElement(self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
    }

    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// A finite partition of unity `(p_i)` in `𝔹`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    parts: Vec<Idempotent>,
}

impl PartitionOfUnity {
    pub fn new(parts: Vec<Idempotent>) -> Result<Self> {
        let n = parts.first().map(Idempotent::len).ok_or_else(|| {
            Error::Argument("a partition of unity needs at least one part".into())
        })?;
        let mut hits = vec![0usize; n];
        for p in &parts {
            check_len(n, p.len())?;
            for i in p.points() {
                hits[i] += 1;
            }
        }
        if let Some(i) = hits.iter().position(|&h| h != 1) {
            return Err(Error::Argument(format!(
                "parts cover point {i} {} times; a partition of unity covers each point once",
                hits[i]
            )));
        }
        Ok(Self { parts })
    }

    pub fn trivial(n: usize) -> Self {
        Self { parts: vec![Idempotent::one(n)] }
    }

    /// Partition induced by a labelling `ω ↦ part index`.
    pub fn from_assignment(n_parts: usize, assignment: &[usize]) -> Result<Self> {
        let mut parts = vec![Idempotent::zero(assignment.len()); n_parts];
        for (i, &a) in assignment.iter().enumerate() {
            if a >= n_parts {
                return Err(Error::Argument(format!("part index {a} out of range")));
            }
            parts[a].0[i] = true;
        }
        Self::new(parts)
    }

    pub fn parts(&self) -> &[Idempotent] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn base_len(&self) -> usize {
        self.parts[0].len()
    }

    /// Index of the part containing point `i`.
    pub fn part_of(&self, i: usize) -> usize {
        self.parts.iter().position(|p| p.contains(i)).expect("partition covers every point")
    }
}

/// First-fit exhaustion: assigns every point to the first idempotent of `cover`
/// (in the order given by `priority`) containing it.
///
/// The returned parts are listed in the original order of `cover`, so that
/// `parts[i] ≤ cover[i]`.
pub fn exhaustion(cover: &[Idempotent], priority: Option<&[usize]>) -> Result<PartitionOfUnity> {
    let n = cover
        .first()
        .map(Idempotent::len)
        .ok_or_else(|| Error::Argument("exhaustion needs a nonempty cover".into()))?;
    for c in cover {
        check_len(n, c.len())?;
    }
    let order: Vec<usize> = match priority {
        Some(p) => {
            let mut sorted = p.to_vec();
            sorted.sort_unstable();
            if sorted != (0..cover.len()).collect::<Vec<_>>() {
                return Err(Error::Argument("priority must be a permutation of the cover indices".into()));
            }
            p.to_vec()
        }
        None => (0..cover.len()).collect(),
    };
    let mut parts = vec![Idempotent::zero(n); cover.len()];
    for i in 0..n {
        let k = order
            .iter()
            .copied()
            .find(|&k| cover[k].contains(i))
            .ok_or(Error::IncompleteCover { point: i })?;
        parts[k].0[i] = true;
    }
    Ok(PartitionOfUnity { parts })
}
