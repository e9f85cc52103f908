//! Fiberwise lattice-normed modules over a finite Stone algebra.
//!
//! A module `E` over `A = C(Ω)` is modelled as the direct product of the
//! Hilbert fibers `E(ω) = ℂ^{d_ω}`. The lattice norm of `x ∈ E` is the
//! function `ω ↦ ‖x(ω)‖`, and `A` acts fiberwise by scalar multiplication.

mod defect;
mod net;
mod zonotope;

pub use defect::{
    cp_witness_for, cp_witness_from_utob, defect, greedy_order, is_utob, nearest, truncate_to_ball, CpWitness,
    DefectReport, UtobReport,
};
pub use net::{check_suborthonormal, disc_net, heine_borel_net, zonotope_net, DEFAULT_NET_CAP};
pub use zonotope::{cp_check, zonotope_distance, CpReport, SolverOptions, Zonotope, ZonotopeSolution};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stone::{ComplexCoefficient, Idempotent, PointSet, StoneElement};

/// Fiber dimensions over a labelled point set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberSpace {
    base: PointSet,
    dims: Vec<usize>,
}

impl FiberSpace {
    pub fn new(base: PointSet, dims: Vec<usize>) -> Result<Self> {
        if base.len() != dims.len() {
            return Err(Error::Dimension { expected: base.len(), found: dims.len() });
        }
        if let Some(w) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Argument(format!("fiber over point {w} has dimension 0")));
        }
        Ok(Self { base, dims })
    }

    /// Fibers of the given dimensions over points labelled `0..n`.
    pub fn with_dims(dims: Vec<usize>) -> Result<Self> {
        Self::new(PointSet::indexed(dims.len())?, dims)
    }

    /// `n` fibers of common dimension `d`.
    pub fn uniform(n: usize, d: usize) -> Result<Self> {
        Self::with_dims(vec![d; n])
    }

    pub fn base(&self) -> &PointSet {
        &self.base
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of points of `Ω`.
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn zero(&self) -> ModuleVector {
        ModuleVector { fibers: self.dims.iter().map(|&d| vec![Complex64::new(0.0, 0.0); d]).collect() }
    }

    pub fn check(&self, x: &ModuleVector) -> Result<()> {
        if x.fibers.len() != self.dims.len() {
            return Err(Error::Dimension { expected: self.dims.len(), found: x.fibers.len() });
        }
        for (f, &d) in x.fibers.iter().zip(&self.dims) {
            if f.len() != d {
                return Err(Error::Dimension { expected: d, found: f.len() });
            }
        }
        Ok(())
    }
}

/// An element of a fiberwise module: one complex vector per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModuleVector {
    fibers: Vec<Vec<Complex64>>,
}

impl ModuleVector {
    pub fn new(fibers: Vec<Vec<Complex64>>) -> Self {
        Self { fibers }
    }

    pub fn from_real(fibers: Vec<Vec<f64>>) -> Self {
        Self {
            fibers: fibers
                .into_iter()
                .map(|f| f.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
                .collect(),
        }
    }

    pub fn fibers(&self) -> &[Vec<Complex64>] {
        &self.fibers
    }

    pub fn fiber(&self, w: usize) -> &[Complex64] {
        &self.fibers[w]
    }

    pub fn fiber_mut(&mut self, w: usize) -> &mut Vec<Complex64> {
        &mut self.fibers[w]
    }

    pub fn base_len(&self) -> usize {
        self.fibers.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.fibers.iter().map(Vec::len).collect()
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.fibers.len() != other.fibers.len() {
            return Err(Error::Dimension { expected: self.fibers.len(), found: other.fibers.len() });
        }
        for (a, b) in self.fibers.iter().zip(&other.fibers) {
            if a.len() != b.len() {
                return Err(Error::Dimension { expected: a.len(), found: b.len() });
            }
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            fibers: self
                .fibers
                .iter()
                .zip(&other.fibers)
                .map(|(a, b)| a.iter().zip(b).map(|(&u, &v)| f(u, v)).collect())
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { fibers: self.fibers.iter().map(|f| f.iter().map(|v| v * c).collect()).collect() }
    }

    /// Module action of `λ ∈ A_ℂ`.
    pub fn mul_coeff(&self, lambda: &ComplexCoefficient) -> Result<Self> {
        if lambda.len() != self.fibers.len() {
            return Err(Error::Dimension { expected: self.fibers.len(), found: lambda.len() });
        }
        Ok(Self {
            fibers: self
                .fibers
                .iter()
                .zip(lambda.values())
                .map(|(f, l)| f.iter().map(|v| v * l).collect())
                .collect(),
        })
    }

    /// `p·x` for an idempotent `p`.
    pub fn restrict(&self, p: &Idempotent) -> Result<Self> {
        if p.len() != self.fibers.len() {
            return Err(Error::Dimension { expected: self.fibers.len(), found: p.len() });
        }
        Ok(Self {
            fibers: self
                .fibers
                .iter()
                .zip(p.mask())
                .map(|(f, &keep)| if keep { f.clone() } else { vec![Complex64::new(0.0, 0.0); f.len()] })
                .collect(),
        })
    }

    pub fn conj(&self) -> Self {
        Self { fibers: self.fibers.iter().map(|f| f.iter().map(|v| v.conj()).collect()).collect() }
    }

    /// Fiberwise inner product `⟨x, y⟩(ω) = Σ_i x_i(ω) conj(y_i(ω))`.
    pub fn inner(&self, other: &Self) -> Result<ComplexCoefficient> {
        self.same_shape(other)?;
        Ok(ComplexCoefficient::new(
            self.fibers
                .iter()
                .zip(&other.fibers)
                .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u * v.conj()).sum())
                .collect(),
        ))
    }

    /// The lattice norm `|x|`, i.e. the Euclidean norm of every fiber.
    pub fn lattice_norm(&self) -> StoneElement {
        StoneElement::new(self.fibers.iter().map(|f| fiber_norm(f)).collect())
    }

    /// `|x − y|` without allocating the difference.
    pub fn dist(&self, other: &Self) -> Result<StoneElement> {
        self.same_shape(other)?;
        Ok(StoneElement::new(
            self.fibers.iter().zip(&other.fibers).map(|(a, b)| fiber_dist(a, b)).collect(),
        ))
    }

    /// Fiberwise tensor product `x(ω) ⊗ y(ω)`; satisfies `|x ⊗ y| = |x||y|`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.fibers.len() != other.fibers.len() {
            return Err(Error::Dimension { expected: self.fibers.len(), found: other.fibers.len() });
        }
        Ok(Self {
            fibers: self
                .fibers
                .iter()
                .zip(&other.fibers)
                .map(|(a, b)| a.iter().flat_map(|u| b.iter().map(move |v| u * v)).collect())
                .collect(),
        })
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dist(other).map(|d| d.le_const(0.0, tol)).unwrap_or(false)
    }
}

pub(crate) fn fiber_norm(f: &[Complex64]) -> f64 {
    f.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn fiber_dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt()
}

/// A finite subset of a module, kept as an ordered list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSet {
    space: FiberSpace,
    elements: Vec<ModuleVector>,
}

impl FiniteSet {
    pub fn new(space: FiberSpace, elements: Vec<ModuleVector>) -> Result<Self> {
        for x in &elements {
            space.check(x)?;
        }
        Ok(Self { space, elements })
    }

    pub fn empty(space: FiberSpace) -> Self {
        Self { space, elements: Vec::new() }
    }

    pub fn singleton_zero(space: FiberSpace) -> Self {
        let z = space.zero();
        Self { space, elements: vec![z] }
    }

    pub fn space(&self) -> &FiberSpace {
        &self.space
    }

    pub fn elements(&self) -> &[ModuleVector] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<ModuleVector> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, i: usize) -> &ModuleVector {
        &self.elements[i]
    }

    pub fn push(&mut self, x: ModuleVector) -> Result<()> {
        self.space.check(&x)?;
        self.elements.push(x);
        Ok(())
    }

    /// Subset selected by indices, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self { space: self.space.clone(), elements: idx.iter().map(|&i| self.elements[i].clone()).collect() }
    }

    pub fn map(&self, f: impl Fn(&ModuleVector) -> ModuleVector) -> Result<Self> {
        Self::new(self.space.clone(), self.elements.iter().map(f).collect())
    }

    /// `sup_{x ∈ M} |x|`.
    pub fn sup_norm_bound(&self) -> StoneElement {
        StoneElement::sup_all(self.elements.iter().map(ModuleVector::lattice_norm).collect::<Vec<_>>().iter())
            .unwrap_or_else(|| StoneElement::zero(self.space.len()))
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space.dims() != other.space.dims() {
            return Err(Error::Dimension { expected: self.space.len(), found: other.space.len() });
        }
        Ok(())
    }
}

/// Elementwise sum set `M + N`, ordered with `N` varying fastest.
pub fn set_sum(m: &FiniteSet, n: &FiniteSet) -> Result<FiniteSet> {
    m.check_same_space(n)?;
    let mut out = Vec::with_capacity(m.len() * n.len());
    for a in m.elements() {
        for b in n.elements() {
            out.push(a.add(b)?);
        }
    }
    FiniteSet::new(m.space.clone(), out)
}

/// Union `M ∪ N` as a concatenated list.
pub fn set_union(m: &FiniteSet, n: &FiniteSet) -> Result<FiniteSet> {
    m.check_same_space(n)?;
    let mut out = m.elements.clone();
    out.extend(n.elements.iter().cloned());
    FiniteSet::new(m.space.clone(), out)
}

/// Fiberwise tensor products `{x ⊗ y : x ∈ M, y ∈ N}`, `N` varying fastest.
pub fn set_tensor(m: &FiniteSet, n: &FiniteSet) -> Result<FiniteSet> {
    if m.space.len() != n.space.len() {
        return Err(Error::Dimension { expected: m.space.len(), found: n.space.len() });
    }
    let dims = m.space.dims().iter().zip(n.space.dims()).map(|(a, b)| a * b).collect();
    let space = FiberSpace::new(m.space.base().clone(), dims)?;
    let mut out = Vec::with_capacity(m.len() * n.len());
    for a in m.elements() {
        for b in n.elements() {
            out.push(a.tensor(b)?);
        }
    }
    FiniteSet::new(space, out)
}

/// A linear map given by one complex matrix per fiber.
#[derive(Clone, Debug)]
pub struct FiberwiseMap {
    blocks: Vec<DMatrix<Complex64>>,
}

impl FiberwiseMap {
    pub fn new(blocks: Vec<DMatrix<Complex64>>) -> Self {
        Self { blocks }
    }

    pub fn identity(space: &FiberSpace) -> Self {
        Self { blocks: space.dims().iter().map(|&d| DMatrix::identity(d, d)).collect() }
    }

    /// Multiplication by `λ ∈ A_ℂ`.
    pub fn scalar(space: &FiberSpace, lambda: &ComplexCoefficient) -> Result<Self> {
        if lambda.len() != space.len() {
            return Err(Error::Dimension { expected: space.len(), found: lambda.len() });
        }
        Ok(Self {
            blocks: space
                .dims()
                .iter()
                .zip(lambda.values())
                .map(|(&d, &l)| DMatrix::identity(d, d) * l)
                .collect(),
        })
    }

    pub fn blocks(&self) -> &[DMatrix<Complex64>] {
        &self.blocks
    }

    /// The pointwise operator norms `ω ↦ ‖T(ω)‖`, so that `|Tx| ≤ bound·|x|`.
    pub fn bound(&self) -> StoneElement {
        StoneElement::new(
            self.blocks
                .iter()
                .map(|b| {
                    if b.is_empty() {
                        0.0
                    } else {
                        b.clone().singular_values().max()
                    }
                })
                .collect(),
        )
    }

    pub fn apply(&self, x: &ModuleVector) -> Result<ModuleVector> {
        if x.base_len() != self.blocks.len() {
            return Err(Error::Dimension { expected: self.blocks.len(), found: x.base_len() });
        }
        let mut fibers = Vec::with_capacity(self.blocks.len());
        for (b, f) in self.blocks.iter().zip(x.fibers()) {
            if b.ncols() != f.len() {
                return Err(Error::Dimension { expected: b.ncols(), found: f.len() });
            }
            let v = nalgebra::DVector::from_column_slice(f);
            fibers.push((b * v).iter().copied().collect());
        }
        Ok(ModuleVector::new(fibers))
    }

    fn target_space(&self, source: &FiberSpace) -> Result<FiberSpace> {
        FiberSpace::new(source.base().clone(), self.blocks.iter().map(|b| b.nrows()).collect())
    }
}

/// Elementwise image `T(M)`.
pub fn set_image(t: &FiberwiseMap, m: &FiniteSet) -> Result<FiniteSet> {
    let space = t.target_space(m.space())?;
    let out = m.elements().iter().map(|x| t.apply(x)).collect::<Result<Vec<_>>>()?;
    FiniteSet::new(space, out)
}
