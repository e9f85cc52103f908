//! Finite measure-preserving systems and their extensions.
//!
//! Points carry positive weights; the acting group is represented by
//! measure-preserving permutations and enumerated jointly on `X ⊔ Y`, so a
//! group element `t` carries both `τ_t` on `X` and `σ_t` on `Y`. Koopman
//! operators act by `T_t f = f ∘ τ_t⁻¹`.
//!
//! `L²(X|Y)` is represented over the fiber space with one fiber per point of
//! `Y`; a function `f` on `X` is encoded as `(√(μ(x)/μ_Y(y))·f(x))_{x∈π⁻¹(y)}`
//! so the Euclidean fiber norm is `|f|_Y`.

use std::collections::{HashMap, VecDeque};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lns::{FiberSpace, ModuleVector};
use crate::stone::{ComplexCoefficient, PointSet, StoneElement};

pub const DEFAULT_GROUP_CAP: usize = 100_000;

/// Tolerance used when checking that weights sum to one.
pub const WEIGHT_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteProbabilitySpace {
    points: PointSet,
    weights: Vec<f64>,
}

impl FiniteProbabilitySpace {
    pub fn new(points: PointSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != points.len() {
            return Err(Error::Dimension { expected: points.len(), found: weights.len() });
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Argument(format!("weight of point {i} must be positive, got {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Argument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights })
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        Self::new(PointSet::indexed(weights.len())?, weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(vec![1.0 / n as f64; n])
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integral(&self, f: &[Complex64]) -> Complex64 {
        f.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// `⟨f, g⟩ = ∫ f ḡ dμ`.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        f.iter().zip(g).zip(&self.weights).map(|((a, b), w)| a * b.conj() * w).sum()
    }

    pub fn norm(&self, f: &[Complex64]) -> f64 {
        self.inner(f, f).re.max(0.0).sqrt()
    }

    fn check(&self, f: &[Complex64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), found: f.len() });
        }
        Ok(())
    }
}

/// A permutation `τ` of the points, `x ↦ τ(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct MPMap(Vec<usize>);

impl MPMap {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::Argument(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(Self(perm))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(other.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (x, &y) in self.0.iter().enumerate() {
            inv[y] = x;
        }
        Self(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn preserves(&self, space: &FiniteProbabilitySpace, tol: f64) -> bool {
        self.0.len() == space.len()
            && self.0.iter().enumerate().all(|(x, &y)| (space.weights[x] - space.weights[y]).abs() <= tol)
    }

    /// `f ↦ f ∘ τ⁻¹`.
    pub fn push<T: Copy>(&self, f: &[T]) -> Vec<T> {
        let mut out = f.to_vec();
        for (x, &y) in self.0.iter().enumerate() {
            out[y] = f[x];
        }
        out
    }
}

/// A group of permutations given by generators and its enumerated closure.
#[derive(Clone, Debug, Serialize)]
pub struct GroupAction {
    degree: usize,
    generators: Vec<MPMap>,
    closure: Vec<MPMap>,
    #[serde(skip)]
    index: HashMap<MPMap, usize>,
    cap: usize,
}

impl GroupAction {
    pub fn generators(&self) -> &[MPMap] {
        &self.generators
    }

    /// Group elements; element 0 is the identity.
    pub fn elements(&self) -> &[MPMap] {
        &self.closure
    }

    pub fn len(&self) -> usize {
        self.closure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closure.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn get(&self, t: usize) -> Result<&MPMap> {
        self.closure.get(t).ok_or(Error::UnknownElement(t))
    }

    pub fn index_of(&self, p: &MPMap) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Index of `s ∘ t`.
    pub fn product(&self, s: usize, t: usize) -> Result<usize> {
        let p = self.get(s)?.compose(self.get(t)?);
        self.index_of(&p).ok_or_else(|| Error::Internal("closure is not closed under composition".into()))
    }
}

/// Breadth-first closure of `gens` (and their inverses) in the symmetric group
/// of degree `n`. The order is deterministic: identity first, then by distance
/// in the Cayley graph, generators before inverses.
pub fn enumerate_group(n: usize, gens: &[MPMap], cap: usize) -> Result<GroupAction> {
    if cap == 0 {
        return Err(Error::Argument("group cap must be at least 1".into()));
    }
    for g in gens {
        if g.len() != n {
            return Err(Error::Dimension { expected: n, found: g.len() });
        }
    }
    let mut steps: Vec<MPMap> = gens.to_vec();
    steps.extend(gens.iter().map(MPMap::inverse));
    let id = MPMap::identity(n);
    let mut closure = vec![id.clone()];
    let mut index = HashMap::from([(id, 0usize)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(h) = queue.pop_front() {
        for s in &steps {
            let p = s.compose(&closure[h]);
            if index.contains_key(&p) {
                continue;
            }
            if closure.len() == cap {
                return Err(Error::CapExceeded { cap });
            }
            index.insert(p.clone(), closure.len());
            queue.push_back(closure.len());
            closure.push(p);
        }
    }
    Ok(GroupAction { degree: n, generators: gens.to_vec(), closure, index, cap })
}

/// A finite system `(X; T)` given by generators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct System {
    pub space: FiniteProbabilitySpace,
    pub generators: Vec<MPMap>,
}

/// An extension `X|Y` with factor map `π`, generators paired by position.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Extension {
    pub upstairs: System,
    pub downstairs: System,
    pub factor: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        self.violations.iter().map(|v| format!("{}: {}", v.kind, v.detail)).collect::<Vec<_>>().join("; ")
    }
}

/// Checks shapes, measure preservation, pushforward, surjectivity of `π` and
/// intertwining `π ∘ τ = σ ∘ π` for every generator pair.
pub fn validate_extension(ext: &Extension, tol: f64) -> ValidationReport {
    let mut v = Vec::new();
    let mut flag = |kind: &str, detail: String| v.push(Violation { kind: kind.into(), detail });
    let nx = ext.upstairs.space.len();
    let ny = ext.downstairs.space.len();
    let shapes_ok = ext.factor.len() == nx
        && ext.factor.iter().all(|&y| y < ny)
        && ext.upstairs.generators.iter().all(|g| g.len() == nx)
        && ext.downstairs.generators.iter().all(|g| g.len() == ny)
        && ext.upstairs.generators.len() == ext.downstairs.generators.len();
    if !shapes_ok {
        flag(
            "shape",
            format!(
                "factor has {} entries for {nx} points, {} upstairs vs {} downstairs generators",
                ext.factor.len(),
                ext.upstairs.generators.len(),
                ext.downstairs.generators.len()
            ),
        );
        return ValidationReport { valid: false, violations: v };
    }
    for (i, g) in ext.upstairs.generators.iter().enumerate() {
        if !g.preserves(&ext.upstairs.space, tol) {
            flag("measure_preservation", format!("upstairs generator {i} moves mass"));
        }
    }
    for (i, g) in ext.downstairs.generators.iter().enumerate() {
        if !g.preserves(&ext.downstairs.space, tol) {
            flag("measure_preservation", format!("downstairs generator {i} moves mass"));
        }
    }
    let mut push = vec![0.0; ny];
    for (x, &y) in ext.factor.iter().enumerate() {
        push[y] += ext.upstairs.space.weights[x];
    }
    for (y, (&p, &w)) in push.iter().zip(&ext.downstairs.space.weights).enumerate() {
        if p == 0.0 {
            flag("surjectivity", format!("point {y} of Y has an empty fiber"));
        } else if (p - w).abs() > tol {
            flag("pushforward", format!("π pushes mass {p} onto point {y} of weight {w}"));
        }
    }
    for (i, (t, s)) in ext.upstairs.generators.iter().zip(&ext.downstairs.generators).enumerate() {
        if let Some(x) = (0..nx).find(|&x| ext.factor[t.apply(x)] != s.apply(ext.factor[x])) {
            flag("intertwining", format!("generator pair {i} fails π∘τ = σ∘π at point {x}"));
        }
    }
    ValidationReport { valid: v.is_empty(), violations: v }
}

impl Extension {
    /// The identity extension `X|X` of a system.
    pub fn identity(system: System) -> Self {
        let n = system.space.len();
        Self { upstairs: system.clone(), downstairs: system, factor: (0..n).collect() }
    }

    /// Validates and enumerates the joint group action.
    pub fn analyze(&self, cap: usize, tol: f64) -> Result<ExtensionModel> {
        let report = validate_extension(self, tol);
        if !report.valid {
            return Err(Error::InvalidExtension(report.summary()));
        }
        self.analyze_unchecked(cap)
    }

    /// Builds the model without checking measure preservation, pushforward or
    /// intertwining. Only shapes and nonempty fibers are required. Meant for
    /// negative controls: identities derived from the dynamics may fail.
    pub fn analyze_unchecked(&self, cap: usize) -> Result<ExtensionModel> {
        let report = validate_extension(self, f64::INFINITY);
        if let Some(v) = report.violations.iter().find(|v| v.kind == "shape" || v.kind == "surjectivity") {
            return Err(Error::InvalidExtension(format!("{}: {}", v.kind, v.detail)));
        }
        let nx = self.upstairs.space.len();
        let ny = self.downstairs.space.len();
        let joint: Vec<MPMap> = self
            .upstairs
            .generators
            .iter()
            .zip(&self.downstairs.generators)
            .map(|(t, s)| {
                let mut p = t.as_slice().to_vec();
                p.extend(s.as_slice().iter().map(|&y| y + nx));
                MPMap(p)
            })
            .collect();
        let group = enumerate_group(nx + ny, &joint, cap)?;
        let mut fibers = vec![Vec::new(); ny];
        for (x, &y) in self.factor.iter().enumerate() {
            fibers[y].push(x);
        }
        let rel_space = FiberSpace::new(
            self.downstairs.space.points().clone(),
            fibers.iter().map(Vec::len).collect(),
        )?;
        let slot = {
            let mut slot = vec![0; nx];
            for fib in &fibers {
                for (k, &x) in fib.iter().enumerate() {
                    slot[x] = k;
                }
            }
            slot
        };
        Ok(ExtensionModel { ext: self.clone(), group, fibers, slot, rel_space })
    }
}

/// A validated extension with its enumerated group and `L²(X|Y)` structure.
#[derive(Clone, Debug, Serialize)]
pub struct ExtensionModel {
    ext: Extension,
    group: GroupAction,
    fibers: Vec<Vec<usize>>,
    slot: Vec<usize>,
    rel_space: FiberSpace,
}

impl ExtensionModel {
    pub fn extension(&self) -> &Extension {
        &self.ext
    }

    pub fn x(&self) -> &FiniteProbabilitySpace {
        &self.ext.upstairs.space
    }

    pub fn y(&self) -> &FiniteProbabilitySpace {
        &self.ext.downstairs.space
    }

    pub fn nx(&self) -> usize {
        self.x().len()
    }

    pub fn ny(&self) -> usize {
        self.y().len()
    }

    pub fn group(&self) -> &GroupAction {
        &self.group
    }

    pub fn group_len(&self) -> usize {
        self.group.len()
    }

    /// `π⁻¹(y)` in point order.
    pub fn fibers(&self) -> &[Vec<usize>] {
        &self.fibers
    }

    pub fn factor(&self) -> &[usize] {
        &self.ext.factor
    }

    /// `τ_t` on `X`.
    pub fn tau(&self, t: usize) -> Result<MPMap> {
        let p = self.group.get(t)?;
        Ok(MPMap(p.as_slice()[..self.nx()].to_vec()))
    }

    /// `σ_t` on `Y`.
    pub fn sigma(&self, t: usize) -> Result<MPMap> {
        let nx = self.nx();
        let p = self.group.get(t)?;
        Ok(MPMap(p.as_slice()[nx..].iter().map(|&y| y - nx).collect()))
    }

    /// `(T_t f)(x) = f(τ_t⁻¹ x)`.
    pub fn koopman(&self, t: usize, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.x().check(f)?;
        Ok(self.tau(t)?.push(f))
    }

    /// `(S_t g)(y) = g(σ_t⁻¹ y)`.
    pub fn koopman_y(&self, t: usize, g: &[Complex64]) -> Result<Vec<Complex64>> {
        self.y().check(g)?;
        Ok(self.sigma(t)?.push(g))
    }

    fn rel_weight(&self, x: usize) -> f64 {
        self.x().weights[x] / self.y().weights[self.ext.factor[x]]
    }

    /// `(𝔼_Y f)(y) = Σ_{x∈π⁻¹(y)} f(x) μ(x)/μ_Y(y)`.
    pub fn cond_expectation(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.x().check(f)?;
        Ok(self.fibers.iter().map(|fib| fib.iter().map(|&x| f[x] * self.rel_weight(x)).sum()).collect())
    }

    /// `(Jg)(x) = g(π(x))`.
    pub fn embed(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        self.y().check(g)?;
        Ok(self.ext.factor.iter().map(|&y| g[y]).collect())
    }

    /// `⟨f, g⟩_Y = 𝔼_Y(f ḡ)`.
    pub fn rel_inner(&self, f: &[Complex64], g: &[Complex64]) -> Result<ComplexCoefficient> {
        self.x().check(g)?;
        let prod: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a * b.conj()).collect();
        Ok(ComplexCoefficient::new(self.cond_expectation(&prod)?))
    }

    /// `|f|_Y`.
    pub fn rel_norm(&self, f: &[Complex64]) -> Result<StoneElement> {
        let ip = self.rel_inner(f, f)?;
        Ok(StoneElement::new(ip.values().iter().map(|z| z.re.max(0.0).sqrt()).collect()))
    }

    /// The fiber space carrying `L²(X|Y)`.
    pub fn rel_space(&self) -> &FiberSpace {
        &self.rel_space
    }

    pub fn encode(&self, f: &[Complex64]) -> Result<ModuleVector> {
        self.x().check(f)?;
        Ok(ModuleVector::new(
            self.fibers
                .iter()
                .map(|fib| fib.iter().map(|&x| f[x] * self.rel_weight(x).sqrt()).collect())
                .collect(),
        ))
    }

    pub fn decode(&self, v: &ModuleVector) -> Result<Vec<Complex64>> {
        self.rel_space.check(v)?;
        let mut f = vec![c(0.0); self.nx()];
        for (x, out) in f.iter_mut().enumerate() {
            *out = v.fiber(self.ext.factor[x])[self.slot[x]] / self.rel_weight(x).sqrt();
        }
        Ok(f)
    }

    /// Unitary coordinates `u_x = √μ(x)·f(x)`: the `L²(X)` inner product
    /// becomes the Euclidean one and every `T_t` a permutation matrix.
    pub fn to_unitary(&self, f: &[Complex64]) -> Vec<Complex64> {
        f.iter().zip(self.x().weights()).map(|(v, w)| v * w.sqrt()).collect()
    }

    pub fn from_unitary(&self, u: &[Complex64]) -> Vec<Complex64> {
        u.iter().zip(self.x().weights()).map(|(v, w)| v / w.sqrt()).collect()
    }

    /// Unitary coordinates of an encoded module vector.
    pub fn module_to_unitary(&self, v: &ModuleVector) -> Result<Vec<Complex64>> {
        Ok(self.to_unitary(&self.decode(v)?))
    }

    /// Position of `x` inside its fiber.
    pub fn slot(&self, x: usize) -> usize {
        self.slot[x]
    }
}

pub fn delta(n: usize, i: usize) -> Vec<Complex64> {
    let mut f = vec![c(0.0); n];
    f[i] = c(1.0);
    f
}

pub fn constant_fn(n: usize, v: f64) -> Vec<Complex64> {
    vec![c(v); n]
}

/// Cyclic rotation `k ↦ k+1 mod n`.
pub fn rotation(n: usize) -> MPMap {
    MPMap((0..n).map(|k| (k + 1) % n).collect())
}

/// Rotation on `Z_4` over rotation on `Z_2` via `x ↦ x mod 2`.
pub fn z4_over_z2() -> Extension {
    Extension {
        upstairs: System { space: FiniteProbabilitySpace::uniform(4).expect("uniform"), generators: vec![rotation(4)] },
        downstairs: System { space: FiniteProbabilitySpace::uniform(2).expect("uniform"), generators: vec![rotation(2)] },
        factor: vec![0, 1, 0, 1],
    }
}

/// The identity extension of the rotation on `Z_n`.
pub fn rotation_identity(n: usize) -> Extension {
    Extension::identity(System { space: FiniteProbabilitySpace::uniform(n).expect("uniform"), generators: vec![rotation(n)] })
}

/// A random valid skew-product extension with at most `max_x` upstairs points.
///
/// `Y` carries up to two random permutations and weights constant on orbits of
/// the generated group. Over each orbit the fibers share a size and a pattern
/// of relative weights; upstairs generators act by `(y, i) ↦ (σ y, φ_y(i))`
/// with `φ_y` permuting only within classes of equal relative weight. The
/// upstairs points are relabelled at random.
pub fn random_extension<R: Rng>(rng: &mut R, max_x: usize) -> Extension {
    assert!(max_x >= 1);
    let ny = rng.gen_range(1..=max_x.min(5));
    let n_gens = rng.gen_range(1..=2);
    let sigmas: Vec<MPMap> = (0..n_gens)
        .map(|_| {
            let mut p: Vec<usize> = (0..ny).collect();
            if rng.gen_bool(0.8) {
                p.shuffle(rng);
            }
            MPMap(p)
        })
        .collect();
    // orbits of <sigmas> on Y
    let mut orbit_of = vec![usize::MAX; ny];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for start in 0..ny {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let id = orbits.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        orbit_of[start] = id;
        while let Some(y) = stack.pop() {
            members.push(y);
            for s in &sigmas {
                for z in [s.apply(y), s.inverse().apply(y)] {
                    if orbit_of[z] == usize::MAX {
                        orbit_of[z] = id;
                        stack.push(z);
                    }
                }
            }
        }
        orbits.push(members);
    }
    // fiber sizes per orbit within the budget
    let mut budget = max_x - ny;
    let mut sizes = vec![1usize; orbits.len()];
    for (o, members) in orbits.iter().enumerate() {
        let extra_max = (budget / members.len()).min(2);
        let extra = rng.gen_range(0..=extra_max);
        sizes[o] += extra;
        budget -= extra * members.len();
    }
    // relative weight patterns with repeated values
    let patterns: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&k| {
            let classes = rng.gen_range(1..=k);
            let values: Vec<f64> = (0..classes).map(|_| rng.gen_range(0.5..2.0)).collect();
            let raw: Vec<f64> = (0..k).map(|i| values[if i < classes { i } else { rng.gen_range(0..classes) }]).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let orbit_mass: Vec<f64> = (0..orbits.len()).map(|_| rng.gen_range(0.5..2.0)).collect();
    let total: f64 = orbits.iter().zip(&orbit_mass).map(|(m, w)| m.len() as f64 * w).sum();
    let wy: Vec<f64> = (0..ny).map(|y| orbit_mass[orbit_of[y]] / total).collect();

    // canonical upstairs labels (y, i), then a random relabelling
    let mut canon = Vec::new();
    for y in 0..ny {
        for i in 0..sizes[orbit_of[y]] {
            canon.push((y, i));
        }
    }
    let nx = canon.len();
    let mut relabel: Vec<usize> = (0..nx).collect();
    relabel.shuffle(rng);
    let pos: HashMap<(usize, usize), usize> = canon.iter().enumerate().map(|(k, &p)| (p, relabel[k])).collect();
    let mut wx = vec![0.0; nx];
    let mut factor = vec![0; nx];
    for (&(y, i), &x) in &pos {
        wx[x] = wy[y] * patterns[orbit_of[y]][i];
        factor[x] = y;
    }
    let taus: Vec<MPMap> = sigmas
        .iter()
        .map(|s| {
            let mut perm = vec![0; nx];
            for y in 0..ny {
                let pat = &patterns[orbit_of[y]];
                let mut phi: Vec<usize> = (0..pat.len()).collect();
                // shuffle inside each class of equal relative weight
                let mut seen = vec![false; pat.len()];
                for i in 0..pat.len() {
                    if seen[i] {
                        continue;
                    }
                    let class: Vec<usize> = (0..pat.len()).filter(|&j| pat[j] == pat[i]).collect();
                    for &j in &class {
                        seen[j] = true;
                    }
                    let mut shuffled = class.clone();
                    shuffled.shuffle(rng);
                    for (&from, &to) in class.iter().zip(&shuffled) {
                        phi[from] = to;
                    }
                }
                for (i, &j) in phi.iter().enumerate() {
                    perm[pos[&(y, i)]] = pos[&(s.apply(y), j)];
                }
            }
            MPMap(perm)
        })
        .collect();
    let renorm = |w: Vec<f64>| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect::<Vec<_>>()
    };
    Extension {
        upstairs: System { space: FiniteProbabilitySpace::from_weights(renorm(wx)).expect("positive"), generators: taus },
        downstairs: System { space: FiniteProbabilitySpace::from_weights(renorm(wy)).expect("positive"), generators: sigmas },
        factor,
    }
}

/// Draws random extensions until one has a joint closure within `cap`.
pub fn random_model<R: Rng>(rng: &mut R, max_x: usize, cap: usize, tol: f64) -> ExtensionModel {
    loop {
        let ext = random_extension(rng, max_x);
        match ext.analyze(cap, tol) {
            Ok(m) => return m,
            Err(Error::CapExceeded { .. }) => continue,
            Err(e) => panic!("random extension is invalid: {e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::Rng64;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| c(x)).collect()
    }

    fn random_fn(rng: &mut Rng64, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn probability_space_validation() {
        assert!(FiniteProbabilitySpace::from_weights(vec![0.5, 0.5]).is_ok());
        assert!(FiniteProbabilitySpace::from_weights(vec![0.5, 0.6]).is_err());
        assert!(FiniteProbabilitySpace::from_weights(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn validation_examples() {
        assert!(validate_extension(&rotation_identity(3), 1e-12).valid);
        assert!(validate_extension(&z4_over_z2(), 1e-12).valid);
        let bad = Extension {
            upstairs: System { space: FiniteProbabilitySpace::uniform(4).unwrap(), generators: vec![] },
            downstairs: System {
                space: FiniteProbabilitySpace::from_weights(vec![0.6, 0.4]).unwrap(),
                generators: vec![],
            },
            factor: vec![0, 0, 1, 1],
        };
        let r = validate_extension(&bad, 1e-12);
        assert!(!r.valid);
        assert!(r.violations.iter().any(|v| v.kind == "pushforward"));
        let mut tangled = z4_over_z2();
        tangled.factor = vec![0, 0, 1, 1];
        assert!(validate_extension(&tangled, 1e-12).violations.iter().any(|v| v.kind == "intertwining"));
    }

    #[test]
    fn group_examples() {
        let g = enumerate_group(3, &[MPMap::identity(3)], 10).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(enumerate_group(4, &[rotation(4)], 10).unwrap().len(), 4);
        assert!(matches!(enumerate_group(4, &[rotation(4)], 3), Err(Error::CapExceeded { cap: 3 })));

        let mut rng = Rng64::seed_from_u64(4);
        for _ in 0..10 {
            let gens: Vec<MPMap> = (0..2)
                .map(|_| {
                    let mut p: Vec<usize> = (0..5).collect();
                    p.shuffle(&mut rng);
                    MPMap(p)
                })
                .collect();
            let g = enumerate_group(5, &gens, 1000).unwrap();
            assert_eq!(120 % g.len(), 0);
            // brute force: close the set of all words by repeated multiplication
            let mut set: std::collections::HashSet<MPMap> = std::collections::HashSet::from([MPMap::identity(5)]);
            loop {
                let before = set.len();
                let cur: Vec<MPMap> = set.iter().cloned().collect();
                for a in &cur {
                    for s in &gens {
                        set.insert(s.compose(a));
                    }
                }
                if set.len() == before {
                    break;
                }
            }
            assert_eq!(set.len(), g.len());
        }
    }

    #[test]
    fn koopman_examples() {
        let m = z4_over_z2().analyze(DEFAULT_GROUP_CAP, 1e-12).unwrap();
        let f = delta(4, 0);
        assert_eq!(m.koopman(0, &f).unwrap(), f);
        let one = m.group().index_of(&MPMap(vec![1, 2, 3, 0, 5, 4])).unwrap();
        assert_eq!(m.koopman(one, &f).unwrap(), delta(4, 1));
        assert!(matches!(m.koopman(99, &f), Err(Error::UnknownElement(99))));
        // homomorphism
        for s in 0..m.group_len() {
            for t in 0..m.group_len() {
                let st = m.group().product(s, t).unwrap();
                let lhs = m.koopman(s, &m.koopman(t, &f).unwrap()).unwrap();
                assert_eq!(lhs, m.koopman(st, &f).unwrap());
            }
        }
    }

    #[test]
    fn conditional_expectation_examples() {
        let ext = Extension {
            upstairs: System { space: FiniteProbabilitySpace::uniform(4).unwrap(), generators: vec![] },
            downstairs: System { space: FiniteProbabilitySpace::uniform(2).unwrap(), generators: vec![] },
            factor: vec![0, 0, 1, 1],
        };
        let m = ext.analyze(10, 1e-12).unwrap();
        assert!(close(&m.cond_expectation(&real(&[1.0, 3.0, 2.0, 4.0])).unwrap(), &real(&[2.0, 3.0]), 1e-15));
        assert!(close(&m.cond_expectation(&constant_fn(4, 2.5)).unwrap(), &real(&[2.5, 2.5]), 1e-15));
        let norm = m.rel_norm(&delta(4, 0)).unwrap();
        assert_abs_diff_eq!(norm.values()[0], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(norm.values()[1], 0.0);
        assert!(m.rel_norm(&constant_fn(4, 1.0)).unwrap().approx_eq(&StoneElement::one(2), 1e-15).unwrap());
    }

    #[test]
    fn extension_identities_on_random_models() {
        let mut rng = Rng64::seed_from_u64(31);
        for _ in 0..30 {
            let m = random_model(&mut rng, 12, 1000, 1e-12);
            let f = random_fn(&mut rng, m.nx());
            let g = random_fn(&mut rng, m.nx());
            let h = random_fn(&mut rng, m.ny());
            // adjointness
            let lhs = m.x().inner(&m.embed(&h).unwrap(), &f);
            let rhs = m.y().inner(&h, &m.cond_expectation(&f).unwrap());
            assert!((lhs - rhs).norm() < 1e-12);
            // tower
            assert!((m.y().integral(&m.cond_expectation(&f).unwrap()) - m.x().integral(&f)).norm() < 1e-12);
            // section and multiplicativity
            assert!(close(&m.cond_expectation(&m.embed(&h).unwrap()).unwrap(), &h, 1e-12));
            // relative isometry
            let ip = m.rel_inner(&f, &g).unwrap();
            for t in 0..m.group_len() {
                let lhs = m.rel_inner(&m.koopman(t, &f).unwrap(), &m.koopman(t, &g).unwrap()).unwrap();
                let rhs = m.koopman_y(t, ip.values()).unwrap();
                assert!(close(lhs.values(), &rhs, 1e-12));
                assert_abs_diff_eq!(m.x().norm(&m.koopman(t, &f).unwrap()), m.x().norm(&f), epsilon = 1e-12);
            }
            // encoding
            let e = m.encode(&f).unwrap();
            assert!(close(&m.decode(&e).unwrap(), &f, 1e-12));
            assert!(e.lattice_norm().approx_eq(&m.rel_norm(&f).unwrap(), 1e-12).unwrap());
            let jh_f: Vec<Complex64> = m.embed(&h).unwrap().iter().zip(&f).map(|(a, b)| a * b).collect();
            let lhs = m.encode(&jh_f).unwrap();
            let rhs = e.mul_coeff(&ComplexCoefficient::new(h.clone())).unwrap();
            assert!(lhs.approx_eq(&rhs, 1e-12));
            let l2: f64 = m.rel_norm(&f).unwrap().values().iter().zip(m.y().weights()).map(|(v, w)| v * v * w).sum();
            assert_abs_diff_eq!(l2, m.x().norm(&f).powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn encode_constant_has_unit_fibers() {
        let m = z4_over_z2().analyze(10, 1e-12).unwrap();
        let e = m.encode(&constant_fn(4, 1.0)).unwrap();
        assert!(e.lattice_norm().approx_eq(&StoneElement::one(2), 1e-15).unwrap());
    }
}
