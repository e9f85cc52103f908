//! JSON input schemas.
//!
//! Complex numbers are written either as a plain number or as `[re, im]`.
//! Unknown fields are rejected. Weights and permutations are checked where they
//! appear, so their errors carry a line and column; cross-field shape errors
//! are reported at line 0.
//!
//! Finite-set problems:
//!
//! ```json
//! {
//!   "space": {"dims": [2, 1], "points": ["a", "b"]},
//!   "set": [[[1, 0], [[0.5, 0.5]]]],
//!   "witness": [[[0, 0], [0]]],
//!   "generators": [[[1, 0], [1]]],
//!   "radius": 1.0
//! }
//! ```
//!
//! Extensions:
//!
//! ```json
//! {
//!   "space": {"points": ["0", "1", "2", "3"], "weights": [0.25, 0.25, 0.25, 0.25]},
//!   "generators": [[1, 2, 3, 0]],
//!   "factor": {
//!     "base_space": {"weights": [0.5, 0.5]},
//!     "map": [0, 1, 0, 1],
//!     "base_generators": [[1, 0]]
//!   }
//! }
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lns::{FiberSpace, FiniteSet, ModuleVector};
use crate::mps::{Extension, FiniteProbabilitySpace, MPMap, System};
use crate::stone::PointSet;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        match v {
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        if z.im == 0.0 {
            ComplexValue::Real(z.re)
        } else {
            ComplexValue::Pair([z.re, z.im])
        }
    }
}

pub type ElementSpec = Vec<Vec<ComplexValue>>;

fn labels(points: Option<Vec<String>>, n: usize) -> Result<PointSet> {
    match points {
        Some(p) => {
            if p.len() != n {
                return Err(Error::Dimension { expected: n, found: p.len() });
            }
            PointSet::new(p)
        }
        None => PointSet::indexed(n),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<String>>,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<FiberSpace> {
        FiberSpace::new(labels(self.points.clone(), self.dims.len())?, self.dims.clone())
    }

    pub fn from_space(space: &FiberSpace) -> Self {
        Self { dims: space.dims().to_vec(), points: Some(space.base().labels().to_vec()) }
    }
}

fn build_set(space: &FiberSpace, elements: Vec<ElementSpec>) -> Result<FiniteSet> {
    let vs = elements
        .into_iter()
        .map(|e| ModuleVector::new(e.into_iter().map(|f| f.into_iter().map(Complex64::from).collect()).collect()))
        .collect();
    FiniteSet::new(space.clone(), vs)
}

pub fn element_spec(v: &ModuleVector) -> ElementSpec {
    v.fibers().iter().map(|f| f.iter().map(|&z| z.into()).collect()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSetProblem {
    space: SpaceSpec,
    set: Vec<ElementSpec>,
    #[serde(default)]
    witness: Option<Vec<ElementSpec>>,
    #[serde(default)]
    generators: Option<Vec<ElementSpec>>,
    #[serde(default)]
    radius: Option<f64>,
}

/// A finite subset `M` of a fiber space with optional companions: a candidate
/// witness `F`, zonotope generators, and a ball radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawSetProblem", into = "RawSetProblem")]
pub struct SetProblem {
    pub set: FiniteSet,
    pub witness: Option<FiniteSet>,
    pub generators: Option<FiniteSet>,
    pub radius: Option<f64>,
}

impl TryFrom<RawSetProblem> for SetProblem {
    type Error = Error;

    fn try_from(raw: RawSetProblem) -> Result<Self> {
        let space = raw.space.build()?;
        if let Some(r) = raw.radius {
            if !(r > 0.0) {
                return Err(Error::Argument(format!("radius must be positive, got {r}")));
            }
        }
        Ok(Self {
            set: build_set(&space, raw.set)?,
            witness: raw.witness.map(|w| build_set(&space, w)).transpose()?,
            generators: raw.generators.map(|g| build_set(&space, g)).transpose()?,
            radius: raw.radius,
        })
    }
}

impl From<SetProblem> for RawSetProblem {
    fn from(p: SetProblem) -> Self {
        let specs = |s: &FiniteSet| s.elements().iter().map(element_spec).collect::<Vec<_>>();
        Self {
            space: SpaceSpec::from_space(p.set.space()),
            set: specs(&p.set),
            witness: p.witness.as_ref().map(specs),
            generators: p.generators.as_ref().map(specs),
            radius: p.radius,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<String>>,
    pub weights: Vec<f64>,
}

/// A probability space checked where it appears in the document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ProbSpec", into = "ProbSpec")]
struct CheckedSpace(FiniteProbabilitySpace);

impl TryFrom<ProbSpec> for CheckedSpace {
    type Error = Error;

    fn try_from(p: ProbSpec) -> Result<Self> {
        Ok(Self(FiniteProbabilitySpace::new(labels(p.points, p.weights.len())?, p.weights)?))
    }
}

impl From<CheckedSpace> for ProbSpec {
    fn from(s: CheckedSpace) -> Self {
        Self { points: Some(s.0.points().labels().to_vec()), weights: s.0.weights().to_vec() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
struct CheckedPerm(MPMap);

impl TryFrom<Vec<usize>> for CheckedPerm {
    type Error = Error;

    fn try_from(p: Vec<usize>) -> Result<Self> {
        MPMap::new(p).map(Self)
    }
}

impl From<CheckedPerm> for Vec<usize> {
    fn from(p: CheckedPerm) -> Self {
        p.0.as_slice().to_vec()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorSpec {
    base_space: CheckedSpace,
    map: Vec<usize>,
    base_generators: Vec<CheckedPerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExtension {
    space: CheckedSpace,
    generators: Vec<CheckedPerm>,
    factor: FactorSpec,
}

/// An extension as read from JSON. Shapes, weights and permutations are
/// checked on input; dynamical consistency is left to
/// [`crate::mps::validate_extension`] so it can be reported as diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawExtension", into = "RawExtension")]
pub struct ExtensionInput(pub Extension);

fn perms(raw: Vec<CheckedPerm>, n: usize, what: &str) -> Result<Vec<MPMap>> {
    raw.into_iter()
        .enumerate()
        .map(|(i, p)| {
            if p.0.len() != n {
                return Err(Error::Argument(format!("{what} generator {i} has length {}, expected {n}", p.0.len())));
            }
            Ok(p.0)
        })
        .collect()
}

impl TryFrom<RawExtension> for ExtensionInput {
    type Error = Error;

    fn try_from(raw: RawExtension) -> Result<Self> {
        let x = raw.space.0;
        let y = raw.factor.base_space.0;
        if raw.factor.map.len() != x.len() {
            return Err(Error::Argument(format!(
                "factor map has {} entries for {} points",
                raw.factor.map.len(),
                x.len()
            )));
        }
        if let Some(&bad) = raw.factor.map.iter().find(|&&v| v >= y.len()) {
            return Err(Error::Argument(format!("factor map value {bad} is out of range")));
        }
        if raw.generators.len() != raw.factor.base_generators.len() {
            return Err(Error::Argument(format!(
                "{} upstairs generators but {} base generators",
                raw.generators.len(),
                raw.factor.base_generators.len()
            )));
        }
        let nx = x.len();
        let ny = y.len();
        Ok(Self(Extension {
            upstairs: System { space: x, generators: perms(raw.generators, nx, "upstairs")? },
            downstairs: System { space: y, generators: perms(raw.factor.base_generators, ny, "base")? },
            factor: raw.factor.map,
        }))
    }
}

impl From<ExtensionInput> for RawExtension {
    fn from(e: ExtensionInput) -> Self {
        let ext = e.0;
        let raw_perms = |g: &[MPMap]| g.iter().cloned().map(CheckedPerm).collect();
        Self {
            space: CheckedSpace(ext.upstairs.space),
            generators: raw_perms(&ext.upstairs.generators),
            factor: FactorSpec {
                base_space: CheckedSpace(ext.downstairs.space),
                map: ext.factor,
                base_generators: raw_perms(&ext.downstairs.generators),
            },
        }
    }
}

/// Errors raised after the whole document is read have no position; they are
/// reported at line 0.
fn schema_error(e: serde_json::Error) -> Error {
    Error::Schema { line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn parse_set_problem(text: &str) -> Result<SetProblem> {
    serde_json::from_str(text).map_err(schema_error)
}

pub fn parse_extension(text: &str) -> Result<Extension> {
    serde_json::from_str::<ExtensionInput>(text).map(|e| e.0).map_err(schema_error)
}

pub fn extension_json(ext: &Extension) -> String {
    serde_json::to_string_pretty(&ExtensionInput(ext.clone())).expect("serializable")
}

pub fn set_problem_json(p: &SetProblem) -> String {
    serde_json::to_string_pretty(p).expect("serializable")
}
