//! A seeded property suite over every module, used by the `selftest` command.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::Result;
use crate::lns::{
    cp_check, cp_witness_from_utob, defect, heine_borel_net, is_utob, set_image, set_sum, set_tensor,
    truncate_to_ball, zonotope_distance, FiberSpace, FiberwiseMap, FiniteSet, SolverOptions, Zonotope,
    DEFAULT_NET_CAP,
};
use crate::mixing::{cyclic_witness, eq_idempotent, mix, mix_membership, mix_scalars, verify_cyclic};
use crate::mps::{random_model, rotation, Extension, ExtensionModel, FiniteProbabilitySpace, System};
use crate::random::{random_coefficient, random_fiber, random_set, random_vector, Rng64};
use crate::relstruct::{ap_module_closure, theorem_cross_check};
use crate::seqmodel::{build_counterexample, egoroff_demo, verify_not_utob, verify_tob_bound, HALF_SQRT2};
use crate::stone::{exhaustion, Idempotent, PartitionOfUnity, StoneElement};

#[derive(Clone, Debug, Serialize)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Random instances per check.
    pub instances: usize,
    pub tol: f64,
    /// Replace the extension sample with a deliberately broken one.
    pub inject_fault: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { seed: 0, instances: 50, tol: 1e-9, inject_fault: false }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub instances: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type Outcome = Result<Option<String>>;

fn fail(msg: impl Into<String>) -> Outcome {
    Ok(Some(msg.into()))
}

fn random_space(rng: &mut Rng64, max_n: usize, max_d: usize) -> FiberSpace {
    let n = rng.gen_range(1..=max_n);
    FiberSpace::with_dims((0..n).map(|_| rng.gen_range(1..=max_d)).collect()).expect("positive dims")
}

fn sized_set(rng: &mut Rng64, space: &FiberSpace, max_k: usize, r: f64) -> FiniteSet {
    let k = rng.gen_range(1..=max_k);
    random_set(rng, space, k, r)
}

fn lattice_norm_axioms(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 5, 3);
    let x = random_vector(rng, &space, 2.0);
    let y = random_vector(rng, &space, 2.0);
    let a = random_coefficient(rng, space.len(), 2.0);
    let triangle = x.add(&y)?.lattice_norm().le(&x.lattice_norm().add(&y.lattice_norm())?, tol)?;
    let homogeneous = x.mul_coeff(&a)?.lattice_norm().approx_eq(&a.modulus().mul(&x.lattice_norm())?, tol)?;
    if !(triangle && homogeneous) {
        return fail("triangle inequality or homogeneity failed");
    }
    Ok(None)
}

fn exhaustion_partition(rng: &mut Rng64, _tol: f64) -> Outcome {
    let n = rng.gen_range(1..=8);
    let k = rng.gen_range(1..=4);
    let mut cover: Vec<Idempotent> = (0..k).map(|_| Idempotent::new((0..n).map(|_| rng.gen_bool(0.4)).collect())).collect();
    cover.push(Idempotent::one(n));
    let p = exhaustion(&cover, None)?;
    for (part, c) in p.parts().iter().zip(&cover) {
        if !part.le(c)? {
            return fail("part exceeds its cover element");
        }
    }
    Ok(None)
}

fn defect_sum(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 5, 3);
    let (m, n, g, h) = (
        sized_set(rng, &space, 3, 1.0),
        sized_set(rng, &space, 3, 1.0),
        sized_set(rng, &space, 3, 1.0),
        sized_set(rng, &space, 3, 1.0),
    );
    let lhs = defect(&set_sum(&m, &n)?, &set_sum(&g, &h)?)?.value;
    let rhs = defect(&m, &g)?.value.add(&defect(&n, &h)?.value)?;
    if !lhs.le(&rhs, tol)? {
        return fail("defect of sums exceeds the sum of defects");
    }
    Ok(None)
}

fn defect_product(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 4, 2);
    let (m, n, g, h) = (
        sized_set(rng, &space, 3, 1.5),
        sized_set(rng, &space, 3, 1.5),
        sized_set(rng, &space, 3, 1.5),
        sized_set(rng, &space, 3, 1.5),
    );
    let lhs = defect(&set_tensor(&m, &n)?, &set_tensor(&g, &h)?)?.value;
    let dm = defect(&m, &g)?.value;
    let dn = defect(&n, &h)?.value;
    let a = m.sup_norm_bound();
    let b = n.sup_norm_bound();
    let rhs = a.mul(&dn)?.add(&dm.mul(&dn)?)?.add(&b.mul(&dm)?)?;
    if !lhs.le(&rhs, tol)? {
        return fail("product bound violated");
    }
    Ok(None)
}

fn defect_perturbation(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 5, 3);
    let t = rng.gen_range(0.01..0.5);
    let mt = sized_set(rng, &space, 4, 1.0);
    let m = FiniteSet::new(
        space.clone(),
        mt.elements().iter().map(|x| x.add(&random_vector(rng, &space, t))).collect::<Result<_>>()?,
    )?;
    let f = sized_set(rng, &space, 4, 1.0);
    let rhs = defect(&mt, &f)?.value.map(|v| v + t);
    if !defect(&m, &f)?.value.le(&rhs, tol)? {
        return fail("perturbation bound violated");
    }
    Ok(None)
}

fn defect_operator(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 4, 3);
    let blocks = space
        .dims()
        .iter()
        .map(|&d| nalgebra::DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let t = FiberwiseMap::new(blocks);
    let m = sized_set(rng, &space, 4, 1.0);
    let f = sized_set(rng, &space, 4, 1.0);
    let lhs = defect(&set_image(&t, &m)?, &set_image(&t, &f)?)?.value;
    let rhs = t.bound().mul(&defect(&m, &f)?.value)?;
    if !lhs.le(&rhs, tol)? {
        return fail("operator bound violated");
    }
    Ok(None)
}

fn truncation(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 5, 3);
    let r = rng.gen_range(0.2..1.5);
    let m = sized_set(rng, &space, 4, r);
    let f = sized_set(rng, &space, 4, 4.0 * r);
    let ft = truncate_to_ball(&f, r)?;
    if !ft.sup_norm_bound().le_const(2.0 * r, tol) || !defect(&m, &ft)?.value.le(&defect(&m, &f)?.value, tol)? {
        return fail("truncation increased the defect or left the ball");
    }
    Ok(None)
}

fn lipschitz(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 5, 3);
    let m = sized_set(rng, &space, 4, 1.0);
    let f = sized_set(rng, &space, 4, 1.0);
    let f2 = FiniteSet::new(
        space.clone(),
        f.elements().iter().map(|y| y.add(&random_vector(rng, &space, 0.3))).collect::<Result<_>>()?,
    )?;
    let shift = StoneElement::sup_all(
        f.elements().iter().zip(f2.elements()).map(|(a, b)| a.dist(b).expect("same shape")).collect::<Vec<_>>().iter(),
    )
    .expect("nonempty");
    let diff = defect(&m, &f)?.value.sub(&defect(&m, &f2)?.value)?.abs();
    if !diff.le(&shift, tol)? {
        return fail("defect is not 1-Lipschitz in the witness");
    }
    Ok(None)
}

fn heine_borel(rng: &mut Rng64, tol: f64) -> Outcome {
    let n = rng.gen_range(1..=3);
    let dim = rng.gen_range(2..=3);
    let space = FiberSpace::uniform(n, dim)?;
    let d = rng.gen_range(1..=2);
    // a random fiberwise unitary gives an orthonormal basis; zero some fibers
    let mut elements = vec![space.zero(); d];
    for w in 0..n {
        let cols = crate::relstruct::fiberwise_basis(
            &(0..dim).map(|_| crate::lns::ModuleVector::new(vec![random_fiber(rng, dim, 1.0); n])).collect::<Vec<_>>(),
            &FiberSpace::uniform(n, dim)?,
            1e-12,
        )?;
        for (j, e) in elements.iter_mut().enumerate() {
            if rng.gen_bool(0.85) {
                *e.fiber_mut(w) = cols.basis.get(j).fiber(w).to_vec();
            }
        }
    }
    let basis = FiniteSet::new(space, elements)?;
    let eps = if rng.gen_bool(0.5) { 0.5 } else { 0.25 };
    let net = heine_borel_net(&basis, 1.0, eps, DEFAULT_NET_CAP, 1e-9)?;
    let xs = (0..10).map(|_| crate::random::random_in_span(rng, &basis, 1.0)).collect();
    let m = FiniteSet::new(basis.space().clone(), xs)?;
    if !defect(&m, &net)?.value.le_const(eps, tol) {
        return fail(format!("sample not covered at eps {eps}"));
    }
    Ok(None)
}

fn zonotope_equivalence(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 4, 3);
    let m = sized_set(rng, &space, 4, 1.0);
    let eps = rng.gen_range(0.1..0.6);
    let opts = SolverOptions { tol: 1e-9, max_iter: 20_000 };
    let w = cp_witness_from_utob(&m, eps, tol)?;
    if !cp_check(&m, &w.generators, eps, opts)?.verdict {
        return fail("UTOB witness fails the zonotope check");
    }
    let f = sized_set(rng, &space, 3, 1.0);
    let z = Zonotope::new(f.clone());
    let coeffs: Vec<_> = (0..f.len()).map(|_| random_coefficient(rng, space.len(), 1.0)).collect();
    let x = z.point(&coeffs)?;
    if !zonotope_distance(&x, &z, opts)?.distance.le_const(1e-6, 0.0) {
        return fail("zonotope member at positive distance");
    }
    Ok(None)
}

fn bset_axioms(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 6, 2);
    let pool = random_set(rng, &space, 2, 1.0);
    // draw fibers from a small pool so equalities actually occur
    let pick = |rng: &mut Rng64| {
        let mut v = space.zero();
        for w in 0..space.len() {
            *v.fiber_mut(w) = pool.get(rng.gen_range(0..2)).fiber(w).to_vec();
        }
        v
    };
    let (x, y, z) = (pick(rng), pick(rng), pick(rng));
    let xy = eq_idempotent(&x, &y, tol)?;
    let yz = eq_idempotent(&y, &z, tol)?;
    let xz = eq_idempotent(&x, &z, tol)?;
    if xy != eq_idempotent(&y, &x, tol)? || !xy.and(&yz)?.le(&xz)? || !eq_idempotent(&x, &x, tol)?.is_one() {
        return fail("boolean-set axiom violated");
    }
    if xy.is_one() != x.approx_eq(&y, tol) {
        return fail("⟦x=y⟧ = 1 does not match equality");
    }
    let k = rng.gen_range(1..=3);
    let labels: Vec<usize> = (0..space.len()).map(|_| rng.gen_range(0..k)).collect();
    let p = PartitionOfUnity::from_assignment(k, &labels)?;
    let xs = random_set(rng, &space, k, 1.0);
    let mixed = mix(&p, xs.elements())?;
    let lhs = z.dist(&mixed)?;
    let rhs = mix_scalars(&p, &xs.elements().iter().map(|a| z.dist(a)).collect::<Result<Vec<_>>>()?)?;
    if !lhs.approx_eq(&rhs, tol)? {
        return fail("boolean-set map law violated");
    }
    if mix_membership(&mixed, &xs, tol)?.is_none() {
        return fail("mixing not recognised as a member of the mix-closure");
    }
    let f = sized_set(rng, &space, 3, 1.0);
    let with_mix = {
        let mut s = xs.clone();
        s.push(mixed)?;
        s
    };
    if !defect(&with_mix, &f)?.value.approx_eq(&defect(&xs, &f)?.value, tol)? {
        return fail("defect changed under mixing");
    }
    Ok(None)
}

fn cyclic(rng: &mut Rng64, tol: f64) -> Outcome {
    let space = random_space(rng, 6, 3);
    let m = sized_set(rng, &space, 6, 1.0);
    for eps in [0.5, 0.1] {
        let w = cyclic_witness(&m, eps, 1.0, tol)?;
        if !verify_cyclic(&m, eps, &w, tol)?.verdict {
            return fail(format!("cyclic witness rejected at eps {eps}"));
        }
    }
    Ok(None)
}

fn random_fn(rng: &mut Rng64, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Rotation on `Z_4` over `Z_2` with the factor map scrambled so that `π`
/// no longer intertwines the actions.
pub fn broken_extension() -> Extension {
    let up = System { space: FiniteProbabilitySpace::uniform(4).expect("uniform"), generators: vec![rotation(4)] };
    let down = System { space: FiniteProbabilitySpace::uniform(2).expect("uniform"), generators: vec![rotation(2)] };
    Extension { upstairs: up, downstairs: down, factor: vec![0, 0, 1, 1] }
}

fn extension_identities(model: &ExtensionModel, rng: &mut Rng64, tol: f64) -> Outcome {
    let f = random_fn(rng, model.nx());
    let g = random_fn(rng, model.nx());
    let h = random_fn(rng, model.ny());
    let adj = model.x().inner(&model.embed(&h)?, &f) - model.y().inner(&h, &model.cond_expectation(&f)?);
    if adj.norm() > tol {
        return fail("adjointness ⟨Jg,f⟩ = ⟨g,E_Y f⟩ violated");
    }
    if (model.y().integral(&model.cond_expectation(&f)?) - model.x().integral(&f)).norm() > tol {
        return fail("tower identity violated");
    }
    let ip = model.rel_inner(&f, &g)?;
    for t in 0..model.group_len() {
        let lhs = model.rel_inner(&model.koopman(t, &f)?, &model.koopman(t, &g)?)?;
        let rhs = model.koopman_y(t, ip.values())?;
        if lhs.values().iter().zip(&rhs).any(|(a, b)| (a - b).norm() > tol) {
            return fail(format!("relative isometry violated at group element {t}"));
        }
    }
    if !model.encode(&f)?.lattice_norm().approx_eq(&model.rel_norm(&f)?, tol)? {
        return fail("encoding is not isometric");
    }
    Ok(None)
}

fn seqmodel_checks(_rng: &mut Rng64, tol: f64) -> Outcome {
    let ce = build_counterexample(12)?;
    for n in 1..12 {
        if !verify_tob_bound(&ce, n, tol)?.verdict {
            return fail(format!("defect bound fails for F_{n}"));
        }
    }
    for d in 1..=8 {
        let w = verify_not_utob(&ce.seq, &ce.nets[d - 1])?;
        if w.distance < HALF_SQRT2 - tol {
            return fail("separation witness below √2/2");
        }
    }
    for delta in [0.25, 0.05] {
        let r = egoroff_demo(12, delta, tol)?;
        if 0.5f64.powi(r.m as i32) > delta || r.defect_on_set > tol {
            return fail(format!("localization fails at delta {delta}"));
        }
    }
    Ok(None)
}

fn run_check(
    name: &str,
    instances: usize,
    rng: &mut Rng64,
    mut body: impl FnMut(&mut Rng64) -> Outcome,
) -> CheckResult {
    for i in 0..instances {
        match body(rng) {
            Ok(None) => {}
            Ok(Some(msg)) => {
                return CheckResult { name: name.into(), passed: false, instances: i + 1, detail: msg };
            }
            Err(e) => return CheckResult { name: name.into(), passed: false, instances: i + 1, detail: e.to_string() },
        }
    }
    CheckResult { name: name.into(), passed: true, instances, detail: String::new() }
}

pub fn run_selftest(cfg: &SelftestConfig) -> SelftestReport {
    let mut rng = Rng64::seed_from_u64(cfg.seed);
    let tol = cfg.tol;
    let k = cfg.instances.max(1);
    let small = (k / 10).max(1);
    let mut checks = vec![
        run_check("stone.lattice_norm_axioms", k, &mut rng, |r| lattice_norm_axioms(r, tol)),
        run_check("stone.exhaustion_partition", k, &mut rng, |r| exhaustion_partition(r, tol)),
        run_check("lns.defect_sum", k, &mut rng, |r| defect_sum(r, tol)),
        run_check("lns.defect_product", k, &mut rng, |r| defect_product(r, tol)),
        run_check("lns.defect_perturbation", k, &mut rng, |r| defect_perturbation(r, tol)),
        run_check("lns.defect_operator", k, &mut rng, |r| defect_operator(r, tol)),
        run_check("lns.truncate_to_ball", k, &mut rng, |r| truncation(r, tol)),
        run_check("lns.defect_lipschitz", k, &mut rng, |r| lipschitz(r, tol)),
        run_check("lns.heine_borel", small, &mut rng, |r| heine_borel(r, tol)),
        run_check("lns.zonotope_equivalence", small, &mut rng, |r| zonotope_equivalence(r, tol)),
        run_check("lns.utob_witness", k, &mut rng, |r| {
            let space = random_space(r, 5, 3);
            let m = sized_set(r, &space, 6, 1.0);
            let rep = is_utob(&m, 0.3, tol)?;
            if rep.verdict && defect(&m, &rep.witness)?.value.le_const(0.3, tol) {
                Ok(None)
            } else {
                fail("greedy witness does not certify its own defect")
            }
        }),
        run_check("mixing.bset_axioms", k, &mut rng, |r| bset_axioms(r, tol)),
        run_check("mixing.cyclic_roundtrip", small, &mut rng, |r| cyclic(r, tol)),
    ];
    let fault = cfg.inject_fault;
    checks.push(run_check("mps.extension_identities", small, &mut rng, |r| {
        let model = if fault { broken_extension().analyze_unchecked(1000)? } else { random_model(r, 12, 1000, 1e-12) };
        extension_identities(&model, r, tol)
    }));
    checks.push(run_check("relstruct.cross_check", small.min(5), &mut rng, |r| {
        let model = random_model(r, 8, 1000, 1e-12);
        let rep = theorem_cross_check(&model, &[0.5, 0.1], &[0.25], tol)?;
        if rep.verdict && rep.subspace_distances.max() <= 1e-7 {
            Ok(None)
        } else {
            fail(format!("pipelines disagree: {:?}", rep.subspace_distances))
        }
    }));
    checks.push(run_check("relstruct.ap_module_closure", small.min(5), &mut rng, |r| {
        let model = random_model(r, 8, 1000, 1e-12);
        let (f, g, h) = (random_fn(r, model.nx()), random_fn(r, model.nx()), random_fn(r, model.ny()));
        let lambda = Complex64::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        if ap_module_closure(&model, &f, &g, lambda, &h, 0.3, tol)?.all() {
            Ok(None)
        } else {
            fail("closure witness rejected")
        }
    }));
    checks.push(run_check("seqmodel.counterexample", 1, &mut rng, |r| seqmodel_checks(r, tol)));
    SelftestReport { seed: cfg.seed, passed: checks.iter().all(|c| c.passed), checks }
}
