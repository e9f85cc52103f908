//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line, in order, regardless of capture settings.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use ordbound::io::parse_extension;
use ordbound::lns::{
    cp_check, defect, heine_borel_net, is_utob, set_image, set_sum, set_tensor, truncate_to_ball, zonotope_distance,
    FiberSpace, FiberwiseMap, FiniteSet, ModuleVector, SolverOptions, Zonotope, DEFAULT_NET_CAP,
};
use ordbound::mixing::{cyclic_witness, eq_idempotent, mix, verify_cyclic};
use ordbound::mps::{random_model, ExtensionModel};
use ordbound::random::{random_coefficient, random_fiber, random_in_disc, random_set, random_vector, Rng64};
use ordbound::relstruct::{ap_module_closure, kronecker_subspace, theorem_cross_check};
use ordbound::seqmodel::{build_counterexample, egoroff_demo, verify_not_utob, verify_tob_bound, SeqSpace};
use ordbound::stone::{Idempotent, PartitionOfUnity};
use rand::{Rng, SeedableRng};

const TOL: f64 = 1e-9;
const SQRT2: f64 = std::f64::consts::SQRT_2;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn lib<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// independent oracles

fn fiber_dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn fiber_len(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `sup_{x∈M} min_{y∈F} |x − y|` evaluated point by point.
fn oracle_defect(m: &FiniteSet, f: &FiniteSet) -> Vec<f64> {
    let n = m.space().len();
    (0..n)
        .map(|w| {
            m.elements()
                .iter()
                .map(|x| {
                    f.elements()
                        .iter()
                        .map(|y| fiber_dist(x.fiber(w), y.fiber(w)))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn all_le(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| *x <= *y + tol)
}

fn random_space(rng: &mut Rng64, max_n: usize, max_d: usize) -> FiberSpace {
    let n = rng.gen_range(1..=max_n);
    FiberSpace::with_dims((0..n).map(|_| rng.gen_range(1..=max_d)).collect()).unwrap()
}

/// Library defect must agree with the brute-force recomputation.
fn checked_defect(m: &FiniteSet, f: &FiniteSet) -> Result<Vec<f64>, String> {
    let ours = oracle_defect(m, f);
    let theirs = lib(defect(m, f))?.value.into_values();
    ensure!(max_abs_diff(&ours, &theirs) <= 1e-12, "library defect disagrees with brute force");
    Ok(ours)
}

// ---------------------------------------------------------------------------
// 1. counterexample bounds

fn constant_vector(space: &FiberSpace, fiber: &[Complex64]) -> ModuleVector {
    ModuleVector::new(vec![fiber.to_vec(); space.len()])
}

fn unit(n: usize, i: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[i] = Complex64::new(1.0, 0.0);
    v
}

fn adversarial_families(rng: &mut Rng64, seq: &SeqSpace, d: usize) -> Vec<(&'static str, FiniteSet)> {
    let big_n = seq.n();
    let space = seq.space().clone();
    let ce = build_counterexample(big_n).unwrap();
    let mut out = vec![("prefix net", ce.net(d).select(&(0..d).collect::<Vec<_>>()))];

    let mut mids = FiniteSet::empty(space.clone());
    for j in 0..d {
        let (a, b) = ((2 * j) % big_n, (2 * j + 1) % big_n);
        let v: Vec<Complex64> = unit(big_n, a).iter().zip(unit(big_n, b)).map(|(x, y)| (x + y) * 0.5).collect();
        mids.push(constant_vector(&space, &v)).unwrap();
    }
    out.push(("midpoints", mids));

    // per-coordinate injections j ↦ e_{σ_n(j)}
    let mut inj = vec![space.zero(); d];
    for n in 1..=big_n {
        let mut pool: Vec<usize> = (0..n).collect();
        for g in inj.iter_mut() {
            if pool.is_empty() {
                break;
            }
            let k = rng.gen_range(0..pool.len());
            *g.fiber_mut(n - 1) = unit(big_n, pool.swap_remove(k));
        }
    }
    out.push(("coordinate injections", FiniteSet::new(space.clone(), inj).unwrap()));
    out.push(("random", random_set(rng, &space, d, 1.5)));
    out
}

fn criterion_counterexample() -> Outcome {
    let big_n = 16;
    let ce = lib(build_counterexample(big_n))?;
    ensure!(ce.m.len() == big_n * (big_n + 1) / 2, "M has {} elements", ce.m.len());
    for n in 1..big_n {
        let d = checked_defect(&ce.m, ce.net(n))?;
        for (w, &v) in d.iter().enumerate() {
            // coordinates are 1-based; the last point is the tail
            let ok = if w < n { v <= TOL } else { v <= SQRT2 + TOL };
            ensure!(ok, "n={n}: defect {v} at coordinate {}", w + 1);
            let exact = if w < n || w == big_n { 0.0 } else { 1.0 };
            ensure!((v - exact).abs() <= TOL, "n={n}: defect {v} at {} differs from {exact}", w + 1);
        }
        ensure!(lib(verify_tob_bound(&ce, n, TOL))?.verdict, "verify_tob_bound rejects n={n}");
    }

    let mut rng = Rng64::seed_from_u64(1);
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    for d in 1..=8 {
        for (name, f) in adversarial_families(&mut rng, &ce.seq, d) {
            ensure!(f.len() == d, "{name}: |F| = {} instead of {d}", f.len());
            let w = lib(verify_not_utob(&ce.seq, &f))?;
            ensure!(1 <= w.i && w.i <= w.n && w.n <= big_n, "{name}, d={d}: bad indices {:?}", w);
            let x = ce.seq.indicator_tensor(w.n, w.i);
            let recomputed = f
                .elements()
                .iter()
                .map(|y| fiber_dist(x.fiber(w.n - 1), y.fiber(w.n - 1)))
                .fold(f64::INFINITY, f64::min);
            ensure!((recomputed - w.distance).abs() <= 1e-12, "{name}, d={d}: distance mismatch");
            ensure!(recomputed >= SQRT2 / 2.0 - TOL, "{name}, d={d}: distance {recomputed} below √2/2");
            worst = worst.min(recomputed);
            checked += 1;
        }
    }
    Ok(format!("15 nets, {checked} adversarial F, min separation {worst:.6}"))
}

// ---------------------------------------------------------------------------
// 2. zonotope equivalence

fn disc_grid(h: f64) -> Vec<Complex64> {
    let k = (1.0 / h).round() as i64;
    let mut g = Vec::new();
    for a in -k..=k {
        for b in -k..=k {
            let z = Complex64::new(a as f64 * h, b as f64 * h);
            if z.norm() <= 1.0 {
                g.push(z);
            }
        }
    }
    let m = (std::f64::consts::TAU / h).ceil() as usize;
    g.extend((0..m).map(|i| Complex64::from_polar(1.0, std::f64::consts::TAU * i as f64 / m as f64)));
    g
}

/// min over `|λ| ≤ 1` of `|r − λ y|`, exact.
fn segment_distance(r: &[Complex64], y: &[Complex64]) -> f64 {
    let yy: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    if yy == 0.0 {
        return fiber_len(r);
    }
    let mut lam: Complex64 = y.iter().zip(r).map(|(a, b)| a.conj() * b).sum::<Complex64>() / yy;
    if lam.norm() > 1.0 {
        lam /= lam.norm();
    }
    r.iter().zip(y).map(|(a, b)| (a - lam * b).norm_sqr()).sum::<f64>().sqrt()
}

/// Grid over the first coefficient, exact minimisation over the second.
fn brute_zonotope(x: &ModuleVector, f: &FiniteSet, grid: &[Complex64]) -> Vec<f64> {
    (0..x.base_len())
        .map(|w| {
            let xf = x.fiber(w);
            let y1 = f.get(0).fiber(w);
            grid.iter()
                .map(|&l| {
                    let r: Vec<Complex64> = xf.iter().zip(y1).map(|(a, b)| a - l * b).collect();
                    if f.len() == 1 {
                        fiber_len(&r)
                    } else {
                        segment_distance(&r, f.get(1).fiber(w))
                    }
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn criterion_zonotope() -> Outcome {
    let mut rng = Rng64::seed_from_u64(2);
    let opts = SolverOptions { tol: 1e-9, max_iter: 20_000 };
    let grid = disc_grid(0.01);
    let mut utob_pass = 0;
    let mut worst_member = 0.0f64;
    let mut worst_brute = 0.0f64;
    for inst in 0..200 {
        let space = random_space(&mut rng, 6, 4);
        let k = rng.gen_range(1..=3);
        let m = random_set(&mut rng, &space, k, 1.0);
        let eps = rng.gen_range(0.05..0.8);
        let u = lib(is_utob(&m, eps, TOL))?;
        if u.verdict {
            ensure!(u.witness.len() <= 3, "instance {inst}: witness of size {}", u.witness.len());
            let d = checked_defect(&m, &u.witness)?;
            ensure!(d.iter().all(|&v| v <= eps + TOL), "instance {inst}: UTOB witness has defect above ε");
            let cp = lib(cp_check(&m, &u.witness, eps, opts))?;
            ensure!(cp.verdict, "instance {inst}: UTOB at {eps} but cp_check fails");
            utob_pass += 1;
        }

        let kf = rng.gen_range(1..=3);
        let f = random_set(&mut rng, &space, kf, 1.0);
        let coeffs: Vec<_> = (0..kf).map(|_| random_coefficient(&mut rng, space.len(), 1.0)).collect();
        let mut x = space.zero();
        for w in 0..space.len() {
            for (j, c) in coeffs.iter().enumerate() {
                for (a, b) in x.fiber_mut(w).iter_mut().zip(f.get(j).fiber(w)) {
                    *a += c.values()[w] * b;
                }
            }
        }
        let z = Zonotope::new(f);
        let sol = lib(zonotope_distance(&x, &z, opts))?;
        let dmax = sol.distance.sup_norm();
        ensure!(dmax <= 1e-6, "instance {inst}: member at distance {dmax}");
        worst_member = worst_member.max(dmax);

        if inst < 50 {
            let kb = 1 + inst % 2;
            let fb = random_set(&mut rng, &space, kb, 1.0);
            let xb = random_vector(&mut rng, &space, 2.0);
            let sol = lib(zonotope_distance(&xb, &Zonotope::new(fb.clone()), opts))?;
            let brute = brute_zonotope(&xb, &fb, &grid);
            let diff = max_abs_diff(sol.distance.values(), &brute);
            ensure!(diff <= 0.02, "instance {inst}: solver and grid differ by {diff}");
            worst_brute = worst_brute.max(diff);
        }
    }
    ensure!(utob_pass > 0, "no instance was UTOB; the implication was never exercised");
    Ok(format!(
        "{utob_pass}/200 UTOB instances pass cp_check, max member distance {worst_member:.1e}, max grid gap {worst_brute:.4}"
    ))
}

// ---------------------------------------------------------------------------
// 3. Heine–Borel

/// Orthonormal columns by Gram–Schmidt on random complex vectors.
fn orthonormal(rng: &mut Rng64, dim: usize, k: usize) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    while out.len() < k {
        let mut v = random_fiber(rng, dim, 1.0);
        for _ in 0..2 {
            for e in &out {
                let c: Complex64 = e.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (a, b) in v.iter_mut().zip(e) {
                    *a -= c * b;
                }
            }
        }
        let n = fiber_len(&v);
        if n > 1e-3 {
            out.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    out
}

fn criterion_heine_borel() -> Outcome {
    let mut rng = Rng64::seed_from_u64(3);
    let mut samples = 0;
    let mut worst = 0.0f64;
    let mut round = 0;
    while samples < 1000 {
        let d = 1 + round % 2;
        let eps = if (round / 2) % 2 == 0 { 0.5 } else { 0.25 };
        round += 1;
        let n = rng.gen_range(1..=3);
        let dim = rng.gen_range(d..=3);
        let space = FiberSpace::uniform(n, dim).unwrap();
        let mut basis = vec![space.zero(); d];
        let mut active = vec![vec![false; d]; n];
        for w in 0..n {
            let cols = orthonormal(&mut rng, dim, d);
            for j in 0..d {
                if rng.gen_bool(0.85) {
                    *basis[j].fiber_mut(w) = cols[j].clone();
                    active[w][j] = true;
                }
            }
        }
        let basis = FiniteSet::new(space.clone(), basis).unwrap();
        let net = lib(heine_borel_net(&basis, 1.0, eps, DEFAULT_NET_CAP, TOL))?;
        let mut xs = Vec::new();
        for s in 0..50 {
            let mut x = space.zero();
            for w in 0..n {
                let mut z = random_fiber(&mut rng, d, 1.0);
                if s % 2 == 0 {
                    // push to the boundary sphere
                    let r = fiber_len(&z).max(1e-300);
                    z.iter_mut().for_each(|v| *v /= r);
                }
                for j in 0..d {
                    if active[w][j] {
                        for (a, b) in x.fiber_mut(w).iter_mut().zip(basis.get(j).fiber(w)) {
                            *a += z[j] * b;
                        }
                    }
                }
                ensure!(fiber_len(x.fiber(w)) <= 1.0 + 1e-12, "sample leaves the unit ball");
            }
            xs.push(x);
        }
        let m = FiniteSet::new(space, xs).unwrap();
        let dfct = oracle_defect(&m, &net);
        let top = dfct.iter().cloned().fold(0.0, f64::max);
        ensure!(top <= eps + TOL, "d={d}, ε={eps}: sample at distance {top} from the net");
        worst = worst.max(top / eps);
        samples += m.len();
    }
    Ok(format!("{samples} samples over {round} bases, worst defect/ε = {worst:.3}"))
}

// ---------------------------------------------------------------------------
// 4. defect lemma properties

fn criterion_lemma() -> Outcome {
    let mut rng = Rng64::seed_from_u64(4);
    let reps = 500;
    for i in 0..reps {
        // (b) sums
        let space = random_space(&mut rng, 5, 3);
        let sets: Vec<FiniteSet> = (0..4)
            .map(|_| {
                let k = rng.gen_range(1..=3);
                random_set(&mut rng, &space, k, 1.0)
            })
            .collect();
        let (m, n, g, h) = (&sets[0], &sets[1], &sets[2], &sets[3]);
        let lhs = checked_defect(&lib(set_sum(m, n))?, &lib(set_sum(g, h))?)?;
        let rhs: Vec<f64> = oracle_defect(m, g).iter().zip(oracle_defect(n, h)).map(|(a, b)| a + b).collect();
        ensure!(all_le(&lhs, &rhs, TOL), "(b) fails at instance {i}");
    }
    for i in 0..reps {
        // (c) fiberwise tensor product
        let space = random_space(&mut rng, 4, 2);
        let sets: Vec<FiniteSet> = (0..4)
            .map(|_| {
                let k = rng.gen_range(1..=3);
                random_set(&mut rng, &space, k, 1.5)
            })
            .collect();
        let (m, n, g, h) = (&sets[0], &sets[1], &sets[2], &sets[3]);
        let mn = lib(set_tensor(m, n))?;
        // |m(x,y)| ≤ |x||y| for the product used
        for (k, p) in mn.elements().iter().enumerate() {
            let (x, y) = (m.get(k / n.len()), n.get(k % n.len()));
            for w in 0..space.len() {
                ensure!(
                    fiber_len(p.fiber(w)) <= fiber_len(x.fiber(w)) * fiber_len(y.fiber(w)) + TOL,
                    "(c) product is not contractive"
                );
            }
        }
        let lhs = checked_defect(&mn, &lib(set_tensor(g, h))?)?;
        let sup = |s: &FiniteSet, w: usize| s.elements().iter().map(|x| fiber_len(x.fiber(w))).fold(0.0, f64::max);
        let (dm, dn) = (oracle_defect(m, g), oracle_defect(n, h));
        let rhs: Vec<f64> = (0..space.len()).map(|w| sup(m, w) * dn[w] + dm[w] * dn[w] + sup(n, w) * dm[w]).collect();
        ensure!(all_le(&lhs, &rhs, TOL), "(c) fails at instance {i}");
    }
    for i in 0..reps {
        // (d) perturbation
        let space = random_space(&mut rng, 5, 3);
        let t = rng.gen_range(0.01..0.5);
        let k = rng.gen_range(1..=4);
        let mt = random_set(&mut rng, &space, k, 1.0);
        let m = lib(mt.map(|x| x.add(&random_vector(&mut Rng64::seed_from_u64(i as u64), &space, t)).unwrap()))?;
        for (a, b) in m.elements().iter().zip(mt.elements()) {
            for w in 0..space.len() {
                ensure!(fiber_dist(a.fiber(w), b.fiber(w)) <= t + 1e-12, "(d) perturbation exceeds t");
            }
        }
        let kf = rng.gen_range(1..=4);
        let f = random_set(&mut rng, &space, kf, 1.0);
        let lhs = checked_defect(&m, &f)?;
        let rhs: Vec<f64> = oracle_defect(&mt, &f).iter().map(|v| v + t).collect();
        ensure!(all_le(&lhs, &rhs, TOL), "(d) fails at instance {i}");
    }
    for i in 0..reps {
        // (f) bounded fiberwise operators
        let space = random_space(&mut rng, 4, 3);
        let blocks: Vec<nalgebra::DMatrix<Complex64>> = space
            .dims()
            .iter()
            .map(|&d| {
                nalgebra::DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        // Frobenius norm dominates the operator norm
        let c: Vec<f64> = blocks.iter().map(|b| b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()).collect();
        let t = FiberwiseMap::new(blocks);
        ensure!(all_le(t.bound().values(), &c, 1e-12), "(f) operator bound exceeds Frobenius norm");
        let (km, kf) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let m = random_set(&mut rng, &space, km, 1.0);
        let f = random_set(&mut rng, &space, kf, 1.0);
        let lhs = checked_defect(&lib(set_image(&t, &m))?, &lib(set_image(&t, &f))?)?;
        let base = oracle_defect(&m, &f);
        let tight: Vec<f64> = t.bound().values().iter().zip(&base).map(|(a, b)| a * b).collect();
        ensure!(all_le(&lhs, &tight, TOL), "(f) fails at instance {i}");
    }
    for i in 0..reps {
        // (h) truncation to B[0; 2r]
        let space = random_space(&mut rng, 5, 3);
        let r = rng.gen_range(0.2..1.5);
        let (km, kf) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let m = random_set(&mut rng, &space, km, r);
        let f = random_set(&mut rng, &space, kf, 4.0 * r);
        let ft = lib(truncate_to_ball(&f, r))?;
        for (y, yt) in f.elements().iter().zip(ft.elements()) {
            for w in 0..space.len() {
                let expect = if fiber_len(y.fiber(w)) <= 2.0 * r { fiber_len(y.fiber(w)) } else { 0.0 };
                ensure!((fiber_len(yt.fiber(w)) - expect).abs() <= 1e-12, "(h) truncation is not p·y");
            }
        }
        let lhs = checked_defect(&m, &ft)?;
        ensure!(all_le(&lhs, &oracle_defect(&m, &f), TOL), "(h) fails at instance {i}");
    }
    for i in 0..reps {
        // Lipschitz dependence on the witness list
        let space = random_space(&mut rng, 5, 3);
        let (km, kf) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let m = random_set(&mut rng, &space, km, 1.0);
        let f = random_set(&mut rng, &space, kf, 1.0);
        let shift = rng.gen_range(0.0..0.5);
        let f2 = lib(f.map(|y| y.add(&random_vector(&mut Rng64::seed_from_u64(1000 + i as u64), &space, shift)).unwrap()))?;
        let a = checked_defect(&m, &f)?;
        let b = checked_defect(&m, &f2)?;
        for w in 0..space.len() {
            let s = f.elements().iter().zip(f2.elements()).map(|(p, q)| fiber_dist(p.fiber(w), q.fiber(w))).fold(0.0, f64::max);
            ensure!((a[w] - b[w]).abs() <= s + TOL, "Lipschitz bound fails at instance {i}");
        }
    }
    Ok(format!("(b) (c) (d) (f) (h) and Lipschitz on {reps} instances each"))
}

// ---------------------------------------------------------------------------
// 5. mixings and cyclic compactness

fn criterion_cyclic() -> Outcome {
    let mut rng = Rng64::seed_from_u64(5);
    let r = 1.0;
    let mut parts_seen = 0;
    for inst in 0..100 {
        let space = random_space(&mut rng, 6, 3);
        let k = rng.gen_range(1..=6);
        let m = random_set(&mut rng, &space, k, r);
        for eps in [0.5, 0.1] {
            let w = lib(cyclic_witness(&m, eps, r, TOL))?;
            ensure!(lib(verify_cyclic(&m, eps, &w, TOL))?.verdict, "instance {inst}: verify_cyclic rejects at {eps}");
            // partition of unity: every point in exactly one region
            for pt in 0..space.len() {
                let c = w.parts.iter().filter(|p| p.region.contains(pt)).count();
                ensure!(c == 1, "instance {inst}: point {pt} lies in {c} regions");
            }
            for part in &w.parts {
                ensure!(part.generators.len() == part.cardinality, "cardinality mismatch");
                for y in part.generators.elements() {
                    for pt in 0..space.len() {
                        ensure!(fiber_len(y.fiber(pt)) <= 2.0 * r + TOL, "generator leaves B[0;2r]");
                    }
                }
                // the pointwise nearest generator is the best mixing
                for x in m.elements() {
                    for pt in part.region.points() {
                        let best = part
                            .generators
                            .elements()
                            .iter()
                            .map(|y| fiber_dist(x.fiber(pt), y.fiber(pt)))
                            .fold(f64::INFINITY, f64::min);
                        ensure!(best <= eps + TOL, "instance {inst}: q_n|x − z_n| = {best} > {eps}");
                    }
                }
            }
            parts_seen += w.parts.len();
        }
    }

    for t in 0..500 {
        let space = random_space(&mut rng, 6, 2);
        let pool = random_set(&mut rng, &space, 2, 1.0);
        let pick = |rng: &mut Rng64| {
            let mut v = space.zero();
            for w in 0..space.len() {
                *v.fiber_mut(w) = pool.get(rng.gen_range(0..2)).fiber(w).to_vec();
            }
            v
        };
        let (x, y, z) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let oracle_eq = |a: &ModuleVector, b: &ModuleVector| -> Vec<bool> {
            (0..space.len()).map(|w| fiber_dist(a.fiber(w), b.fiber(w)) <= TOL).collect()
        };
        let xy = lib(eq_idempotent(&x, &y, TOL))?;
        let yz = lib(eq_idempotent(&y, &z, TOL))?;
        let xz = lib(eq_idempotent(&x, &z, TOL))?;
        ensure!(xy.mask() == oracle_eq(&x, &y).as_slice(), "triple {t}: ⟦x=y⟧ disagrees with recomputation");
        ensure!(lib(eq_idempotent(&x, &x, TOL))?.is_one(), "triple {t}: ⟦x=x⟧ ≠ 1");
        ensure!(xy == lib(eq_idempotent(&y, &x, TOL))?, "triple {t}: ⟦x=y⟧ not symmetric");
        ensure!(lib(lib(xy.and(&yz))?.le(&xz))?, "triple {t}: transitivity fails");
        ensure!(xy.is_one() == x.approx_eq(&y, TOL), "triple {t}: ⟦x=y⟧ = 1 does not match equality");

        // map law: |z − mix(p, xs)| = mix(p, |z − x_k|)
        let k = rng.gen_range(1..=3);
        let labels: Vec<usize> = (0..space.len()).map(|_| rng.gen_range(0..k)).collect();
        let p = lib(PartitionOfUnity::from_assignment(k, &labels))?;
        let xs = random_set(&mut rng, &space, k, 1.0);
        let mixed = lib(mix(&p, xs.elements()))?;
        for w in 0..space.len() {
            let expect = xs.get(labels[w]).fiber(w);
            ensure!(fiber_dist(mixed.fiber(w), expect) <= 1e-15, "triple {t}: mix picks the wrong fiber");
            let lhs = fiber_dist(z.fiber(w), mixed.fiber(w));
            let rhs = fiber_dist(z.fiber(w), xs.get(labels[w]).fiber(w));
            ensure!((lhs - rhs).abs() <= TOL, "triple {t}: map law fails");
        }
        let lib_lhs = lib(z.dist(&mixed))?;
        for w in 0..space.len() {
            ensure!((lib_lhs.values()[w] - fiber_dist(z.fiber(w), mixed.fiber(w))).abs() <= 1e-12, "lattice norm mismatch");
        }
    }
    Ok(format!("100 sets at ε ∈ {{0.5, 0.1}} ({parts_seen} parts), 500 B-set triples"))
}

// ---------------------------------------------------------------------------
// 6. extension layer

struct Oracle<'a> {
    model: &'a ExtensionModel,
}

impl Oracle<'_> {
    fn mu(&self) -> &[f64] {
        self.model.x().weights()
    }

    fn nu(&self) -> &[f64] {
        self.model.y().weights()
    }

    fn cond(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.model.ny()];
        for (x, &y) in self.model.factor().iter().enumerate() {
            out[y] += f[x] * self.mu()[x];
        }
        out.iter().zip(self.nu()).map(|(v, w)| v / w).collect()
    }

    fn lift(&self, g: &[Complex64]) -> Vec<Complex64> {
        self.model.factor().iter().map(|&y| g[y]).collect()
    }

    fn rel_inner(&self, f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
        self.cond(&f.iter().zip(g).map(|(a, b)| a * b.conj()).collect::<Vec<_>>())
    }

    fn inner(weights: &[f64], f: &[Complex64], g: &[Complex64]) -> Complex64 {
        f.iter().zip(g).zip(weights).map(|((a, b), w)| a * b.conj() * w).sum()
    }

    /// `f ∘ p⁻¹` for a permutation given as an image list.
    fn push(perm: &[usize], f: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
        for (x, &px) in perm.iter().enumerate() {
            out[px] = f[x];
        }
        out
    }
}

fn cdiff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_fn(rng: &mut Rng64, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| random_in_disc(rng, 1.5)).collect()
}

fn criterion_extension() -> Outcome {
    let mut rng = Rng64::seed_from_u64(6);
    let tol = 1e-9;
    let mut worst = 0.0f64;
    let mut elements = 0;
    for inst in 0..200 {
        let model = random_model(&mut rng, 12, 10_000, 1e-12);
        ensure!(model.nx() <= 12, "instance {inst}: |X| = {}", model.nx());
        let o = Oracle { model: &model };
        let (f, g) = (random_fn(&mut rng, model.nx()), random_fn(&mut rng, model.nx()));
        let h = random_fn(&mut rng, model.ny());

        ensure!(cdiff(&lib(model.cond_expectation(&f))?, &o.cond(&f)) <= 1e-12, "instance {inst}: 𝔼_Y mismatch");
        ensure!(cdiff(&lib(model.embed(&h))?, &o.lift(&h)) <= 1e-12, "instance {inst}: J mismatch");

        let adj = (Oracle::inner(o.mu(), &o.lift(&h), &f) - Oracle::inner(o.nu(), &h, &o.cond(&f))).norm();
        ensure!(adj <= tol, "instance {inst}: adjointness off by {adj}");
        let lib_adj = (model.x().inner(&lib(model.embed(&h))?, &f) - model.y().inner(&h, &lib(model.cond_expectation(&f))?)).norm();
        ensure!(lib_adj <= tol, "instance {inst}: library adjointness off by {lib_adj}");

        let ones = vec![Complex64::new(1.0, 0.0); model.ny()];
        let tower = (Oracle::inner(o.nu(), &o.cond(&f), &ones) - Oracle::inner(o.mu(), &f, &vec![Complex64::new(1.0, 0.0); model.nx()])).norm();
        ensure!(tower <= tol, "instance {inst}: ∫𝔼_Y f ≠ ∫f");
        let rn = lib(model.rel_norm(&f))?;
        let int_sq: f64 = rn.values().iter().zip(o.nu()).map(|(v, w)| v * v * w).sum();
        let l2_sq: f64 = f.iter().zip(o.mu()).map(|(v, w)| v.norm_sqr() * w).sum();
        ensure!((int_sq - l2_sq).abs() <= tol, "instance {inst}: ∫|f|_Y² ≠ ‖f‖²");
        worst = worst.max(adj).max(tower).max((int_sq - l2_sq).abs());

        let ip = o.rel_inner(&f, &g);
        ensure!(cdiff(lib(model.rel_inner(&f, &g))?.values(), &ip) <= 1e-12, "instance {inst}: ⟨f,g⟩_Y mismatch");
        for t in 0..model.group_len() {
            let tau = lib(model.tau(t))?;
            let sigma = lib(model.sigma(t))?;
            for x in 0..model.nx() {
                ensure!(model.factor()[tau.as_slice()[x]] == sigma.as_slice()[model.factor()[x]], "factor map does not intertwine");
            }
            let tf = Oracle::push(tau.as_slice(), &f);
            let tg = Oracle::push(tau.as_slice(), &g);
            ensure!(cdiff(&lib(model.koopman(t, &f))?, &tf) <= 1e-15, "instance {inst}: Koopman mismatch");
            let lhs = o.rel_inner(&tf, &tg);
            let rhs = Oracle::push(sigma.as_slice(), &ip);
            let e = cdiff(&lhs, &rhs);
            ensure!(e <= tol, "instance {inst}, t={t}: relative isometry off by {e}");
            worst = worst.max(e);
        }
        elements += model.group_len();
    }
    Ok(format!("200 extensions, {elements} group elements, max error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 7. structure theorem cross-check

fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn check_model(model: &ExtensionModel, rng: &mut Rng64, label: &str) -> Result<f64, String> {
    let eps_grid = [0.5, 0.1, 0.01];
    let delta_grid = [0.25, 0.05];
    let rep = lib(theorem_cross_check(model, &eps_grid, &delta_grid, TOL))?;
    let dist = rep.subspace_distances.max();
    ensure!(dist <= 1e-7, "{label}: projector distance {dist}");
    ensure!(rep.corollary.iter().all(|&c| c), "{label}: corollary conditions {:?}", rep.corollary);
    ensure!(rep.weakly_mixing_dim == 0 && rep.note.contains("weakly mixing"), "{label}: degeneracy not flagged");
    ensure!(rep.verdict, "{label}: report verdict false");

    // the Kronecker projector must be the identity on L²(X)
    let kron = lib(kronecker_subspace(model, TOL))?;
    let p = &kron.projector;
    let n = model.nx();
    ensure!(p.nrows() == n && p.ncols() == n, "{label}: projector shape");
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            off = off.max((p[(i, j)] - Complex64::new(id, 0.0)).norm());
        }
    }
    ensure!(off <= 1e-7, "{label}: Kronecker projector differs from the identity by {off}");

    let (f, g) = (random_fn(rng, n), random_fn(rng, n));
    let h = random_fn(rng, model.ny());
    let lambda = random_in_disc(rng, 2.0);
    let closure = lib(ap_module_closure(model, &f, &g, lambda, &h, 0.3, TOL))?;
    ensure!(closure.all(), "{label}: AP closure {:?}", closure);
    Ok(dist)
}

fn criterion_cross_check() -> Outcome {
    let mut rng = Rng64::seed_from_u64(7);
    let mut worst = 0.0f64;
    let valid = ["identity.json", "z4_over_z2.json", "skew_z3.json"];
    for name in valid {
        let ext = lib(parse_extension(&fixture(name)))?;
        let model = lib(ext.analyze(1000, TOL))?;
        worst = worst.max(check_model(&model, &mut rng, name)?);
    }
    for name in ["bad_weights.json", "not_intertwining.json"] {
        let rejected = match parse_extension(&fixture(name)) {
            Err(_) => true,
            Ok(ext) => ext.analyze(1000, TOL).is_err(),
        };
        ensure!(rejected, "{name}: invalid fixture accepted");
    }
    let mut orders = 0;
    for inst in 0..50 {
        let model = random_model(&mut rng, 12, 1000, 1e-12);
        ensure!(model.nx() <= 12 && model.group_len() <= 1000, "instance {inst}: out of range");
        orders = orders.max(model.group_len());
        worst = worst.max(check_model(&model, &mut rng, &format!("random {inst}"))?);
    }
    Ok(format!("{} fixtures + 50 random (largest closure {orders}), max projector distance {worst:.1e}", valid.len()))
}

// ---------------------------------------------------------------------------
// 8. Egoroff localization

fn criterion_egoroff() -> Outcome {
    let big_n = 16;
    let mut out = Vec::new();
    for (delta, expect_m) in [(0.25, 2usize), (0.05, 5)] {
        let demo = lib(egoroff_demo(big_n, delta, TOL))?;
        let m = demo.m;
        ensure!(m >= 1, "δ={delta}: empty set");
        let prefix: Vec<bool> = (0..=big_n).map(|w| w < m).collect();
        ensure!(demo.set.mask() == prefix.as_slice(), "δ={delta}: A is not {{1..{m}}}");
        ensure!(0.5f64.powi(m as i32) <= delta, "δ={delta}: 2^-{m} exceeds δ");
        // smallest admissible prefix
        ensure!(m == expect_m && 0.5f64.powi(m as i32 - 1) > delta, "δ={delta}: m={m}, expected {expect_m}");
        let excluded: f64 = (m + 1..=big_n).map(|k| 0.5f64.powi(k as i32)).sum::<f64>() + 0.5f64.powi(big_n as i32);
        ensure!((excluded - demo.excluded_mass).abs() <= 1e-12 && excluded <= delta, "δ={delta}: excluded mass");

        let ce = lib(build_counterexample(big_n))?;
        let a = Idempotent::new(prefix);
        let local_m = lib(ce.m.map(|x| x.restrict(&a).unwrap()))?;
        let local_f = lib(ce.net(m).map(|y| y.restrict(&a).unwrap()))?;
        let d = oracle_defect(&local_m, &local_f);
        ensure!(d.iter().all(|&v| v <= TOL), "δ={delta}: localized defect {:?}", d);
        ensure!(demo.defect_on_set <= TOL, "δ={delta}: reported defect {}", demo.defect_on_set);
        let u = lib(is_utob(&local_m, 1e-6, TOL))?;
        ensure!(u.verdict, "δ={delta}: localized family not UTOB");
        out.push(format!("δ={delta} → A={{1..{m}}}"));
    }
    Ok(out.join(", "))
}

// ---------------------------------------------------------------------------

fn main() {
    type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("counterexample bounds", Some(Duration::from_secs(5)), criterion_counterexample),
        ("zonotope equivalence", Some(Duration::from_secs(60)), criterion_zonotope),
        ("Heine–Borel nets", Some(Duration::from_secs(30)), criterion_heine_borel),
        ("defect lemma properties", Some(Duration::from_secs(30)), criterion_lemma),
        ("mixings and cyclic compactness", Some(Duration::from_secs(30)), criterion_cyclic),
        ("extension identities", None, criterion_extension),
        ("structure theorem cross-check", Some(Duration::from_secs(120)), criterion_cross_check),
        ("Egoroff localization", None, criterion_egoroff),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > *l => Err(format!("runtime {:.2}s exceeds {}s", elapsed.as_secs_f64(), l.as_secs())),
            (o, _) => o,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{}] {name} ({:.2}s): {detail}", k + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
