use std::fmt::Write as _;
use std::path::Path;

use ordbound::io::{extension_json, parse_extension, parse_set_problem, set_problem_json, SetProblem};
use ordbound::lns::{defect, is_utob, zonotope_distance, FiniteSet, SolverOptions, Zonotope};
use ordbound::mixing::{cyclic_witness, verify_cyclic};
use ordbound::mps::{delta, validate_extension, ExtensionModel};
use ordbound::relstruct::{kronecker_subspace, theorem_cross_check};
use ordbound::selftest::{run_selftest, SelftestConfig};
use ordbound::seqmodel::{build_counterexample, defect_table, defect_table_csv, egoroff_demo, verify_not_utob, verify_tob_bound};
use ordbound::Error;
use serde_json::{json, Value};

use crate::RunConfig;

/// A finished command: the JSON result plus its text and CSV renderings.
pub struct Output {
    pub result: Value,
    pub input: Option<Value>,
    pub text: String,
    pub csv: String,
    pub code: u8,
}

pub struct Failure {
    pub code: u8,
    pub message: String,
    /// Partial results worth printing alongside the error.
    pub report: Option<Output>,
}

pub type CmdResult = Result<Output, Failure>;

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Schema { .. }
        | Error::InvalidExtension(_)
        | Error::Argument(_)
        | Error::Dimension { .. }
        | Error::Precondition(_)
        | Error::Infeasible(_)
        | Error::Construction(_) => 2,
        Error::CapExceeded { .. } | Error::SizeCap { .. } => 3,
        Error::IterationLimit { .. } => 4,
        Error::IncompleteCover { .. } | Error::UnknownElement(_) | Error::Internal(_) => 1,
    }
}

fn failure(e: Error, path: Option<&Path>) -> Failure {
    let message = match (&e, path) {
        (Error::Schema { line, column, message }, Some(p)) => {
            let short = message.split(" at line ").next().unwrap_or(message);
            format!("{}:{line}:{column}: {short}", p.display())
        }
        _ => e.to_string(),
    };
    Failure { code: exit_code(&e), message, report: None }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
        report: None,
    })
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(",")
}

fn load_set(path: &Path) -> Result<(SetProblem, Value), Failure> {
    let p = parse_set_problem(&read(path)?).map_err(|e| failure(e, Some(path)))?;
    let echo = serde_json::from_str(&set_problem_json(&p)).expect("round trip");
    Ok((p, echo))
}

fn labels(set: &FiniteSet) -> Vec<String> {
    set.space().base().labels().to_vec()
}

// ---------------------------------------------------------------------------

fn cond_table(model: &ExtensionModel) -> ordbound::Result<Vec<Vec<f64>>> {
    let nx = model.nx();
    let mut rows = vec![vec![0.0; nx]; model.ny()];
    for x in 0..nx {
        let col = model.cond_expectation(&delta(nx, x))?;
        for (y, v) in col.iter().enumerate() {
            rows[y][x] = v.re;
        }
    }
    Ok(rows)
}

pub fn analyze(cfg: &RunConfig, path: &Path) -> CmdResult {
    let ext = parse_extension(&read(path)?).map_err(|e| failure(e, Some(path)))?;
    let input: Value = serde_json::from_str(&extension_json(&ext)).expect("round trip");
    let validation = validate_extension(&ext, cfg.tol);
    if !validation.valid {
        let mut text = String::from("validation: FAILED\n");
        let mut csv = String::from("kind,detail\n");
        for v in &validation.violations {
            let _ = writeln!(text, "  {}: {}", v.kind, v.detail);
            let _ = writeln!(csv, "{},\"{}\"", v.kind, v.detail.replace('"', "'"));
        }
        return Err(Failure {
            code: 2,
            message: format!("invalid extension: {}", validation.summary()),
            report: Some(Output { result: json!({ "validation": validation }), input: Some(input), text, csv, code: 2 }),
        });
    }
    let cap = cfg.cap.unwrap_or(ordbound::mps::DEFAULT_GROUP_CAP);
    let model = ext.analyze(cap, cfg.tol).map_err(|e| failure(e, Some(path)))?;
    let eps = &cfg.eps;
    let deltas = cfg.delta.clone().unwrap_or_default();

    let (kron, cross, table) = std::thread::scope(|s| {
        let kron = s.spawn(|| kronecker_subspace(&model, cfg.tol));
        let cross = s.spawn(|| theorem_cross_check(&model, eps, &deltas, cfg.tol));
        let table = cond_table(&model);
        (kron.join().expect("worker"), cross.join().expect("worker"), table)
    });
    let kron = kron.map_err(|e| failure(e, None))?;
    let cross = cross.map_err(|e| failure(e, None))?;
    let table = table.map_err(|e| failure(e, None))?;

    let xl = model.x().points().labels().to_vec();
    let yl = model.y().points().labels().to_vec();
    let discrete = kron.dim == model.nx();
    let result = json!({
        "validation": validation,
        "nx": model.nx(),
        "ny": model.ny(),
        "group_order": model.group_len(),
        "conditional_expectation": { "rows": yl, "columns": xl, "values": table },
        "ap_verdicts": xl.iter().zip(&cross.ap_verdicts).map(|(l, v)| json!({ "point": l, "ap": v })).collect::<Vec<_>>(),
        "kronecker_dim": kron.dim,
        "discrete_spectrum": discrete,
        "commutator": kron.commutator,
        "cross_check": cross,
    });

    let mut text = String::new();
    let _ = writeln!(text, "extension: |X| = {}, |Y| = {}, group order {}", model.nx(), model.ny(), model.group_len());
    let _ = writeln!(text, "validation: ok");
    let _ = writeln!(text, "conditional expectation E_Y[delta_x](y):");
    let _ = writeln!(text, "  {:>8} {}", "y\\x", xl.iter().map(|l| format!("{l:>9}")).collect::<String>());
    for (l, row) in yl.iter().zip(&table) {
        let _ = writeln!(text, "  {l:>8} {}", row.iter().map(|v| format!("{v:>9.4}")).collect::<String>());
    }
    let ap: Vec<String> = xl.iter().zip(&cross.ap_verdicts).map(|(l, v)| format!("{l}:{}", if *v { "ap" } else { "no" })).collect();
    let _ = writeln!(text, "AP verdicts: {}", ap.join(" "));
    let _ = writeln!(text, "kronecker dimension: {} of {}", kron.dim, model.nx());
    let _ = writeln!(text, "discrete spectrum: {discrete}");
    let d = &cross.subspace_distances;
    let _ = writeln!(text, "subspace distances: fm/ap {:.2e}  fm/tob {:.2e}  ap/tob {:.2e}", d.fm_ap, d.fm_tob, d.ap_tob);
    let _ = writeln!(text, "corollary conditions: {:?}", cross.corollary);
    let _ = writeln!(text, "weakly mixing dimension: {} ({})", cross.weakly_mixing_dim, cross.note);
    let _ = writeln!(text, "verdict: {}", if cross.verdict { "pass" } else { "FAIL" });

    let mut csv = format!("y,{}\n", xl.join(","));
    for (l, row) in yl.iter().zip(&table) {
        let _ = writeln!(csv, "{l},{}", fmt_row(row));
    }
    Ok(Output { result, input: Some(input), text, csv, code: if cross.verdict { 0 } else { 1 } })
}

// ---------------------------------------------------------------------------

pub fn tob(cfg: &RunConfig, path: &Path) -> CmdResult {
    let (p, input) = load_set(path)?;
    let set = &p.set;
    let reports = std::thread::scope(|s| {
        let handles: Vec<_> = cfg.eps.iter().map(|&e| s.spawn(move || is_utob(set, e, cfg.tol))).collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect::<Result<Vec<_>, _>>()
    })
    .map_err(|e| failure(e, None))?;
    let witness = match &p.witness {
        Some(w) => Some(defect(set, w).map_err(|e| failure(e, None))?),
        None => None,
    };
    let names = labels(set);
    let levels: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "eps": r.eps,
                "verdict": r.verdict,
                "witness_size": r.witness_indices.len(),
                "witness_indices": r.witness_indices,
                "defect": r.defect,
            })
        })
        .collect();
    let (order, radii) = reports.first().map(|r| (r.order.clone(), r.radii.clone())).unwrap_or_default();
    let result = json!({
        "points": names,
        "size": set.len(),
        "greedy": { "order": order, "radii": radii },
        "levels": levels,
        "witness_defect": witness.as_ref().map(|w| json!({ "value": w.value, "worst": w.worst })),
    });

    let mut text = format!("set of {} elements over {} points\n", set.len(), names.len());
    let mut csv = format!("row,{}\n", names.join(","));
    if let Some(w) = &witness {
        let _ = writeln!(text, "defect against the given witness: [{}]", fmt_row(w.value.values()));
        let _ = writeln!(csv, "witness,{}", fmt_row(w.value.values()));
    }
    for r in &reports {
        let _ = writeln!(
            text,
            "eps {:<8} utob {:<5} witness size {:<3} defect [{}]",
            r.eps,
            r.verdict,
            r.witness_indices.len(),
            fmt_row(r.defect.values())
        );
        let _ = writeln!(csv, "eps={},{}", r.eps, fmt_row(r.defect.values()));
    }
    Ok(Output { result, input: Some(input), text, csv, code: 0 })
}

// ---------------------------------------------------------------------------

pub fn zonotope(cfg: &RunConfig, path: &Path) -> CmdResult {
    let (p, input) = load_set(path)?;
    let gens = p.generators.clone().ok_or_else(|| Failure {
        code: 2,
        message: format!("{}: the zonotope command needs \"generators\"", path.display()),
        report: None,
    })?;
    let opts = SolverOptions { tol: cfg.tol, max_iter: cfg.max_iter.unwrap_or(20_000) };
    let z = Zonotope::new(gens);
    let mut rows = Vec::new();
    let mut limit_hit = false;
    for x in p.set.elements() {
        match zonotope_distance(x, &z, opts) {
            Ok(sol) => rows.push((sol.distance.into_values(), sol.gap_bound.into_values(), sol.iterations, true)),
            Err(Error::IterationLimit { iterations, gap, best }) => {
                limit_hit = true;
                let n = best.len();
                rows.push((best.into_values(), vec![gap; n], vec![iterations; n], false));
            }
            Err(e) => return Err(failure(e, None)),
        }
    }
    let levels: Vec<Value> = cfg
        .eps
        .iter()
        .map(|&e| {
            let passes: Vec<bool> = rows.iter().map(|r| r.0.iter().all(|&d| d <= e + cfg.tol)).collect();
            json!({ "eps": e, "verdict": passes.iter().all(|&b| b), "passes": passes })
        })
        .collect();
    let result = json!({
        "points": labels(&p.set),
        "elements": rows.iter().map(|r| json!({
            "distance": r.0, "gap_bound": r.1, "iterations": r.2, "converged": r.3,
        })).collect::<Vec<_>>(),
        "levels": levels,
    });
    let mut text = String::new();
    let mut csv = format!("element,{},converged\n", labels(&p.set).join(","));
    for (i, r) in rows.iter().enumerate() {
        let gap = r.1.iter().cloned().fold(0.0, f64::max);
        let _ = writeln!(text, "x{i}: distance [{}] gap <= {gap:.1e}{}", fmt_row(&r.0), if r.3 { "" } else { " (iteration limit)" });
        let _ = writeln!(csv, "{i},{},{}", fmt_row(&r.0), r.3);
    }
    for l in &levels {
        let _ = writeln!(text, "eps {}: CP {}", l["eps"], if l["verdict"] == true { "holds" } else { "fails" });
    }
    let out = Output { result, input: Some(input), text, csv, code: 0 };
    if limit_hit {
        return Err(Failure {
            code: 4,
            message: "solver reached its iteration limit; best-found distances are reported".into(),
            report: Some(Output { code: 4, ..out }),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------

pub fn cyclic(cfg: &RunConfig, path: &Path) -> CmdResult {
    let (p, input) = load_set(path)?;
    let bound = p.set.sup_norm_bound().sup_norm();
    let r = cfg.radius.or(p.radius).unwrap_or(if bound > 0.0 { bound } else { 1.0 });
    if bound > r + cfg.tol {
        return Err(Failure {
            code: 2,
            message: format!("the set leaves B[0; {r}] (sup-norm {bound})"),
            report: None,
        });
    }
    let mut levels = Vec::new();
    let mut text = format!("radius {r}\n");
    let mut csv = String::from("eps,part,cardinality,points\n");
    let mut ok = true;
    for &e in &cfg.eps {
        let w = cyclic_witness(&p.set, e, r, cfg.tol).map_err(|err| failure(err, None))?;
        let v = verify_cyclic(&p.set, e, &w, cfg.tol).map_err(|err| failure(err, None))?;
        ok &= v.verdict;
        let cards: Vec<String> = w.parts.iter().map(|q| q.cardinality.to_string()).collect();
        let _ = writeln!(
            text,
            "eps {e}: {} parts (cardinalities {}), {}",
            w.parts.len(),
            cards.join(" "),
            if v.verdict { "verified" } else { "REJECTED" }
        );
        for (k, q) in w.parts.iter().enumerate() {
            let pts: Vec<String> = q.region.points().map(|i| i.to_string()).collect();
            let _ = writeln!(csv, "{e},{k},{},{}", q.cardinality, pts.join(" "));
        }
        levels.push(json!({ "eps": e, "witness": w, "verification": v }));
    }
    Ok(Output { result: json!({ "radius": r, "levels": levels }), input: Some(input), text, csv, code: if ok { 0 } else { 1 } })
}

// ---------------------------------------------------------------------------

pub fn counterexample(cfg: &RunConfig) -> CmdResult {
    let n = cfg.n.unwrap_or(8);
    let ce = build_counterexample(n).map_err(|e| failure(e, None))?;
    let csv = defect_table_csv(&ce).map_err(|e| failure(e, None))?;
    let table = defect_table(&ce).map_err(|e| failure(e, None))?;
    let bounds = (1..=n).map(|k| verify_tob_bound(&ce, k, cfg.tol)).collect::<Result<Vec<_>, _>>().map_err(|e| failure(e, None))?;
    let mut separation = Vec::new();
    for k in 1..n.saturating_sub(1) {
        let w = verify_not_utob(&ce.seq, ce.net(k)).map_err(|e| failure(e, None))?;
        separation.push(json!({ "net": k, "size": ce.net(k).len(), "witness": w }));
    }
    let mut egoroff = Vec::new();
    for &d in cfg.delta.as_deref().unwrap_or(&[]) {
        egoroff.push(match egoroff_demo(n, d, cfg.tol) {
            Ok(demo) => json!({
                "delta": d, "m": demo.m, "excluded_mass": demo.excluded_mass,
                "defect_on_set": demo.defect_on_set, "thresholds": demo.thresholds,
            }),
            Err(Error::Infeasible(msg)) => json!({ "delta": d, "infeasible": msg }),
            Err(e) => return Err(failure(e, None)),
        });
    }
    let ok = bounds.iter().all(|b| b.verdict);
    let mut text = format!("sequence-space counterexample, N = {n}\n{csv}");
    for b in &bounds {
        let _ = writeln!(text, "net {:>3}: {}", b.n, if b.verdict { "zero on 1..n, at most sqrt 2 beyond" } else { "BOUND FAILS" });
    }
    for e in &egoroff {
        let _ = writeln!(text, "egoroff {e}");
    }
    let result = json!({
        "n": n,
        "table": table,
        "bounds": bounds,
        "separation": separation,
        "egoroff": egoroff,
    });
    Ok(Output { result, input: None, text, csv, code: if ok { 0 } else { 1 } })
}

// ---------------------------------------------------------------------------

pub fn selftest(cfg: &RunConfig) -> CmdResult {
    let st = SelftestConfig {
        seed: cfg.seed.unwrap_or(0),
        instances: cfg.instances.unwrap_or(50),
        tol: cfg.tol,
        inject_fault: cfg.inject_fault.unwrap_or(false),
    };
    let report = run_selftest(&st);
    let mut text = String::new();
    let mut csv = String::from("check,passed,instances,detail\n");
    for c in &report.checks {
        let _ = writeln!(
            text,
            "{} {:<32} {:>4} instances{}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.instances,
            if c.detail.is_empty() { String::new() } else { format!("  {}", c.detail) }
        );
        let _ = writeln!(csv, "{},{},{},\"{}\"", c.name, c.passed, c.instances, c.detail.replace('"', "'"));
    }
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    let _ = writeln!(text, "{}", if failed.is_empty() { "selftest passed".to_string() } else { format!("selftest FAILED: {}", failed.join(", ")) });
    Ok(Output { result: to_value(&report), input: None, text, csv, code: if report.passed { 0 } else { 1 } })
}
