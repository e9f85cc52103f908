//! Browser bindings: the counterexample defect table, disc nets, and the
//! distance field of a planar zonotope.
//!
//! The plain functions return `Result<_, String>` and are testable natively;
//! the `#[wasm_bindgen]` wrappers only translate errors.

use ordbound::lns::{disc_net, zonotope_distance, FiberSpace, FiniteSet, ModuleVector, SolverOptions, Zonotope};
use ordbound::seqmodel::{build_counterexample, defect_table_csv};
use ordbound::Error;
use wasm_bindgen::prelude::*;

const MAX_NET_POINTS: usize = 200_000;
const MAX_RESOLUTION: usize = 256;

pub fn counterexample_csv(n: usize) -> Result<String, String> {
    if n > 64 {
        return Err(format!("N = {n} is too large for the page; use at most 64"));
    }
    let ce = build_counterexample(n).map_err(|e| e.to_string())?;
    defect_table_csv(&ce).map_err(|e| e.to_string())
}

/// Net points as interleaved `[re, im, re, im, …]`.
pub fn disc_net_points(c: f64, rho: f64) -> Result<Vec<f64>, String> {
    if !(c >= 0.0 && rho > 0.0) {
        return Err("need c ≥ 0 and a positive mesh".into());
    }
    let estimate = (c / rho + 2.0).powi(2) * 4.0;
    if estimate > MAX_NET_POINTS as f64 {
        return Err(format!("about {estimate:.0} points; increase the mesh"));
    }
    Ok(disc_net(c, rho).into_iter().flat_map(|z| [z.re, z.im]).collect())
}

/// Distances from the pixels of a `resolution²` grid over `[-extent, extent]²`
/// to the zonotope `{Σ λ_j y_j : |λ_j| ≤ 1}` of planar generators given as
/// `[x1, y1, x2, y2, …]`. Row-major, top row first.
///
/// Every pixel is a point of the base set, so a single solver call computes the
/// whole field as one lattice-valued distance.
pub fn zonotope_field(generators: &[f64], resolution: usize, extent: f64) -> Result<Vec<f64>, String> {
    if generators.is_empty() || generators.len() % 2 != 0 {
        return Err("generators must be a nonempty list of (x, y) pairs".into());
    }
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(format!("resolution must lie in 1..={MAX_RESOLUTION}"));
    }
    if !(extent > 0.0) {
        return Err("extent must be positive".into());
    }
    let n = resolution * resolution;
    let space = FiberSpace::uniform(n, 2).map_err(|e| e.to_string())?;
    let gens = generators
        .chunks(2)
        .map(|p| ModuleVector::from_real(vec![vec![p[0], p[1]]; n]))
        .collect();
    let z = Zonotope::new(FiniteSet::new(space, gens).map_err(|e| e.to_string())?);
    let step = 2.0 * extent / resolution as f64;
    let pixels: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (row, col) = (i / resolution, i % resolution);
            vec![-extent + (col as f64 + 0.5) * step, extent - (row as f64 + 0.5) * step]
        })
        .collect();
    let x = ModuleVector::from_real(pixels);
    match zonotope_distance(&x, &z, SolverOptions { tol: 1e-6, max_iter: 5_000 }) {
        Ok(sol) => Ok(sol.distance.into_values()),
        Err(Error::IterationLimit { best, .. }) => Ok(best.into_values()),
        Err(e) => Err(e.to_string()),
    }
}

#[wasm_bindgen(js_name = counterexampleCsv)]
pub fn counterexample_csv_js(n: usize) -> Result<String, JsError> {
    counterexample_csv(n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = discNet)]
pub fn disc_net_js(c: f64, rho: f64) -> Result<Vec<f64>, JsError> {
    disc_net_points(c, rho).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = zonotopeField)]
pub fn zonotope_field_js(generators: &[f64], resolution: usize, extent: f64) -> Result<Vec<f64>, JsError> {
    zonotope_field(generators, resolution, extent).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn version() -> String {
    ordbound::VERSION.to_string()
}
