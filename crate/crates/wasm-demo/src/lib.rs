//! Browser demo API: a small set of correlator computations that return
//! JSON strings, sized so every call stays interactive on one thread.
//!
//! The computation functions are plain Rust and are tested natively; the
//! `wasm-bindgen` exports wrapping them exist only on the `wasm32` target.
//! The static page in `www/` calls the exports and plots the arrays.

use aotoc::algebra::AlgebraHandle;
use aotoc::aotoc::aotoc;
use aotoc::channel::{propagate, Channel};
use aotoc::closedforms::{
    build_stabilizer, dephasing_chi, example1, example2, stabilizer_formula,
};
use aotoc::models::{
    product_state, pxp_model, run_series, time_grid, ModelKind, ProductPattern, SpinChainSpec,
};
use aotoc::validate::chain_generators;
use aotoc::{CMat, Error, Result};
use serde::Serialize;

/// Hard cap on curve length so a stray Δt cannot freeze the page.
const MAX_POINTS: usize = 600;

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Numerical(format!("serialization: {e}")))
}

fn bounded_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    let times = time_grid(t_max, dt)?;
    if times.len() > MAX_POINTS {
        return Err(Error::InvalidInput(format!(
            "grid of {} points exceeds the interactive limit of {MAX_POINTS}; raise dt or lower t_max",
            times.len()
        )));
    }
    Ok(times)
}

#[derive(Serialize)]
struct AnalyticCurve {
    times: Vec<f64>,
    numerical: Vec<f64>,
    exact: Vec<f64>,
    worst_dev: f64,
}

/// Numerical correlator of the computational-basis diagonal algebra under
/// one of the two analytic semigroup families, against its closed form.
/// `which` selects the family (1 = Hadamard mixing, 2 = damped oscillation,
/// where `rate` is the dephasing strength); `n` counts qubits.
pub fn analytic_curve(which: usize, n: usize, rate: f64, t_max: f64, dt: f64) -> Result<String> {
    if which != 1 && which != 2 {
        return Err(Error::InvalidInput(format!(
            "family must be 1 or 2, got {which}"
        )));
    }
    if n == 0 || n > 3 {
        return Err(Error::InvalidInput(format!(
            "qubit count must lie in 1..=3 for the demo, got {n}"
        )));
    }
    let times = bounded_grid(t_max, dt)?;
    let d = 1usize << n;
    let alg = AlgebraHandle::maximal_abelian(&CMat::identity(d, d))?;
    let (spec, _) = match which {
        1 => example1(n, 0.0)?,
        _ => example2(n, rate, 0.0)?,
    };
    let step_len = times.get(1).copied().unwrap_or(0.0);
    let step = if step_len > 0.0 {
        propagate(&spec, step_len)?
    } else {
        Channel::identity(d)
    };
    let mut e = Channel::identity(d);
    let mut numerical = Vec::with_capacity(times.len());
    let mut exact = Vec::with_capacity(times.len());
    let mut worst_dev = 0.0f64;
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            e = step.compose(&e)?;
        }
        let closed = match which {
            1 => example1(n, t)?.1,
            _ => example2(n, rate, t)?.1,
        };
        let g = aotoc(&alg, &e)?.g;
        worst_dev = worst_dev.max((g - closed).abs());
        numerical.push(g);
        exact.push(closed);
    }
    to_json(&AnalyticCurve {
        times,
        numerical,
        exact,
        worst_dev,
    })
}

#[derive(Serialize)]
struct SectorTable {
    chis: Vec<usize>,
    numerical: Vec<f64>,
    formula: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
    bound: f64,
}

/// Correlator of an (n, k) nearest-neighbour stabilizer algebra under
/// sector dephasing that keeps `chi` coherent directions, swept over every
/// `chi`, next to the closed formula.
pub fn sector_dephasing_table(n: usize, k: usize) -> Result<String> {
    if n == 0 || n > 5 {
        return Err(Error::InvalidInput(format!(
            "qubit count must lie in 1..=5 for the demo, got {n}"
        )));
    }
    if k >= n {
        return Err(Error::InvalidInput(format!(
            "need k < n, got k = {k}, n = {n}"
        )));
    }
    let group = build_stabilizer(n, k, &chain_generators(n, k))?;
    let alg = group.algebra()?;
    let bound = alg.dims_and_bounds().bound;
    let mut table = SectorTable {
        chis: Vec::new(),
        numerical: Vec::new(),
        formula: Vec::new(),
        g1: Vec::new(),
        g2: Vec::new(),
        bound,
    };
    for chi in 0..=(1usize << k) {
        let e = dephasing_chi(&group, chi, None)?;
        let r = aotoc(&alg, &e)?;
        table.chis.push(chi);
        table.numerical.push(r.g);
        table.formula.push(stabilizer_formula(n, k, chi)?);
        table.g1.push(r.g1);
        table.g2.push(r.g2);
    }
    to_json(&table)
}

#[derive(Serialize)]
struct ChainSeries {
    times: Vec<f64>,
    g: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
    bound: f64,
    dim: usize,
}

/// Correlator time series of the blockaded ring for the projector algebra of
/// a product state (`pattern` is "neel" or "ferro"), with per-site dephasing
/// rate `alpha` and driving rate `gamma`.
pub fn chain_series(
    n: usize,
    alpha: f64,
    gamma: f64,
    pattern: &str,
    t_max: f64,
    dt: f64,
) -> Result<String> {
    if !(3..=8).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "site count must lie in 3..=8 for the demo, got {n}"
        )));
    }
    let pattern = match pattern {
        "neel" => ProductPattern::Neel,
        "ferro" => ProductPattern::Ferro,
        other => {
            return Err(Error::InvalidInput(format!(
                "pattern must be neel|ferro, got '{other}'"
            )))
        }
    };
    let times = bounded_grid(t_max, dt)?;
    let spec = SpinChainSpec::new(n, 1.0, alpha, gamma, ModelKind::Pxp)?;
    let model = pxp_model(&spec)?;
    let psi = product_state(n, pattern)?;
    let alg = AlgebraHandle::projector_state(&psi)?;
    let series = run_series(&model, &alg, &times)?;
    let out = ChainSeries {
        times: series.times.clone(),
        g: series.rows.iter().map(|r| r.g).collect(),
        g1: series.rows.iter().map(|r| r.g1).collect(),
        g2: series.rows.iter().map(|r| r.g2).collect(),
        bound: series.rows.first().map(|r| r.bound).unwrap_or(0.0),
        dim: alg.dim(),
    };
    to_json(&out)
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn as_js(r: aotoc::Result<String>) -> Result<String, JsValue> {
        r.map_err(|e| JsValue::from_str(&e.to_string()))
    }

    #[wasm_bindgen]
    pub fn analytic_curve(
        which: usize,
        n: usize,
        rate: f64,
        t_max: f64,
        dt: f64,
    ) -> Result<String, JsValue> {
        as_js(crate::analytic_curve(which, n, rate, t_max, dt))
    }

    #[wasm_bindgen]
    pub fn sector_dephasing_table(n: usize, k: usize) -> Result<String, JsValue> {
        as_js(crate::sector_dephasing_table(n, k))
    }

    #[wasm_bindgen]
    pub fn chain_series(
        n: usize,
        alpha: f64,
        gamma: f64,
        pattern: &str,
        t_max: f64,
        dt: f64,
    ) -> Result<String, JsValue> {
        as_js(crate::chain_series(n, alpha, gamma, pattern, t_max, dt))
    }
}
