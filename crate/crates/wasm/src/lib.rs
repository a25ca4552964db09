//! Browser demo bindings: three interactive views into the pipeline.
//!
//! 1. the rotation field of a single radial twist map,
//! 2. the lattice sample of its generating function,
//! 3. barcodes of a two-center composition — the fast sublevel reference
//!    and the full certified pipeline at a coarse mesh.

use gfbarcode::persistence::bottleneck;
use gfbarcode::pipeline::{compute_barcode, PieceSpec, RunConfig, RunOptions};
use gfbarcode::plot::render_svg;
use gfbarcode::radial::RadialProfile;
use gfbarcode::sublevel::autonomous_limit_barcode;
use wasm_bindgen::prelude::*;

fn err_to_js(e: gfbarcode::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Displacement field of the time-t flow on a square grid: flattened rows
/// [x, y, dx, dy] over grid×grid sample points in [-extent, extent]².
#[wasm_bindgen]
pub fn flow_field(
    t_max: f64,
    support: f64,
    cx: f64,
    cy: f64,
    t: f64,
    extent: f64,
    grid: u32,
) -> Result<Vec<f64>, JsValue> {
    let profile = RadialProfile::tent(t_max, support, [cx, cy]).map_err(err_to_js)?;
    let g = grid.max(2) as usize;
    let mut out = Vec::with_capacity(g * g * 4);
    for i in 0..g {
        for j in 0..g {
            let x = -extent + 2.0 * extent * (i as f64) / (g as f64 - 1.0);
            let y = -extent + 2.0 * extent * (j as f64) / (g as f64 - 1.0);
            let z = profile.eval_flow(t, [x, y]);
            out.extend_from_slice(&[x, y, z[0] - x, z[1] - y]);
        }
    }
    Ok(out)
}

/// Lattice sample of the generating function of one twist map, as JSON:
/// {mesh, sup_error, points: [[i, j, value], ...]}.
#[wasm_bindgen]
pub fn sample_surface(
    t_max: f64,
    support: f64,
    cx: f64,
    cy: f64,
    mesh: u32,
) -> Result<String, JsValue> {
    let profile = RadialProfile::tent(t_max, support, [cx, cy]).map_err(err_to_js)?;
    let e_tol = (1.0 / mesh.max(1) as f64).powi(4);
    let sample = profile
        .sample_generating_function(mesh.max(1), e_tol)
        .map_err(err_to_js)?;
    let points: Vec<serde_json::Value> = sample
        .values
        .iter()
        .map(|(&(i, j), &v)| serde_json::json!([i, j, v]))
        .collect();
    Ok(serde_json::json!({
        "mesh": sample.mesh,
        "sup_error": sample.sup_error,
        "points": points,
    })
    .to_string())
}

fn pair_config(a: f64, t_max: f64, mesh: u32) -> RunConfig {
    RunConfig {
        pieces: vec![
            PieceSpec::Tent {
                t_max,
                support: 0.5,
                center: [-a, 0.0],
            },
            PieceSpec::Tent {
                t_max,
                support: 0.5,
                center: [a, 0.0],
            },
        ],
        mesh,
        inverse_tolerance: Some(1e-12),
        n: 1,
        memory_cap: 6_000_000,
        t_bound: None,
        outputs: Default::default(),
        reference_barcode: None,
    }
}

/// Sublevel reference barcode of the two-center composition (the autonomous
/// limit), rendered as SVG.
#[wasm_bindgen]
pub fn reference_barcode_svg(a: f64, t_max: f64, mesh: u32) -> Result<String, JsValue> {
    let profiles = vec![
        RadialProfile::tent(t_max, 0.5, [-a, 0.0]).map_err(err_to_js)?,
        RadialProfile::tent(t_max, 0.5, [a, 0.0]).map_err(err_to_js)?,
    ];
    let bc = autonomous_limit_barcode(&profiles, mesh.max(8)).map_err(err_to_js)?;
    Ok(render_svg(&bc))
}

/// Full certified pipeline on the two-center composition at a coarse mesh.
/// Returns JSON {svg, cells, budget, distance_to_reference, bars}.
#[wasm_bindgen]
pub fn pipeline_barcode(a: f64, t_max: f64, mesh: u32) -> Result<String, JsValue> {
    let config = pair_config(a, t_max, mesh.clamp(1, 4));
    let out = compute_barcode(&config, &RunOptions::default()).map_err(err_to_js)?;
    let reference = autonomous_limit_barcode(
        &config
            .pieces
            .iter()
            .map(|p| p.build().unwrap())
            .collect::<Vec<_>>(),
        96,
    )
    .map_err(err_to_js)?;
    let dist = bottleneck(&out.barcode, &reference);
    let bars: Vec<serde_json::Value> = out
        .barcode
        .bars
        .iter()
        .map(|b| {
            serde_json::json!({
                "degree": b.degree,
                "birth": b.birth,
                "death": b.death,
                "multiplicity": b.multiplicity,
            })
        })
        .collect();
    Ok(serde_json::json!({
        "svg": render_svg(&out.barcode),
        "cells": out.report.total_cells,
        "budget": out.error_budget,
        "distance_to_reference": dist,
        "bars": bars,
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_field_shape() {
        let f = flow_field(1e-3, 0.5, 0.0, 0.0, 1.0, 1.5, 8).unwrap();
        assert_eq!(f.len(), 8 * 8 * 4);
    }

    #[test]
    fn pipeline_demo_runs_at_tiny_mesh() {
        let json = pipeline_barcode(0.75, 6.283185307179586e-4, 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
        assert!(v["distance_to_reference"].as_f64().unwrap() <= v["budget"].as_f64().unwrap());
    }
}
