//! End-to-end pipeline: declarative run configuration, stage orchestration,
//! report and outputs.
//!
//! sample → compose → radii → complexes → filtration → reduction → barcode,
//! with the certified bottleneck budget computed alongside and optional
//! comparison against a reference barcode.

use crate::cubical::{build_base_pair, build_fiber_pair, estimate_cells, product_boundaries};
use crate::error::Error;
use crate::filtration::filter_complex;
use crate::gfqi::GfqiSpec;
use crate::persistence::{bottleneck, error_budget, reduce_barcode, Barcode};
use crate::plot::plot_barcode;
use crate::radial::{GenFunSample, RadialProfile};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

/// One piece of the composition, as configured.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceSpec {
    /// Parametric tent profile: max |h'| = t_max on [0, support].
    Tent {
        t_max: f64,
        support: f64,
        center: [f64; 2],
    },
    /// Explicit piecewise-cubic profile.
    Knots {
        knots: Vec<f64>,
        coeffs: Vec<[f64; 4]>,
        center: [f64; 2],
        deriv_bound: f64,
        second_deriv_bound: f64,
    },
}

impl PieceSpec {
    pub fn build(&self) -> Result<RadialProfile, Error> {
        match self {
            PieceSpec::Tent {
                t_max,
                support,
                center,
            } => RadialProfile::tent(*t_max, *support, *center),
            PieceSpec::Knots {
                knots,
                coeffs,
                center,
                deriv_bound,
                second_deriv_bound,
            } => RadialProfile::new(
                knots.clone(),
                coeffs.clone(),
                *center,
                *deriv_bound,
                *second_deriv_bound,
            ),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default)]
    pub barcode: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
    #[serde(default)]
    pub report: Option<PathBuf>,
}

fn default_n() -> usize {
    1
}

fn default_memory_cap() -> u64 {
    50_000_000
}

/// Declarative run configuration (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pieces: Vec<PieceSpec>,
    pub mesh: u32,
    /// E: squared residual tolerance of the inverse solve; default (1/m)⁴.
    #[serde(default)]
    pub inverse_tolerance: Option<f64>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_memory_cap")]
    pub memory_cap: u64,
    /// Optional override for the C⁰ bound T (must dominate every piece);
    /// required when all pieces are flat.
    #[serde(default)]
    pub t_bound: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub reference_barcode: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<RunConfig, Error> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }
}

/// Command-line overrides applied on top of the configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub mesh: Option<u32>,
    pub memory_cap: Option<u64>,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub mesh: u32,
    pub inverse_tolerance: f64,
    pub piece_count: usize,
    pub t_bound: f64,
    pub t_prime_bound: f64,
    pub r_bound: f64,
    pub m_const: f64,
    pub c0: f64,
    pub rf_minus: f64,
    pub rf_plus: f64,
    pub rf: f64,
    pub rb: f64,
    pub quad_index: usize,
    pub fiber_dim: usize,
    pub gradient_bound: f64,
    pub piece_sup_errors: Vec<f64>,
    pub piece_minima: Vec<f64>,
    pub base_cells: Vec<usize>,
    pub fiber_cells: Vec<usize>,
    pub cells_per_degree: Vec<u64>,
    pub total_cells: u64,
    pub error_budget: f64,
    pub infinite_bars: usize,
    pub finite_bars: usize,
    pub timings_ms: Vec<(String, u128)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bottleneck_to_reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_budget: Option<bool>,
}

pub struct PipelineOutput {
    pub barcode: Barcode,
    pub error_budget: f64,
    pub report: Report,
}

struct Derived {
    profiles: Vec<RadialProfile>,
    t_bound: f64,
    t_prime: f64,
    r_bound: f64,
    mesh: u32,
    e_tol: f64,
}

fn derive_inputs(config: &RunConfig, opts: &RunOptions) -> Result<Derived, Error> {
    if config.n != 1 {
        return Err(Error::ConfigInvalid(
            "the radial front end samples planar maps; n must be 1".into(),
        ));
    }
    if config.pieces.len() < 2 {
        return Err(Error::ConfigInvalid("need at least two pieces".into()));
    }
    let mesh = opts.mesh.unwrap_or(config.mesh);
    if mesh < 1 {
        return Err(Error::ConfigInvalid("mesh must be at least 1".into()));
    }
    let profiles: Vec<RadialProfile> = config
        .pieces
        .iter()
        .map(PieceSpec::build)
        .collect::<Result<_, _>>()?;
    let mut t_bound = config.t_bound.unwrap_or(0.0);
    let mut t_prime = 0.0f64;
    let mut r_bound = 0.0f64;
    for p in &profiles {
        t_bound = t_bound.max(p.deriv_bound());
        t_prime = t_prime.max(p.second_deriv_bound());
        let c = p.center();
        r_bound = r_bound.max((c[0] * c[0] + c[1] * c[1]).sqrt() + p.support_radius());
    }
    if !(t_bound > 0.0) {
        return Err(Error::ConfigInvalid(
            "all pieces are flat; set t_bound to a positive C⁰ bound".into(),
        ));
    }
    // Input gate: max_j {√(2r_j)(|c_j| + √(2r_j))·T' + T} < 1/2.
    for (idx, p) in profiles.iter().enumerate() {
        let c = p.center();
        let rad = p.support_radius();
        let gate = rad * ((c[0] * c[0] + c[1] * c[1]).sqrt() + rad) * t_prime + t_bound;
        if gate >= 0.5 {
            return Err(Error::ConfigInvalid(format!(
                "piece {idx} violates the C¹ smallness condition: {gate:.6} ≥ 1/2"
            )));
        }
    }
    let e_tol = config
        .inverse_tolerance
        .unwrap_or_else(|| (1.0 / mesh as f64).powi(4));
    if !(e_tol > 0.0) {
        return Err(Error::ConfigInvalid(
            "inverse_tolerance must be positive".into(),
        ));
    }
    Ok(Derived {
        profiles,
        t_bound,
        t_prime,
        r_bound,
        mesh,
        e_tol,
    })
}

/// Stage 1 alone: lattice samples of every piece's generating function.
pub fn sample_pieces(config: &RunConfig, opts: &RunOptions) -> Result<Vec<GenFunSample>, Error> {
    let d = derive_inputs(config, opts)?;
    d.profiles
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            p.sample_generating_function(d.mesh, d.e_tol)
                .map_err(|e| match e {
                    Error::NoConvergence {
                        point, residual, ..
                    } => Error::NoConvergence {
                        piece: idx,
                        point,
                        residual,
                    },
                    other => other,
                })
        })
        .collect()
}

/// JSON value for the `sample` subcommand: stable order, lattice keys.
pub fn samples_to_json(samples: &[GenFunSample]) -> serde_json::Value {
    serde_json::Value::Array(
        samples
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                serde_json::json!({
                    "piece": idx,
                    "mesh": s.mesh,
                    "support_radius": s.support_radius,
                    "center": s.center,
                    "sup_error": s.sup_error,
                    "inverse_tolerance": s.inverse_tolerance,
                    "values": s.values.iter().map(|(&(i, j), &v)| {
                        serde_json::json!([i, j, v])
                    }).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

/// The pipeline proper, no file IO: sample → compose → radii → complexes →
/// filtration → reduction → barcode, with the certified budget.
pub fn compute_barcode(config: &RunConfig, opts: &RunOptions) -> Result<PipelineOutput, Error> {
    let d = derive_inputs(config, opts)?;
    let memory_cap = opts.memory_cap.unwrap_or(config.memory_cap);
    let mut timings: Vec<(String, u128)> = Vec::new();

    // Cheap pre-gate on the predicted cell count before any sampling: the
    // fiber radius is bounded by √(R_f⁺² + N·T·R) before the minima exist.
    {
        let nn = d.profiles.len();
        let probe = GfqiSpec::derive_radii(
            vec![placeholder_sample(d.mesh); nn],
            config.n,
            d.t_bound,
            d.r_bound,
        )?;
        let rf_upper =
            (probe.rf_plus() * probe.rf_plus() + nn as f64 * d.t_bound * d.r_bound).sqrt();
        let predicted = estimate_cells(config.n, nn, probe.rb(), rf_upper, d.mesh);
        if predicted > memory_cap {
            return Err(Error::MemoryCap {
                predicted,
                cap: memory_cap,
            });
        }
    }

    let t0 = Instant::now();
    let samples = sample_pieces(config, opts)?;
    timings.push(("sample".into(), t0.elapsed().as_millis()));

    let t0 = Instant::now();
    let spec = GfqiSpec::derive_radii(samples, config.n, d.t_bound, d.r_bound)?;
    timings.push(("radii".into(), t0.elapsed().as_millis()));

    let t0 = Instant::now();
    let base = build_base_pair(spec.rb(), d.mesh, config.n)?;
    let fiber = build_fiber_pair(spec.rf(), d.mesh, spec.fiber_dim(), spec.quad_index())?;
    let block = product_boundaries(base, fiber, memory_cap)?;
    timings.push(("complexes".into(), t0.elapsed().as_millis()));

    let t0 = Instant::now();
    let filtered = filter_complex(&spec, &block, opts.threads.max(1))?;
    timings.push(("filtration".into(), t0.elapsed().as_millis()));

    let t0 = Instant::now();
    let barcode = reduce_barcode(&filtered);
    timings.push(("reduction".into(), t0.elapsed().as_millis()));

    let piece_sup_errors: Vec<f64> = spec.pieces().iter().map(|p| p.sup_error).collect();
    let budget = error_budget(&spec, d.mesh, &piece_sup_errors);

    let report = Report {
        mesh: d.mesh,
        inverse_tolerance: d.e_tol,
        piece_count: spec.piece_count(),
        t_bound: d.t_bound,
        t_prime_bound: d.t_prime,
        r_bound: d.r_bound,
        m_const: spec.m_const(),
        c0: spec.c0(),
        rf_minus: spec.rf_minus(),
        rf_plus: spec.rf_plus(),
        rf: spec.rf(),
        rb: spec.rb(),
        quad_index: spec.quad_index(),
        fiber_dim: spec.fiber_dim(),
        gradient_bound: spec.gradient_bound(),
        piece_sup_errors,
        piece_minima: spec.min_pieces().to_vec(),
        base_cells: block.base.counts.clone(),
        fiber_cells: block.fiber.counts.clone(),
        cells_per_degree: block.sizes.clone(),
        total_cells: block.total_cells,
        error_budget: budget,
        infinite_bars: barcode
            .infinite_bars()
            .map(|b| b.multiplicity as usize)
            .sum(),
        finite_bars: barcode.finite_bars().map(|b| b.multiplicity as usize).sum(),
        timings_ms: timings,
        bottleneck_to_reference: None,
        within_budget: None,
    };

    Ok(PipelineOutput {
        barcode,
        error_budget: budget,
        report,
    })
}

/// Run the full pipeline, write the configured outputs, and check the
/// bottleneck distance against the certified budget when a reference
/// barcode is given.
pub fn run_pipeline(config: &RunConfig, opts: &RunOptions) -> Result<PipelineOutput, Error> {
    let mut result = compute_barcode(config, opts)?;
    let barcode = &result.barcode;
    let budget = result.error_budget;

    // Outputs before the budget check, so a failed comparison still leaves
    // the artifacts on disk.
    if let Some(path) = opts.out.as_ref().or(config.outputs.barcode.as_ref()) {
        std::fs::write(path, barcode.to_json()?)?;
    }
    if let Some(path) = opts.svg.as_ref().or(config.outputs.svg.as_ref()) {
        plot_barcode(barcode, path)?;
    }

    let reference = opts
        .reference
        .as_ref()
        .or(config.reference_barcode.as_ref());
    let mut budget_violation = None;
    if let Some(path) = reference {
        let text = std::fs::read_to_string(path)?;
        let reference = Barcode::from_json(&text)?;
        let dist = bottleneck(barcode, &reference);
        result.report.bottleneck_to_reference = Some(dist);
        result.report.within_budget = Some(dist <= budget);
        if dist > budget {
            budget_violation = Some(Error::BudgetExceeded {
                distance: dist,
                budget,
            });
        }
    }

    if let Some(path) = config.outputs.report.as_ref() {
        std::fs::write(path, serde_json::to_string_pretty(&result.report)?)?;
    }
    if let Some(err) = budget_violation {
        return Err(err);
    }

    Ok(result)
}

/// A trivial sample used only to evaluate radius formulas before sampling.
fn placeholder_sample(mesh: u32) -> GenFunSample {
    GenFunSample {
        mesh,
        support_radius: 0.0,
        center: [0.0, 0.0],
        values: std::collections::BTreeMap::from([((0, 0), 0.0)]),
        sup_error: 0.0,
        inverse_tolerance: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T_REF: f64 = 2.0e-4 * std::f64::consts::PI;

    fn identity_config(mesh: u32) -> RunConfig {
        RunConfig {
            pieces: vec![
                PieceSpec::Tent {
                    t_max: 0.0,
                    support: 0.5,
                    center: [-0.75, 0.0],
                },
                PieceSpec::Tent {
                    t_max: 0.0,
                    support: 0.5,
                    center: [0.75, 0.0],
                },
            ],
            mesh,
            inverse_tolerance: Some(1e-12),
            n: 1,
            memory_cap: default_memory_cap(),
            t_bound: Some(T_REF),
            outputs: Outputs::default(),
            reference_barcode: None,
        }
    }

    #[test]
    fn identity_pipeline_two_infinite_bars() {
        let out = run_pipeline(&identity_config(2), &RunOptions::default()).unwrap();
        let inf: Vec<_> = out.barcode.infinite_bars().collect();
        assert_eq!(inf.len(), 2);
        assert_eq!(inf[0].degree, 0);
        assert_eq!(inf[1].degree, 2);
        assert_eq!(out.barcode.finite_bars().count(), 0);
        // born at the critical value of the quadratic form
        assert_eq!(inf[0].birth, 0.0);
        assert_eq!(inf[1].birth, 0.0);
    }

    #[test]
    fn flat_pieces_require_t_bound() {
        let mut cfg = identity_config(2);
        cfg.t_bound = None;
        assert!(matches!(
            run_pipeline(&cfg, &RunOptions::default()),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn smallness_gate_rejects_large_profiles() {
        let cfg = RunConfig {
            pieces: vec![
                PieceSpec::Tent {
                    t_max: 0.3,
                    support: 0.5,
                    center: [0.0, 0.0],
                },
                PieceSpec::Tent {
                    t_max: 0.3,
                    support: 0.5,
                    center: [0.5, 0.0],
                },
            ],
            mesh: 2,
            inverse_tolerance: None,
            n: 1,
            memory_cap: default_memory_cap(),
            t_bound: None,
            outputs: Outputs::default(),
            reference_barcode: None,
        };
        assert!(matches!(
            run_pipeline(&cfg, &RunOptions::default()),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn memory_cap_pre_gate() {
        let mut cfg = identity_config(8);
        cfg.memory_cap = 1000;
        assert!(matches!(
            run_pipeline(&cfg, &RunOptions::default()),
            Err(Error::MemoryCap { .. })
        ));
    }

    #[test]
    fn config_roundtrip() {
        let cfg = identity_config(4);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.mesh, 4);
        assert_eq!(back.pieces.len(), 2);
    }
}
