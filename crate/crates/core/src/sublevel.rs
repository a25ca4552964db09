//! Sublevel persistence of a compactly supported scalar field on the
//! one-point compactification of the plane.
//!
//! The field is sampled on a lattice ball whose boundary is collapsed to the
//! point at infinity (value 0), cells take the maximum of their corners, and
//! the barcode is read off the reduced boundary matrix. For a composition of
//! strongly C¹-small radial maps, the barcode of the sum of the Hamiltonians
//! approximates the composition's barcode to second order in the C¹ size, so
//! this doubles as the reference ("conjectured") barcode generator.

use crate::cubical::build_base_pair;
use crate::error::Error;
use crate::filtration::FilteredBoundaryMatrix;
use crate::persistence::{reduce_barcode, Barcode};
use crate::radial::RadialProfile;

/// Sublevel barcode of `field` on the compactified plane. The field must
/// vanish outside the ball of the given radius; its value at infinity (and
/// on the collapsed boundary class) is 0.
pub fn field_sublevel_barcode<F: Fn(f64, f64) -> f64>(
    field: F,
    radius: f64,
    mesh: u32,
) -> Result<Barcode, Error> {
    let base = build_base_pair(radius, mesh, 1)?;
    let mf = mesh as f64;
    let vertex_values: Vec<f64> = base.retained[0]
        .iter()
        .map(|&orig| {
            let a = &base.complex.cells[0][orig as usize].anchor;
            field(a[0] as f64 / mf, a[1] as f64 / mf)
        })
        .collect();

    let mut values: Vec<Vec<f64>> = Vec::with_capacity(base.counts.len());
    let mut boundaries: Vec<Vec<Vec<u32>>> = Vec::with_capacity(base.counts.len());
    for k in 0..base.counts.len() {
        let mut vals = Vec::with_capacity(base.counts[k]);
        for (corners, touches) in &base.cell_vertices[k] {
            let mut best = if *touches { 0.0 } else { f64::NEG_INFINITY };
            for &bv in corners {
                best = best.max(vertex_values[bv as usize]);
            }
            vals.push(best);
        }
        let mut bds = Vec::with_capacity(base.counts[k]);
        if k == 0 {
            bds.resize(base.counts[0], Vec::new());
        } else {
            for c in 0..base.counts[k] {
                bds.push(base.bd[k].col(c).to_vec());
            }
        }
        values.push(vals);
        boundaries.push(bds);
    }
    let filtered = FilteredBoundaryMatrix::from_cells(values, boundaries, 0)?;
    Ok(reduce_barcode(&filtered))
}

/// Reference barcode for a composition of radial maps: the sublevel barcode
/// of H₁ + ... + H_N on the compactified plane (exact in the autonomous
/// limit, accurate to second order in the rotation amplitudes).
pub fn autonomous_limit_barcode(profiles: &[RadialProfile], mesh: u32) -> Result<Barcode, Error> {
    if profiles.is_empty() {
        return Err(Error::ConfigInvalid("need at least one profile".into()));
    }
    let radius = profiles
        .iter()
        .map(|p| {
            let c = p.center();
            (c[0] * c[0] + c[1] * c[1]).sqrt() + p.support_radius()
        })
        .fold(0.0f64, f64::max)
        + 0.25;
    field_sublevel_barcode(
        |x, y| profiles.iter().map(|p| p.hamiltonian([x, y])).sum(),
        radius,
        mesh,
    )
}
