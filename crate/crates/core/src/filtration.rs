//! Filtration of the product pair by the sampled function and the induced
//! permuted boundary matrix.
//!
//! Vertex values come straight from the sample; the value of a higher cell
//! is the maximum over its faces in the relative complex, which collapses to
//! the maximum over its corners outside L. Cells are ordered degree-major,
//! then by ascending value with a canonical tie-break, and the block
//! boundary matrix is rewritten in that basis.

use crate::cubical::{BlockBoundary, SparseColumns};
use crate::error::Error;
use crate::gfqi::GfqiSpec;

/// One degree block of the permuted boundary matrix.
#[derive(Debug, Default)]
pub struct DegreeBlock {
    /// Canonical (unpermuted) cell ids in filtration order.
    pub order: Vec<u32>,
    /// Filtration values, one per ordered cell (non-decreasing).
    pub values: Vec<f64>,
    /// Boundary columns in the permuted bases: row ranks in the previous
    /// degree block, ascending.
    pub columns: SparseColumns,
}

/// The filtered boundary matrix of the whole complex, degree-major.
#[derive(Debug)]
pub struct FilteredBoundaryMatrix {
    pub blocks: Vec<DegreeBlock>,
    /// Quadratic index applied to reported homological degrees.
    pub index_shift: i64,
}

impl FilteredBoundaryMatrix {
    pub fn total_cells(&self) -> usize {
        self.blocks.iter().map(|b| b.values.len()).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.blocks.len().saturating_sub(1)
    }

    pub fn min_value(&self) -> f64 {
        self.blocks
            .iter()
            .filter_map(|b| b.values.first().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.blocks
            .iter()
            .filter_map(|b| b.values.last().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Build from explicit per-degree cell values and canonical boundary
    /// lists; used by the standalone reducer and by tests.
    pub fn from_cells(
        values: Vec<Vec<f64>>,
        boundaries: Vec<Vec<Vec<u32>>>,
        index_shift: i64,
    ) -> Result<FilteredBoundaryMatrix, Error> {
        assert_eq!(values.len(), boundaries.len());
        let mut blocks: Vec<DegreeBlock> = Vec::with_capacity(values.len());
        let mut prev_rank: Vec<u32> = Vec::new();
        for (j, (vals, bds)) in values.into_iter().zip(boundaries.into_iter()).enumerate() {
            assert_eq!(vals.len(), bds.len(), "degree {j}");
            let mut idx: Vec<u32> = (0..vals.len() as u32).collect();
            idx.sort_unstable_by(|&a, &b| {
                vals[a as usize]
                    .total_cmp(&vals[b as usize])
                    .then(a.cmp(&b))
            });
            let mut block = DegreeBlock {
                values: idx.iter().map(|&i| vals[i as usize]).collect(),
                columns: SparseColumns::with_columns(idx.len()),
                order: idx,
            };
            let mut rows: Vec<u32> = Vec::new();
            for (rank, &orig) in block.order.iter().enumerate() {
                rows.extend(bds[orig as usize].iter().map(|&f| prev_rank[f as usize]));
                if let Some(&top) = rows.iter().max() {
                    let prev = &blocks[j - 1];
                    if prev.values[top as usize] > block.values[rank] {
                        return Err(Error::NonMonotone {
                            degree: j,
                            column: rank,
                        });
                    }
                }
                block.columns.push_column(&mut rows);
            }
            let mut rank_of = vec![0u32; block.order.len()];
            for (rank, &orig) in block.order.iter().enumerate() {
                rank_of[orig as usize] = rank as u32;
            }
            prev_rank = rank_of;
            blocks.push(block);
        }
        Ok(FilteredBoundaryMatrix {
            blocks,
            index_shift,
        })
    }

    /// Dump "degree value cell-id" lines followed by the permuted matrix in
    /// triplet form ("degree row col" over ranks).
    pub fn dump<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (j, block) in self.blocks.iter().enumerate() {
            for (rank, &orig) in block.order.iter().enumerate() {
                writeln!(w, "c {} {} {}", j, block.values[rank], orig)?;
            }
        }
        for (j, block) in self.blocks.iter().enumerate() {
            for col in 0..block.columns.len() {
                for &row in block.columns.col(col) {
                    writeln!(w, "{} {} {}", j, row, col)?;
                }
            }
        }
        Ok(())
    }
}

/// Sample the composed function on the vertices of K and extend to all cells
/// by the face-maximum rule; order cells and permute the boundary matrix.
///
/// The collapsed class vertex of ∂X takes the value Q(ξ) of its fiber
/// factor, which is the sampled value at any representative outside the base
/// radius.
pub fn filter_complex(
    gfqi: &GfqiSpec,
    block: &BlockBoundary,
    threads: usize,
) -> Result<FilteredBoundaryMatrix, Error> {
    let base = &block.base;
    let fiber = &block.fiber;
    let mesh = base.complex.mesh;
    let interior_vertices = base.retained[0].len();

    // Fiber vertex contexts for the retained (non-Y₀) vertices.
    let fiber_ctx: Vec<crate::gfqi::FiberContext> = fiber.retained[0]
        .iter()
        .map(|&orig| {
            let anchor = &fiber.complex.cells[0][orig as usize].anchor;
            let coords: Vec<i64> = anchor.iter().map(|&c| c as i64).collect();
            gfqi.fiber_context(&coords)
        })
        .collect();
    let f0 = fiber_ctx.len();

    // Base vertex coordinates (interior only; the class vertex is virtual).
    let base_coords: Vec<(i64, i64)> = base.retained[0]
        .iter()
        .map(|&orig| {
            let a = &base.complex.cells[0][orig as usize].anchor;
            (a[0] as i64, a[1] as i64)
        })
        .collect();
    debug_assert_eq!(mesh, gfqi.mesh());

    // Vertex table: V[fv * interior + bv].
    let mut vertex_values = vec![0.0f64; interior_vertices * f0];
    {
        let chunk = f0.div_ceil(threads.max(1));
        let ctx = &fiber_ctx;
        let coords = &base_coords;
        if threads > 1 && f0 > 1 {
            std::thread::scope(|scope| {
                for (t, slice) in vertex_values
                    .chunks_mut(chunk * interior_vertices)
                    .enumerate()
                {
                    scope.spawn(move || {
                        for (local, row) in slice.chunks_mut(interior_vertices).enumerate() {
                            let fv = t * chunk + local;
                            for (bv, &(q, p)) in coords.iter().enumerate() {
                                row[bv] = gfqi.eval_with_context(q, p, &ctx[fv]);
                            }
                        }
                    });
                }
            });
        } else {
            for fv in 0..f0 {
                let row = &mut vertex_values[fv * interior_vertices..(fv + 1) * interior_vertices];
                for (bv, &(q, p)) in coords.iter().enumerate() {
                    row[bv] = gfqi.eval_with_context(q, p, &ctx[fv]);
                }
            }
        }
    }

    // Per (base cell, fiber vertex) maxima. Base cells are numbered flat
    // across degrees: bc_offset[k] + bi.
    let bc_offset: Vec<usize> = base
        .counts
        .iter()
        .scan(0usize, |acc, &c| {
            let here = *acc;
            *acc += c;
            Some(here)
        })
        .collect();
    let total_base_cells: usize = base.counts.iter().sum();
    let mut m1 = vec![f64::NEG_INFINITY; total_base_cells * f0];
    for k in 0..base.counts.len() {
        for (bi, (corners, touches)) in base.cell_vertices[k].iter().enumerate() {
            let row = &mut m1[(bc_offset[k] + bi) * f0..(bc_offset[k] + bi + 1) * f0];
            for fv in 0..f0 {
                let mut best = if *touches {
                    fiber_ctx[fv].quad
                } else {
                    f64::NEG_INFINITY
                };
                for &bv in corners {
                    let v = vertex_values[fv * interior_vertices + bv as usize];
                    if v > best {
                        best = v;
                    }
                }
                row[fv] = best;
            }
        }
    }
    drop(vertex_values);

    // Assemble blocks degree by degree.
    let mut blocks: Vec<DegreeBlock> = Vec::with_capacity(block.total_dim + 1);
    let mut prev_rank: Vec<u32> = Vec::new();
    for j in 0..=block.total_dim {
        let size = block.sizes[j] as usize;
        assert!(size < u32::MAX as usize, "degree block too large");
        let mut keyed: Vec<(f64, u32)> = Vec::with_capacity(size);
        for k in block.block_range(j) {
            let kf = j - k;
            for bi in 0..base.counts[k] {
                let m1_row = &m1[(bc_offset[k] + bi) * f0..(bc_offset[k] + bi + 1) * f0];
                for (fi, corners) in fiber.cell_vertices[kf].iter().enumerate() {
                    let mut best = f64::NEG_INFINITY;
                    for &fv in corners {
                        let v = m1_row[fv as usize];
                        if v > best {
                            best = v;
                        }
                    }
                    let id = block.flat(j, k, bi as u32, fi as u32) as u32;
                    keyed.push((best, id));
                }
            }
        }
        keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut b = DegreeBlock {
            order: Vec::with_capacity(size),
            values: Vec::with_capacity(size),
            columns: SparseColumns::with_columns(size),
        };
        let mut faces = Vec::new();
        let mut rows: Vec<u32> = Vec::new();
        for &(v, id) in &keyed {
            b.order.push(id);
            b.values.push(v);
            if j > 0 {
                let (k, bi, fi) = block.unflat(j, id as u64);
                block.column(j, k, bi, fi, &mut faces);
                rows.clear();
                for &(fk, fb, ff) in &faces {
                    rows.push(prev_rank[block.flat(j - 1, fk, fb, ff) as usize]);
                }
                if let Some(&top) = rows.iter().max() {
                    if blocks[j - 1].values[top as usize] > v {
                        return Err(Error::NonMonotone {
                            degree: j,
                            column: b.order.len() - 1,
                        });
                    }
                }
                b.columns.push_column(&mut rows);
            } else {
                b.columns.push_column(&mut rows);
            }
        }
        let mut rank_of = vec![0u32; size];
        for (rank, &id) in b.order.iter().enumerate() {
            rank_of[id as usize] = rank as u32;
        }
        prev_rank = rank_of;
        blocks.push(b);
    }

    Ok(FilteredBoundaryMatrix {
        blocks,
        index_shift: gfqi.quad_index() as i64,
    })
}

/// Betti numbers of the sublevel complex {u < t} by dense Gaussian
/// elimination over Z₂, reported per shifted degree. An independent oracle
/// for the reduction path.
pub fn sublevel_betti(filtered: &FilteredBoundaryMatrix, t: f64) -> Vec<(i64, usize)> {
    let nblocks = filtered.blocks.len();
    let live: Vec<usize> = filtered
        .blocks
        .iter()
        .map(|b| b.values.partition_point(|&v| v < t))
        .collect();
    // rank of ∂_j restricted to live columns/rows.
    let mut ranks = vec![0usize; nblocks + 1];
    for j in 1..nblocks {
        let rows = live[j - 1];
        let words = rows.div_ceil(64);
        let mut basis: Vec<Vec<u64>> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for col in 0..live[j] {
            let mut v = vec![0u64; words];
            for &r in filtered.blocks[j].columns.col(col) {
                assert!((r as usize) < rows, "monotone filtration keeps rows live");
                v[(r as usize) / 64] ^= 1u64 << (r % 64);
            }
            loop {
                let top = match v.iter().enumerate().rev().find(|(_, &w)| w != 0) {
                    Some((w, &word)) => w * 64 + (63 - word.leading_zeros() as usize),
                    None => break,
                };
                if let Some(pos) = pivots.iter().position(|&p| p == top) {
                    for (a, b) in v.iter_mut().zip(&basis[pos]) {
                        *a ^= b;
                    }
                } else {
                    pivots.push(top);
                    basis.push(v);
                    ranks[j] += 1;
                    break;
                }
            }
        }
    }
    (0..nblocks)
        .map(|j| {
            (
                j as i64 - filtered.index_shift,
                live[j] - ranks[j] - ranks[j + 1],
            )
        })
        .collect()
}
