//! Cubical complexes on lattice balls and the relative product pair
//! (X/∂X × Y, X/∂X × Y₀).
//!
//! A "full" cubical complex contains a cube exactly when all of its corners
//! lie in the vertex set. The base factor is collapsed along its topological
//! boundary (one distinguished class vertex replaces all of ∂X, higher
//! boundary cells are deleted), the fiber factor is taken relative to the
//! sub-complex Y₀ of boundary cells with vanishing ξ⁺ coordinates. Product
//! cells are indexed arithmetically and never materialized; their boundary
//! columns are generated on demand from the factor matrices.

use crate::error::Error;
use std::collections::HashMap;
use std::io::Write;

/// One cube: the anchor is the minimal corner in lattice units, `dirs` the
/// bitmask of spanned axes. The degree is the popcount of `dirs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub anchor: Vec<i32>,
    pub dirs: u32,
}

impl Cell {
    pub fn degree(&self) -> usize {
        self.dirs.count_ones() as usize
    }
}

/// Sparse column-major Z₂ matrix with sorted row indices per column.
#[derive(Debug, Clone, Default)]
pub struct SparseColumns {
    pub offsets: Vec<u32>,
    pub rows: Vec<u32>,
}

impl SparseColumns {
    pub fn with_columns(cols: usize) -> SparseColumns {
        SparseColumns {
            offsets: Vec::with_capacity(cols + 1),
            rows: Vec::new(),
        }
    }

    /// Append a column; the scratch buffer is sorted, folded mod 2
    /// (identical pairs cancel) and left empty.
    pub fn push_column(&mut self, rows: &mut Vec<u32>) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        rows.sort_unstable();
        let mut i = 0;
        while i < rows.len() {
            if i + 1 < rows.len() && rows[i] == rows[i + 1] {
                i += 2;
            } else {
                self.rows.push(rows[i]);
                i += 1;
            }
        }
        rows.clear();
        self.offsets.push(self.rows.len() as u32);
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn col(&self, j: usize) -> &[u32] {
        &self.rows[self.offsets[j] as usize..self.offsets[j + 1] as usize]
    }
}

/// Full cubical complex on the integer points of a ball.
#[derive(Debug)]
pub struct CubicalComplex {
    pub dim: usize,
    pub mesh: u32,
    /// cells[k], sorted lexicographically by (anchor, dirs).
    pub cells: Vec<Vec<Cell>>,
    /// Cell lies in the topological boundary of the cube union.
    pub on_boundary: Vec<Vec<bool>>,
    /// bd[k] (1 ≤ k ≤ dim): boundary columns of k-cells in the full complex.
    pub bd: Vec<SparseColumns>,
}

fn masks_by_popcount(dim: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); dim + 1];
    for mask in 0u32..(1 << dim) {
        out[mask.count_ones() as usize].push(mask);
    }
    out
}

fn enumerate_ball(dim: usize, radius_sq: f64) -> Vec<Vec<i32>> {
    let r = radius_sq.sqrt().floor() as i32;
    let mut out = Vec::new();
    let mut point = vec![0i32; dim];
    fn rec(axis: usize, budget: f64, r: i32, point: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if axis == point.len() {
            out.push(point.clone());
            return;
        }
        for v in -r..=r {
            let sq = (v as f64) * (v as f64);
            if sq <= budget {
                point[axis] = v;
                rec(axis + 1, budget - sq, r, point, out);
            }
        }
        point[axis] = 0;
    }
    rec(0, radius_sq, r, &mut point, &mut out);
    out
}

/// Number of integer points in the ball of the given radius (lattice units).
pub fn count_lattice_ball(dim: usize, radius: f64) -> u64 {
    if radius < 0.0 {
        return 0;
    }
    let radius_sq = radius * radius;
    fn rec(axis: usize, dim: usize, budget: f64) -> u64 {
        if axis == dim {
            return 1;
        }
        let r = budget.max(0.0).sqrt().floor() as i64;
        let mut total = 0;
        for v in -r..=r {
            total += rec(axis + 1, dim, budget - (v * v) as f64);
        }
        total
    }
    rec(0, dim, radius_sq)
}

impl CubicalComplex {
    /// Full cubical complex generated by (1/mesh)Z^dim ∩ B_radius.
    pub fn ball(dim: usize, mesh: u32, radius: f64) -> Result<CubicalComplex, Error> {
        assert!(dim >= 1 && dim <= 20, "dimension out of range");
        assert!(mesh >= 1);
        let radius_sq = radius * radius * (mesh as f64) * (mesh as f64);
        let vertices = enumerate_ball(dim, radius_sq);
        if vertices.is_empty() {
            return Err(Error::EmptyComplex);
        }
        let vertex_index: HashMap<&[i32], u32> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_slice(), i as u32))
            .collect();

        let masks = masks_by_popcount(dim);
        let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); dim + 1];
        cells[0] = vertices
            .iter()
            .map(|v| Cell {
                anchor: v.clone(),
                dirs: 0,
            })
            .collect();

        let mut corner = vec![0i32; dim];
        for k in 1..=dim {
            for v in &vertices {
                'mask: for &mask in &masks[k] {
                    // All 2^k corners must be vertices.
                    let mut sub = mask;
                    loop {
                        corner.copy_from_slice(v);
                        let mut bits = sub;
                        while bits != 0 {
                            let axis = bits.trailing_zeros() as usize;
                            corner[axis] += 1;
                            bits &= bits - 1;
                        }
                        if !vertex_index.contains_key(corner.as_slice()) {
                            continue 'mask;
                        }
                        if sub == 0 {
                            break;
                        }
                        sub = (sub - 1) & mask;
                    }
                    cells[k].push(Cell {
                        anchor: v.clone(),
                        dirs: mask,
                    });
                }
            }
        }

        // Index maps per degree for face lookups.
        let index: Vec<HashMap<(Vec<i32>, u32), u32>> = cells
            .iter()
            .map(|level| {
                level
                    .iter()
                    .enumerate()
                    .map(|(i, c)| ((c.anchor.clone(), c.dirs), i as u32))
                    .collect()
            })
            .collect();

        let mut bd: Vec<SparseColumns> = vec![SparseColumns::default(); dim + 1];
        for k in 1..=dim {
            let mut mat = SparseColumns::with_columns(cells[k].len());
            let mut rows = Vec::with_capacity(2 * k);
            for cell in &cells[k] {
                let mut bits = cell.dirs;
                while bits != 0 {
                    let axis = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let sub_dirs = cell.dirs & !(1 << axis);
                    let near = index[k - 1]
                        .get(&(cell.anchor.clone(), sub_dirs))
                        .expect("face of a complex cell must be in the complex");
                    let mut far_anchor = cell.anchor.clone();
                    far_anchor[axis] += 1;
                    let far = index[k - 1]
                        .get(&(far_anchor, sub_dirs))
                        .expect("face of a complex cell must be in the complex");
                    rows.push(*near);
                    rows.push(*far);
                }
                debug_assert_eq!(rows.len(), 2 * k);
                mat.push_column(&mut rows);
            }
            bd[k] = mat;
        }

        // Topological boundary: a k-cell is interior iff all 2^(dim-k)
        // candidate top cubes containing it are present.
        let top_anchors: HashMap<&[i32], ()> = cells[dim]
            .iter()
            .map(|c| (c.anchor.as_slice(), ()))
            .collect();
        let full_mask = (1u32 << dim) - 1;
        let mut on_boundary: Vec<Vec<bool>> = Vec::with_capacity(dim + 1);
        let mut candidate = vec![0i32; dim];
        for k in 0..=dim {
            let mut flags = Vec::with_capacity(cells[k].len());
            for cell in &cells[k] {
                let co_mask = full_mask & !cell.dirs;
                let mut boundary = false;
                let mut sub = co_mask;
                loop {
                    candidate.copy_from_slice(&cell.anchor);
                    let mut bits = sub;
                    while bits != 0 {
                        let axis = bits.trailing_zeros() as usize;
                        candidate[axis] -= 1;
                        bits &= bits - 1;
                    }
                    if !top_anchors.contains_key(candidate.as_slice()) {
                        boundary = true;
                        break;
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & co_mask;
                }
                flags.push(boundary);
            }
            on_boundary.push(flags);
        }

        // Sanity: every chain of faces closes up (∂∂ = 0 on the factors).
        for k in 2..=dim {
            for j in 0..cells[k].len() {
                let mut acc: Vec<u32> = Vec::new();
                for &f in bd[k].col(j) {
                    acc.extend_from_slice(bd[k - 1].col(f as usize));
                }
                acc.sort_unstable();
                assert!(
                    acc.chunks(2).all(|c| c.len() == 2 && c[0] == c[1]),
                    "factor boundary does not square to zero"
                );
            }
        }

        Ok(CubicalComplex {
            dim,
            mesh,
            cells,
            on_boundary,
            bd,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }
}

/// The base pair: X collapsed along ∂X. Degree-0 basis is the interior
/// vertices in lex order followed by the distinguished class vertex of ∂X.
#[derive(Debug)]
pub struct BasePair {
    pub complex: CubicalComplex,
    /// Original indices of retained cells per degree (k ≥ 1: interior cells;
    /// k = 0: interior vertices, the class vertex is appended virtually).
    pub retained: Vec<Vec<u32>>,
    /// Per degree, basis size of the quotient complex.
    pub counts: Vec<usize>,
    /// Index of the collapsed class vertex in the degree-0 basis.
    pub quotient_vertex: u32,
    /// Quotient boundary matrices ∂̄_k over the retained bases.
    pub bd: Vec<SparseColumns>,
    /// For each retained cell: interior-vertex basis ids among its corners,
    /// plus a flag for corners on ∂X (mapped to the class vertex).
    pub cell_vertices: Vec<Vec<(Vec<u32>, bool)>>,
}

fn retained_indices(flags: &[bool]) -> (Vec<u32>, Vec<Option<u32>>) {
    let mut retained = Vec::new();
    let mut map = vec![None; flags.len()];
    for (i, &boundary) in flags.iter().enumerate() {
        if !boundary {
            map[i] = Some(retained.len() as u32);
            retained.push(i as u32);
        }
    }
    (retained, map)
}

/// Build (X, ∂X) on the ball of radius rb + √(2n)/m and collapse ∂X.
pub fn build_base_pair(rb: f64, mesh: u32, n: usize) -> Result<BasePair, Error> {
    if !(rb > 0.0) {
        return Err(Error::InvalidBounds("base radius must be positive".into()));
    }
    let dim = 2 * n;
    let radius = rb + (dim as f64).sqrt() / mesh as f64;
    let complex = CubicalComplex::ball(dim, mesh, radius)?;

    let mut retained = Vec::with_capacity(dim + 1);
    let mut maps: Vec<Vec<Option<u32>>> = Vec::with_capacity(dim + 1);
    for k in 0..=dim {
        let (r, m) = retained_indices(&complex.on_boundary[k]);
        retained.push(r);
        maps.push(m);
    }
    let quotient_vertex = retained[0].len() as u32;
    let mut counts: Vec<usize> = retained.iter().map(Vec::len).collect();
    counts[0] += 1; // the class vertex

    // Vertex membership per retained cell, for filtration values.
    let vertex_map = &maps[0];
    let mut cell_vertices: Vec<Vec<(Vec<u32>, bool)>> = Vec::with_capacity(dim + 1);
    let mut corner = vec![0i32; dim];
    let vertex_index: HashMap<&[i32], u32> = complex.cells[0]
        .iter()
        .enumerate()
        .map(|(i, c)| (c.anchor.as_slice(), i as u32))
        .collect();
    for k in 0..=dim {
        let mut per_cell = Vec::with_capacity(retained[k].len());
        for &orig in &retained[k] {
            let cell = &complex.cells[k][orig as usize];
            let mut ids = Vec::with_capacity(1 << k);
            let mut touches = false;
            let mut sub = cell.dirs;
            loop {
                corner.copy_from_slice(&cell.anchor);
                let mut bits = sub;
                while bits != 0 {
                    let axis = bits.trailing_zeros() as usize;
                    corner[axis] += 1;
                    bits &= bits - 1;
                }
                let vid = vertex_index[corner.as_slice()];
                match vertex_map[vid as usize] {
                    Some(r) => ids.push(r),
                    None => touches = true,
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & cell.dirs;
            }
            per_cell.push((ids, touches));
        }
        cell_vertices.push(per_cell);
    }
    // The class vertex itself.
    cell_vertices[0].push((Vec::new(), true));

    // Quotient boundaries.
    let mut bd: Vec<SparseColumns> = vec![SparseColumns::default(); dim + 1];
    for k in 1..=dim {
        let mut mat = SparseColumns::with_columns(retained[k].len());
        let mut rows = Vec::new();
        for &orig in &retained[k] {
            for &f in complex.bd[k].col(orig as usize) {
                match maps[k - 1][f as usize] {
                    Some(r) => rows.push(r),
                    None if k == 1 => rows.push(quotient_vertex),
                    None => {}
                }
            }
            mat.push_column(&mut rows);
        }
        bd[k] = mat;
    }

    Ok(BasePair {
        complex,
        retained,
        counts,
        quotient_vertex,
        bd,
        cell_vertices,
    })
}

/// The fiber pair (Y, Y₀): Y₀ consists of the cells all of whose corners are
/// boundary vertices with vanishing ξ⁺ coordinates.
#[derive(Debug)]
pub struct FiberPair {
    pub complex: CubicalComplex,
    pub in_y0: Vec<Vec<bool>>,
    /// Original indices of retained (non-Y₀) cells per degree.
    pub retained: Vec<Vec<u32>>,
    pub counts: Vec<usize>,
    /// Restricted boundary matrices over the retained bases.
    pub bd: Vec<SparseColumns>,
    /// Retained-vertex basis ids among each retained cell's corners.
    pub cell_vertices: Vec<Vec<Vec<u32>>>,
    pub quad_index: usize,
}

/// Build (Y, Y₀) on the ball of radius rf + √d/m; the first `index` axes are
/// the ξ⁻ directions.
pub fn build_fiber_pair(rf: f64, mesh: u32, d: usize, index: usize) -> Result<FiberPair, Error> {
    if !(rf > 0.0) {
        return Err(Error::InvalidBounds("fiber radius must be positive".into()));
    }
    assert!(index <= d);
    let radius = rf + (d as f64).sqrt() / mesh as f64;
    let complex = CubicalComplex::ball(d, mesh, radius)?;

    let vertex_index: HashMap<&[i32], u32> = complex.cells[0]
        .iter()
        .enumerate()
        .map(|(i, c)| (c.anchor.as_slice(), i as u32))
        .collect();
    let plus_mask: u32 = if index == d {
        0
    } else {
        ((1u32 << (d - index)) - 1) << index
    };

    let mut in_y0: Vec<Vec<bool>> = Vec::with_capacity(d + 1);
    let mut corner = vec![0i32; d];
    for k in 0..=d {
        let mut flags = Vec::with_capacity(complex.cells[k].len());
        for cell in &complex.cells[k] {
            let mut inside =
                cell.dirs & plus_mask == 0 && cell.anchor[index..].iter().all(|&c| c == 0);
            if inside {
                // every corner must be a boundary vertex
                let mut sub = cell.dirs;
                loop {
                    corner.copy_from_slice(&cell.anchor);
                    let mut bits = sub;
                    while bits != 0 {
                        let axis = bits.trailing_zeros() as usize;
                        corner[axis] += 1;
                        bits &= bits - 1;
                    }
                    let vid = vertex_index[corner.as_slice()];
                    if !complex.on_boundary[0][vid as usize] {
                        inside = false;
                        break;
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & cell.dirs;
                }
            }
            flags.push(inside);
        }
        in_y0.push(flags);
    }

    let mut retained = Vec::with_capacity(d + 1);
    let mut maps: Vec<Vec<Option<u32>>> = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let (r, m) = retained_indices(&in_y0[k]);
        retained.push(r);
        maps.push(m);
    }
    let counts: Vec<usize> = retained.iter().map(Vec::len).collect();

    let mut bd: Vec<SparseColumns> = vec![SparseColumns::default(); d + 1];
    for k in 1..=d {
        let mut mat = SparseColumns::with_columns(retained[k].len());
        let mut rows = Vec::new();
        for &orig in &retained[k] {
            for &f in complex.bd[k].col(orig as usize) {
                if let Some(r) = maps[k - 1][f as usize] {
                    rows.push(r);
                }
            }
            mat.push_column(&mut rows);
        }
        bd[k] = mat;
    }

    let vertex_map = &maps[0];
    let mut cell_vertices: Vec<Vec<Vec<u32>>> = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let mut per_cell = Vec::with_capacity(retained[k].len());
        for &orig in &retained[k] {
            let cell = &complex.cells[k][orig as usize];
            let mut ids = Vec::with_capacity(1 << k);
            let mut sub = cell.dirs;
            loop {
                corner.copy_from_slice(&cell.anchor);
                let mut bits = sub;
                while bits != 0 {
                    let axis = bits.trailing_zeros() as usize;
                    corner[axis] += 1;
                    bits &= bits - 1;
                }
                let vid = vertex_index[corner.as_slice()];
                if let Some(r) = vertex_map[vid as usize] {
                    ids.push(r);
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & cell.dirs;
            }
            debug_assert!(!ids.is_empty(), "a retained cell has a retained corner");
            per_cell.push(ids);
        }
        cell_vertices.push(per_cell);
    }

    Ok(FiberPair {
        complex,
        in_y0,
        retained,
        counts,
        bd,
        cell_vertices,
        quad_index: index,
    })
}

/// Product pair (K, L) = (X/∂X × Y, X/∂X × Y₀) with block boundary columns
/// generated on demand.
#[derive(Debug)]
pub struct BlockBoundary {
    pub base: BasePair,
    pub fiber: FiberPair,
    pub base_dim: usize,
    pub fiber_dim: usize,
    pub total_dim: usize,
    /// offsets[j][k]: flat index of the first cell of block (k, j-k).
    pub offsets: Vec<Vec<u64>>,
    pub sizes: Vec<u64>,
    pub total_cells: u64,
}

/// A product cell address: base degree, base index, fiber index.
pub type ProductCell = (usize, u32, u32);

impl BlockBoundary {
    pub fn block_range(&self, j: usize) -> std::ops::Range<usize> {
        let lo = j.saturating_sub(self.fiber_dim);
        let hi = j.min(self.base_dim);
        lo..hi + 1
    }

    #[inline]
    pub fn flat(&self, j: usize, k: usize, bi: u32, fi: u32) -> u64 {
        self.offsets[j][k] + (bi as u64) * (self.fiber.counts[j - k] as u64) + fi as u64
    }

    #[inline]
    pub fn unflat(&self, j: usize, id: u64) -> ProductCell {
        let ks = self.block_range(j);
        let mut k = ks.start;
        for kk in ks.clone() {
            if id < self.offsets[j][kk] + self.block_size(j, kk) {
                k = kk;
                break;
            }
        }
        let rel = id - self.offsets[j][k];
        let f = self.fiber.counts[j - k] as u64;
        ((k), (rel / f) as u32, (rel % f) as u32)
    }

    fn block_size(&self, j: usize, k: usize) -> u64 {
        (self.base.counts[k] as u64) * (self.fiber.counts[j - k] as u64)
    }

    /// Boundary of the product cell (k, bi, fi) of total degree j, as
    /// addresses of (j-1)-cells: ∂b ⊗ f + b ⊗ ∂f over Z₂.
    pub fn column(&self, j: usize, k: usize, bi: u32, fi: u32, out: &mut Vec<ProductCell>) {
        out.clear();
        if k >= 1 {
            for &r in self.base.bd[k].col(bi as usize) {
                out.push((k - 1, r, fi));
            }
        }
        let kf = j - k;
        if kf >= 1 {
            for &r in self.fiber.bd[kf].col(fi as usize) {
                out.push((k, bi, r));
            }
        }
    }

    /// Emit "j row col" triplets of every nonzero over the canonical
    /// (unpermuted) per-degree bases.
    pub fn dump_triplets<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut faces = Vec::new();
        for j in 1..=self.total_dim {
            for k in self.block_range(j) {
                for bi in 0..self.base.counts[k] as u32 {
                    for fi in 0..self.fiber.counts[j - k] as u32 {
                        let col = self.flat(j, k, bi, fi);
                        self.column(j, k, bi, fi, &mut faces);
                        for &(fk, fb, ff) in &faces {
                            writeln!(w, "{} {} {}", j, self.flat(j - 1, fk, fb, ff), col)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Check ∂∘∂ = 0 on the assembled blocks. Exhaustive below the given
    /// budget of cells, deterministically strided above it.
    pub fn verify_dd(&self, budget: u64) -> Result<(), Error> {
        let stride = (self.total_cells / budget.max(1)).max(1);
        let mut faces = Vec::new();
        let mut acc: Vec<u64> = Vec::new();
        let mut counter = 0u64;
        for j in 2..=self.total_dim {
            for k in self.block_range(j) {
                for bi in 0..self.base.counts[k] as u32 {
                    for fi in 0..self.fiber.counts[j - k] as u32 {
                        counter += 1;
                        if counter % stride != 0 {
                            continue;
                        }
                        self.column(j, k, bi, fi, &mut faces);
                        let snapshot: Vec<ProductCell> = faces.clone();
                        acc.clear();
                        for (fk, fb, ff) in snapshot {
                            self.column(j - 1, fk, fb, ff, &mut faces);
                            for &(gk, gb, gf) in &faces {
                                acc.push(self.flat(j - 2, gk, gb, gf));
                            }
                        }
                        acc.sort_unstable();
                        if !acc.chunks(2).all(|c| c.len() == 2 && c[0] == c[1]) {
                            return Err(Error::ConfigInvalid(format!(
                                "product boundary does not square to zero at degree {j}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Assemble the block boundary structure, guarding the total cell count.
pub fn product_boundaries(
    base: BasePair,
    fiber: FiberPair,
    memory_cap: u64,
) -> Result<BlockBoundary, Error> {
    if base.complex.mesh != fiber.complex.mesh {
        return Err(Error::MeshMismatch {
            expected: base.complex.mesh,
            found: fiber.complex.mesh,
        });
    }
    let base_dim = base.complex.dim;
    let fiber_dim = fiber.complex.dim;
    let total_dim = base_dim + fiber_dim;
    let mut offsets = Vec::with_capacity(total_dim + 1);
    let mut sizes = Vec::with_capacity(total_dim + 1);
    let mut total_cells = 0u64;
    for j in 0..=total_dim {
        let lo = j.saturating_sub(fiber_dim);
        let hi = j.min(base_dim);
        let mut offs = vec![0u64; hi + 2];
        let mut size = 0u64;
        for k in 0..=hi {
            offs[k] = size;
            if k >= lo {
                size += (base.counts[k] as u64) * (fiber.counts[j - k] as u64);
            }
        }
        offs[hi + 1] = size;
        offsets.push(offs);
        sizes.push(size);
        total_cells += size;
    }
    if total_cells > memory_cap {
        return Err(Error::MemoryCap {
            predicted: total_cells,
            cap: memory_cap,
        });
    }
    let block = BlockBoundary {
        base,
        fiber,
        base_dim,
        fiber_dim,
        total_dim,
        offsets,
        sizes,
        total_cells,
    };
    block.verify_dd(4_000_000)?;
    Ok(block)
}

/// Upper estimate of the product cell count from lattice-ball point counts
/// (each factor's k-cells are bounded by the vertex count times 2^dim).
pub fn estimate_cells(n: usize, big_n: usize, rb: f64, rf: f64, mesh: u32) -> u64 {
    let bdim = 2 * n;
    let fdim = 2 * n * (big_n - 1);
    let mf = mesh as f64;
    let b0 = count_lattice_ball(bdim, (rb + (bdim as f64).sqrt() / mf) * mf);
    let f0 = count_lattice_ball(fdim, (rf + (fdim as f64).sqrt() / mf) * mf);
    b0.saturating_mul(1 << bdim)
        .saturating_mul(f0)
        .saturating_mul(1 << fdim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_complex_m1_r1_has_21_vertices() {
        // Radius 1 + √2 in Z²: 21 integer points; χ(X) = 1 for the disk.
        let x = CubicalComplex::ball(2, 1, 1.0 + std::f64::consts::SQRT_2).unwrap();
        assert_eq!(x.cells[0].len(), 21);
        assert_eq!(x.cells[1].len(), 32);
        assert_eq!(x.cells[2].len(), 12);
    }

    #[test]
    fn quotient_euler_characteristic_is_sphere() {
        let base = build_base_pair(1.0, 1, 1).unwrap();
        let chi: i64 = base
            .counts
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum();
        assert_eq!(chi, 2);
        // ∂X here is a 16-vertex, 16-edge circle.
        assert_eq!(base.counts[0], 21 - 16 + 1);
        assert_eq!(base.counts[1], 32 - 16);
        assert_eq!(base.counts[2], 12);
    }

    #[test]
    fn boundary_flags_closed_under_faces() {
        // Every face of a boundary cell is itself a boundary cell.
        let x = CubicalComplex::ball(2, 2, 1.3).unwrap();
        for k in 1..=2 {
            for (i, _) in x.cells[k].iter().enumerate() {
                if !x.on_boundary[k][i] {
                    continue;
                }
                for &f in x.bd[k].col(i) {
                    assert!(x.on_boundary[k - 1][f as usize]);
                }
            }
        }
    }

    #[test]
    fn every_k_cell_has_2k_faces() {
        let x = CubicalComplex::ball(3, 1, 2.1).unwrap();
        for k in 1..=3 {
            for j in 0..x.cells[k].len() {
                assert_eq!(x.bd[k].col(j).len(), 2 * k);
            }
        }
    }

    #[test]
    fn fiber_pair_y0_is_two_tips() {
        // d = 2, i = 1, m = 1, rf = 1: Y₀ is exactly the two extreme axis
        // vertices, no higher cells.
        let y = build_fiber_pair(1.0, 1, 2, 1).unwrap();
        let y0_count: usize = y
            .in_y0
            .iter()
            .map(|flags| flags.iter().filter(|&&b| b).count())
            .sum();
        assert_eq!(y0_count, 2);
        assert!(y.in_y0[1].iter().all(|&b| !b));
        for flags in &y.in_y0[0] {
            let _ = flags;
        }
        // The two tips are (±2, 0).
        for (i, cell) in y.complex.cells[0].iter().enumerate() {
            let is_tip = cell.anchor == vec![2, 0] || cell.anchor == vec![-2, 0];
            assert_eq!(y.in_y0[0][i], is_tip, "tip flags at {:?}", cell.anchor);
        }
    }

    #[test]
    fn y0_cells_closed_under_boundary() {
        let y = build_fiber_pair(2.3, 2, 2, 1).unwrap();
        for k in 1..=2 {
            for (i, _) in y.complex.cells[k].iter().enumerate() {
                if !y.in_y0[k][i] {
                    continue;
                }
                for &f in y.complex.bd[k].col(i as usize) {
                    assert!(y.in_y0[k - 1][f as usize]);
                }
            }
        }
    }

    #[test]
    fn product_counts_and_dd() {
        let base = build_base_pair(1.0, 1, 1).unwrap();
        let fiber = build_fiber_pair(1.0, 1, 2, 1).unwrap();
        let expect: u64 = (0..=4)
            .map(|j| {
                (0..=j.min(2))
                    .filter(|&k| j - k <= 2)
                    .map(|k| (base.counts[k] * fiber.counts[j - k]) as u64)
                    .sum::<u64>()
            })
            .sum();
        let block = product_boundaries(base, fiber, 1 << 30).unwrap();
        assert_eq!(block.total_cells, expect);
        block.verify_dd(u64::MAX).unwrap();
    }

    #[test]
    fn memory_cap_triggers() {
        let base = build_base_pair(1.0, 1, 1).unwrap();
        let fiber = build_fiber_pair(1.0, 1, 2, 1).unwrap();
        match product_boundaries(base, fiber, 10) {
            Err(Error::MemoryCap { predicted, cap }) => {
                assert!(predicted > 10);
                assert_eq!(cap, 10);
            }
            other => panic!("expected memory cap, got {other:?}"),
        }
    }

    #[test]
    fn estimate_dominates_actual() {
        let est = estimate_cells(1, 2, 1.0, 1.0, 2);
        let base = build_base_pair(1.0, 2, 1).unwrap();
        let fiber = build_fiber_pair(1.0, 2, 2, 1).unwrap();
        let block = product_boundaries(base, fiber, 1 << 40).unwrap();
        assert!(est >= block.total_cells, "{est} < {}", block.total_cells);
    }

    #[test]
    fn flat_unflat_roundtrip() {
        let base = build_base_pair(1.0, 1, 1).unwrap();
        let fiber = build_fiber_pair(1.0, 1, 2, 1).unwrap();
        let block = product_boundaries(base, fiber, 1 << 30).unwrap();
        for j in 0..=block.total_dim {
            for k in block.block_range(j) {
                for bi in 0..block.base.counts[k] as u32 {
                    for fi in 0..block.fiber.counts[j - k] as u32 {
                        let id = block.flat(j, k, bi, fi);
                        assert_eq!(block.unflat(j, id), (k, bi, fi));
                    }
                }
            }
        }
    }
}
