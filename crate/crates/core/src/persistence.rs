//! Boundary-matrix reduction, barcode extraction and the bottleneck metric.
//!
//! Reduction is the standard left-to-right column algorithm: a column is
//! repeatedly added to by the unique earlier column sharing its pivot until
//! its pivot is free or the column vanishes. The pivot pairing determines
//! the barcode; equal-value pairs are dropped.

use crate::error::Error;
use crate::filtration::FilteredBoundaryMatrix;
use crate::gfqi::GfqiSpec;
use serde::{Deserialize, Serialize};

/// One bar: degrees are reported after the quadratic-index shift, so a full
/// pipeline run puts its infinite bars in degrees 0 and 2n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub degree: i64,
    pub birth: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub death: Option<f64>,
    pub multiplicity: u32,
}

impl Bar {
    pub fn is_infinite(&self) -> bool {
        self.death.is_none()
    }

    pub fn length(&self) -> f64 {
        match self.death {
            Some(d) => d - self.birth,
            None => f64::INFINITY,
        }
    }
}

/// A multiset of bars in a canonical sorted order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Barcode {
    pub bars: Vec<Bar>,
}

impl Barcode {
    /// Sort canonically and merge equal bars into multiplicities.
    pub fn new(mut raw: Vec<Bar>) -> Barcode {
        raw.sort_unstable_by(|a, b| {
            a.degree
                .cmp(&b.degree)
                .then(a.birth.total_cmp(&b.birth))
                .then_with(|| match (a.death, b.death) {
                    (Some(x), Some(y)) => x.total_cmp(&y),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    (None, Some(_)) => std::cmp::Ordering::Greater,
                    (None, None) => std::cmp::Ordering::Equal,
                })
        });
        let mut bars: Vec<Bar> = Vec::with_capacity(raw.len());
        for bar in raw {
            match bars.last_mut() {
                Some(last)
                    if last.degree == bar.degree
                        && last.birth == bar.birth
                        && last.death == bar.death =>
                {
                    last.multiplicity += bar.multiplicity;
                }
                _ => bars.push(bar),
            }
        }
        Barcode { bars }
    }

    pub fn infinite_bars(&self) -> impl Iterator<Item = &Bar> {
        self.bars.iter().filter(|b| b.is_infinite())
    }

    pub fn finite_bars(&self) -> impl Iterator<Item = &Bar> {
        self.bars.iter().filter(|b| !b.is_infinite())
    }

    pub fn total_multiplicity(&self) -> u32 {
        self.bars.iter().map(|b| b.multiplicity).sum()
    }

    /// Drop finite bars shorter than or equal to the threshold.
    pub fn filter_short(&self, min_length: f64) -> Barcode {
        Barcode::new(
            self.bars
                .iter()
                .filter(|b| b.is_infinite() || b.length() >= min_length)
                .cloned()
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string_pretty(&self.bars)?)
    }

    pub fn from_json(s: &str) -> Result<Barcode, Error> {
        let bars: Vec<Bar> = serde_json::from_str(s)?;
        Ok(Barcode::new(bars))
    }
}

/// Result of the standard reduction over the degree-major global basis.
#[derive(Debug)]
pub struct ReductionResult {
    /// Reduced columns per degree block (row ranks in the previous degree).
    pub reduced: Vec<Vec<Vec<u32>>>,
    /// Change of basis per degree: ops[j][c] lists the source columns summed
    /// into column c (upper-triangular with unit diagonal).
    pub ops: Vec<Vec<Vec<u32>>>,
    /// Pivot pairs per degree j: (row rank in degree j-1, column rank in j).
    pub pairing: Vec<Vec<(u32, u32)>>,
    /// Per degree: ranks of zero columns that are no pivot of degree j+1.
    pub unpaired: Vec<Vec<u32>>,
}

fn xor_merge(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Append-only store of reduced columns.
struct ReducedStore {
    offsets: Vec<u64>,
    rows: Vec<u32>,
}

impl ReducedStore {
    fn with_capacity(cols: usize, nnz: usize) -> ReducedStore {
        let mut offsets = Vec::with_capacity(cols + 1);
        offsets.push(0);
        ReducedStore {
            offsets,
            rows: Vec::with_capacity(nnz),
        }
    }

    fn push(&mut self, col: &[u32]) {
        self.rows.extend_from_slice(col);
        self.offsets.push(self.rows.len() as u64);
    }

    fn col(&self, c: usize) -> &[u32] {
        &self.rows[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }
}

struct BlockOutcome {
    /// pivot row rank -> owning column rank, for pairs.
    pairs: Vec<(u32, u32)>,
    /// column ranks reduced to zero (cleared columns excluded).
    zero_cols: Vec<u32>,
    /// row ranks used as pivots (marks cycles of the previous degree as paired).
    pivot_rows: Vec<bool>,
    store: ReducedStore,
    ops: Option<Vec<Vec<u32>>>,
}

fn reduce_block(
    columns: &crate::cubical::SparseColumns,
    rows: usize,
    record_ops: bool,
    cleared: Option<&[bool]>,
) -> BlockOutcome {
    let ncols = columns.len();
    let mut pivot_owner: Vec<u32> = vec![u32::MAX; rows];
    let mut store = ReducedStore::with_capacity(ncols, columns.rows.len());
    let mut pairs = Vec::new();
    let mut zero_cols = Vec::new();
    let mut ops: Option<Vec<Vec<u32>>> = if record_ops {
        Some(Vec::with_capacity(ncols))
    } else {
        None
    };
    let mut cur: Vec<u32> = Vec::new();
    let mut scratch: Vec<u32> = Vec::new();
    for c in 0..ncols {
        if cleared.map_or(false, |cl| cl[c]) {
            // The cell is a pivot row one degree up: its column is the
            // boundary of a killed cycle and reduces to zero.
            store.push(&[]);
            if let Some(ops) = ops.as_mut() {
                ops.push(vec![c as u32]);
            }
            continue;
        }
        cur.clear();
        cur.extend_from_slice(columns.col(c));
        let mut op: Vec<u32> = vec![c as u32];
        loop {
            let Some(&pivot) = cur.last() else { break };
            let owner = pivot_owner[pivot as usize];
            if owner == u32::MAX {
                pivot_owner[pivot as usize] = c as u32;
                pairs.push((pivot, c as u32));
                break;
            }
            xor_merge(&cur, store.col(owner as usize), &mut scratch);
            std::mem::swap(&mut cur, &mut scratch);
            if record_ops {
                op.push(owner);
            }
        }
        if cur.is_empty() {
            zero_cols.push(c as u32);
        }
        store.push(&cur);
        if let Some(ops) = ops.as_mut() {
            op.sort_unstable();
            ops.push(op);
        }
    }
    let mut pivot_rows = vec![false; rows];
    for &(r, _) in &pairs {
        pivot_rows[r as usize] = true;
    }
    BlockOutcome {
        pairs,
        zero_cols,
        pivot_rows,
        store,
        ops,
    }
}

/// Standard left-to-right reduction of every degree block, with the
/// change-of-basis matrix recorded.
pub fn reduce(filtered: &FilteredBoundaryMatrix) -> ReductionResult {
    let mut reduced = Vec::with_capacity(filtered.blocks.len());
    let mut ops = Vec::with_capacity(filtered.blocks.len());
    let mut pairing = Vec::with_capacity(filtered.blocks.len());
    let mut unpaired: Vec<Vec<u32>> = Vec::with_capacity(filtered.blocks.len());
    let mut prev_zero: Vec<u32> = Vec::new();
    let mut prev_len = 0usize;
    for (j, block) in filtered.blocks.iter().enumerate() {
        let out = reduce_block(&block.columns, prev_len, true, None);
        if j > 0 {
            unpaired.push(
                prev_zero
                    .iter()
                    .copied()
                    .filter(|&r| !out.pivot_rows[r as usize])
                    .collect(),
            );
        }
        reduced.push(
            (0..block.columns.len())
                .map(|c| out.store.col(c).to_vec())
                .collect(),
        );
        ops.push(out.ops.unwrap());
        pairing.push(out.pairs);
        prev_zero = out.zero_cols;
        prev_len = block.columns.len();
    }
    unpaired.push(prev_zero);
    ReductionResult {
        reduced,
        ops,
        pairing,
        unpaired,
    }
}

/// Read the barcode off a reduction: an essential pair (strictly increasing
/// values) contributes a finite bar, an unpaired cycle an infinite one.
pub fn extract_barcode(red: &ReductionResult, filtered: &FilteredBoundaryMatrix) -> Barcode {
    let shift = filtered.index_shift;
    let mut bars = Vec::new();
    for (j, pairs) in red.pairing.iter().enumerate() {
        for &(row, col) in pairs {
            let birth = filtered.blocks[j - 1].values[row as usize];
            let death = filtered.blocks[j].values[col as usize];
            debug_assert!(birth <= death);
            if birth < death {
                bars.push(Bar {
                    degree: (j as i64 - 1) - shift,
                    birth,
                    death: Some(death),
                    multiplicity: 1,
                });
            }
        }
    }
    for (j, cols) in red.unpaired.iter().enumerate() {
        for &c in cols {
            bars.push(Bar {
                degree: j as i64 - shift,
                birth: filtered.blocks[j].values[c as usize],
                death: None,
                multiplicity: 1,
            });
        }
    }
    Barcode::new(bars)
}

/// Reduction without the change-of-basis bookkeeping, straight to a barcode.
///
/// Processes degrees top-down with the clearing optimization: a cell that is
/// the pivot row of a higher-degree column is a killed cycle, so its own
/// column is skipped. The pairing is identical to [`reduce`]'s (the pairing
/// does not depend on the reduction strategy); only the work differs.
pub fn reduce_barcode(filtered: &FilteredBoundaryMatrix) -> Barcode {
    let shift = filtered.index_shift;
    let top = filtered.blocks.len() - 1;
    let mut bars = Vec::new();
    let mut cleared: Vec<bool> = vec![false; filtered.blocks[top].values.len()];
    for j in (1..=top).rev() {
        let rows = filtered.blocks[j - 1].values.len();
        let out = reduce_block(&filtered.blocks[j].columns, rows, false, Some(&cleared));
        for &(row, col) in &out.pairs {
            let birth = filtered.blocks[j - 1].values[row as usize];
            let death = filtered.blocks[j].values[col as usize];
            debug_assert!(birth <= death);
            if birth < death {
                bars.push(Bar {
                    degree: (j as i64 - 1) - shift,
                    birth,
                    death: Some(death),
                    multiplicity: 1,
                });
            }
        }
        // Cycles of degree j not cleared and not killed: infinite bars.
        for &c in &out.zero_cols {
            bars.push(Bar {
                degree: j as i64 - shift,
                birth: filtered.blocks[j].values[c as usize],
                death: None,
                multiplicity: 1,
            });
        }
        cleared = vec![false; rows];
        for &(r, _) in &out.pairs {
            cleared[r as usize] = true;
        }
    }
    for (c, &v) in filtered.blocks[0].values.iter().enumerate() {
        if !cleared[c] {
            bars.push(Bar {
                degree: -shift,
                birth: v,
                death: None,
                multiplicity: 1,
            });
        }
    }
    Barcode::new(bars)
}

fn expand(bars: &[&Bar]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for b in bars {
        for _ in 0..b.multiplicity {
            out.push((b.birth, b.death.unwrap_or(f64::INFINITY)));
        }
    }
    out
}

/// Bottleneck distance between barcodes: per degree, the minimal over
/// matchings of the largest endpoint move, unmatched finite bars paying half
/// their length; +∞ when the infinite-bar counts differ in any degree.
pub fn bottleneck(a: &Barcode, b: &Barcode) -> f64 {
    let mut degrees: Vec<i64> = a.bars.iter().chain(&b.bars).map(|x| x.degree).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let mut overall = 0.0f64;
    for d in degrees {
        let fa: Vec<&Bar> = a
            .bars
            .iter()
            .filter(|x| x.degree == d && !x.is_infinite())
            .collect();
        let fb: Vec<&Bar> = b
            .bars
            .iter()
            .filter(|x| x.degree == d && !x.is_infinite())
            .collect();
        let mut ia: Vec<f64> = a
            .bars
            .iter()
            .filter(|x| x.degree == d && x.is_infinite())
            .flat_map(|x| std::iter::repeat(x.birth).take(x.multiplicity as usize))
            .collect();
        let mut ib: Vec<f64> = b
            .bars
            .iter()
            .filter(|x| x.degree == d && x.is_infinite())
            .flat_map(|x| std::iter::repeat(x.birth).take(x.multiplicity as usize))
            .collect();
        if ia.len() != ib.len() {
            return f64::INFINITY;
        }
        // Infinite rays match in sorted order (optimal for the sup cost).
        ia.sort_unstable_by(f64::total_cmp);
        ib.sort_unstable_by(f64::total_cmp);
        let inf_cost = ia
            .iter()
            .zip(&ib)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        let fin_cost = finite_bottleneck(&expand(&fa), &expand(&fb));
        overall = overall.max(inf_cost).max(fin_cost);
    }
    overall
}

fn cost(x: (f64, f64), y: (f64, f64)) -> f64 {
    (x.0 - y.0).abs().max((x.1 - y.1).abs())
}

fn half(x: (f64, f64)) -> f64 {
    (x.1 - x.0) / 2.0
}

fn finite_bottleneck(xs: &[(f64, f64)], ys: &[(f64, f64)]) -> f64 {
    if xs.is_empty() && ys.is_empty() {
        return 0.0;
    }
    // Candidate thresholds: all pairwise matching costs and half-lengths.
    let mut cands = vec![0.0f64];
    for &x in xs {
        cands.push(half(x));
        for &y in ys {
            cands.push(cost(x, y));
        }
    }
    for &y in ys {
        cands.push(half(y));
    }
    cands.sort_unstable_by(f64::total_cmp);
    cands.dedup();
    let mut lo = 0usize;
    let mut hi = cands.len() - 1;
    debug_assert!(feasible(xs, ys, cands[hi]));
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(xs, ys, cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo]
}

/// Is there a perfect matching of cost ≤ t in the diagonal-augmented
/// bipartite graph? Left = xs + shadow(ys), right = ys + shadow(xs).
fn feasible(xs: &[(f64, f64)], ys: &[(f64, f64)], t: f64) -> bool {
    let nl = xs.len() + ys.len();
    let nr = ys.len() + xs.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nl];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            if cost(x, y) <= t {
                adj[i].push(j);
            }
        }
        if half(x) <= t {
            adj[i].push(ys.len() + i); // its own diagonal shadow
        }
    }
    for (i, &y) in ys.iter().enumerate() {
        let l = xs.len() + i;
        if half(y) <= t {
            adj[l].push(i);
        }
        // shadow-shadow edges are free
        for j in ys.len()..nr {
            adj[l].push(j);
        }
    }
    // Kuhn's augmenting-path matching.
    let mut match_r: Vec<Option<usize>> = vec![None; nr];
    fn try_augment(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        match_r: &mut [Option<usize>],
    ) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if match_r[v].is_none() || try_augment(match_r[v].unwrap(), adj, seen, match_r) {
                match_r[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut matched = 0;
    for u in 0..nl {
        let mut seen = vec![false; nr];
        if try_augment(u, &adj, &mut seen, &mut match_r) {
            matched += 1;
        }
    }
    matched == nl
}

/// Per-piece sampler error C₁/m + C₂·√E with C₁ = 4RT²/(1-T') and
/// C₂ = 2√(2R)·T/(1-T').
pub fn sampler_error_term(t_bound: f64, t_prime: f64, r_bound: f64, m: u32, e_tol: f64) -> f64 {
    let c1 = 4.0 * r_bound * t_bound * t_bound / (1.0 - t_prime);
    let c2 = 2.0 * (2.0 * r_bound).sqrt() * t_bound / (1.0 - t_prime);
    c1 / (m as f64) + c2 * e_tol.sqrt()
}

/// Certified bottleneck budget: the interleaving term of the discretized
/// complex, max|∇S|·√(2nN)/(2m), plus the per-piece sampler errors.
pub fn error_budget(spec: &GfqiSpec, m: u32, hj_errors: &[f64]) -> f64 {
    let n = spec.base_half_dim() as f64;
    let nn = spec.piece_count() as f64;
    let l = spec.gradient_bound();
    l * (2.0 * n * nn).sqrt() / (2.0 * m as f64) + hj_errors.iter().sum::<f64>()
}
