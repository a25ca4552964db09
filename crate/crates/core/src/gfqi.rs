//! Composition of sampled generating functions into a single function
//! quadratic at infinity.
//!
//! N piece samples S_j compose into
//!   S'(q_N, p_0; ξ) = Σ_j S_j(q̃_j, p̃_{j-1}) + Q(ξ),
//! where the diagonalizing fiber coordinates ξ = (ξ⁻, ξ⁺) enter the piece
//! arguments with integer coefficients, so lattice points map to lattice
//! points. A piecewise-linear radial cutoff ρ interpolates S' with the
//! quadratic form Q outside certified radii, producing a function equal to
//! Q beyond R_f⁺ in the fiber and R_b in the base.

use crate::error::Error;
use crate::radial::GenFunSample;

/// Dense lookup grid for one piece sample (zero outside the stored window).
#[derive(Debug, Clone)]
struct PieceGrid {
    min_i: i64,
    min_j: i64,
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl PieceGrid {
    fn build(sample: &GenFunSample) -> PieceGrid {
        let mut min_i = i64::MAX;
        let mut max_i = i64::MIN;
        let mut min_j = i64::MAX;
        let mut max_j = i64::MIN;
        for &(i, j) in sample.values.keys() {
            min_i = min_i.min(i);
            max_i = max_i.max(i);
            min_j = min_j.min(j);
            max_j = max_j.max(j);
        }
        if min_i > max_i {
            return PieceGrid {
                min_i: 0,
                min_j: 0,
                width: 0,
                height: 0,
                data: Vec::new(),
            };
        }
        let width = (max_i - min_i + 1) as usize;
        let height = (max_j - min_j + 1) as usize;
        let mut data = vec![0.0; width * height];
        for (&(i, j), &v) in &sample.values {
            data[(i - min_i) as usize * height + (j - min_j) as usize] = v;
        }
        PieceGrid {
            min_i,
            min_j,
            width,
            height,
            data,
        }
    }

    #[inline]
    fn lookup(&self, i: i64, j: i64) -> f64 {
        let di = i - self.min_i;
        let dj = j - self.min_j;
        if di < 0 || dj < 0 || di as usize >= self.width || dj as usize >= self.height {
            return 0.0;
        }
        self.data[di as usize * self.height + dj as usize]
    }
}

/// The composed generating function quadratic at infinity, together with all
/// derived constants.
#[derive(Debug, Clone)]
pub struct GfqiSpec {
    pieces: Vec<GenFunSample>,
    grids: Vec<PieceGrid>,
    n: usize,
    big_n: usize,
    mesh: u32,
    t_bound: f64,
    r_bound: f64,
    fiber_dim: usize,
    quad_index: usize,
    m_const: f64,
    c0: f64,
    rf_minus: f64,
    rf_plus: f64,
    rf: f64,
    rb: f64,
    min_pieces: Vec<f64>,
}

/// Per-fiber-point context: the integer shifts entering the piece arguments
/// and the quadratic form value, reusable across base points.
#[derive(Debug, Clone)]
pub struct FiberContext {
    /// suffix[j] = Σ_{k=j+1..N-1} (ξ⁻_k - ξ⁺_k) in lattice units, for the
    /// argument q̃_{j+1}; suffix[N-1] = 0.
    suffix: Vec<i64>,
    /// p-offset for p̃_{j-1}: 0 for j = 1, else ξ⁻_{j-1} + ξ⁺_{j-1}.
    p_shift: Vec<i64>,
    /// Q(ξ).
    pub quad: f64,
    /// |ξ|².
    pub norm2: f64,
}

impl GfqiSpec {
    /// Derive all certified constants for the composition of `pieces`
    /// (ordered: the first piece acts first). T bounds every piece's C⁰
    /// distance from the identity and the gradient of every sample; R bounds
    /// every support radius.
    pub fn derive_radii(
        pieces: Vec<GenFunSample>,
        n: usize,
        t_bound: f64,
        r_bound: f64,
    ) -> Result<GfqiSpec, Error> {
        let big_n = pieces.len();
        if big_n < 2 {
            return Err(Error::InvalidBounds("need at least N = 2 pieces".into()));
        }
        if !(t_bound > 0.0) || !(r_bound > 0.0) {
            return Err(Error::InvalidBounds("T and R must be positive".into()));
        }
        if n != 1 {
            return Err(Error::ConfigInvalid(
                "piece samples are planar; base half-dimension must be 1".into(),
            ));
        }
        let mesh = pieces[0].mesh;
        for p in &pieces[1..] {
            if p.mesh != mesh {
                return Err(Error::MeshMismatch {
                    expected: mesh,
                    found: p.mesh,
                });
            }
        }
        let nf = big_n as f64;
        let sqrt_sum: f64 = (1..big_n).map(|j| (j as f64).sqrt()).sum();
        let m_const = std::f64::consts::SQRT_2 * t_bound * ((nf - 1.0) + sqrt_sum);
        let c0 = nf * t_bound * r_bound;
        let rf_minus = c0 / m_const + m_const;
        let rf_plus = c0 / m_const + 2.0 * m_const;
        let min_pieces: Vec<f64> = pieces.iter().map(|p| p.min_value()).collect();
        let min_sum: f64 = min_pieces.iter().sum();
        if min_sum > 0.0 {
            return Err(Error::InvalidBounds(
                "piece minima must be nonpositive for compactly supported samples".into(),
            ));
        }
        let rf = (rf_plus * rf_plus - min_sum).sqrt();
        debug_assert!(rf >= rf_plus);
        let nf64 = n as f64;
        let rb =
            (2.0 * nf64).sqrt() * (r_bound + t_bound) + 2.0 * (nf64 * (nf - 1.0)).sqrt() * rf_plus;
        let grids = pieces.iter().map(PieceGrid::build).collect();
        Ok(GfqiSpec {
            grids,
            pieces,
            n,
            big_n,
            mesh,
            t_bound,
            r_bound,
            fiber_dim: 2 * n * (big_n - 1),
            quad_index: n * (big_n - 1),
            m_const,
            c0,
            rf_minus,
            rf_plus,
            rf,
            rb,
            min_pieces,
        })
    }

    pub fn pieces(&self) -> &[GenFunSample] {
        &self.pieces
    }
    pub fn piece_count(&self) -> usize {
        self.big_n
    }
    pub fn base_half_dim(&self) -> usize {
        self.n
    }
    pub fn mesh(&self) -> u32 {
        self.mesh
    }
    pub fn t_bound(&self) -> f64 {
        self.t_bound
    }
    pub fn r_bound(&self) -> f64 {
        self.r_bound
    }
    /// d = 2n(N-1).
    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }
    /// i = n(N-1), the index of the quadratic form.
    pub fn quad_index(&self) -> usize {
        self.quad_index
    }
    /// Uniform bound M on |∂_ξ(S' - Q)|.
    pub fn m_const(&self) -> f64 {
        self.m_const
    }
    /// C₀ = N·T·R ≥ sup |S'(·, 0)|.
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn rf_minus(&self) -> f64 {
        self.rf_minus
    }
    pub fn rf_plus(&self) -> f64 {
        self.rf_plus
    }
    pub fn rf(&self) -> f64 {
        self.rf
    }
    pub fn rb(&self) -> f64 {
        self.rb
    }
    pub fn min_pieces(&self) -> &[f64] {
        &self.min_pieces
    }

    /// Q(ξ) = -Σ (ξ⁻_j)² + Σ (ξ⁺_j)², fiber given in lattice units.
    pub fn quad_form(&self, fiber: &[i64]) -> f64 {
        assert_eq!(fiber.len(), self.fiber_dim);
        let half = self.fiber_dim / 2;
        let m2 = (self.mesh as f64) * (self.mesh as f64);
        let mut q = 0.0;
        for (idx, &x) in fiber.iter().enumerate() {
            let sq = (x * x) as f64;
            if idx < half {
                q -= sq;
            } else {
                q += sq;
            }
        }
        q / m2
    }

    /// Precompute the integer shifts and quadratic data of one fiber point.
    /// Layout: fiber = (ξ⁻_1..ξ⁻_{N-1}, ξ⁺_1..ξ⁺_{N-1}), lattice units.
    pub fn fiber_context(&self, fiber: &[i64]) -> FiberContext {
        assert_eq!(fiber.len(), self.fiber_dim);
        let half = self.fiber_dim / 2;
        let (minus, plus) = fiber.split_at(half);
        let nn = self.big_n;
        let mut suffix = vec![0i64; nn];
        for j in (0..nn - 1).rev() {
            suffix[j] = suffix[j + 1] + minus[j] - plus[j];
        }
        let mut p_shift = vec![0i64; nn];
        for j in 1..nn {
            p_shift[j] = minus[j - 1] + plus[j - 1];
        }
        let m2 = (self.mesh as f64) * (self.mesh as f64);
        let mut quad = 0.0;
        let mut norm2 = 0.0;
        for &x in minus {
            let sq = (x * x) as f64;
            quad -= sq;
            norm2 += sq;
        }
        for &x in plus {
            let sq = (x * x) as f64;
            quad += sq;
            norm2 += sq;
        }
        FiberContext {
            suffix,
            p_shift,
            quad: quad / m2,
            norm2: norm2 / m2,
        }
    }

    /// Σ_j S_j(q̃_j, p̃_{j-1}) for base lattice point (q, p).
    #[inline]
    fn piece_sum(&self, q: i64, p: i64, ctx: &FiberContext) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.big_n {
            sum += self.grids[j].lookup(q + ctx.suffix[j], p + ctx.p_shift[j]);
        }
        sum
    }

    /// S'(q, p; ξ) = Σ_j S_j(q̃_j, p̃_{j-1}) + Q(ξ).
    pub fn eval_s_prime(&self, base: &[i64], fiber: &[i64]) -> f64 {
        assert_eq!(base.len(), 2 * self.n);
        let ctx = self.fiber_context(fiber);
        self.piece_sum(base[0], base[1], &ctx) + ctx.quad
    }

    /// The cutoff value: ρ(|ξ|)·S' + (1 - ρ(|ξ|))·Q, exactly Q outside the
    /// base radius R_b or the fiber radius R_f⁺ and exactly S' inside R_f⁻.
    pub fn eval_gfqi(&self, base: &[i64], fiber: &[i64]) -> f64 {
        assert_eq!(base.len(), 2 * self.n);
        let ctx = self.fiber_context(fiber);
        self.eval_with_context(base[0], base[1], &ctx)
    }

    /// Same as [`eval_gfqi`](Self::eval_gfqi) with a reusable fiber context.
    #[inline]
    pub fn eval_with_context(&self, q: i64, p: i64, ctx: &FiberContext) -> f64 {
        let m2 = (self.mesh as f64) * (self.mesh as f64);
        let base_norm2 = ((q * q + p * p) as f64) / m2;
        if base_norm2 >= self.rb * self.rb {
            return ctx.quad;
        }
        if ctx.norm2 >= self.rf_plus * self.rf_plus {
            return ctx.quad;
        }
        if ctx.norm2 <= self.rf_minus * self.rf_minus {
            return self.piece_sum(q, p, ctx) + ctx.quad;
        }
        let rho = (self.rf_plus - ctx.norm2.sqrt()) / self.m_const;
        ctx.quad + rho * self.piece_sum(q, p, ctx)
    }

    /// Value of the quadratic form alone, for the collapsed boundary class.
    #[inline]
    pub fn quad_of_context(&self, ctx: &FiberContext) -> f64 {
        ctx.quad
    }

    /// max |∇S| ≤ C(R)·T·N^{3/2} over the certified window, with
    /// C(R) = R/2 + √3 + 2^{3/4}·√(5 + (1+√2)R).
    pub fn gradient_bound(&self) -> f64 {
        c_of_r(self.r_bound) * self.t_bound * (self.big_n as f64).powf(1.5)
    }
}

/// The R-dependent constant in the gradient bound.
pub fn c_of_r(r: f64) -> f64 {
    r / 2.0
        + 3.0f64.sqrt()
        + 2.0f64.powf(0.75) * (5.0 + (1.0 + std::f64::consts::SQRT_2) * r).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn sample_from(mesh: u32, values: &[((i64, i64), f64)], support_radius: f64) -> GenFunSample {
        GenFunSample {
            mesh,
            support_radius,
            center: [0.0, 0.0],
            values: values.iter().copied().collect::<BTreeMap<_, _>>(),
            sup_error: 0.0,
            inverse_tolerance: 1e-12,
        }
    }

    fn zero_sample(mesh: u32) -> GenFunSample {
        sample_from(mesh, &[((0, 0), 0.0)], 1.0)
    }

    #[test]
    fn radii_for_two_pieces() {
        // N = 2: M = 2√2·T.
        let spec =
            GfqiSpec::derive_radii(vec![zero_sample(4), zero_sample(4)], 1, 1.0, 1.0).unwrap();
        let sqrt2 = std::f64::consts::SQRT_2;
        assert!((spec.m_const() - 2.0 * sqrt2).abs() < 1e-15);
        assert!((spec.c0() - 2.0).abs() < 1e-15);
        assert!((spec.rf_minus() - (sqrt2 / 2.0 + 2.0 * sqrt2)).abs() < 1e-12);
        assert!((spec.rf_plus() - (spec.rf_minus() + 2.0 * sqrt2)).abs() < 1e-12);
        // min S_j = 0 for both pieces → R_f = R_f⁺ exactly.
        assert_eq!(spec.rf(), spec.rf_plus());
        assert!((spec.rb() - (sqrt2 * 2.0 + 2.0 * spec.rf_plus())).abs() < 1e-12);
        assert_eq!(spec.fiber_dim(), 2);
        assert_eq!(spec.quad_index(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GfqiSpec::derive_radii(vec![zero_sample(4)], 1, 1.0, 1.0).is_err());
        assert!(GfqiSpec::derive_radii(vec![zero_sample(4), zero_sample(4)], 1, 0.0, 1.0).is_err());
        assert!(
            GfqiSpec::derive_radii(vec![zero_sample(4), zero_sample(4)], 1, 1.0, -1.0).is_err()
        );
        assert!(matches!(
            GfqiSpec::derive_radii(vec![zero_sample(4), zero_sample(8)], 1, 1.0, 1.0),
            Err(crate::Error::MeshMismatch { .. })
        ));
    }

    #[test]
    fn zero_pieces_give_pure_quadratic() {
        let spec =
            GfqiSpec::derive_radii(vec![zero_sample(2), zero_sample(2)], 1, 1.0, 1.0).unwrap();
        for (minus, plus) in [(0i64, 0i64), (1, 2), (-3, 1), (5, -4)] {
            let expect = (-(minus * minus) as f64 + (plus * plus) as f64) / 4.0;
            assert_eq!(spec.eval_s_prime(&[7, -2], &[minus, plus]), expect);
            assert_eq!(spec.quad_form(&[minus, plus]), expect);
        }
    }

    #[test]
    fn two_pieces_at_zero_fiber() {
        let s1 = sample_from(1, &[((0, 0), 0.25), ((1, 0), 0.5)], 1.0);
        let s2 = sample_from(1, &[((0, 0), -0.125), ((1, 0), 1.0)], 1.0);
        let spec = GfqiSpec::derive_radii(vec![s1, s2], 1, 1.0, 1.0).unwrap();
        // ξ = 0 → S₁(q, p) + S₂(q, p).
        assert_eq!(spec.eval_s_prime(&[0, 0], &[0, 0]), 0.25 - 0.125);
        assert_eq!(spec.eval_s_prime(&[1, 0], &[0, 0]), 0.5 + 1.0);
    }

    #[test]
    fn composition_matches_symbolic_expansion() {
        // One nonzero piece S₁, S₂ ≡ 0:
        // S'(q, p; ξ⁻, ξ⁺) = S₁(q + ξ⁻ - ξ⁺, p) - (ξ⁻)² + (ξ⁺)².
        let mesh = 2u32;
        let vals: Vec<((i64, i64), f64)> = (-3..=3)
            .flat_map(|i| (-3..=3).map(move |j| ((i, j), (i * i - 2 * j + 3 * i * j) as f64)))
            .collect();
        let s1 = sample_from(mesh, &vals, 2.0);
        let s1_lookup = s1.clone();
        let spec = GfqiSpec::derive_radii(vec![s1, zero_sample(mesh)], 1, 1.0, 1.0).unwrap();
        let points: [(i64, i64, i64, i64); 5] = [
            (0, 0, 1, 0),
            (1, -1, 2, 1),
            (-2, 3, 0, -2),
            (3, 3, -1, -1),
            (-1, 0, 2, -2),
        ];
        for (q, p, xm, xp) in points {
            let expect =
                s1_lookup.lookup((q + xm - xp, p)) + (-((xm * xm) as f64) + (xp * xp) as f64) / 4.0;
            let got = spec.eval_s_prime(&[q, p], &[xm, xp]);
            assert!(
                (got - expect).abs() < 1e-15,
                "({q},{p};{xm},{xp}): {got} vs {expect}"
            );
        }
    }

    #[test]
    fn cutoff_branches_are_exact() {
        let s1 = sample_from(1, &[((0, 0), 0.25)], 1.0);
        let s2 = sample_from(1, &[((0, 0), 0.125)], 1.0);
        let spec = GfqiSpec::derive_radii(vec![s1, s2], 1, 0.05, 1.0).unwrap();
        // Small T makes the radii small: C0/M + 2M with M = 2√2·0.05.
        let far_fiber = [spec.rf_plus().ceil() as i64 + 1, 0];
        assert_eq!(
            spec.eval_gfqi(&[0, 0], &far_fiber),
            spec.quad_form(&far_fiber)
        );
        // |ξ| ≤ R_f⁻ → the plain composition.
        assert_eq!(
            spec.eval_gfqi(&[0, 0], &[0, 0]),
            spec.eval_s_prime(&[0, 0], &[0, 0])
        );
        // |base| ≥ R_b → Q even at ξ = 0.
        let far_base = spec.rb().ceil() as i64 + 1;
        assert_eq!(spec.eval_gfqi(&[far_base, 0], &[0, 0]), 0.0);
        assert_eq!(
            spec.eval_gfqi(&[far_base, 0], &[1, 2]),
            spec.quad_form(&[1, 2])
        );
    }

    #[test]
    fn gradient_bound_formula() {
        let s = vec![zero_sample(4), zero_sample(4)];
        let spec = GfqiSpec::derive_radii(s, 1, 1.0, 1.0).unwrap();
        let expect =
            (0.5 + 3.0f64.sqrt() + 2.0f64.powf(0.75) * (6.0 + std::f64::consts::SQRT_2).sqrt())
                * 2.0f64.powf(1.5);
        assert!((spec.gradient_bound() - expect).abs() < 1e-12);

        // Linear in T.
        let spec2 =
            GfqiSpec::derive_radii(vec![zero_sample(4), zero_sample(4)], 1, 2.0, 1.0).unwrap();
        assert!((spec2.gradient_bound() - 2.0 * spec.gradient_bound()).abs() < 1e-12);
    }

    #[test]
    fn three_piece_suffix_shifts() {
        // N = 3 exercises the suffix sums: q̃_1 = q + (ξ⁻_1+ξ⁻_2) - (ξ⁺_1+ξ⁺_2),
        // q̃_2 = q + ξ⁻_2 - ξ⁺_2, q̃_3 = q; p̃_0 = p, p̃_1 = p + ξ⁻_1 + ξ⁺_1,
        // p̃_2 = p + ξ⁻_2 + ξ⁺_2.
        let vals: Vec<((i64, i64), f64)> = (-6..=6)
            .flat_map(|i| (-6..=6).map(move |j| ((i, j), (100 * i + j) as f64)))
            .collect();
        let pieces = vec![
            sample_from(1, &vals, 8.0),
            sample_from(1, &vals, 8.0),
            sample_from(1, &vals, 8.0),
        ];
        let look = pieces[0].clone();
        let spec = GfqiSpec::derive_radii(pieces, 1, 1.0, 1.0).unwrap();
        let (q, p) = (1i64, -1i64);
        let fiber = [2i64, -1, 1, 3]; // (ξ⁻_1, ξ⁻_2, ξ⁺_1, ξ⁺_2)
        let (xm1, xm2, xp1, xp2) = (2i64, -1i64, 1i64, 3i64);
        let expect = look.lookup((q + (xm1 + xm2) - (xp1 + xp2), p))
            + look.lookup((q + xm2 - xp2, p + xm1 + xp1))
            + look.lookup((q, p + xm2 + xp2))
            + (-((xm1 * xm1 + xm2 * xm2) as f64) + ((xp1 * xp1 + xp2 * xp2) as f64));
        assert_eq!(spec.eval_s_prime(&[q, p], &fiber), expect);
        assert_eq!(spec.fiber_dim(), 4);
        assert_eq!(spec.quad_index(), 2);
    }
}
