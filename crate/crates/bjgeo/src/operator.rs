//! Operators from l-infinity^n to l1^m as dense matrices: operator norm by
//! extreme-point enumeration (exact over the reals, grid-plus-ascent over the
//! complexes), norming sets, operator-level orthogonality, smoothness, the
//! Gamma embedding into the l-infinity sum, and signed permutations.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{is_finite_c, Field};
use crate::hull::{OrthoCertificate, RangeAtom};
use crate::lp::SimplexScalar;
use crate::parallel::map_indexed;
use crate::product::{ProductError, ProductVector};
use crate::scalar::{is_smooth_vec, support_range, FiniteVector, NormKind, VectorError};
use crate::tol;

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("matrix needs at least one row and one column")]
    Empty,
    #[error("dimension exceeds the enumeration envelope ({0} > {max})", max = tol::MAX_DIM)]
    TooLarge(usize),
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("real matrix carries imaginary parts")]
    FieldMismatch,
    #[error("operand shapes do not match")]
    ShapeMismatch,
    #[error("zero operator has no norming set")]
    ZeroOperator,
    #[error("sign-vector entries must be +1 or -1")]
    BadSignVector,
    #[error("canonical family is degenerate for n = {0}")]
    UnsupportedDimension(usize),
    #[error("alignment search is guarded to n <= 8, got {0}")]
    DimensionTooLarge(usize),
    #[error("basis is singular")]
    SingularBasis,
    #[error("points are linearly dependent")]
    DependentPoints,
    #[error("permutation data is not a signed permutation")]
    BadPermutation,
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

/// A vertex of the l-infinity^n unit ball over the reals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self, OperatorError> {
        if signs.is_empty() {
            return Err(OperatorError::Empty);
        }
        if signs.len() > tol::MAX_DIM {
            return Err(OperatorError::TooLarge(signs.len()));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(OperatorError::BadSignVector);
        }
        Ok(SignVector(signs))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn negated(&self) -> SignVector {
        SignVector(self.0.iter().map(|s| -s).collect())
    }

    /// Representative of {x, -x} with a positive leading entry.
    pub fn canonical(&self) -> SignVector {
        if self.0[0] < 0 {
            self.negated()
        } else {
            self.clone()
        }
    }

    pub fn to_vector(&self, field: Field) -> FiniteVector {
        let entries: Vec<Complex64> = self
            .0
            .iter()
            .map(|&s| Complex64::new(f64::from(s), 0.0))
            .collect();
        FiniteVector::new(entries, NormKind::Linf, field).expect("signs are finite")
    }

    /// Back-conversion for unit vectors whose coordinates are all within
    /// tolerance of +1 or -1.
    pub fn try_from_vector(v: &FiniteVector) -> Option<SignVector> {
        let mut signs = Vec::with_capacity(v.dim());
        for z in v.entries() {
            if z.im.abs() > tol::MARGIN {
                return None;
            }
            if (z.re - 1.0).abs() <= tol::MARGIN {
                signs.push(1);
            } else if (z.re + 1.0).abs() <= tol::MARGIN {
                signs.push(-1);
            } else {
                return None;
            }
        }
        SignVector::new(signs).ok()
    }

    /// The 2^(n-1) vertices up to global sign, leading entry +1, in binary
    /// counter order.
    pub fn enumerate_canonical(n: usize) -> Vec<SignVector> {
        assert!((1..=tol::MAX_DIM).contains(&n), "dimension envelope");
        (0..1usize << (n - 1))
            .map(|bits| {
                let mut signs = vec![1i8; n];
                for (j, s) in signs.iter_mut().enumerate().skip(1) {
                    if bits >> (j - 1) & 1 == 1 {
                        *s = -1;
                    }
                }
                SignVector(signs)
            })
            .collect()
    }
}

/// Dense m x n matrix acting from l-infinity^n to l1^m.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    m: usize,
    n: usize,
    entries: Vec<Complex64>, // row-major
    field: Field,
}

impl OperatorMatrix {
    pub fn new(
        m: usize,
        n: usize,
        entries: Vec<Complex64>,
        field: Field,
    ) -> Result<Self, OperatorError> {
        if m == 0 || n == 0 {
            return Err(OperatorError::Empty);
        }
        if m > tol::MAX_DIM {
            return Err(OperatorError::TooLarge(m));
        }
        if n > tol::MAX_DIM {
            return Err(OperatorError::TooLarge(n));
        }
        if entries.len() != m * n {
            return Err(OperatorError::ShapeMismatch);
        }
        if !entries.iter().all(|&z| is_finite_c(z)) {
            return Err(OperatorError::NonFinite);
        }
        if field == Field::Real && entries.iter().any(|z| z.im != 0.0) {
            return Err(OperatorError::FieldMismatch);
        }
        Ok(OperatorMatrix {
            m,
            n,
            entries,
            field,
        })
    }

    pub fn from_rows_real(rows: &[Vec<f64>]) -> Result<Self, OperatorError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(OperatorError::ShapeMismatch);
        }
        let entries = rows
            .iter()
            .flatten()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        OperatorMatrix::new(m, n, entries, Field::Real)
    }

    pub fn from_rows_complex(rows: &[Vec<Complex64>]) -> Result<Self, OperatorError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(OperatorError::ShapeMismatch);
        }
        let entries = rows.iter().flatten().copied().collect();
        OperatorMatrix::new(m, n, entries, Field::Complex)
    }

    pub fn zero(m: usize, n: usize, field: Field) -> Result<Self, OperatorError> {
        OperatorMatrix::new(m, n, vec![Complex64::new(0.0, 0.0); m * n], field)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.norm() == 0.0)
    }

    pub fn scale(&self, a: Complex64) -> OperatorMatrix {
        let field = if a.im != 0.0 {
            Field::Complex
        } else {
            self.field
        };
        OperatorMatrix {
            m: self.m,
            n: self.n,
            entries: self.entries.iter().map(|&z| a * z).collect(),
            field,
        }
    }

    pub fn add_scaled(
        &self,
        a: Complex64,
        other: &OperatorMatrix,
    ) -> Result<OperatorMatrix, OperatorError> {
        if self.m != other.m || self.n != other.n {
            return Err(OperatorError::ShapeMismatch);
        }
        let field = if a.im != 0.0 {
            Field::Complex
        } else {
            Field::join(self.field, other.field)
        };
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&x, &y)| x + a * y)
            .collect();
        OperatorMatrix::new(self.m, self.n, entries, field)
    }

    /// Image of a point of l-infinity^n, as an l1^m vector.
    pub fn apply(&self, x: &FiniteVector) -> Result<FiniteVector, OperatorError> {
        if x.dim() != self.n {
            return Err(OperatorError::ShapeMismatch);
        }
        let field = Field::join(self.field, x.field());
        let entries: Vec<Complex64> = (0..self.m)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x.entries())
                    .map(|(&a, &v)| a * v)
                    .sum()
            })
            .collect();
        Ok(FiniteVector::new(entries, NormKind::L1, field)?)
    }

    pub fn apply_signs(&self, eps: &SignVector) -> Result<FiniteVector, OperatorError> {
        if eps.dim() != self.n {
            return Err(OperatorError::ShapeMismatch);
        }
        let entries: Vec<Complex64> = (0..self.m)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(eps.signs())
                    .map(|(&a, &s)| a * f64::from(s))
                    .sum()
            })
            .collect();
        Ok(FiniteVector::new(entries, NormKind::L1, self.field)?)
    }
}

/// Dense matrix product a . b.
pub fn compose(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix, OperatorError> {
    if a.n != b.m {
        return Err(OperatorError::ShapeMismatch);
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); a.m * b.n];
    for i in 0..a.m {
        for k in 0..a.n {
            let aik = a.entry(i, k);
            if aik.norm() == 0.0 {
                continue;
            }
            for j in 0..b.n {
                entries[i * b.n + j] += aik * b.entry(k, j);
            }
        }
    }
    OperatorMatrix::new(a.m, b.n, entries, Field::join(a.field, b.field))
}

pub const DEFAULT_PHASE_GRID: usize = 64;
const ASCENT_RANDOM_STARTS: u64 = 8;
const ASCENT_SEED: u64 = 0xB1CE0;

pub fn op_norm(t: &OperatorMatrix) -> f64 {
    op_norm_with(t, DEFAULT_PHASE_GRID, 1)
}

/// Operator norm. Real matrices: exact maximum of ||T eps||_1 over the
/// 2^(n-1) sign vectors. Complex matrices: best value of a coordinate-phase
/// ascent from grid, sign-vector, and seeded starts; a certified lower bound.
pub fn op_norm_with(t: &OperatorMatrix, phase_grid: usize, workers: usize) -> f64 {
    match t.field {
        Field::Real => {
            let reps = SignVector::enumerate_canonical(t.n);
            let values = map_indexed(workers, reps.len(), |i| real_image_norm(t, &reps[i]));
            values.into_iter().fold(0.0, f64::max)
        }
        Field::Complex => {
            let starts = ascent_starts(t.n);
            let runs = map_indexed(workers, starts.len(), |i| {
                phase_ascent(t, starts[i].clone(), phase_grid)
            });
            runs.into_iter().map(|(v, _)| v).fold(0.0, f64::max)
        }
    }
}

fn real_image_norm(t: &OperatorMatrix, eps: &SignVector) -> f64 {
    (0..t.m)
        .map(|i| {
            t.row(i)
                .iter()
                .zip(eps.signs())
                .map(|(a, &s)| a.re * f64::from(s))
                .sum::<f64>()
                .abs()
        })
        .sum()
}

/// Exact rational operator norm for real matrices; every f64 entry converts
/// exactly. None for complex input.
pub(crate) fn op_norm_rational(t: &OperatorMatrix) -> Option<BigRational> {
    if t.field != Field::Real {
        return None;
    }
    let rat: Vec<BigRational> = t
        .entries
        .iter()
        .map(|z| <BigRational as SimplexScalar>::from_f64(z.re))
        .collect();
    let mut best: BigRational = Zero::zero();
    for eps in SignVector::enumerate_canonical(t.n) {
        let mut total: BigRational = Zero::zero();
        for i in 0..t.m {
            let mut acc: BigRational = Zero::zero();
            for (j, &s) in eps.signs().iter().enumerate() {
                let term = &rat[i * t.n + j] * BigRational::from_integer(s.into());
                acc += term;
            }
            if acc < Zero::zero() {
                acc = -acc;
            }
            total += acc;
        }
        if total > best {
            best = total;
        }
    }
    Some(best)
}

fn ascent_starts(n: usize) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![0.0; n]];
    if n <= 8 {
        for sv in SignVector::enumerate_canonical(n).into_iter().skip(1) {
            starts.push(
                sv.signs()
                    .iter()
                    .map(|&s| if s > 0 { 0.0 } else { std::f64::consts::PI })
                    .collect(),
            );
        }
    }
    for k in 0..ASCENT_RANDOM_STARTS {
        let mut rng =
            ChaCha8Rng::seed_from_u64(ASCENT_SEED ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        starts.push(
            (0..n)
                .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
                .collect(),
        );
    }
    starts
}

fn phase_objective(t: &OperatorMatrix, phases: &[f64]) -> f64 {
    (0..t.m)
        .map(|i| {
            t.row(i)
                .iter()
                .zip(phases)
                .map(|(&a, &th)| a * Complex64::from_polar(1.0, th))
                .sum::<Complex64>()
                .norm()
        })
        .sum()
}

/// Coordinate-wise phase ascent: each coordinate update maximizes the
/// objective over that coordinate's phase on a grid, then refines the best
/// bracket by golden section. Monotone, so it terminates at a stationary
/// phase profile.
fn phase_ascent(t: &OperatorMatrix, mut phases: Vec<f64>, grid: usize) -> (f64, Vec<f64>) {
    let grid = grid.max(8);
    let mut value = phase_objective(t, &phases);
    for _ in 0..200 {
        let before = value;
        for j in 0..t.n {
            // Row residuals with coordinate j removed.
            let residual: Vec<Complex64> = (0..t.m)
                .map(|i| {
                    t.row(i)
                        .iter()
                        .zip(phases.iter())
                        .enumerate()
                        .filter(|(l, _)| *l != j)
                        .map(|(_, (&a, &th))| a * Complex64::from_polar(1.0, th))
                        .sum()
                })
                .collect();
            let col: Vec<Complex64> = (0..t.m).map(|i| t.entry(i, j)).collect();
            let eval = |th: f64| -> f64 {
                residual
                    .iter()
                    .zip(&col)
                    .map(|(&r, &a)| (r + a * Complex64::from_polar(1.0, th)).norm())
                    .sum()
            };
            let step = std::f64::consts::TAU / grid as f64;
            let mut best_k = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for k in 0..grid {
                let v = eval(k as f64 * step);
                if v > best_v {
                    best_v = v;
                    best_k = k;
                }
            }
            // Golden-section maximization on the winning bracket.
            let (mut lo, mut hi) = ((best_k as f64 - 1.0) * step, (best_k as f64 + 1.0) * step);
            const INV_PHI: f64 = 0.618_033_988_749_894_8;
            let mut a = hi - (hi - lo) * INV_PHI;
            let mut b = lo + (hi - lo) * INV_PHI;
            let (mut fa, mut fb) = (eval(a), eval(b));
            for _ in 0..60 {
                if fa < fb {
                    lo = a;
                    a = b;
                    fa = fb;
                    b = lo + (hi - lo) * INV_PHI;
                    fb = eval(b);
                } else {
                    hi = b;
                    b = a;
                    fb = fa;
                    a = hi - (hi - lo) * INV_PHI;
                    fa = eval(a);
                }
            }
            let th = 0.5 * (lo + hi);
            let v = eval(th);
            if v >= best_v {
                phases[j] = th.rem_euclid(std::f64::consts::TAU);
                value = v;
            } else {
                phases[j] = (best_k as f64 * step).rem_euclid(std::f64::consts::TAU);
                value = best_v;
            }
        }
        if value - before <= 1e-12 * (1.0 + value) {
            break;
        }
    }
    (value, phases)
}

/// Unit vectors where the operator attains (real: exactly; complex: within
/// the ascent's reach of) its norm, stored up to sign or global phase.
#[derive(Clone, Debug)]
pub struct NormingSet {
    pub representatives: Vec<FiniteVector>,
    pub approximate: bool,
}

pub fn norming_set(t: &OperatorMatrix) -> Result<NormingSet, OperatorError> {
    norming_set_with(t, DEFAULT_PHASE_GRID, 1)
}

pub fn norming_set_with(
    t: &OperatorMatrix,
    phase_grid: usize,
    workers: usize,
) -> Result<NormingSet, OperatorError> {
    if t.is_zero() {
        return Err(OperatorError::ZeroOperator);
    }
    match t.field {
        Field::Real => {
            let reps = SignVector::enumerate_canonical(t.n);
            let values = map_indexed(workers, reps.len(), |i| real_image_norm(t, &reps[i]));
            let norm = values.iter().copied().fold(0.0, f64::max);
            let representatives = reps
                .iter()
                .zip(&values)
                .filter(|(_, &v)| v >= (1.0 - tol::ACTIVE_REL) * norm)
                .map(|(r, _)| r.to_vector(Field::Real))
                .collect();
            Ok(NormingSet {
                representatives,
                approximate: false,
            })
        }
        Field::Complex => {
            let starts = ascent_starts(t.n);
            let runs = map_indexed(workers, starts.len(), |i| {
                phase_ascent(t, starts[i].clone(), phase_grid)
            });
            let norm = runs.iter().map(|(v, _)| *v).fold(0.0, f64::max);
            let mut representatives: Vec<FiniteVector> = Vec::new();
            let mut keys: Vec<Vec<(i64, i64)>> = Vec::new();
            for (v, phases) in &runs {
                if *v < (1.0 - tol::ACTIVE_REL) * norm {
                    continue;
                }
                // Quotient out the global phase: rotate so coordinate 0 is 1.
                let base = phases[0];
                let coords: Vec<Complex64> = phases
                    .iter()
                    .map(|&th| Complex64::from_polar(1.0, th - base))
                    .collect();
                let key: Vec<(i64, i64)> = coords
                    .iter()
                    .map(|z| ((z.re * 1e7).round() as i64, (z.im * 1e7).round() as i64))
                    .collect();
                if keys.contains(&key) {
                    continue;
                }
                keys.push(key);
                representatives.push(FiniteVector::new(coords, NormKind::Linf, Field::Complex)?);
            }
            Ok(NormingSet {
                representatives,
                approximate: true,
            })
        }
    }
}

/// Range atoms of S against T: union over norming representatives x of the
/// l1 support range of Sx against Tx.
pub fn operator_range_atoms(
    t: &OperatorMatrix,
    s: &OperatorMatrix,
) -> Result<(Vec<RangeAtom>, bool), OperatorError> {
    if t.m != s.m || t.n != s.n {
        return Err(OperatorError::ShapeMismatch);
    }
    let ns = norming_set(t)?;
    let mut atoms = Vec::new();
    for x in &ns.representatives {
        let tx = t.apply(x)?;
        let sx = s.apply(x)?;
        let range = support_range(&tx, &sx)?;
        atoms.extend_from_slice(range.atoms());
    }
    Ok((atoms, ns.approximate))
}

pub fn operator_bj_orthogonal(
    t: &OperatorMatrix,
    s: &OperatorMatrix,
) -> Result<bool, OperatorError> {
    Ok(operator_bj_orthogonal_cert(t, s)?.orthogonal)
}

pub fn operator_bj_orthogonal_cert(
    t: &OperatorMatrix,
    s: &OperatorMatrix,
) -> Result<OrthoCertificate, OperatorError> {
    let (atoms, approximate) = operator_range_atoms(t, s)?;
    let field = Field::join(t.field, s.field);
    Ok(OrthoCertificate::from_atoms(
        &atoms,
        field,
        tol::MARGIN,
        approximate,
    ))
}

/// Smooth iff the norming set is one representative (up to sign or phase)
/// whose image has full support in l1^m.
pub fn operator_is_smooth(t: &OperatorMatrix) -> Result<bool, OperatorError> {
    let ns = norming_set(t)?;
    if ns.representatives.len() != 1 {
        return Ok(false);
    }
    let image = t.apply(&ns.representatives[0])?;
    Ok(is_smooth_vec(&image)?)
}

/// The family x_i = (sum of all coordinates) - 2 e_i: entry -1 at i, +1
/// elsewhere. Independent for every n except 2, which is rejected.
pub fn canonical_extreme_basis(n: usize) -> Result<Vec<SignVector>, OperatorError> {
    if n == 0 {
        return Err(OperatorError::Empty);
    }
    if n == 2 {
        return Err(OperatorError::UnsupportedDimension(2));
    }
    if n > tol::MAX_DIM {
        return Err(OperatorError::TooLarge(n));
    }
    Ok((0..n)
        .map(|i| {
            let mut signs = vec![1i8; n];
            signs[i] = -1;
            SignVector(signs)
        })
        .collect())
}

fn basis_det(basis: &[SignVector]) -> i128 {
    let n = basis.len();
    let mut mat: Vec<Vec<i128>> = (0..n)
        .map(|i| basis[i].signs().iter().map(|&s| i128::from(s)).collect())
        .collect();
    // Bareiss fraction-free elimination: exact over the integers.
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if mat[k][k] == 0 {
            match (k + 1..n).find(|&r| mat[r][k] != 0) {
                Some(r) => {
                    mat.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                mat[i][j] = (mat[i][j] * mat[k][k] - mat[i][k] * mat[k][j]) / prev;
            }
            mat[i][k] = 0;
        }
        prev = mat[k][k];
    }
    sign * mat[n - 1][n - 1]
}

pub(crate) fn sign_rank(points: &[SignVector]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let n = points[0].dim();
    let mut mat: Vec<Vec<i128>> = points
        .iter()
        .map(|p| p.signs().iter().map(|&s| i128::from(s)).collect())
        .collect();
    let mut rank = 0usize;
    let mut prev = 1i128;
    let mut row = 0usize;
    for col in 0..n {
        if row >= mat.len() {
            break;
        }
        if mat[row][col] == 0 {
            match (row + 1..mat.len()).find(|&r| mat[r][col] != 0) {
                Some(r) => mat.swap(row, r),
                None => continue,
            }
        }
        for i in row + 1..mat.len() {
            for j in col + 1..n {
                mat[i][j] = (mat[i][j] * mat[row][col] - mat[i][col] * mat[row][j]) / prev;
            }
            mat[i][col] = 0;
        }
        prev = mat[row][col];
        rank += 1;
        row += 1;
    }
    rank
}

fn check_basis(basis: &[SignVector], n: usize) -> Result<(), OperatorError> {
    if basis.len() != n || basis.iter().any(|b| b.dim() != n) {
        return Err(OperatorError::ShapeMismatch);
    }
    if basis_det(basis) == 0 {
        return Err(OperatorError::SingularBasis);
    }
    Ok(())
}

/// Gamma: T maps to (T x_1, ..., T x_n) in the l-infinity sum of l1^m.
pub fn gamma_embed(
    t: &OperatorMatrix,
    basis: &[SignVector],
) -> Result<ProductVector, OperatorError> {
    check_basis(basis, t.n)?;
    let components = basis
        .iter()
        .map(|x| t.apply_signs(x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProductVector::new(components)?)
}

/// Inverse of Gamma: the unique T with T x_i = y_i, via one dense solve.
pub fn gamma_invert(
    y: &ProductVector,
    basis: &[SignVector],
) -> Result<OperatorMatrix, OperatorError> {
    let n = y.component_count();
    check_basis(basis, n)?;
    let m = y.component_dim();
    // Columns of X are the basis vectors; T X = Y, so T = Y X^{-1}.
    let x: Vec<Vec<f64>> = (0..n)
        .map(|r| (0..n).map(|c| f64::from(basis[c].signs()[r])).collect())
        .collect();
    let xinv = invert_f64(x).ok_or(OperatorError::SingularBasis)?;
    let mut entries = vec![Complex64::new(0.0, 0.0); m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (comp, xrow) in y.components().iter().zip(&xinv) {
                acc += comp.entries()[i] * xrow[j];
            }
            entries[i * n + j] = acc;
        }
    }
    OperatorMatrix::new(m, n, entries, y.field())
}

fn invert_f64(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1][col]
                    .abs()
                    .partial_cmp(&a[r2][col].abs())
                    .expect("finite")
            })
            .expect("nonempty");
        if a[pivot_row][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// Coordinate permutation with unimodular signs: (P v)[k] = signs[k] *
/// v[perm[k]]. Acts isometrically on l-infinity^n.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    signs: Vec<Complex64>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<Complex64>) -> Result<Self, OperatorError> {
        let n = perm.len();
        if n == 0 || signs.len() != n {
            return Err(OperatorError::BadPermutation);
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(OperatorError::BadPermutation);
            }
            seen[p] = true;
        }
        if signs.iter().any(|s| (s.norm() - 1.0).abs() > tol::MARGIN) {
            return Err(OperatorError::BadPermutation);
        }
        Ok(SignedPermutation { perm, signs })
    }

    pub fn identity(n: usize) -> SignedPermutation {
        SignedPermutation {
            perm: (0..n).collect(),
            signs: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[Complex64] {
        &self.signs
    }

    pub fn apply_vector(&self, v: &FiniteVector) -> Result<FiniteVector, OperatorError> {
        if v.dim() != self.dim() {
            return Err(OperatorError::ShapeMismatch);
        }
        let has_phase = self.signs.iter().any(|s| s.im != 0.0);
        let field = if has_phase { Field::Complex } else { v.field() };
        let entries: Vec<Complex64> = (0..self.dim())
            .map(|k| self.signs[k] * v.entries()[self.perm[k]])
            .collect();
        Ok(FiniteVector::new(entries, v.kind(), field)?)
    }

    pub fn apply_sign_vector(&self, s: &SignVector) -> Result<SignVector, OperatorError> {
        if s.dim() != self.dim() {
            return Err(OperatorError::ShapeMismatch);
        }
        let signs = (0..self.dim())
            .map(|k| {
                let v = self.signs[k].re * f64::from(s.signs()[self.perm[k]]);
                if v > 0.0 {
                    Ok(1i8)
                } else if v < 0.0 {
                    Ok(-1i8)
                } else {
                    Err(OperatorError::BadSignVector)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        SignVector::new(signs)
    }

    pub fn inverse(&self) -> SignedPermutation {
        let n = self.dim();
        let mut perm = vec![0usize; n];
        let mut signs = vec![Complex64::new(1.0, 0.0); n];
        for k in 0..n {
            perm[self.perm[k]] = k;
            signs[self.perm[k]] = self.signs[k].conj();
        }
        SignedPermutation { perm, signs }
    }

    /// self after other: (self.compose(other))(v) = self(other(v)).
    pub fn compose(&self, other: &SignedPermutation) -> Result<SignedPermutation, OperatorError> {
        if self.dim() != other.dim() {
            return Err(OperatorError::ShapeMismatch);
        }
        let n = self.dim();
        let perm = (0..n).map(|k| other.perm[self.perm[k]]).collect();
        let signs = (0..n)
            .map(|k| self.signs[k] * other.signs[self.perm[k]])
            .collect();
        SignedPermutation::new(perm, signs)
    }

    pub fn matrix(&self, field: Field) -> OperatorMatrix {
        let n = self.dim();
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for k in 0..n {
            entries[k * n + self.perm[k]] = self.signs[k];
        }
        OperatorMatrix::new(n, n, entries, field).expect("valid square matrix")
    }
}

/// Searches for a signed permutation carrying point_i to the canonical
/// vector x_i for every i, exhaustively over permutations (signs are forced
/// by the first point). Lexicographic first hit, so deterministic.
pub fn signed_permutation_align(
    points: &[SignVector],
    n: usize,
) -> Result<Option<SignedPermutation>, OperatorError> {
    if n > 8 {
        return Err(OperatorError::DimensionTooLarge(n));
    }
    if points.is_empty() {
        return Ok(Some(SignedPermutation::identity(n)));
    }
    if points.len() > n || points.iter().any(|p| p.dim() != n) {
        return Err(OperatorError::ShapeMismatch);
    }
    if sign_rank(points) != points.len() {
        return Err(OperatorError::DependentPoints);
    }
    let targets = canonical_extreme_basis(n)?;
    let mut perm: Vec<usize> = (0..n).collect();
    let found = permutations_lex(&mut perm, 0, &mut |perm| {
        // signs forced by P(points[0]) = targets[0].
        let signs: Vec<f64> = (0..n)
            .map(|k| f64::from(targets[0].signs()[k]) * f64::from(points[0].signs()[perm[k]]))
            .collect();
        for (i, p) in points.iter().enumerate() {
            for k in 0..n {
                if signs[k] * f64::from(p.signs()[perm[k]]) != f64::from(targets[i].signs()[k]) {
                    return None;
                }
            }
        }
        Some(SignedPermutation {
            perm: perm.to_vec(),
            signs: signs.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
        })
    });
    Ok(found)
}

/// Visits permutations of `slots` in lexicographic order, stopping at the
/// first visit that returns Some.
pub(crate) fn permutations_lex<T>(
    slots: &mut Vec<usize>,
    depth: usize,
    visit: &mut impl FnMut(&[usize]) -> Option<T>,
) -> Option<T> {
    let n = slots.len();
    if depth == n {
        return visit(slots);
    }
    // Choose each remaining candidate for position `depth` in ascending
    // order, rotating it into place to keep the tail sorted.
    let tail: Vec<usize> = slots[depth..].to_vec();
    for (off, _) in tail.iter().enumerate() {
        let mut arranged = tail.clone();
        let chosen = arranged.remove(off);
        slots[depth] = chosen;
        slots[depth + 1..].copy_from_slice(&arranged);
        if let Some(hit) = permutations_lex(slots, depth + 1, visit) {
            return Some(hit);
        }
    }
    // Restore the original tail for the caller.
    slots[depth..].copy_from_slice(&tail);
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn om(rows: &[&[f64]]) -> OperatorMatrix {
        OperatorMatrix::from_rows_real(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_abs_diff_eq!(op_norm(&om(&[&[1.0, 0.0], &[0.0, 0.0]])), 1.0);
        assert_abs_diff_eq!(op_norm(&om(&[&[1.0, 1.0], &[1.0, -1.0]])), 2.0);
        assert_abs_diff_eq!(op_norm(&om(&[&[0.0, 0.0], &[0.0, 0.0]])), 0.0);
    }

    #[test]
    fn norm_parallel_agrees() {
        let t = om(&[&[0.3, -1.2, 0.7, 0.05], &[2.0, 0.0, -0.4, 1.1]]);
        let serial = op_norm_with(&t, 64, 1);
        for w in [2, 3, 8] {
            assert_eq!(op_norm_with(&t, 64, w), serial);
        }
    }

    #[test]
    fn complex_norm_reaches_the_phase_optimum() {
        // One row (1, i): ||T x||_1 maxes at 2 with x = (1, -i).
        let t = OperatorMatrix::from_rows_complex(&[vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ]])
        .unwrap();
        assert_abs_diff_eq!(op_norm(&t), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn norming_set_examples() {
        let wide = om(&[&[0.5, 0.5, 0.0, 0.0]]);
        let ns = norming_set(&wide).unwrap();
        assert_eq!(ns.representatives.len(), 4);
        for x in &ns.representatives {
            let e = x.entries();
            assert_eq!(e[0].re, e[1].re); // norming forces matching leading signs
        }
        assert!(!ns.approximate);

        let all = norming_set(&om(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(all.representatives.len(), 2);
        let diag = norming_set(&om(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(diag.representatives.len(), 2);
    }

    #[test]
    fn orthogonality_examples() {
        let t = om(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let s = om(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(operator_bj_orthogonal(&t, &s).unwrap());
        assert!(!operator_bj_orthogonal(&t, &t).unwrap());
        let zero = OperatorMatrix::zero(2, 2, Field::Real).unwrap();
        assert!(operator_bj_orthogonal(&t, &zero).unwrap());
        assert_eq!(
            operator_bj_orthogonal(&zero, &t).unwrap_err(),
            OperatorError::ZeroOperator
        );
    }

    #[test]
    fn smoothness_examples() {
        assert!(operator_is_smooth(&om(&[&[1.0, 0.5], &[0.1, 0.0]])).unwrap());
        assert!(!operator_is_smooth(&om(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap());
        assert!(!operator_is_smooth(&om(&[&[1.0, 1.0], &[0.0, 0.0]])).unwrap());
    }

    #[test]
    fn canonical_basis_shape() {
        let b = canonical_extreme_basis(4).unwrap();
        assert_eq!(b[1].signs(), &[1, -1, 1, 1]);
        assert_ne!(basis_det(&b), 0);
        assert_eq!(
            canonical_extreme_basis(2).unwrap_err(),
            OperatorError::UnsupportedDimension(2)
        );
        assert_eq!(canonical_extreme_basis(1).unwrap()[0].signs(), &[-1]);
    }

    #[test]
    fn gamma_round_trip() {
        let basis = canonical_extreme_basis(4).unwrap();
        let t = om(&[&[1.0, 0.0, 0.0, 0.0]]);
        let y = gamma_embed(&t, &basis).unwrap();
        let flat: Vec<f64> = y.components().iter().map(|c| c.entries()[0].re).collect();
        assert_eq!(flat, vec![-1.0, 1.0, 1.0, 1.0]);
        let back = gamma_invert(&y, &basis).unwrap();
        for (a, b) in back.entries().iter().zip(t.entries()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
        }
    }

    #[test]
    fn gamma_single_component_is_rank_one() {
        let basis = canonical_extreme_basis(4).unwrap();
        let mut comps = Vec::new();
        for i in 0..4 {
            let entries = if i == 3 {
                vec![2.0, -1.0]
            } else {
                vec![0.0, 0.0]
            };
            comps.push(FiniteVector::real(&entries, NormKind::L1).unwrap());
        }
        let y = ProductVector::new(comps).unwrap();
        let t = gamma_invert(&y, &basis).unwrap();
        // T x_4 = y_4 and T x_i = 0 elsewhere.
        for (i, x) in basis.iter().enumerate() {
            let img = t.apply_signs(x).unwrap();
            if i == 3 {
                assert_abs_diff_eq!(img.entries()[0].re, 2.0, epsilon = 1e-12);
                assert_abs_diff_eq!(img.entries()[1].re, -1.0, epsilon = 1e-12);
            } else {
                assert!(img.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn alignment_finds_a_swap() {
        let p = SignVector::new(vec![1, -1, 1, 1]).unwrap();
        let found = signed_permutation_align(std::slice::from_ref(&p), 4)
            .unwrap()
            .unwrap();
        let target = canonical_extreme_basis(4).unwrap()[0].clone();
        assert_eq!(found.apply_sign_vector(&p).unwrap(), target);
    }

    #[test]
    fn alignment_identity_on_canonical_prefix() {
        let basis = canonical_extreme_basis(4).unwrap();
        let found = signed_permutation_align(&basis[..2], 4).unwrap().unwrap();
        for x in &basis[..2] {
            assert_eq!(&found.apply_sign_vector(x).unwrap(), x);
        }
    }

    #[test]
    fn alignment_rejects_dependent_points() {
        let a = SignVector::new(vec![1, 1, 1, 1]).unwrap();
        let b = a.negated();
        assert_eq!(
            signed_permutation_align(&[a, b], 4).unwrap_err(),
            OperatorError::DependentPoints
        );
    }

    #[test]
    fn alignment_not_found_when_sign_counts_differ() {
        // Mapping (1,1,1,1) to x_1 forces the sign profile; the second point
        // would then need two negative coordinates, but it has one.
        let p1 = SignVector::new(vec![1, 1, 1, 1]).unwrap();
        let p2 = SignVector::new(vec![1, 1, 1, -1]).unwrap();
        assert!(signed_permutation_align(&[p1, p2], 4).unwrap().is_none());
    }

    #[test]
    fn signed_permutation_algebra() {
        let p = SignedPermutation::new(
            vec![1, 2, 0],
            vec![
                Complex64::new(-1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        )
        .unwrap();
        let v = FiniteVector::real(&[1.0, 2.0, 3.0], NormKind::Linf).unwrap();
        let w = p.apply_vector(&v).unwrap();
        assert_eq!(w.entries()[0].re, -2.0);
        assert_eq!(w.entries()[1].re, 3.0);
        assert_eq!(w.entries()[2].re, 1.0);
        let round = p.inverse().apply_vector(&w).unwrap();
        for (a, b) in round.entries().iter().zip(v.entries()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
        }
        let composed = p.compose(&p.inverse()).unwrap();
        assert_eq!(composed, SignedPermutation::identity(3));
        // Matrix action matches the direct action.
        let pm = p.matrix(Field::Real);
        let via = pm.apply(&v).unwrap();
        for (a, b) in via.entries().iter().zip(w.entries()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
        }
    }

    #[test]
    fn norm_is_a_norm() {
        let a = om(&[&[0.5, -1.0], &[0.25, 0.75]]);
        let b = om(&[&[1.0, 0.0], &[0.0, -2.0]]);
        assert_abs_diff_eq!(
            op_norm(&a.scale(Complex64::new(-3.0, 0.0))),
            3.0 * op_norm(&a),
            epsilon = 1e-12
        );
        let sum = a.add_scaled(Complex64::new(1.0, 0.0), &b).unwrap();
        assert!(op_norm(&sum) <= op_norm(&a) + op_norm(&b) + 1e-12);
    }
}
