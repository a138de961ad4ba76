//! Dense two-phase simplex for the small certification programs this crate
//! solves (tens of variables, low hundreds of rows).
//!
//! Pivoting is Bland's rule throughout, so runs are deterministic and cannot
//! cycle. The core is generic over the scalar: f64 with a fixed pivot
//! tolerance, or BigRational with exact comparisons for certificate-grade
//! re-solves.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("program has no variables")]
    EmptyProgram,
    #[error("row {0} has the wrong number of coefficients")]
    BadRow(usize),
    #[error("bounds list does not match the variable count")]
    BadBounds,
    #[error("variable {0} has lower bound above upper bound")]
    InvalidBound(usize),
    #[error("program data must be finite")]
    NonFinite,
    #[error("pivot limit exceeded")]
    PivotLimit,
}

/// maximize c.x subject to rows (a, rel, b) and per-variable bounds.
/// An empty bounds vector means every variable is free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub maximize: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Rel, f64)>,
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless status is Optimal.
    pub x: Vec<f64>,
    /// Objective value; meaningful only when status is Optimal.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RationalSolution {
    pub status: LpStatus,
    pub x: Vec<BigRational>,
    pub value: BigRational,
}

/// Scalar the simplex core runs on. `is_pos` means "greater than the pivot
/// tolerance", which is exact zero for rationals.
pub trait SimplexScalar: Clone + PartialOrd {
    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool {
        self.neg().is_pos()
    }
    /// Exact representation-level zero, used only to skip no-op row updates.
    fn is_exact_zero(&self) -> bool;
}

impl SimplexScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_pos(&self) -> bool {
        *self > PIVOT_TOL
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}

impl SimplexScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_f64(v: f64) -> Self {
        Ratio::<BigInt>::from_float(v).expect("finite float converts exactly")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_exact_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

const PIVOT_TOL: f64 = 1e-9;
const PIVOT_LIMIT: usize = 200_000;
// Residual infeasibility a float phase-1 is allowed to leave behind.
const FEAS_TOL: f64 = 1e-7;

pub fn lp_maximize(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let (status, x, value) = solve_generic::<f64>(lp)?;
    Ok(LpSolution { status, x, value })
}

/// Same program, solved in exact rational arithmetic. The float data is
/// converted exactly (every finite f64 is a rational), so verdicts about
/// signs of optima are certificate grade.
pub fn lp_maximize_exact(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let (status, x, value) = solve_generic::<BigRational>(lp)?;
    Ok(LpSolution {
        status,
        x: x.iter().map(SimplexScalar::to_f64).collect(),
        value: SimplexScalar::to_f64(&value),
    })
}

/// Exact solve with rational inputs, for callers that already hold exact data.
/// Variables are free; every constraint lives in `rows`.
pub fn lp_maximize_rational(
    maximize: &[BigRational],
    rows: &[(Vec<BigRational>, Rel, BigRational)],
) -> Result<RationalSolution, LpError> {
    let n = maximize.len();
    if n == 0 {
        return Err(LpError::EmptyProgram);
    }
    for (i, (a, _, _)) in rows.iter().enumerate() {
        if a.len() != n {
            return Err(LpError::BadRow(i));
        }
    }
    let bounds = vec![(None, None); n];
    let (status, x, value) = solve_transformed::<BigRational>(
        maximize,
        &rows
            .iter()
            .map(|(a, r, b)| (a.clone(), *r, b.clone()))
            .collect::<Vec<_>>(),
        &bounds,
    )?;
    Ok(RationalSolution { status, x, value })
}

fn solve_generic<S: SimplexScalar>(lp: &LinearProgram) -> Result<(LpStatus, Vec<S>, S), LpError> {
    let n = lp.maximize.len();
    if n == 0 {
        return Err(LpError::EmptyProgram);
    }
    if !lp.maximize.iter().all(|v| v.is_finite()) {
        return Err(LpError::NonFinite);
    }
    for (i, (a, _, b)) in lp.rows.iter().enumerate() {
        if a.len() != n {
            return Err(LpError::BadRow(i));
        }
        if !a.iter().all(|v| v.is_finite()) || !b.is_finite() {
            return Err(LpError::NonFinite);
        }
    }
    let bounds: Vec<(Option<f64>, Option<f64>)> = if lp.bounds.is_empty() {
        vec![(None, None); n]
    } else {
        if lp.bounds.len() != n {
            return Err(LpError::BadBounds);
        }
        lp.bounds.clone()
    };
    for (j, (lo, hi)) in bounds.iter().enumerate() {
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return Err(LpError::InvalidBound(j));
            }
        }
        if lo.is_some_and(|v| !v.is_finite()) || hi.is_some_and(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
    }
    let obj: Vec<S> = lp.maximize.iter().map(|&v| S::from_f64(v)).collect();
    let rows: Vec<(Vec<S>, Rel, S)> = lp
        .rows
        .iter()
        .map(|(a, r, b)| {
            (
                a.iter().map(|&v| S::from_f64(v)).collect(),
                *r,
                S::from_f64(*b),
            )
        })
        .collect();
    let sbounds: Vec<(Option<S>, Option<S>)> = bounds
        .iter()
        .map(|(lo, hi)| (lo.map(S::from_f64), hi.map(S::from_f64)))
        .collect();
    solve_transformed(&obj, &rows, &sbounds)
}

/// Substitutes bounded and free variables into nonnegative ones, solves the
/// standard-form program, and maps the optimum back.
fn solve_transformed<S: SimplexScalar>(
    obj: &[S],
    rows: &[(Vec<S>, Rel, S)],
    bounds: &[(Option<S>, Option<S>)],
) -> Result<(LpStatus, Vec<S>, S), LpError> {
    let n = obj.len();
    enum Map<S> {
        Shifted(S, usize),  // x = shift + u
        Flipped(S, usize),  // x = shift - u
        Free(usize, usize), // x = u - v
    }
    let mut maps: Vec<Map<S>> = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut extra_rows: Vec<(usize, S)> = Vec::new(); // (column, upper bound) rows u <= ub
    for (lo, hi) in bounds.iter() {
        match (lo, hi) {
            (Some(l), None) => {
                maps.push(Map::Shifted(l.clone(), ncols));
                ncols += 1;
            }
            (Some(l), Some(h)) => {
                maps.push(Map::Shifted(l.clone(), ncols));
                extra_rows.push((ncols, h.sub(l)));
                ncols += 1;
            }
            (None, Some(h)) => {
                maps.push(Map::Flipped(h.clone(), ncols));
                ncols += 1;
            }
            (None, None) => {
                maps.push(Map::Free(ncols, ncols + 1));
                ncols += 2;
            }
        }
    }
    // Transform a dense coefficient row over x into one over u.
    let transform = |a: &[S]| -> (Vec<S>, S) {
        let mut out = vec![S::zero(); ncols];
        let mut offset = S::zero();
        for (j, coeff) in a.iter().enumerate() {
            match &maps[j] {
                Map::Shifted(shift, col) => {
                    out[*col] = out[*col].add(coeff);
                    offset = offset.add(&coeff.mul(shift));
                }
                Map::Flipped(shift, col) => {
                    out[*col] = out[*col].sub(coeff);
                    offset = offset.add(&coeff.mul(shift));
                }
                Map::Free(p, m) => {
                    out[*p] = out[*p].add(coeff);
                    out[*m] = out[*m].sub(coeff);
                }
            }
        }
        (out, offset)
    };
    let mut std_rows: Vec<(Vec<S>, Rel, S)> = Vec::with_capacity(rows.len() + extra_rows.len());
    for (a, rel, b) in rows {
        let (coeffs, offset) = transform(a);
        std_rows.push((coeffs, *rel, b.sub(&offset)));
    }
    for (col, ub) in extra_rows {
        let mut coeffs = vec![S::zero(); ncols];
        coeffs[col] = S::from_f64(1.0);
        std_rows.push((coeffs, Rel::Le, ub));
    }
    let (std_obj, obj_offset) = transform(obj);
    let (status, u) = solve_standard(&std_obj, std_rows)?;
    if status != LpStatus::Optimal {
        return Ok((status, Vec::new(), S::zero()));
    }
    let mut x = Vec::with_capacity(n);
    for m in &maps {
        let v = match m {
            Map::Shifted(shift, col) => shift.add(&u[*col]),
            Map::Flipped(shift, col) => shift.sub(&u[*col]),
            Map::Free(p, q) => u[*p].sub(&u[*q]),
        };
        x.push(v);
    }
    let mut value = obj_offset;
    for (c, uv) in std_obj.iter().zip(&u) {
        value = value.add(&c.mul(uv));
    }
    Ok((LpStatus::Optimal, x, value))
}

/// Simplex on: maximize c.u, A u (rel) b, u >= 0.
fn solve_standard<S: SimplexScalar>(
    obj: &[S],
    rows: Vec<(Vec<S>, Rel, S)>,
) -> Result<(LpStatus, Vec<S>), LpError> {
    let nvars = obj.len();
    let m = rows.len();
    if m == 0 {
        // Optimal at the origin unless some cost is positive.
        if obj.iter().any(|c| c.is_pos()) {
            return Ok((LpStatus::Unbounded, Vec::new()));
        }
        return Ok((LpStatus::Optimal, vec![S::zero(); nvars]));
    }
    // Equalize rows: flip to b >= 0, then append slack / surplus columns and
    // artificials where the slack cannot start in the basis.
    let mut nslack = 0usize;
    let mut nart = 0usize;
    for (_, rel, b) in &rows {
        let flipped = b.is_neg();
        let rel = if flipped { flip(*rel) } else { *rel };
        match rel {
            Rel::Le => nslack += 1,
            Rel::Ge => {
                nslack += 1;
                nart += 1;
            }
            Rel::Eq => nart += 1,
        }
    }
    let width = nvars + nslack + nart + 1;
    let rhs_col = width - 1;
    let mut t: Vec<Vec<S>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut slack_at = nvars;
    let mut art_at = nvars + nslack;
    let art_start = nvars + nslack;
    for (a, rel, b) in rows {
        let flipped = b.is_neg();
        let rel = if flipped { flip(rel) } else { rel };
        let mut row = vec![S::zero(); width];
        for (j, v) in a.into_iter().enumerate() {
            row[j] = if flipped { v.neg() } else { v };
        }
        row[rhs_col] = if flipped { b.neg() } else { b };
        match rel {
            Rel::Le => {
                row[slack_at] = S::from_f64(1.0);
                basis.push(slack_at);
                slack_at += 1;
            }
            Rel::Ge => {
                row[slack_at] = S::from_f64(-1.0);
                slack_at += 1;
                row[art_at] = S::from_f64(1.0);
                basis.push(art_at);
                art_at += 1;
            }
            Rel::Eq => {
                row[art_at] = S::from_f64(1.0);
                basis.push(art_at);
                art_at += 1;
            }
        }
        t.push(row);
    }
    if nart > 0 {
        // Phase 1: maximize minus the sum of artificials.
        let mut cost = vec![S::zero(); width - 1];
        for c in cost.iter_mut().skip(art_start) {
            *c = S::from_f64(-1.0);
        }
        run_simplex(&mut t, &mut basis, &cost, rhs_col)?;
        let mut infeas = S::zero();
        for (i, &b) in basis.iter().enumerate() {
            if b >= art_start {
                infeas = infeas.add(&t[i][rhs_col]);
            }
        }
        if infeas.to_f64().abs() > FEAS_TOL {
            return Ok((LpStatus::Infeasible, Vec::new()));
        }
        // Pivot leftover zero-value artificials out, dropping redundant rows.
        let mut i = 0;
        while i < t.len() {
            if basis[i] >= art_start {
                let col = (0..art_start).find(|&j| t[i][j].is_pos() || t[i][j].is_neg());
                match col {
                    Some(j) => {
                        pivot(&mut t, &mut basis, i, j);
                        i += 1;
                    }
                    None => {
                        t.remove(i);
                        basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        // Remove artificial columns entirely so phase 2 cannot re-enter them.
        for row in t.iter_mut() {
            let rhs = row[rhs_col].clone();
            row.truncate(art_start);
            row.push(rhs);
        }
    }
    let rhs_col = t.first().map_or(rhs_col, |r| r.len() - 1);
    let cost: Vec<S> = (0..rhs_col)
        .map(|j| if j < nvars { obj[j].clone() } else { S::zero() })
        .collect();
    let status = run_simplex(&mut t, &mut basis, &cost, rhs_col)?;
    if status == LpStatus::Unbounded {
        return Ok((LpStatus::Unbounded, Vec::new()));
    }
    let mut u = vec![S::zero(); nvars];
    for (i, &b) in basis.iter().enumerate() {
        if b < nvars {
            u[b] = t[i][rhs_col].clone();
        }
    }
    Ok((LpStatus::Optimal, u))
}

fn flip(rel: Rel) -> Rel {
    match rel {
        Rel::Le => Rel::Ge,
        Rel::Ge => Rel::Le,
        Rel::Eq => Rel::Eq,
    }
}

/// Bland's rule: enter the lowest-index improving column, leave by the ratio
/// test with ties broken by the lowest basis index. Returns Unbounded when an
/// improving column has no positive entry.
fn run_simplex<S: SimplexScalar>(
    t: &mut [Vec<S>],
    basis: &mut [usize],
    cost: &[S],
    rhs_col: usize,
) -> Result<LpStatus, LpError> {
    for _ in 0..PIVOT_LIMIT {
        let mut entering = None;
        for j in 0..rhs_col {
            let mut rc = cost[j].clone();
            for (i, row) in t.iter().enumerate() {
                rc = rc.sub(&cost[basis[i]].mul(&row[j]));
            }
            if rc.is_pos() {
                entering = Some(j);
                break;
            }
        }
        let j = match entering {
            Some(j) => j,
            None => return Ok(LpStatus::Optimal),
        };
        let mut leave: Option<(usize, S)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[j].is_pos() {
                let ratio = row[rhs_col].div(&row[j]);
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        match leave {
            Some((i, _)) => pivot(t, basis, i, j),
            None => return Ok(LpStatus::Unbounded),
        }
    }
    Err(LpError::PivotLimit)
}

fn pivot<S: SimplexScalar>(t: &mut [Vec<S>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c].clone();
    for v in t[r].iter_mut() {
        *v = v.div(&p);
    }
    for i in 0..t.len() {
        if i == r {
            continue;
        }
        let factor = t[i][c].clone();
        if factor.is_exact_zero() {
            continue;
        }
        for j in 0..t[i].len() {
            let delta = factor.mul(&t[r][j]);
            t[i][j] = t[i][j].sub(&delta);
        }
    }
    basis[r] = c;
}
