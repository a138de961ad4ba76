//! Vectors in l_1^m and l_inf^n over R or C, their support functionals, and
//! the Birkhoff-James orthogonality test at the vector level.
//!
//! The central object is the range of values f(w) as f runs over the support
//! functionals of x. For l_1 that range is a single disk; for l_inf it is the
//! hull of one point per active index. x is orthogonal to w exactly when the
//! range contains zero.

use crate::field::{is_finite_c, sgn, Field};
use crate::hull::{zero_in_convex_union, ConvexCombiner, RangeAtom};
use crate::tol;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    Linf,
}

#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("vector must have at least one entry")]
    Empty,
    #[error("vector entries must be finite")]
    NonFinite,
    #[error("real vector has a nonzero imaginary part")]
    FieldMismatch,
    #[error("operands disagree in shape, norm kind, or field")]
    ShapeMismatch,
    #[error("operation is undefined for the zero vector")]
    ZeroVector,
}

/// A vector with a fixed norm and scalar field. Entries are stored as
/// complex numbers; in real mode every imaginary part is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteVector {
    entries: Vec<Complex64>,
    kind: NormKind,
    field: Field,
}

impl FiniteVector {
    pub fn new(entries: Vec<Complex64>, kind: NormKind, field: Field) -> Result<Self, VectorError> {
        if entries.is_empty() {
            return Err(VectorError::Empty);
        }
        if !entries.iter().all(|&z| is_finite_c(z)) {
            return Err(VectorError::NonFinite);
        }
        if field == Field::Real && entries.iter().any(|z| z.im != 0.0) {
            return Err(VectorError::FieldMismatch);
        }
        Ok(FiniteVector {
            entries,
            kind,
            field,
        })
    }

    pub fn real(entries: &[f64], kind: NormKind) -> Result<Self, VectorError> {
        Self::new(
            entries.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            kind,
            Field::Real,
        )
    }

    pub fn complex(entries: Vec<Complex64>, kind: NormKind) -> Result<Self, VectorError> {
        Self::new(entries, kind, Field::Complex)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn norm(&self) -> f64 {
        match self.kind {
            NormKind::L1 => self.entries.iter().map(|z| z.norm()).sum(),
            NormKind::Linf => self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.norm() == 0.0)
    }

    /// Indices with an exactly nonzero entry.
    pub fn support(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices attaining the sup norm up to relative tolerance tau.
    /// Meaningful for the Linf kind; for L1 the relevant set is the support.
    pub fn active_set(&self, tau: f64) -> Vec<usize> {
        let top = self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if top == 0.0 {
            return Vec::new();
        }
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() >= (1.0 - tau) * top)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn scale(&self, a: Complex64) -> FiniteVector {
        FiniteVector {
            entries: self.entries.iter().map(|&z| a * z).collect(),
            kind: self.kind,
            field: if a.im != 0.0 {
                Field::Complex
            } else {
                self.field
            },
        }
    }

    pub fn add_scaled(&self, a: Complex64, other: &FiniteVector) -> FiniteVector {
        debug_assert_eq!(self.dim(), other.dim());
        FiniteVector {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&x, &y)| x + a * y)
                .collect(),
            kind: self.kind,
            field: if self.field == Field::Complex || other.field == Field::Complex || a.im != 0.0 {
                Field::Complex
            } else {
                Field::Real
            },
        }
    }
}

/// Values f(w) over the support functionals f of some vector x, stored as a
/// finite union of disks. The represented set is the convex hull of the union.
#[derive(Clone, Debug)]
pub struct FunctionalRange {
    atoms: Vec<RangeAtom>,
    field: Field,
}

impl FunctionalRange {
    pub fn atoms(&self) -> &[RangeAtom] {
        &self.atoms
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Hull endpoints in real mode: [min(c - r), max(c + r)].
    pub fn interval(&self) -> Option<(f64, f64)> {
        if self.field != Field::Real || self.atoms.is_empty() {
            return None;
        }
        let lo = self
            .atoms
            .iter()
            .map(|(c, r)| c.re - r)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .atoms
            .iter()
            .map(|(c, r)| c.re + r)
            .fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    pub fn contains_zero(&self, eta: f64) -> Option<ConvexCombiner> {
        zero_in_convex_union(&self.atoms, self.field, eta)
    }
}

fn check_pair(x: &FiniteVector, w: &FiniteVector) -> Result<(), VectorError> {
    if x.dim() != w.dim() || x.kind() != w.kind() || x.field() != w.field() {
        return Err(VectorError::ShapeMismatch);
    }
    Ok(())
}

/// The set {f(w) : f a support functional of x}, for nonzero x.
///
/// l_1: a single disk with center sum over supp(x) of conj(sgn(x_k)) w_k and
/// radius sum over the zero coordinates of |w_k|. l_inf: one zero-radius atom
/// conj(sgn(x_i)) w_i per active index i.
pub fn support_range(x: &FiniteVector, w: &FiniteVector) -> Result<FunctionalRange, VectorError> {
    check_pair(x, w)?;
    if x.is_zero() {
        return Err(VectorError::ZeroVector);
    }
    let atoms = match x.kind() {
        NormKind::L1 => {
            let mut center = Complex64::new(0.0, 0.0);
            let mut radius = 0.0;
            for (xk, wk) in x.entries().iter().zip(w.entries()) {
                if xk.norm() != 0.0 {
                    center += sgn(*xk).conj() * wk;
                } else {
                    radius += wk.norm();
                }
            }
            vec![(center, radius)]
        }
        NormKind::Linf => x
            .active_set(tol::ACTIVE_REL)
            .into_iter()
            .map(|i| (sgn(x.entries()[i]).conj() * w.entries()[i], 0.0))
            .collect(),
    };
    Ok(FunctionalRange {
        atoms,
        field: x.field(),
    })
}

/// Birkhoff-James orthogonality x _|_ w, i.e. |x + t w| >= |x| for every
/// scalar t. Equivalent to zero lying in the support range of w over x.
pub fn bj_orthogonal_vec(x: &FiniteVector, w: &FiniteVector) -> Result<bool, VectorError> {
    Ok(bj_orthogonal_vec_witness(x, w)?.is_some())
}

/// Same verdict, returning the hull-membership weights when orthogonal.
pub fn bj_orthogonal_vec_witness(
    x: &FiniteVector,
    w: &FiniteVector,
) -> Result<Option<ConvexCombiner>, VectorError> {
    let range = support_range(x, w)?;
    Ok(range.contains_zero(tol::MARGIN))
}

/// Smoothness of a nonzero point: unique support functional.
/// l_1 needs full support, l_inf a unique active index.
pub fn is_smooth_vec(x: &FiniteVector) -> Result<bool, VectorError> {
    if x.is_zero() {
        return Err(VectorError::ZeroVector);
    }
    Ok(match x.kind() {
        NormKind::L1 => x.support().len() == x.dim(),
        NormKind::Linf => x.active_set(tol::ACTIVE_REL).len() == 1,
    })
}

/// Deterministic choice of one extreme support functional per vector line.
///
/// `Lex` picks the lexicographically least pattern (free coordinates +1,
/// least active index). `Seeded` hashes the seed with the discrete support
/// or active pattern, so the choice is still constant on each line.
#[derive(Clone, Copy, Debug)]
pub enum SipSelector {
    Lex,
    Seeded(u64),
}

fn pattern_hash(seed: u64, bits: &[usize], dim: usize, salt: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x100_0000_01b3);
    h = h.wrapping_mul(0x100_0000_01b3) ^ (dim as u64);
    for &b in bits {
        h = h.wrapping_mul(0x100_0000_01b3) ^ (b as u64 + 1);
    }
    h.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt
}

impl SipSelector {
    /// Support functional of the canonical unit representative of the line
    /// through x, as a coefficient vector f with f(x0) = 1. Constant on the
    /// line because it depends only on the line's discrete pattern.
    pub fn line_functional(&self, x: &FiniteVector) -> Result<Vec<Complex64>, VectorError> {
        if x.is_zero() {
            return Err(VectorError::ZeroVector);
        }
        let k0 = x
            .entries()
            .iter()
            .position(|z| z.norm() != 0.0)
            .expect("nonzero vector has a support index");
        // x = lam * x0 with |x0| = 1 and positive leading entry of x0.
        let lam_sign = sgn(x.entries()[k0]);
        let one = Complex64::new(1.0, 0.0);
        match x.kind() {
            NormKind::L1 => {
                let supp = x.support();
                let mut f = vec![Complex64::new(0.0, 0.0); x.dim()];
                for &k in &supp {
                    f[k] = sgn(x.entries()[k]).conj() * lam_sign;
                }
                for (k, slot) in f.iter_mut().enumerate() {
                    if x.entries()[k].norm() == 0.0 {
                        let pick = match self {
                            SipSelector::Lex => one,
                            SipSelector::Seeded(seed) => {
                                if pattern_hash(*seed, &supp, x.dim(), k as u64) & 1 == 0 {
                                    one
                                } else {
                                    -one
                                }
                            }
                        };
                        *slot = pick;
                    }
                }
                Ok(f)
            }
            NormKind::Linf => {
                let active = x.active_set(tol::ACTIVE_REL);
                let i = match self {
                    SipSelector::Lex => active[0],
                    SipSelector::Seeded(seed) => {
                        active[(pattern_hash(*seed, &active, x.dim(), 0) % active.len() as u64)
                            as usize]
                    }
                };
                let mut f = vec![Complex64::new(0.0, 0.0); x.dim()];
                f[i] = sgn(x.entries()[i]).conj() * lam_sign;
                Ok(f)
            }
        }
    }

    /// A support functional of x itself: norm one in the dual and f(x) = |x|.
    pub fn support_functional(&self, x: &FiniteVector) -> Result<Vec<Complex64>, VectorError> {
        let f0 = self.line_functional(x)?;
        let k0 = x
            .entries()
            .iter()
            .position(|z| z.norm() != 0.0)
            .expect("nonzero vector has a support index");
        let phase = sgn(x.entries()[k0]).conj();
        Ok(f0.into_iter().map(|c| phase * c).collect())
    }
}

pub fn apply_functional(f: &[Complex64], v: &FiniteVector) -> Complex64 {
    f.iter().zip(v.entries()).map(|(a, b)| a * b).sum()
}

/// Semi-inner product [y, x] = conj(lam) f0(y) where x = lam x0, |x0| = 1 and
/// f0 is the selector's line functional. Normalized so [x, x] = |x|^2.
pub fn semi_inner_product(
    y: &FiniteVector,
    x: &FiniteVector,
    sel: SipSelector,
) -> Result<Complex64, VectorError> {
    check_pair(x, y)?;
    if x.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let f0 = sel.line_functional(x)?;
    let k0 = x
        .entries()
        .iter()
        .position(|z| z.norm() != 0.0)
        .expect("nonzero vector has a support index");
    let lam = sgn(x.entries()[k0]) * x.norm();
    Ok(lam.conj() * apply_functional(&f0, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rv(e: &[f64], k: NormKind) -> FiniteVector {
        FiniteVector::real(e, k).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norms() {
        assert_abs_diff_eq!(rv(&[1.0, -2.0, 3.0], NormKind::L1).norm(), 6.0);
        assert_abs_diff_eq!(rv(&[1.0, -2.0, 3.0], NormKind::Linf).norm(), 3.0);
    }

    #[test]
    fn linf_range_one_atom_per_active_index() {
        let x = rv(&[1.0, 1.0], NormKind::Linf);
        let w = rv(&[1.0, -1.0], NormKind::Linf);
        let range = support_range(&x, &w).unwrap();
        let mut vals: Vec<f64> = range.atoms().iter().map(|(c, _)| c.re).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vals, vec![-1.0, 1.0]);
        assert!(bj_orthogonal_vec(&x, &w).unwrap());
    }

    #[test]
    fn l1_range_disk_from_zero_coordinates() {
        let x = FiniteVector::complex(vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)], NormKind::L1)
            .unwrap();
        let w = FiniteVector::complex(vec![c(1.0, 0.0); 3], NormKind::L1).unwrap();
        let range = support_range(&x, &w).unwrap();
        assert_eq!(range.atoms().len(), 1);
        let (center, radius) = range.atoms()[0];
        // conj(sgn(i)) * 1 = -i, radius |1| + |1| = 2.
        assert_abs_diff_eq!(center.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(center.im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(radius, 2.0);
        assert!(bj_orthogonal_vec(&x, &w).unwrap());
    }

    #[test]
    fn l1_full_support_is_a_point_range() {
        let x = rv(&[1.0, -2.0], NormKind::L1);
        let w = rv(&[3.0, 1.0], NormKind::L1);
        let range = support_range(&x, &w).unwrap();
        assert_eq!(range.atoms(), &[(c(2.0, 0.0), 0.0)]);
        assert!(!bj_orthogonal_vec(&x, &w).unwrap());
        assert_eq!(range.interval(), Some((2.0, 2.0)));
    }

    #[test]
    fn smoothness_rules() {
        assert!(is_smooth_vec(&rv(&[1.0, 2.0], NormKind::L1)).unwrap());
        assert!(!is_smooth_vec(&rv(&[1.0, 0.0], NormKind::L1)).unwrap());
        assert!(is_smooth_vec(&rv(&[2.0, 1.0], NormKind::Linf)).unwrap());
        assert!(!is_smooth_vec(&rv(&[2.0, 2.0], NormKind::Linf)).unwrap());
        assert_eq!(
            is_smooth_vec(&rv(&[0.0, 0.0], NormKind::L1)),
            Err(VectorError::ZeroVector)
        );
    }

    #[test]
    fn sip_frozen_example() {
        // x = (2, 0) in l_1, y = (3, 5); Lex picks +1 on the free coordinate.
        let x = rv(&[2.0, 0.0], NormKind::L1);
        let y = rv(&[3.0, 5.0], NormKind::L1);
        let v = semi_inner_product(&y, &x, SipSelector::Lex).unwrap();
        assert_abs_diff_eq!(v.re, 16.0);
        assert_abs_diff_eq!(v.im, 0.0);
        let xx = semi_inner_product(&x, &x, SipSelector::Lex).unwrap();
        assert_abs_diff_eq!(xx.re, 4.0);
    }

    #[test]
    fn sip_is_constant_on_lines() {
        let x = rv(&[1.5, 0.0, -0.25], NormKind::L1);
        let sel = SipSelector::Seeded(7);
        let f_line = sel.line_functional(&x).unwrap();
        let f_scaled = sel.line_functional(&x.scale(c(-3.0, 0.0))).unwrap();
        assert_eq!(f_line, f_scaled);
        // Support functional tracks the vector's own phase.
        let f = sel.support_functional(&x).unwrap();
        let fx: Complex64 = apply_functional(&f, &x);
        assert_abs_diff_eq!(fx.re, x.norm(), epsilon = 1e-12);
        assert_abs_diff_eq!(fx.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sip_conjugate_homogeneous_in_second_slot() {
        let x = FiniteVector::complex(vec![c(1.0, 2.0), c(0.5, 0.0)], NormKind::Linf).unwrap();
        let y = FiniteVector::complex(vec![c(-1.0, 0.3), c(2.0, 2.0)], NormKind::Linf).unwrap();
        let a = c(0.7, -1.9);
        let lhs = semi_inner_product(&y, &x.scale(a), SipSelector::Lex).unwrap();
        let rhs = a.conj() * semi_inner_product(&y, &x, SipSelector::Lex).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert_eq!(
            FiniteVector::new(vec![], NormKind::L1, Field::Real).unwrap_err(),
            VectorError::Empty
        );
        assert_eq!(
            FiniteVector::new(vec![c(f64::NAN, 0.0)], NormKind::L1, Field::Real).unwrap_err(),
            VectorError::NonFinite
        );
        assert_eq!(
            FiniteVector::new(vec![c(1.0, 1.0)], NormKind::L1, Field::Real).unwrap_err(),
            VectorError::FieldMismatch
        );
    }
}
