//! The l-infinity sum of n copies of l1^m: support decompositions,
//! orthogonality (hull form and the real two-clause form), smoothness, the
//! all-components-norming necessary condition for right-symmetry, and the
//! dominating-component witness construction.

use num_complex::Complex64;
use thiserror::Error;

use crate::field::{sgn, Field};
use crate::hull::{zero_in_convex_union, ConvexCombiner, RangeAtom};
use crate::scalar::{apply_functional, support_range, FiniteVector, NormKind, VectorError};
use crate::tol;

#[derive(Debug, Error, PartialEq)]
pub enum ProductError {
    #[error("product vector needs at least one component")]
    Empty,
    #[error("components must all be l1 vectors of the same length")]
    ComponentShape,
    #[error("components must share one field")]
    FieldMismatch,
    #[error("operands have different shapes")]
    ShapeMismatch,
    #[error("zero vector has no support data")]
    ZeroVector,
    #[error("component index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("component already attains the product norm")]
    NormingComponent,
    #[error("eps must be positive")]
    BadEps,
    #[error("no unit vector is orthogonal to a nonzero scalar (m = 1)")]
    DegenerateComponent,
    #[error("two-clause test is defined for the real field only")]
    RealOnly,
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// A point of the l-infinity sum: n components, each an l1 vector of common
/// length m over a common field. The norm is the max of component norms.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductVector {
    components: Vec<FiniteVector>,
}

impl ProductVector {
    pub fn new(components: Vec<FiniteVector>) -> Result<Self, ProductError> {
        let first = components.first().ok_or(ProductError::Empty)?;
        let (m, field) = (first.dim(), first.field());
        for c in &components {
            if c.kind() != NormKind::L1 || c.dim() != m {
                return Err(ProductError::ComponentShape);
            }
            if c.field() != field {
                return Err(ProductError::FieldMismatch);
            }
        }
        Ok(ProductVector { components })
    }

    pub fn components(&self) -> &[FiniteVector] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn component_dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn field(&self) -> Field {
        self.components[0].field()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(FiniteVector::is_zero)
    }

    /// Indices whose component norm is within the relative tolerance of the
    /// product norm.
    pub fn active_components(&self) -> Vec<usize> {
        let norm = product_norm(self);
        self.components
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() >= (1.0 - tol::ACTIVE_REL) * norm)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn product_norm(x: &ProductVector) -> f64 {
    x.components
        .iter()
        .map(FiniteVector::norm)
        .fold(0.0, f64::max)
}

/// Convex weights over the components plus, for each positively weighted
/// index, the dual coefficient vector of a support functional of that
/// component.
#[derive(Clone, Debug)]
pub struct SupportDecomposition {
    pub weights: Vec<f64>,
    pub functionals: Vec<Option<Vec<Complex64>>>,
}

/// Value of the induced functional sum_i weights[i] * g_i(z_i).
pub fn decomposition_functional_value(d: &SupportDecomposition, z: &ProductVector) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (i, c) in z.components().iter().enumerate() {
        if d.weights.get(i).copied().unwrap_or(0.0) > 0.0 {
            if let Some(Some(g)) = d.functionals.get(i) {
                total += d.weights[i] * apply_functional(g, c);
            }
        }
    }
    total
}

/// True iff `d` exhibits a norm-one functional of the product space attaining
/// the norm at `x`: weights form a convex combination supported on norming
/// components, and each attached functional supports its component.
pub fn validate_support_decomposition(
    x: &ProductVector,
    d: &SupportDecomposition,
) -> Result<bool, ProductError> {
    if x.is_zero() {
        return Err(ProductError::ZeroVector);
    }
    let n = x.component_count();
    if d.weights.len() != n || d.functionals.len() != n {
        return Ok(false);
    }
    if d.weights.iter().any(|w| !w.is_finite() || *w < -1e-12) {
        return Ok(false);
    }
    let total: f64 = d.weights.iter().sum();
    if (total - 1.0).abs() > tol::MARGIN {
        return Ok(false);
    }
    let norm = product_norm(x);
    for i in 0..n {
        if d.weights[i] <= 1e-12 {
            continue;
        }
        let comp = &x.components()[i];
        if comp.norm() < (1.0 - tol::ACTIVE_REL) * norm {
            return Ok(false);
        }
        let g = match &d.functionals[i] {
            Some(g) if g.len() == comp.dim() => g,
            _ => return Ok(false),
        };
        // Dual of l1 is l-infinity: every coefficient at most unimodular.
        if g.iter().any(|c| c.norm() > 1.0 + tol::MARGIN) {
            return Ok(false);
        }
        if x.field() == Field::Real && g.iter().any(|c| c.im.abs() > tol::MARGIN) {
            return Ok(false);
        }
        let attained = apply_functional(g, comp);
        if (attained - Complex64::new(comp.norm(), 0.0)).norm() > tol::MARGIN * (1.0 + norm) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_shapes(x: &ProductVector, y: &ProductVector) -> Result<(), ProductError> {
    if x.component_count() != y.component_count() || x.component_dim() != y.component_dim() {
        return Err(ProductError::ShapeMismatch);
    }
    Ok(())
}

/// Range atoms of y against x: the union over active components of the
/// component support ranges.
pub fn product_range_atoms(
    x: &ProductVector,
    y: &ProductVector,
) -> Result<Vec<RangeAtom>, ProductError> {
    check_shapes(x, y)?;
    if x.is_zero() {
        return Err(ProductError::ZeroVector);
    }
    let mut atoms = Vec::new();
    for i in x.active_components() {
        let range = support_range(&x.components()[i], &y.components()[i])?;
        atoms.extend_from_slice(range.atoms());
    }
    Ok(atoms)
}

pub fn product_bj_orthogonal(x: &ProductVector, y: &ProductVector) -> Result<bool, ProductError> {
    Ok(product_bj_orthogonal_witness(x, y)?.is_some())
}

pub fn product_bj_orthogonal_witness(
    x: &ProductVector,
    y: &ProductVector,
) -> Result<Option<ConvexCombiner>, ProductError> {
    let field = if x.field() == Field::Complex || y.field() == Field::Complex {
        Field::Complex
    } else {
        Field::Real
    };
    let atoms = product_range_atoms(x, y)?;
    Ok(zero_in_convex_union(&atoms, field, tol::MARGIN))
}

/// Literal real-mode test: some active component interval straddles zero, or
/// two active components produce strictly opposite signs. Equivalent to the
/// hull test at the same margin.
pub fn product_bj_orthogonal_two_clause(
    x: &ProductVector,
    y: &ProductVector,
) -> Result<bool, ProductError> {
    if x.field() != Field::Real || y.field() != Field::Real {
        return Err(ProductError::RealOnly);
    }
    check_shapes(x, y)?;
    if x.is_zero() {
        return Err(ProductError::ZeroVector);
    }
    let eta = tol::MARGIN;
    let mut intervals = Vec::new();
    for i in x.active_components() {
        let range = support_range(&x.components()[i], &y.components()[i])?;
        intervals.push(range.interval().expect("real range has an interval"));
    }
    let straddle = intervals.iter().any(|(a, b)| *a <= eta && *b >= -eta);
    if straddle {
        return Ok(true);
    }
    let strictly_neg = intervals.iter().any(|(_, b)| *b < -eta);
    let strictly_pos = intervals.iter().any(|(a, _)| *a > eta);
    Ok(strictly_neg && strictly_pos)
}

/// Smooth iff exactly one component attains the norm and that component is a
/// smooth point of l1^m.
pub fn product_is_smooth(x: &ProductVector) -> Result<bool, ProductError> {
    if x.is_zero() {
        return Err(ProductError::ZeroVector);
    }
    let active = x.active_components();
    if active.len() != 1 {
        return Ok(false);
    }
    Ok(crate::scalar::is_smooth_vec(&x.components()[active[0]])?)
}

/// Necessary condition for right-symmetry: every component attains the
/// product norm. A false result certifies "not right-symmetric"; a true
/// result is inconclusive.
pub fn right_symmetry_precondition(x: &ProductVector) -> Result<bool, ProductError> {
    if x.is_zero() {
        return Err(ProductError::ZeroVector);
    }
    Ok(x.active_components().len() == x.component_count())
}

/// Deterministic unit vector orthogonal to `v` in l1^m: the coordinate vector
/// at an argmin-modulus coordinate (lowest index on ties). For m >= 2 the
/// remaining mass always dominates, so this never fails; for m = 1 it exists
/// only when v = 0.
pub fn unit_vector_orthogonal_to(v: &FiniteVector) -> Result<FiniteVector, ProductError> {
    if v.kind() != NormKind::L1 {
        return Err(ProductError::ComponentShape);
    }
    let m = v.dim();
    if v.is_zero() {
        let mut e = vec![Complex64::new(0.0, 0.0); m];
        e[0] = Complex64::new(1.0, 0.0);
        return Ok(FiniteVector::new(e, NormKind::L1, v.field())?);
    }
    if m == 1 {
        return Err(ProductError::DegenerateComponent);
    }
    let k = (0..m)
        .min_by(|&a, &b| {
            v.entries()[a]
                .norm()
                .partial_cmp(&v.entries()[b].norm())
                .expect("finite moduli")
        })
        .expect("m >= 2");
    let rest: f64 = (0..m)
        .filter(|&j| j != k)
        .map(|j| v.entries()[j].norm())
        .sum();
    debug_assert!(v.entries()[k].norm() <= rest + 1e-15);
    let mut e = vec![Complex64::new(0.0, 0.0); m];
    e[k] = Complex64::new(1.0, 0.0);
    Ok(FiniteVector::new(e, NormKind::L1, v.field())?)
}

/// delta * sgn(v) on the support of v, zero elsewhere. support_range(v, probe)
/// is then the strictly positive singleton {delta * |supp(v)|}.
pub fn signed_support_probe(v: &FiniteVector, delta: f64) -> FiniteVector {
    let entries: Vec<Complex64> = v
        .entries()
        .iter()
        .map(|&z| {
            if z.norm() > 0.0 {
                delta * sgn(z)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    FiniteVector::new(entries, NormKind::L1, v.field()).expect("finite by construction")
}

/// Witness that a strictly non-norming component blocks right-symmetry:
/// returns y with a unit i-th component orthogonal to x_i, tiny strictly
/// positive probes on the norming components, and zero elsewhere, so that
/// y is orthogonal to x while x is not orthogonal to y.
pub fn dominating_orthogonal_witness(
    x: &ProductVector,
    i: usize,
    eps: f64,
    _seed: u64,
) -> Result<ProductVector, ProductError> {
    if x.is_zero() {
        return Err(ProductError::ZeroVector);
    }
    if i >= x.component_count() {
        return Err(ProductError::IndexOutOfRange(i));
    }
    if !eps.is_finite() || eps <= 0.0 {
        return Err(ProductError::BadEps);
    }
    let norm = product_norm(x);
    if x.components()[i].norm() >= (1.0 - tol::ACTIVE_REL) * norm {
        return Err(ProductError::NormingComponent);
    }
    let unit = unit_vector_orthogonal_to(&x.components()[i])?;
    // Keep probe components strictly below both eps and the unit component.
    let footprint = eps.min(1.0) / 2.0;
    let active: Vec<usize> = x.active_components();
    let mut components = Vec::with_capacity(x.component_count());
    for (j, comp) in x.components().iter().enumerate() {
        if j == i {
            components.push(unit.clone());
        } else if active.contains(&j) {
            let delta = footprint / comp.support().len() as f64;
            components.push(signed_support_probe(comp, delta));
        } else {
            components.push(comp.scale(Complex64::new(0.0, 0.0)));
        }
    }
    ProductVector::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn l1(entries: &[f64]) -> FiniteVector {
        FiniteVector::real(entries, NormKind::L1).unwrap()
    }

    fn pv(rows: &[&[f64]]) -> ProductVector {
        ProductVector::new(rows.iter().map(|r| l1(r)).collect()).unwrap()
    }

    #[test]
    fn norm_is_max_of_components() {
        assert_abs_diff_eq!(product_norm(&pv(&[&[1.0, 0.0], &[0.0, -2.0]])), 2.0);
        assert_abs_diff_eq!(product_norm(&pv(&[&[0.0, 0.0], &[0.0, 0.0]])), 0.0);
        assert_abs_diff_eq!(product_norm(&pv(&[&[1.0, 1.0], &[1.0, 1.0]])), 2.0);
    }

    #[test]
    fn decomposition_validation() {
        let x = pv(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let good = SupportDecomposition {
            weights: vec![0.5, 0.5],
            functionals: vec![
                Some(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]),
                Some(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]),
            ],
        };
        assert!(validate_support_decomposition(&x, &good).unwrap());
        let z = pv(&[&[0.25, 0.25], &[0.0, -0.75]]);
        let phi = decomposition_functional_value(&good, &z);
        assert!(phi.norm() <= product_norm(&z) + 1e-12);
        let phi_x = decomposition_functional_value(&good, &x);
        assert_abs_diff_eq!(phi_x.re, product_norm(&x), epsilon = 1e-12);

        // Weight on a non-norming component.
        let y = pv(&[&[0.5, 0.0], &[0.0, 1.0]]);
        let lopsided = SupportDecomposition {
            weights: vec![1.0, 0.0],
            functionals: vec![
                Some(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]),
                None,
            ],
        };
        assert!(!validate_support_decomposition(&y, &lopsided).unwrap());

        // Weights off the simplex.
        let heavy = SupportDecomposition {
            weights: vec![0.6, 0.6],
            functionals: good.functionals.clone(),
        };
        assert!(!validate_support_decomposition(&x, &heavy).unwrap());
    }

    #[test]
    fn orthogonality_examples() {
        let x = pv(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(product_bj_orthogonal(&x, &pv(&[&[1.0, 0.0], &[0.0, -1.0]])).unwrap());
        assert!(!product_bj_orthogonal(&x, &pv(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap());
        // Only component 0 is active and (1,0) is orthogonal to (0,5) in l1.
        let lop = pv(&[&[1.0, 0.0], &[0.0, 0.5]]);
        assert!(product_bj_orthogonal(&lop, &pv(&[&[0.0, 5.0], &[1.0, 0.0]])).unwrap());
    }

    #[test]
    fn two_clause_matches_hull_on_examples() {
        let cases = [
            (
                pv(&[&[1.0, 0.0], &[0.0, 1.0]]),
                pv(&[&[1.0, 0.0], &[0.0, -1.0]]),
            ),
            (
                pv(&[&[1.0, 0.0], &[0.0, 1.0]]),
                pv(&[&[1.0, 0.0], &[0.0, 1.0]]),
            ),
            (
                pv(&[&[1.0, 0.0], &[0.0, 0.5]]),
                pv(&[&[0.0, 5.0], &[1.0, 0.0]]),
            ),
            (
                pv(&[&[1.0, -2.0], &[3.0, 0.0]]),
                pv(&[&[0.5, 0.25], &[-1.0, 2.0]]),
            ),
        ];
        for (x, y) in cases {
            assert_eq!(
                product_bj_orthogonal(&x, &y).unwrap(),
                product_bj_orthogonal_two_clause(&x, &y).unwrap()
            );
        }
    }

    #[test]
    fn smoothness_clauses() {
        assert!(product_is_smooth(&pv(&[&[1.0, 1.0], &[0.0, 1.0]])).unwrap());
        assert!(!product_is_smooth(&pv(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap());
        assert!(!product_is_smooth(&pv(&[&[1.0, 0.0], &[0.0, 0.5]])).unwrap());
    }

    #[test]
    fn right_symmetry_necessary_condition() {
        assert!(right_symmetry_precondition(&pv(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap());
        assert!(!right_symmetry_precondition(&pv(&[&[1.0, 0.0], &[0.0, 0.5]])).unwrap());
        assert!(right_symmetry_precondition(&pv(&[&[3.0, -1.0]])).unwrap());
    }

    #[test]
    fn dominating_witness_postconditions() {
        let x = pv(&[&[1.0, 0.0], &[0.0, 0.5]]);
        let y = dominating_orthogonal_witness(&x, 1, 0.1, 7).unwrap();
        assert_abs_diff_eq!(y.components()[1].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(product_norm(&y), 1.0, epsilon = 1e-12);
        assert!(y.components()[0].norm() < 0.1);
        assert!(product_bj_orthogonal(&y, &x).unwrap());
        assert!(!product_bj_orthogonal(&x, &y).unwrap());
    }

    #[test]
    fn dominating_witness_zero_component() {
        let x = pv(&[&[1.0], &[0.0]]);
        let y = dominating_orthogonal_witness(&x, 1, 0.25, 0).unwrap();
        assert!(product_bj_orthogonal(&y, &x).unwrap());
        assert!(!product_bj_orthogonal(&x, &y).unwrap());
    }

    #[test]
    fn dominating_witness_errors() {
        let x = pv(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(
            dominating_orthogonal_witness(&x, 0, 0.1, 0).unwrap_err(),
            ProductError::NormingComponent
        );
        let scalarish = pv(&[&[1.0], &[0.5]]);
        assert_eq!(
            dominating_orthogonal_witness(&scalarish, 1, 0.1, 0).unwrap_err(),
            ProductError::DegenerateComponent
        );
    }

    #[test]
    fn unit_orthogonal_uses_smallest_coordinate() {
        let v = l1(&[3.0, -0.25, 2.0]);
        let u = unit_vector_orthogonal_to(&v).unwrap();
        assert_abs_diff_eq!(u.entries()[1].re, 1.0);
        assert!(crate::scalar::bj_orthogonal_vec(&u, &v).unwrap());
    }
}
