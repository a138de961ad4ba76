//! Membership of zero in the convex hull of a finite union of disks.
//!
//! Ranges of support-functional values are stored as atoms (center, radius).
//! In real mode every center is real and the hull is the interval
//! [min(c - r), max(c + r)], so membership has a closed form. In complex mode
//! the hull lives in the plane; by Caratheodory a point of the hull is a
//! combination of at most three atoms, so singles, pairs and triples suffice.
//! The pair and triple searches minimize the convex gap |sum(l*c)| - sum(l*r)
//! by golden section, which is exact for convex objectives.

use crate::field::Field;
use num_complex::Complex64;
use serde::Serialize;

/// One disk of support-functional values: center and radius.
pub type RangeAtom = (Complex64, f64);

/// Simplex weights certifying hull membership, indexed like the atom list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexCombiner {
    pub weights: Vec<f64>,
}

impl ConvexCombiner {
    /// Gap of the certified combination, |sum(l*c)| - sum(l*r).
    /// Membership means the gap is <= the margin used for the verdict.
    pub fn gap(&self, atoms: &[RangeAtom]) -> f64 {
        let mut c = Complex64::new(0.0, 0.0);
        let mut r = 0.0;
        for (w, (ci, ri)) in self.weights.iter().zip(atoms) {
            c += w * ci;
            r += w * ri;
        }
        c.norm() - r
    }
}

/// Orthogonality verdict together with the data that justifies it.
#[derive(Clone, Debug, Serialize)]
pub struct OrthoCertificate {
    pub orthogonal: bool,
    /// True when the atom list came from a grid search (complex operators).
    pub approximate: bool,
    /// Atoms as (re, im, radius) rows.
    pub atoms: Vec<(f64, f64, f64)>,
    /// Present exactly when orthogonal.
    pub weights: Option<Vec<f64>>,
}

impl OrthoCertificate {
    pub fn from_atoms(atoms: &[RangeAtom], field: Field, eta: f64, approximate: bool) -> Self {
        let witness = zero_in_convex_union(atoms, field, eta);
        OrthoCertificate {
            orthogonal: witness.is_some(),
            approximate,
            atoms: atoms.iter().map(|&(c, r)| (c.re, c.im, r)).collect(),
            weights: witness.map(|w| w.weights),
        }
    }
}

/// Decides whether 0 lies in the convex hull of the union of the atom disks,
/// i.e. whether some simplex weight vector l satisfies
/// |sum(l_i c_i)| <= sum(l_i r_i) + eta. Returns the weights on success.
pub fn zero_in_convex_union(atoms: &[RangeAtom], field: Field, eta: f64) -> Option<ConvexCombiner> {
    if atoms.is_empty() {
        return None;
    }
    match field {
        Field::Real => real_membership(atoms, eta),
        Field::Complex => complex_membership(atoms, eta),
    }
}

fn unit_weight(k: usize, i: usize) -> ConvexCombiner {
    let mut weights = vec![0.0; k];
    weights[i] = 1.0;
    ConvexCombiner { weights }
}

fn pair_weight(k: usize, i: usize, j: usize, t: f64) -> ConvexCombiner {
    let mut weights = vec![0.0; k];
    weights[i] = 1.0 - t;
    weights[j] = t;
    ConvexCombiner { weights }
}

fn real_membership(atoms: &[RangeAtom], eta: f64) -> Option<ConvexCombiner> {
    let k = atoms.len();
    // Single atom containing zero.
    for (i, &(c, r)) in atoms.iter().enumerate() {
        if c.re.abs() <= r + eta {
            return Some(unit_weight(k, i));
        }
    }
    // Hull is [min(c - r), max(c + r)]; zero inside needs one atom on each side.
    let neg = atoms
        .iter()
        .enumerate()
        .filter(|(_, &(c, r))| c.re + r < 0.0)
        .min_by(|a, b| cmp_f64(a.1 .0.re + a.1 .1, b.1 .0.re + b.1 .1));
    let pos = atoms
        .iter()
        .enumerate()
        .filter(|(_, &(c, r))| c.re - r > 0.0)
        .max_by(|a, b| cmp_f64(a.1 .0.re - a.1 .1, b.1 .0.re - b.1 .1));
    if let (Some((i, &(ci, _))), Some((j, &(cj, _)))) = (neg, pos) {
        // Centers straddle zero; blending them to zero gives gap -R(t) <= 0.
        let t = -ci.re / (cj.re - ci.re);
        let mut weights = vec![0.0; k];
        weights[i] = 1.0 - t;
        weights[j] = t;
        return Some(ConvexCombiner { weights });
    }
    None
}

fn cmp_f64(a: f64, b: f64) -> std::cmp::Ordering {
    a.partial_cmp(&b).expect("atom data is finite")
}

/// Gap of the two-disk blend at parameter t in [0, 1].
fn pair_gap(d1: RangeAtom, d2: RangeAtom, t: f64) -> f64 {
    let c = d1.0 + t * (d2.0 - d1.0);
    let r = d1.1 + t * (d2.1 - d1.1);
    c.norm() - r
}

/// Golden-section minimum of a convex function on [a, b].
fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Best blend of two disks: argmin over t of the gap, which is convex.
fn pair_min(d1: RangeAtom, d2: RangeAtom) -> (f64, f64) {
    let ends = [(0.0, pair_gap(d1, d2, 0.0)), (1.0, pair_gap(d1, d2, 1.0))];
    let (t, g) = golden_min(|t| pair_gap(d1, d2, t), 0.0, 1.0, 80);
    let mut best = (t, g);
    for e in ends {
        if e.1 < best.1 {
            best = e;
        }
    }
    best
}

fn complex_membership(atoms: &[RangeAtom], eta: f64) -> Option<ConvexCombiner> {
    let k = atoms.len();
    for (i, &(c, r)) in atoms.iter().enumerate() {
        if c.norm() <= r + eta {
            return Some(unit_weight(k, i));
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let (t, g) = pair_min(atoms[i], atoms[j]);
            if g <= eta {
                return Some(pair_weight(k, i, j, t));
            }
        }
    }
    // Caratheodory in the plane: three atoms suffice. Fixing the weight s on
    // the third atom reduces to a pair problem on blended disks, and the
    // resulting value is convex in s.
    for i in 0..k {
        for j in (i + 1)..k {
            for l in (j + 1)..k {
                let (di, dj, dl) = (atoms[i], atoms[j], atoms[l]);
                let blend = |da: RangeAtom, s: f64| -> RangeAtom {
                    (da.0 + s * (dl.0 - da.0), da.1 + s * (dl.1 - da.1))
                };
                let h = |s: f64| pair_min(blend(di, s), blend(dj, s)).1;
                let (s, hs) = golden_min(h, 0.0, 1.0, 80);
                let hs_end = h(1.0);
                let (s, hs) = if hs_end < hs { (1.0, hs_end) } else { (s, hs) };
                if hs <= eta {
                    let (t, _) = pair_min(blend(di, s), blend(dj, s));
                    let mut weights = vec![0.0; k];
                    weights[i] = (1.0 - s) * (1.0 - t);
                    weights[j] = (1.0 - s) * t;
                    weights[l] = s;
                    return Some(ConvexCombiner { weights });
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_interval_cases() {
        let eta = 1e-9;
        // Single straddling atom.
        let w = zero_in_convex_union(&[(c(0.5, 0.0), 1.0)], Field::Real, eta).unwrap();
        assert_eq!(w.weights, vec![1.0]);
        // Two atoms on opposite sides.
        let atoms = [(c(-2.0, 0.0), 0.5), (c(3.0, 0.0), 1.0)];
        let w = zero_in_convex_union(&atoms, Field::Real, eta).unwrap();
        assert!(w.gap(&atoms) <= eta + 1e-12);
        // Everything strictly positive.
        assert!(
            zero_in_convex_union(&[(c(2.0, 0.0), 0.5), (c(1.0, 0.0), 0.9)], Field::Real, eta)
                .is_none()
        );
    }

    #[test]
    fn complex_three_points_on_circle() {
        // Points i, -i, 1: zero is on the segment [i, -i].
        let atoms = [(c(0.0, 1.0), 0.0), (c(0.0, -1.0), 0.0), (c(1.0, 0.0), 0.0)];
        let w = zero_in_convex_union(&atoms, Field::Complex, 1e-9).unwrap();
        assert!(w.gap(&atoms) <= 1e-9 + 1e-12);
        assert!((w.weights[0] - 0.5).abs() < 1e-6);
        assert!((w.weights[1] - 0.5).abs() < 1e-6);
        assert_eq!(w.weights[2], 0.0);
    }

    #[test]
    fn complex_needs_a_triple() {
        // Three unit points at angles 90, 210, 330 degrees: zero is interior
        // to the triangle but outside every pair segment's eta-tube.
        let p = |deg: f64| {
            let t = deg.to_radians();
            (c(t.cos(), t.sin()), 0.0)
        };
        let atoms = [p(90.0), p(210.0), p(330.0)];
        let w = zero_in_convex_union(&atoms, Field::Complex, 1e-9).unwrap();
        assert!(w.gap(&atoms) <= 2e-9);
        for wt in &w.weights {
            assert!((wt - 1.0 / 3.0).abs() < 1e-5);
        }
    }

    #[test]
    fn complex_disk_containing_zero() {
        let atoms = [(c(0.3, -0.2), 0.5)];
        assert!(zero_in_convex_union(&atoms, Field::Complex, 1e-9).is_some());
        let far = [(c(3.0, 4.0), 4.9)];
        assert!(zero_in_convex_union(&far, Field::Complex, 1e-9).is_none());
    }

    #[test]
    fn complex_pair_of_disks() {
        // Disks around 2 and -1+i, radii 0.5: the connecting blend passes
        // near zero and the radii close the gap.
        let atoms = [(c(2.0, 0.0), 0.6), (c(-1.0, 0.5), 0.6)];
        let w = zero_in_convex_union(&atoms, Field::Complex, 1e-9);
        // Segment from 2 to -1+0.5i has distance 1/sqrt(10) ~ 0.316 < 0.6.
        assert!(w.is_some());
        assert!(w.unwrap().gap(&atoms) <= 1e-9);
    }

    #[test]
    fn empty_atom_list_is_never_orthogonal() {
        assert!(zero_in_convex_union(&[], Field::Real, 1e-9).is_none());
        assert!(zero_in_convex_union(&[], Field::Complex, 1e-9).is_none());
    }
}
