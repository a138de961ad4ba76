//! Shared generators and brute-force oracles for the integration suite.
//! The oracles decide orthogonality by minimizing the perturbed norm over a
//! dense scalar grid with local refinement, independently of the support
//! functional machinery under test.

// Each test target compiles its own copy, so helpers used by one target look
// dead to another.
#![allow(dead_code)]

use bjgeo::field::Field;
use bjgeo::operator::OperatorMatrix;
use bjgeo::product::ProductVector;
use bjgeo::scalar::{FiniteVector, NormKind};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TEST_SEED: u64 = 0xB10C_0FF5_EED0_0001;

pub fn rng_for(criterion: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(TEST_SEED ^ criterion)
}

pub fn criterion_line(number: u32, name: &str, pass: bool) {
    println!(
        "ACCEPTANCE {number} {name}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
}

// ---------- generators ----------

pub fn random_scalar(rng: &mut ChaCha8Rng, field: Field) -> Complex64 {
    let re = rng.gen::<f64>() * 2.0 - 1.0;
    let im = if field == Field::Complex {
        rng.gen::<f64>() * 2.0 - 1.0
    } else {
        0.0
    };
    Complex64::new(re, im)
}

/// Dense entries with occasional exact zeros so sparse support patterns and
/// their special cases appear in the batch.
pub fn random_vector(
    rng: &mut ChaCha8Rng,
    dim: usize,
    kind: NormKind,
    field: Field,
) -> FiniteVector {
    loop {
        let entries: Vec<Complex64> = (0..dim)
            .map(|_| {
                if rng.gen::<f64>() < 0.25 {
                    Complex64::new(0.0, 0.0)
                } else {
                    random_scalar(rng, field)
                }
            })
            .collect();
        let v = FiniteVector::new(entries, kind, field).expect("finite entries");
        if !v.is_zero() {
            return v;
        }
    }
}

pub fn random_vector_allow_zero(
    rng: &mut ChaCha8Rng,
    dim: usize,
    kind: NormKind,
    field: Field,
) -> FiniteVector {
    if rng.gen::<f64>() < 0.05 {
        return FiniteVector::new(vec![Complex64::new(0.0, 0.0); dim], kind, field)
            .expect("zero vector");
    }
    random_vector(rng, dim, kind, field)
}

pub fn random_product(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    field: Field,
    allow_zero: bool,
) -> ProductVector {
    loop {
        let comps: Vec<FiniteVector> = (0..n)
            .map(|_| random_vector_allow_zero(rng, m, NormKind::L1, field))
            .collect();
        let x = ProductVector::new(comps).expect("well-formed components");
        if allow_zero || !x.is_zero() {
            return x;
        }
    }
}

pub fn random_operator(
    rng: &mut ChaCha8Rng,
    m: usize,
    n: usize,
    field: Field,
    sparsity: f64,
) -> OperatorMatrix {
    loop {
        let entries: Vec<Complex64> = (0..m * n)
            .map(|_| {
                if rng.gen::<f64>() < sparsity {
                    Complex64::new(0.0, 0.0)
                } else {
                    random_scalar(rng, field)
                }
            })
            .collect();
        let t = OperatorMatrix::new(m, n, entries, field).expect("finite entries");
        if !t.is_zero() {
            return t;
        }
    }
}

// ---------- scalar minimization ----------

/// Minimum of a convex function on [-radius, radius]: coarse scan, then
/// golden-section inside the bracket around the best grid point.
pub fn min_convex_1d(f: impl Fn(f64) -> f64, radius: f64) -> f64 {
    let grid = 2000usize;
    let mut best = f64::INFINITY;
    let mut best_k = 0usize;
    for k in 0..=grid {
        let lam = -radius + 2.0 * radius * k as f64 / grid as f64;
        let v = f(lam);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let h = 2.0 * radius / grid as f64;
    let center = -radius + 2.0 * radius * best_k as f64 / grid as f64;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (center - h, center + h);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    best.min(fc).min(fd)
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (fc, c)
    } else {
        (fd, d)
    }
}

/// Minimum of a convex function over a complex disk centered at the origin.
/// On a tiny circle the function is its base value plus the radius times a
/// smooth angular profile, so the circle minimizer points along the steepest
/// descent direction even when the descent cone is far narrower than any
/// fixed direction set; a golden-section pass along that ray measures the
/// depth. A coarse polar sweep plus local polar refinement covers minima
/// away from the steepest ray.
pub fn min_convex_2d(f: impl Fn(Complex64) -> f64, radius: f64) -> f64 {
    let origin = Complex64::new(0.0, 0.0);
    let f0 = f(origin);
    let mut best = f0;
    let mut at = origin;

    let samples = 512usize;
    let span = std::f64::consts::TAU / samples as f64;
    for r1 in [radius * 1e-6, radius * 1e-3] {
        let mut th0 = 0.0;
        let mut h_best = f64::INFINITY;
        for k in 0..samples {
            let th = std::f64::consts::TAU * k as f64 / samples as f64;
            let v = f(Complex64::from_polar(r1, th));
            if v < h_best {
                h_best = v;
                th0 = th;
            }
        }
        let (_, th_hat) = golden_min(
            &|th| f(Complex64::from_polar(r1, th)),
            th0 - span,
            th0 + span,
            40,
        );
        let (v_ray, r_ray) = golden_min(
            &|r| f(Complex64::from_polar(r.max(0.0), th_hat)),
            0.0,
            radius,
            60,
        );
        if v_ray < best {
            best = v_ray;
            at = Complex64::from_polar(r_ray.max(0.0), th_hat);
        }
    }

    for kr in 1..=40 {
        let r = radius * kr as f64 / 40.0;
        for ka in 0..64 {
            let th = std::f64::consts::TAU * ka as f64 / 64.0;
            let lam = Complex64::from_polar(r, th);
            let v = f(lam);
            if v < best {
                best = v;
                at = lam;
            }
        }
    }

    if at != origin {
        let (mut r, mut th) = at.to_polar();
        let mut val = best;
        let mut r_span = radius / 40.0;
        let mut th_span = 0.12f64;
        for _ in 0..8 {
            let (v1, th1) = golden_min(
                &|q| f(Complex64::from_polar(r, q)),
                th - th_span,
                th + th_span,
                30,
            );
            if v1 < val {
                val = v1;
                th = th1;
            }
            let (v2, r2) = golden_min(
                &|q| f(Complex64::from_polar(q.max(0.0), th)),
                (r - r_span).max(0.0),
                (r + r_span).min(radius),
                30,
            );
            if v2 < val {
                val = v2;
                r = r2.max(0.0);
            }
            r_span *= 0.5;
            th_span *= 0.5;
        }
        best = best.min(val);
    }
    best
}

// ---------- grid oracles ----------

fn oracle_threshold(base: f64) -> f64 {
    base - 1e-9 * base.max(1.0)
}

pub fn oracle_vec(x: &FiniteVector, y: &FiniteVector) -> bool {
    if y.is_zero() {
        return true;
    }
    let radius = 2.5 * x.norm() / y.norm();
    let min = if x.field() == Field::Complex || y.field() == Field::Complex {
        min_convex_2d(|lam| x.add_scaled(lam, y).norm(), radius)
    } else {
        min_convex_1d(
            |lam| x.add_scaled(Complex64::new(lam, 0.0), y).norm(),
            radius,
        )
    };
    min >= oracle_threshold(x.norm())
}

fn product_norm_raw(x: &ProductVector) -> f64 {
    x.components()
        .iter()
        .map(FiniteVector::norm)
        .fold(0.0, f64::max)
}

pub fn oracle_product(x: &ProductVector, y: &ProductVector) -> bool {
    let ynorm = product_norm_raw(y);
    if ynorm == 0.0 {
        return true;
    }
    let xnorm = product_norm_raw(x);
    let radius = 2.5 * xnorm / ynorm;
    let eval = |lam: Complex64| {
        x.components()
            .iter()
            .zip(y.components())
            .map(|(a, b)| a.add_scaled(lam, b).norm())
            .fold(0.0, f64::max)
    };
    let min = if x.field() == Field::Complex || y.field() == Field::Complex {
        min_convex_2d(eval, radius)
    } else {
        min_convex_1d(|lam| eval(Complex64::new(lam, 0.0)), radius)
    };
    min >= oracle_threshold(xnorm)
}

/// Real operator norm by direct enumeration of domain sign patterns,
/// written against raw entries.
pub fn operator_norm_raw(rows: &[Vec<f64>]) -> f64 {
    let n = rows.first().map_or(0, Vec::len);
    let mut best = 0.0f64;
    for mask in 0..(1u32 << n.saturating_sub(1)) {
        let mut total = 0.0;
        for row in rows {
            let mut acc = 0.0;
            for (j, &a) in row.iter().enumerate() {
                let sign = if j + 1 < n && (mask >> j) & 1 == 1 {
                    -1.0
                } else {
                    1.0
                };
                acc += a * sign;
            }
            total += acc.abs();
        }
        best = best.max(total);
    }
    best
}

fn real_rows(t: &OperatorMatrix) -> Vec<Vec<f64>> {
    (0..t.m())
        .map(|i| (0..t.n()).map(|j| t.entry(i, j).re).collect())
        .collect()
}

pub fn oracle_operator(t: &OperatorMatrix, s: &OperatorMatrix) -> bool {
    let tr = real_rows(t);
    let sr = real_rows(s);
    let snorm = operator_norm_raw(&sr);
    if snorm == 0.0 {
        return true;
    }
    let tnorm = operator_norm_raw(&tr);
    let radius = 2.5 * tnorm / snorm;
    let min = min_convex_1d(
        |lam| {
            let rows: Vec<Vec<f64>> = tr
                .iter()
                .zip(&sr)
                .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + lam * q).collect())
                .collect();
            operator_norm_raw(&rows)
        },
        radius,
    );
    min >= oracle_threshold(tnorm)
}
