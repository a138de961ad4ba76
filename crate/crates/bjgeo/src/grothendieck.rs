//! Desk-scale lower bounds for the bilinear constant G(m,n): the supremum
//! of |sum a_ij <x_i, y_j>| over norm-one operators (a_ij) and unit vectors
//! x_i, y_j. Candidates come from the sign-matrix vertices and from
//! certified extreme contractions; each is polished by alternating ascent.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::extremality::{is_extreme_contraction, ExtremalityError, ExtremalityVerdict};
use crate::field::Field;
use crate::operator::{op_norm, OperatorError, OperatorMatrix};
use crate::parallel::map_indexed;
use crate::tol;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const RESTARTS_PER_CANDIDATE: usize = 32;
const MAX_SWEEPS: usize = 200;
const EXTREME_DRAW_CAP: usize = 200;
const SAMPLED_SIGN_POOL: usize = 512;
// Gains below float noise are ties, and the earlier find keeps the lead;
// without this a random restart can beat an exact value by one ulp.
const IMPROVEMENT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct VectorSystem {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
}

impl VectorSystem {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>) -> Result<Self, GrothendieckError> {
        let d = xs
            .first()
            .or_else(|| ys.first())
            .map(|v| v.len())
            .unwrap_or(0);
        if d == 0 || xs.is_empty() || ys.is_empty() {
            return Err(GrothendieckError::EmptySystem);
        }
        for v in xs.iter().chain(ys.iter()) {
            if v.len() != d {
                return Err(GrothendieckError::EmptySystem);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(GrothendieckError::NotUnit(norm));
            }
        }
        Ok(VectorSystem { xs, ys })
    }

    pub fn dimension(&self) -> usize {
        self.xs[0].len()
    }
}

#[derive(Clone, Debug)]
pub struct GrothendieckSearchResult {
    pub best_value: f64,
    pub best_operator: OperatorMatrix,
    pub best_system: VectorSystem,
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum GrothendieckError {
    #[error("operator norm {0} is not within 1e-6 of one")]
    NotNormalized(f64),
    #[error("system vector has Euclidean norm {0}, expected 1")]
    NotUnit(f64),
    #[error("vector system is empty or ragged")]
    EmptySystem,
    #[error("system shape does not match the operator")]
    ShapeMismatch,
    #[error("the objective is defined for real operators only")]
    ComplexUnsupported,
    #[error("dimensions exceed the enumeration envelope (n <= 16)")]
    TooLarge,
    #[error("budget ran out before the sign-matrix pool was covered")]
    BudgetExhausted(Box<GrothendieckSearchResult>),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Extremality(#[from] ExtremalityError),
}

fn real_entries(t: &OperatorMatrix) -> Result<Vec<f64>, GrothendieckError> {
    if t.field() == Field::Complex {
        return Err(GrothendieckError::ComplexUnsupported);
    }
    Ok((0..t.m())
        .flat_map(|i| (0..t.n()).map(move |j| (i, j)))
        .map(|(i, j)| t.entry(i, j).re)
        .collect())
}

fn check_normalized(t: &OperatorMatrix) -> Result<(), GrothendieckError> {
    let norm = op_norm(t);
    if (norm - 1.0).abs() > tol::NORM_ONE_SLACK {
        return Err(GrothendieckError::NotNormalized(norm));
    }
    Ok(())
}

pub fn bilinear_objective(
    t: &OperatorMatrix,
    sys: &VectorSystem,
) -> Result<f64, GrothendieckError> {
    check_normalized(t)?;
    if sys.xs.len() != t.m() || sys.ys.len() != t.n() {
        return Err(GrothendieckError::ShapeMismatch);
    }
    let a = real_entries(t)?;
    Ok(signed_objective(&a, t.n(), &sys.xs, &sys.ys).abs())
}

fn signed_objective(a: &[f64], n: usize, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            total += a[i * n + j] * dot;
        }
    }
    total
}

fn random_unit(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        // Box-Muller pairs give an isotropic direction.
        let mut v: Vec<f64> = Vec::with_capacity(d);
        while v.len() < d {
            let u1: f64 = rng.gen::<f64>().max(1e-300);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            v.push(r * (std::f64::consts::TAU * u2).cos());
            if v.len() < d {
                v.push(r * (std::f64::consts::TAU * u2).sin());
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for a in &mut v {
                *a /= norm;
            }
            return v;
        }
    }
}

/// One ascent pass from the given start. Each half-step solves its
/// conditional maximum exactly, so the recorded per-sweep values are
/// nondecreasing; a zero conditional sum is replaced by a fresh random
/// direction.
fn ascent_run(
    a: &[f64],
    m: usize,
    n: usize,
    d: usize,
    start_ys: Vec<Vec<f64>>,
    rng: &mut ChaCha8Rng,
    max_iters: usize,
) -> (f64, VectorSystem, usize, Vec<f64>) {
    let mut xs = vec![vec![0.0; d]; m];
    let mut ys = start_ys;
    let mut trace = Vec::new();
    let mut value = f64::NEG_INFINITY;
    let mut sweeps = 0;
    for _ in 0..max_iters {
        sweeps += 1;
        for (i, x) in xs.iter_mut().enumerate() {
            let mut acc = vec![0.0; d];
            for (j, y) in ys.iter().enumerate() {
                let c = a[i * n + j];
                for (s, q) in acc.iter_mut().zip(y) {
                    *s += c * q;
                }
            }
            let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
            *x = if norm > 1e-12 {
                acc.iter().map(|v| v / norm).collect()
            } else {
                random_unit(d, rng)
            };
        }
        for (j, y) in ys.iter_mut().enumerate() {
            let mut acc = vec![0.0; d];
            for (i, x) in xs.iter().enumerate() {
                let c = a[i * n + j];
                for (s, p) in acc.iter_mut().zip(x) {
                    *s += c * p;
                }
            }
            let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
            *y = if norm > 1e-12 {
                acc.iter().map(|v| v / norm).collect()
            } else {
                random_unit(d, rng)
            };
        }
        let next = signed_objective(a, n, &xs, &ys);
        trace.push(next);
        if next - value < 1e-12 * value.abs().max(1.0) && sweeps > 1 {
            value = value.max(next);
            break;
        }
        value = next;
    }
    let system = VectorSystem { xs, ys };
    (value.abs(), system, sweeps, trace)
}

pub fn alternating_ascent(
    t: &OperatorMatrix,
    d: usize,
    seed: u64,
    max_iters: usize,
) -> Result<(f64, VectorSystem, usize), GrothendieckError> {
    check_normalized(t)?;
    if d == 0 {
        return Err(GrothendieckError::EmptySystem);
    }
    let a = real_entries(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<Vec<f64>> = (0..t.n()).map(|_| random_unit(d, &mut rng)).collect();
    let (value, system, sweeps, _) = ascent_run(&a, t.m(), t.n(), d, start, &mut rng, max_iters);
    Ok((value, system, sweeps))
}

/// Deterministic start: every y_j on the first axis, signed by its column
/// sum so the first x half-step already agrees with the aligned rank-one
/// witness (value exactly 1 for the normalized all-ones pattern).
fn aligned_start(a: &[f64], m: usize, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| {
            let col: f64 = (0..m).map(|i| a[i * n + j]).sum();
            let mut y = vec![0.0; d];
            y[0] = if col < 0.0 { -1.0 } else { 1.0 };
            y
        })
        .collect()
}

struct CandidateOutcome {
    value: f64,
    system: VectorSystem,
    runs: usize,
    sweeps: usize,
}

struct AscentPlan {
    seed: u64,
    ordinal: usize,
    restarts: usize,
    max_iters: usize,
}

fn evaluate_candidate(
    a: &[f64],
    m: usize,
    n: usize,
    d: usize,
    plan: AscentPlan,
) -> CandidateOutcome {
    let mut best_value = f64::NEG_INFINITY;
    let mut best_system = None;
    let mut sweeps = 0;
    for r in 0..plan.restarts {
        let trial = (plan.ordinal * RESTARTS_PER_CANDIDATE + r) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ trial.wrapping_mul(GOLDEN));
        let start = if r == 0 {
            aligned_start(a, m, n, d)
        } else {
            (0..n).map(|_| random_unit(d, &mut rng)).collect()
        };
        let (value, system, s, _) = ascent_run(a, m, n, d, start, &mut rng, plan.max_iters);
        sweeps += s;
        if value > best_value + IMPROVEMENT_FLOOR || best_system.is_none() {
            best_value = value;
            best_system = Some(system);
        }
    }
    CandidateOutcome {
        value: best_value,
        system: best_system.expect("at least one restart"),
        runs: plan.restarts,
        sweeps,
    }
}

/// Sign matrices with the leading entry fixed positive (global sign is a
/// symmetry of the objective). Exhaustive when m*n <= 16, seeded sample
/// otherwise.
fn sign_matrix_pool(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let cells = m * n;
    if cells <= 16 {
        let count = 1usize << (cells - 1);
        (0..count)
            .map(|mask| {
                (0..cells)
                    .map(|c| {
                        if c == 0 {
                            1.0
                        } else if mask >> (c - 1) & 1 == 1 {
                            -1.0
                        } else {
                            1.0
                        }
                    })
                    .collect()
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ GOLDEN);
        let mut pool = Vec::with_capacity(SAMPLED_SIGN_POOL);
        // Force the aligned rank-one witness into the sampled pool.
        pool.push(vec![1.0; cells]);
        for _ in 1..SAMPLED_SIGN_POOL {
            let mut entries: Vec<f64> = (0..cells)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            if entries[0] < 0.0 {
                for e in &mut entries {
                    *e = -*e;
                }
            }
            pool.push(entries);
        }
        pool.sort_by(|p, q| p.partial_cmp(q).expect("sign entries are finite"));
        pool.dedup();
        pool
    }
}

fn normalize_candidate(
    m: usize,
    n: usize,
    entries: &[f64],
) -> Result<Option<(OperatorMatrix, Vec<f64>)>, GrothendieckError> {
    let raw = OperatorMatrix::new(
        m,
        n,
        entries.iter().map(|&e| Complex64::new(e, 0.0)).collect(),
        Field::Real,
    )?;
    let norm = op_norm(&raw);
    if norm < 1e-12 {
        return Ok(None);
    }
    let t = raw.scale(Complex64::new(1.0 / norm, 0.0));
    let a = entries.iter().map(|&e| e / norm).collect();
    Ok(Some((t, a)))
}

pub fn lower_bound(
    m: usize,
    n: usize,
    budget: usize,
    seed: u64,
) -> Result<GrothendieckSearchResult, GrothendieckError> {
    lower_bound_with(m, n, budget, seed, &[], 0)
}

pub fn lower_bound_with(
    m: usize,
    n: usize,
    budget: usize,
    seed: u64,
    extra: &[OperatorMatrix],
    workers: usize,
) -> Result<GrothendieckSearchResult, GrothendieckError> {
    if m == 0 || n == 0 || m > tol::MAX_DIM || n > tol::MAX_DIM {
        return Err(GrothendieckError::TooLarge);
    }
    let d = m + n;
    let mut remaining = budget;
    let mut restarts_total = 0usize;
    let mut sweeps_total = 0usize;
    let mut best: Option<(f64, OperatorMatrix, VectorSystem)> = None;

    let mut consider =
        |outcome: CandidateOutcome,
         t: &OperatorMatrix,
         best: &mut Option<(f64, OperatorMatrix, VectorSystem)>| {
            restarts_total += outcome.runs;
            sweeps_total += outcome.sweeps;
            let better = match best {
                Some((v, _, _)) => outcome.value > *v + IMPROVEMENT_FLOOR,
                None => true,
            };
            if better {
                *best = Some((outcome.value, t.clone(), outcome.system));
            }
        };

    // User-supplied pool first, at full restart depth.
    for (k, t) in extra.iter().enumerate() {
        if t.m() != m || t.n() != n {
            return Err(GrothendieckError::ShapeMismatch);
        }
        check_normalized(t)?;
        let a = real_entries(t)?;
        let runs = RESTARTS_PER_CANDIDATE.min(remaining.max(1));
        let plan = AscentPlan {
            seed,
            ordinal: k,
            restarts: runs,
            max_iters: MAX_SWEEPS,
        };
        let outcome = evaluate_candidate(&a, m, n, d, plan);
        remaining = remaining.saturating_sub(outcome.runs);
        consider(outcome, t, &mut best);
    }

    // Sign-matrix pool on half the budget, evaluated in parallel with a
    // deterministic first-ordinal-wins reduction.
    let pool = sign_matrix_pool(m, n, seed);
    let half = budget.div_ceil(2).min(remaining);
    let per_candidate = (half / pool.len().max(1)).min(RESTARTS_PER_CANDIDATE);
    let ordinal_base = extra.len();
    if per_candidate == 0 {
        // Cannot cover the vertex pool: evaluate what fits, then stop.
        for (k, entries) in pool.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let Some((t, a)) = normalize_candidate(m, n, entries)? else {
                continue;
            };
            let plan = AscentPlan {
                seed,
                ordinal: ordinal_base + k,
                restarts: 1,
                max_iters: MAX_SWEEPS,
            };
            let outcome = evaluate_candidate(&a, m, n, d, plan);
            remaining -= 1;
            consider(outcome, &t, &mut best);
        }
        let result = assemble(best, restarts_total, sweeps_total, seed)?;
        return Err(GrothendieckError::BudgetExhausted(Box::new(result)));
    }
    let prepared: Vec<Option<(OperatorMatrix, Vec<f64>)>> = pool
        .iter()
        .map(|entries| normalize_candidate(m, n, entries))
        .collect::<Result<_, _>>()?;
    let outcomes = map_indexed(workers, prepared.len(), |k| {
        prepared[k].as_ref().map(|(_, a)| {
            let plan = AscentPlan {
                seed,
                ordinal: ordinal_base + k,
                restarts: per_candidate,
                max_iters: MAX_SWEEPS,
            };
            evaluate_candidate(a, m, n, d, plan)
        })
    });
    for (k, outcome) in outcomes.into_iter().enumerate() {
        let (Some(outcome), Some((t, _))) = (outcome, &prepared[k]) else {
            continue;
        };
        remaining = remaining.saturating_sub(outcome.runs);
        consider(outcome, t, &mut best);
    }

    // Certified-extreme pool on the remainder: seeded draws, normalized and
    // kept only when the extremality certificate says Extreme.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
    let mut draws = 0;
    let mut ordinal = ordinal_base + pool.len();
    while remaining >= 1 && draws < EXTREME_DRAW_CAP {
        draws += 1;
        let entries: Vec<f64> = (0..m * n)
            .map(|_| {
                if draws % 2 == 0 {
                    rng.gen::<f64>() * 2.0 - 1.0
                } else if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let Some((t, a)) = normalize_candidate(m, n, &entries)? else {
            continue;
        };
        let extreme = match is_extreme_contraction(&t) {
            Ok(cert) => cert.verdict == ExtremalityVerdict::Extreme,
            Err(ExtremalityError::Envelope { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        if !extreme {
            continue;
        }
        let runs = RESTARTS_PER_CANDIDATE.min(remaining);
        let plan = AscentPlan {
            seed,
            ordinal,
            restarts: runs,
            max_iters: MAX_SWEEPS,
        };
        let outcome = evaluate_candidate(&a, m, n, d, plan);
        ordinal += 1;
        remaining = remaining.saturating_sub(outcome.runs);
        consider(outcome, &t, &mut best);
    }

    assemble(best, restarts_total, sweeps_total, seed)
}

fn assemble(
    best: Option<(f64, OperatorMatrix, VectorSystem)>,
    restarts: usize,
    iterations: usize,
    seed: u64,
) -> Result<GrothendieckSearchResult, GrothendieckError> {
    let (_, best_operator, best_system) = best.ok_or(GrothendieckError::TooLarge)?;
    // Re-evaluate so the reported value is exactly the objective of the
    // reported pair.
    let best_value = bilinear_objective(&best_operator, &best_system)?;
    Ok(GrothendieckSearchResult {
        best_value,
        best_operator,
        best_system,
        restarts,
        iterations,
        seed,
    })
}
