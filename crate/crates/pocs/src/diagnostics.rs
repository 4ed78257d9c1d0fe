//! Empirical probes of the quantities the recovery guarantees lean on:
//! restricted isometry constants of the linearized systems, l1 concentration
//! of |Phi w|, sign-product embedding deviation, near-vanishing measurement
//! counts, and a Monte Carlo estimate of the normalization constant kappa.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{kappa, to_real, ComplexVector, RealMatrix};
use crate::reformulation::LowRankSystem;
use crate::sensing::{gen_lowrank_signal, SensingEnsemble};

/// Default ceiling on exhaustive support enumeration.
pub const ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RicMode {
    ExactEnumeration,
    Sampled,
}

/// Estimated restricted isometry constant. `delta` is the max over examined
/// supports T of max(sigma_max(A_T)^2 - 1, 1 - sigma_min(A_T)^2); in sampled
/// mode that is a lower bound on the true constant. `witnesses` is the
/// support achieving the max (empty for matrix probes, where supports are
/// continuous).
#[derive(Clone, Debug)]
pub struct RicEstimate {
    pub delta: f64,
    pub order: usize,
    pub mode: RicMode,
    pub witnesses: Vec<usize>,
    pub samples: usize,
}

fn binomial_saturating(q: u128, t: u128) -> u128 {
    let t = t.min(q - t);
    let mut acc: u128 = 1;
    for i in 0..t {
        // acc * (q - i) is divisible by i + 1 (running binomial identity)
        match acc.checked_mul(q - i) {
            Some(v) => acc = v / (i + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// delta contribution of one support: extreme eigenvalues of A_T^T A_T.
fn support_delta(a: &DMatrix<f64>, support: &[usize]) -> f64 {
    let t = support.len();
    let mut gram = DMatrix::zeros(t, t);
    for (i, &ci) in support.iter().enumerate() {
        for (j, &cj) in support.iter().enumerate().skip(i) {
            let v = a.column(ci).dot(&a.column(cj));
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let (mut lmax, mut lmin) = (f64::NEG_INFINITY, f64::INFINITY);
    for &l in eig.eigenvalues.iter() {
        lmax = lmax.max(l);
        lmin = lmin.min(l);
    }
    (lmax - 1.0).max(1.0 - lmin)
}

fn check_order(order: usize, q: usize) -> Result<()> {
    if order == 0 || order > q {
        return Err(Error::parameter(
            "order",
            format!("must lie in [1, {q}], got {order}"),
        ));
    }
    Ok(())
}

/// Exact RIC by enumerating every size-`order` column support, refusing
/// when the count exceeds `cap`.
pub fn estimate_ric_exact_capped(a: &RealMatrix, order: usize, cap: u128) -> Result<RicEstimate> {
    let q = a.cols();
    check_order(order, q)?;
    let needed = binomial_saturating(q as u128, order as u128);
    if needed > cap {
        return Err(Error::EnumerationCap { needed, cap });
    }

    let ad = a.matrix();
    let mut support: Vec<usize> = (0..order).collect();
    let mut best = f64::NEG_INFINITY;
    let mut witnesses = support.clone();
    let mut examined = 0usize;
    loop {
        let d = support_delta(ad, &support);
        examined += 1;
        if d > best {
            best = d;
            witnesses = support.clone();
        }
        // advance the combination odometer
        let mut i = order;
        loop {
            if i == 0 {
                return Ok(RicEstimate {
                    delta: best,
                    order,
                    mode: RicMode::ExactEnumeration,
                    witnesses,
                    samples: examined,
                });
            }
            i -= 1;
            if support[i] < q - (order - i) {
                support[i] += 1;
                for j in i + 1..order {
                    support[j] = support[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn estimate_ric_exact(a: &RealMatrix, order: usize) -> Result<RicEstimate> {
    estimate_ric_exact_capped(a, order, ENUMERATION_CAP)
}

/// Uniform random support of size t over {0..q}, sorted.
fn draw_support<R: Rng + ?Sized>(q: usize, t: usize, rng: &mut R) -> Vec<usize> {
    // partial Fisher-Yates
    let mut pool: Vec<usize> = (0..q).collect();
    for i in 0..t {
        let j = rng.random_range(i..q);
        pool.swap(i, j);
    }
    let mut s = pool[..t].to_vec();
    s.sort_unstable();
    s
}

/// Extends `base` (deduplicated, clipped to valid columns) to exactly t
/// indices with uniform draws from the complement.
fn pad_support<R: Rng + ?Sized>(base: &[usize], q: usize, t: usize, rng: &mut R) -> Vec<usize> {
    let mut s: Vec<usize> = base.iter().copied().filter(|&i| i < q).collect();
    s.sort_unstable();
    s.dedup();
    s.truncate(t);
    if s.len() < t {
        let mut rest: Vec<usize> = (0..q).filter(|i| !s.contains(i)).collect();
        let need = t - s.len();
        for i in 0..need {
            let j = rng.random_range(i..rest.len());
            rest.swap(i, j);
        }
        s.extend_from_slice(&rest[..need]);
        s.sort_unstable();
    }
    s
}

/// Sampled lower bound on the RIC, mixing three kinds of candidate
/// supports: uniform draws, unions of two smaller supports, and (when
/// `seeds` is nonempty) random paddings of caller-supplied supports. The
/// candidate sequence depends only on the rng stream, so with a fixed seed
/// a longer run examines a superset of a shorter one.
pub fn estimate_ric_sampled_seeded<R: Rng + ?Sized>(
    a: &RealMatrix,
    order: usize,
    samples: usize,
    seeds: &[Vec<usize>],
    rng: &mut R,
) -> Result<RicEstimate> {
    let q = a.cols();
    check_order(order, q)?;
    if samples == 0 {
        return Err(Error::parameter("samples", "must be at least 1".to_string()));
    }
    let ad = a.matrix();
    let mut best = f64::NEG_INFINITY;
    let mut witnesses = Vec::new();
    let consider = |support: Vec<usize>, best: &mut f64, witnesses: &mut Vec<usize>| {
        let d = support_delta(ad, &support);
        if d > *best {
            *best = d;
            *witnesses = support;
        }
    };
    for seed in seeds {
        let s = pad_support(seed, q, order, rng);
        consider(s, &mut best, &mut witnesses);
    }
    for i in 0..samples {
        let support = if i % 4 == 3 {
            let s1 = draw_support(q, order - order / 2, rng);
            let s2 = draw_support(q, order / 2, rng);
            let mut u = s1;
            u.extend_from_slice(&s2);
            pad_support(&u, q, order, rng)
        } else if i % 4 == 2 && !seeds.is_empty() {
            pad_support(&seeds[(i / 4) % seeds.len()], q, order, rng)
        } else {
            draw_support(q, order, rng)
        };
        consider(support, &mut best, &mut witnesses);
    }
    Ok(RicEstimate {
        delta: best,
        order,
        mode: RicMode::Sampled,
        witnesses,
        samples: samples + seeds.len(),
    })
}

pub fn estimate_ric_sampled<R: Rng + ?Sized>(
    a: &RealMatrix,
    order: usize,
    samples: usize,
    rng: &mut R,
) -> Result<RicEstimate> {
    estimate_ric_sampled_seeded(a, order, samples, &[], rng)
}

/// Sampled lower bound on the rank-restricted isometry constant of the
/// matrix-free low-rank operator, probed with random unit-Frobenius
/// embeddings of complex rank-`order` matrices.
pub fn estimate_matrix_ric_sampled<R: Rng + ?Sized>(
    sys: &LowRankSystem,
    order: usize,
    samples: usize,
    rng: &mut R,
) -> Result<RicEstimate> {
    let limit = sys.n1().min(sys.n2());
    check_order(order, limit)?;
    if samples == 0 {
        return Err(Error::parameter("samples", "must be at least 1".to_string()));
    }
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let probe = gen_lowrank_signal(sys.n1(), sys.n2(), order, rng)?;
        let u = to_real(&probe);
        let norm_sq = sys.forward(&u)?.norm_squared();
        best = best.max((norm_sq - 1.0).max(1.0 - norm_sq));
    }
    Ok(RicEstimate {
        delta: best,
        order,
        mode: RicMode::Sampled,
        witnesses: Vec::new(),
        samples,
    })
}

/// #{k : |(Phi x)_k| < eta}.
pub fn count_near_vanishing(ens: &SensingEnsemble, x: &ComplexVector, eta: f64) -> Result<usize> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::parameter("eta", format!("must be positive, got {eta}")));
    }
    let y = ens.phi().mul_vec(x)?;
    Ok(y.iter().filter(|v| v.norm() < eta).count())
}

/// | ||Phi w||_1 / (kappa m) - 1 | for unit w.
pub fn l1_concentration(ens: &SensingEnsemble, w: &ComplexVector) -> Result<f64> {
    if (w.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::parameter(
            "w",
            format!("must be unit norm, got {}", w.norm()),
        ));
    }
    let y = ens.phi().mul_vec(w)?;
    Ok((y.norm_l1() / (kappa() * ens.m() as f64) - 1.0).abs())
}

/// Max deviation of the sign-product embedding over (u, v) pairs.
#[derive(Clone, Debug)]
pub struct SpeReport {
    pub deviation: f64,
    pub m: usize,
    pub pair_count: usize,
}

/// max over pairs of |(1/(kappa m)) Re<sign(Phi u), Phi v> - Re<u, v>| / ||v||,
/// skipping v = 0. Each u must be unit norm.
pub fn spe_deviation(
    ens: &SensingEnsemble,
    pairs: &[(ComplexVector, ComplexVector)],
) -> Result<SpeReport> {
    if pairs.is_empty() {
        return Err(Error::Empty { what: "pair list" });
    }
    let m = ens.m() as f64;
    let mut worst = 0.0_f64;
    for (u, v) in pairs {
        if (u.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::parameter(
                "u",
                format!("must be unit norm, got {}", u.norm()),
            ));
        }
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        let yu = ens.phi().mul_vec(u)?;
        let yv = ens.phi().mul_vec(v)?;
        let z = ComplexVector::from_fn(yu.len(), |k| crate::linalg::phase(yu.get(k)))?;
        let lhs = z.dot_conj(&yv)?.re / (kappa() * m);
        let rhs = u.dot_conj(v)?.re;
        worst = worst.max((lhs - rhs).abs() / vnorm);
    }
    Ok(SpeReport {
        deviation: worst,
        m: ens.m(),
        pair_count: pairs.len(),
    })
}

/// Monte Carlo mean of |N(0,1) + i N(0,1)|; converges to sqrt(pi/2).
pub fn estimate_kappa<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> Result<f64> {
    if samples == 0 {
        return Err(Error::parameter("samples", "must be at least 1".to_string()));
    }
    let mut acc = 0.0;
    for _ in 0..samples {
        let re: f64 = rng.sample(rand_distr::StandardNormal);
        let im: f64 = rng.sample(rand_distr::StandardNormal);
        acc += re.hypot(im);
    }
    Ok(acc / samples as f64)
}
