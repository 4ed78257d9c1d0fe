//! Recasting phase-only observations as real linear systems.
//!
//! Given phases z of the measurements Phi x, the signal direction is pinned
//! down by one row enforcing unit captured amplitude and m rows enforcing
//! phase consistency. Solving the resulting system A u = e_1 under an l1 (or
//! nuclear-norm) objective is ordinary compressive sensing.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{kappa, phase, ComplexMatrix, ComplexVector, RealMatrix, RealVector};
use crate::sensing::{DitheredEnsemble, LowRankMap, PhaseObservation, SensingEnsemble};

/// Row scaling for the phase-consistency block when the signal is real.
pub const T_HAT_REAL: f64 = 1.0;

/// Row scaling for the complex case: sqrt(2/3) balances how the system acts
/// on the two halves of the embedded signal. The value 1 leaves a bias of up
/// to ||x||^2 on directions parallel to i*x.
pub fn t_hat_complex() -> f64 {
    (2.0_f64 / 3.0).sqrt()
}

/// Which reformulation produced a system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemCase {
    RealSparse,
    ComplexSparse,
    Dithered,
}

impl SystemCase {
    pub fn tag(&self) -> &'static str {
        match self {
            SystemCase::RealSparse => "real-sparse",
            SystemCase::ComplexSparse => "complex-sparse",
            SystemCase::Dithered => "dithered",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "real-sparse" => Ok(SystemCase::RealSparse),
            "complex-sparse" => Ok(SystemCase::ComplexSparse),
            "dithered" => Ok(SystemCase::Dithered),
            other => Err(Error::parameter("case", format!("unknown system case '{other}'"))),
        }
    }
}

/// The real linear system A u = e_1 equivalent to a phase-only observation.
///
/// Shape is (m+1) x d where d is n, 2n, or 2n+2 depending on the case; the
/// right-hand side is always the first standard basis vector and is
/// materialized on demand.
#[derive(Clone, Debug)]
pub struct ReformulatedSystem {
    a: RealMatrix,
    case: SystemCase,
    m: usize,
    n: usize,
    t_hat: f64,
    kappa: f64,
}

impl ReformulatedSystem {
    pub(crate) fn from_parts(
        a: RealMatrix,
        case: SystemCase,
        m: usize,
        n: usize,
        t_hat: f64,
        kappa: f64,
    ) -> Result<Self> {
        if a.rows() != m + 1 {
            return Err(Error::Dimension {
                context: "reformulated system rows",
                left: a.rows(),
                right: m + 1,
            });
        }
        let expected_cols = match case {
            SystemCase::RealSparse => n,
            SystemCase::ComplexSparse => 2 * n,
            SystemCase::Dithered => 2 * n + 2,
        };
        if a.cols() != expected_cols {
            return Err(Error::Dimension {
                context: "reformulated system columns",
                left: a.cols(),
                right: expected_cols,
            });
        }
        if !(t_hat.is_finite() && t_hat > 0.0) {
            return Err(Error::parameter("t_hat", format!("must be positive, got {t_hat}")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::parameter("kappa", format!("must be positive, got {kappa}")));
        }
        Ok(Self {
            a,
            case,
            m,
            n,
            t_hat,
            kappa,
        })
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.a
    }

    pub fn case(&self) -> SystemCase {
        self.case
    }

    /// Number of phase measurements (rows minus the amplitude row).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Ambient complex dimension of the signal the system was built for.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_hat(&self) -> f64 {
        self.t_hat
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Dimension of the real unknown.
    pub fn unknown_dim(&self) -> usize {
        self.a.cols()
    }

    /// e_1 in R^{m+1}.
    pub fn rhs(&self) -> RealVector {
        let mut b = RealVector::zeros(self.m + 1);
        b[0] = 1.0;
        b
    }
}

fn check_lengths(obs: &PhaseObservation, m: usize) -> Result<()> {
    if obs.len() != m {
        return Err(Error::Dimension {
            context: "phases vs measurement count",
            left: obs.len(),
            right: m,
        });
    }
    Ok(())
}

/// A_{z,r} for a real signal: first row Re(z^* Phi)/(kappa m), then
/// Im(diag(conj(z)) Phi)/sqrt(m). Unknown lives in R^n.
pub fn build_real(obs: &PhaseObservation, ens: &SensingEnsemble) -> Result<ReformulatedSystem> {
    let (m, n) = (ens.m(), ens.n());
    check_lengths(obs, m)?;
    let k = kappa();
    let amp = 1.0 / (k * m as f64);
    let ph = T_HAT_REAL / (m as f64).sqrt();
    let z = obs.phases();
    let phi = ens.phi();

    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for r in 0..m {
        let zc = z.get(r).conj();
        for (j, wj) in w.iter_mut().enumerate() {
            *wj += zc * phi.get(r, j);
        }
    }

    let a = RealMatrix::from_fn(m + 1, n, |i, j| {
        if i == 0 {
            amp * w[j].re
        } else {
            ph * (z.get(i - 1).conj() * phi.get(i - 1, j)).im
        }
    })?;
    ReformulatedSystem::from_parts(a, SystemCase::RealSparse, m, n, T_HAT_REAL, k)
}

fn build_complex_inner(
    obs: &PhaseObservation,
    ens: &SensingEnsemble,
    t_hat: f64,
    case: SystemCase,
    signal_n: usize,
) -> Result<ReformulatedSystem> {
    let (m, n) = (ens.m(), ens.n());
    check_lengths(obs, m)?;
    if !(t_hat.is_finite() && t_hat > 0.0) {
        return Err(Error::parameter("t_hat", format!("must be positive, got {t_hat}")));
    }
    let k = kappa();
    let amp = 1.0 / (k * m as f64);
    let ph = t_hat / (m as f64).sqrt();
    let z = obs.phases();
    let phi = ens.phi();

    // w = z^* Phi, shared by both halves of the first row.
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for r in 0..m {
        let zc = z.get(r).conj();
        for (j, wj) in w.iter_mut().enumerate() {
            *wj += zc * phi.get(r, j);
        }
    }

    let a = RealMatrix::from_fn(m + 1, 2 * n, |i, j| {
        if i == 0 {
            if j < n {
                amp * w[j].re
            } else {
                -amp * w[j - n].im
            }
        } else {
            let v = z.get(i - 1).conj() * phi.get(i - 1, j % n);
            if j < n {
                ph * v.im
            } else {
                ph * v.re
            }
        }
    })?;
    ReformulatedSystem::from_parts(a, case, m, signal_n, t_hat, k)
}

/// A_{z,c} for a complex signal, acting on the embedding [Re(u); Im(u)].
pub fn build_complex(obs: &PhaseObservation, ens: &SensingEnsemble) -> Result<ReformulatedSystem> {
    build_complex_inner(obs, ens, t_hat_complex(), SystemCase::ComplexSparse, ens.n())
}

/// Same as `build_complex` with an explicit phase-row scaling, for probing
/// how the restricted isometry constant responds to t_hat.
pub fn build_complex_scaled(
    obs: &PhaseObservation,
    ens: &SensingEnsemble,
    t_hat: f64,
) -> Result<ReformulatedSystem> {
    build_complex_inner(obs, ens, t_hat, SystemCase::ComplexSparse, ens.n())
}

/// Dithered reformulation: the complex system of the extended ensemble
/// [Phi, tau/rho], whose unknown is the lifted signal [u; t] in C^{n+1}.
pub fn build_dithered(obs: &PhaseObservation, dens: &DitheredEnsemble) -> Result<ReformulatedSystem> {
    build_complex_inner(
        obs,
        &dens.extended(),
        t_hat_complex(),
        SystemCase::Dithered,
        dens.base().n(),
    )
}

/// The rescaled truth kappa*m/||Phi x||_1 * x: the exact solution the
/// reformulated system pins down.
pub fn rescaled_truth(ens: &SensingEnsemble, x: &ComplexVector) -> Result<ComplexVector> {
    let y = ens.phi().mul_vec(x)?;
    let l1 = y.norm_l1();
    if l1 == 0.0 {
        return Err(Error::Numerical("all measurements vanish".into()));
    }
    let c = kappa() * ens.m() as f64 / l1;
    Ok(x.scaled(Complex64::new(c, 0.0)))
}

/// Matrix-free analogue of `ReformulatedSystem` for low-rank recovery: the
/// operator maps the embedded matrix [Re(U); Im(U)] to R^{m+1} without ever
/// materializing an (m+1) x 2*n1*n2 matrix.
#[derive(Clone, Debug)]
pub struct LowRankSystem {
    // Row 1 blocks: Re/Im of sum_k z_k Phi_k, scaled by 1/(kappa m).
    re_s: DMatrix<f64>,
    im_s: DMatrix<f64>,
    // Phase-row blocks: -Im(z_k Phi_k) and Re(z_k Phi_k), scaled by t_hat/sqrt(m).
    neg_im_w: Vec<DMatrix<f64>>,
    re_w: Vec<DMatrix<f64>>,
    m: usize,
    n1: usize,
    n2: usize,
    t_hat: f64,
    kappa: f64,
}

impl LowRankSystem {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn t_hat(&self) -> f64 {
        self.t_hat
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Shape of the real unknown: (2*n1, n2).
    pub fn shape(&self) -> (usize, usize) {
        (2 * self.n1, self.n2)
    }

    /// e_1 in R^{m+1}.
    pub fn rhs(&self) -> RealVector {
        let mut b = RealVector::zeros(self.m + 1);
        b[0] = 1.0;
        b
    }

    fn check_shape(&self, u: &RealMatrix) -> Result<()> {
        if u.rows() != 2 * self.n1 || u.cols() != self.n2 {
            return Err(Error::Dimension {
                context: "low-rank unknown shape",
                left: u.rows() * u.cols(),
                right: 2 * self.n1 * self.n2,
            });
        }
        Ok(())
    }

    /// Apply the operator to an embedded matrix.
    pub fn forward(&self, u: &RealMatrix) -> Result<RealVector> {
        self.check_shape(u)?;
        let ud = u.matrix();
        let u1 = ud.view((0, 0), (self.n1, self.n2));
        let u2 = ud.view((self.n1, 0), (self.n1, self.n2));
        let mut y = RealVector::zeros(self.m + 1);
        y[0] = self.re_s.dot(&u1) + self.im_s.dot(&u2);
        for k in 0..self.m {
            y[k + 1] = self.neg_im_w[k].dot(&u1) + self.re_w[k].dot(&u2);
        }
        Ok(y)
    }

    /// Adjoint of `forward` under the trace/euclidean inner products.
    pub fn adjoint(&self, y: &RealVector) -> Result<RealMatrix> {
        if y.len() != self.m + 1 {
            return Err(Error::Dimension {
                context: "low-rank adjoint input",
                left: y.len(),
                right: self.m + 1,
            });
        }
        let mut u1 = &self.re_s * y[0];
        let mut u2 = &self.im_s * y[0];
        for k in 0..self.m {
            u1 += &self.neg_im_w[k] * y[k + 1];
            u2 += &self.re_w[k] * y[k + 1];
        }
        let mut stacked = DMatrix::zeros(2 * self.n1, self.n2);
        stacked.view_mut((0, 0), (self.n1, self.n2)).copy_from(&u1);
        stacked.view_mut((self.n1, 0), (self.n1, self.n2)).copy_from(&u2);
        Ok(RealMatrix::from_dmatrix(stacked))
    }
}

/// Build the low-rank reformulated operator from phases of <Phi_k, X>.
pub fn build_lowrank(obs: &PhaseObservation, map: &LowRankMap) -> Result<LowRankSystem> {
    let m = map.m();
    check_lengths(obs, m)?;
    let (n1, n2) = (map.n1(), map.n2());
    let k = kappa();
    let t_hat = t_hat_complex();
    let amp = 1.0 / (k * m as f64);
    let ph = t_hat / (m as f64).sqrt();

    let mut re_s = DMatrix::zeros(n1, n2);
    let mut im_s = DMatrix::zeros(n1, n2);
    let mut neg_im_w = Vec::with_capacity(m);
    let mut re_w = Vec::with_capacity(m);
    for kk in 0..m {
        let z = obs.phases().get(kk);
        let atom = map.atom(kk).matrix();
        let mut re = DMatrix::zeros(n1, n2);
        let mut ni = DMatrix::zeros(n1, n2);
        for i in 0..n1 {
            for j in 0..n2 {
                let w = z * atom[(i, j)];
                re[(i, j)] = w.re;
                ni[(i, j)] = -w.im;
                re_s[(i, j)] += amp * w.re;
                im_s[(i, j)] += amp * w.im;
            }
        }
        neg_im_w.push(ni * ph);
        re_w.push(re * ph);
    }

    Ok(LowRankSystem {
        re_s,
        im_s,
        neg_im_w,
        re_w,
        m,
        n1,
        n2,
        t_hat,
        kappa: k,
    })
}

/// Rescaled low-rank truth kappa*m/||(<Phi_k, X>)_k||_1 * X.
pub fn rescaled_truth_lowrank(map: &LowRankMap, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let y = map.apply(x)?;
    let l1 = y.norm_l1();
    if l1 == 0.0 {
        return Err(Error::Numerical("all measurements vanish".into()));
    }
    let c = kappa() * map.m() as f64 / l1;
    Ok(x.scaled(Complex64::new(c, 0.0)))
}

/// Worst-case phase mismatch max_k |z_k - sign(Phi_k^* xhat)| over the
/// entries with z_k != 0.
pub fn residual_phase_consistency(
    ens: &SensingEnsemble,
    obs: &PhaseObservation,
    xhat: &ComplexVector,
) -> Result<f64> {
    check_lengths(obs, ens.m())?;
    let y = ens.phi().mul_vec(xhat)?;
    let mut worst = 0.0_f64;
    for k in 0..ens.m() {
        let z = obs.phases().get(k);
        if z.norm() == 0.0 {
            continue;
        }
        worst = worst.max((z - phase(y.get(k))).norm());
    }
    Ok(worst)
}
