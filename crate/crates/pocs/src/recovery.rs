//! End-to-end pipelines: measurements in, complex estimate out. Each one
//! builds the linearized system for its regime, runs the matching solver,
//! and de-embeds the result, attaching error metrics when the caller
//! supplies the ground truth.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, RealMatrix, RealVector, to_complex, unembed_vector};
use crate::reformulation::{
    build_complex, build_dithered, build_lowrank, build_real, rescaled_truth,
};
use crate::sensing::{DitheredEnsemble, Field, LowRankMap, PhaseObservation, SensingEnsemble};
use crate::solvers::{
    basis_pursuit, basis_pursuit_denoise, nuclear_min, RecoveryReport, SolverOptions,
};

/// Estimate produced by a pipeline: a complex vector for the sparse
/// regimes, a complex matrix for the low-rank one.
#[derive(Clone, Debug)]
pub enum RecoveredSignal {
    Vector(ComplexVector),
    Matrix(ComplexMatrix),
}

impl RecoveredSignal {
    pub fn as_vector(&self) -> Option<&ComplexVector> {
        match self {
            RecoveredSignal::Vector(v) => Some(v),
            RecoveredSignal::Matrix(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&ComplexMatrix> {
        match self {
            RecoveredSignal::Matrix(m) => Some(m),
            RecoveredSignal::Vector(_) => None,
        }
    }
}

/// Pipeline result. `direction_error` compares normalized directions (the
/// sparse and low-rank regimes recover the signal only up to a positive
/// scale); `full_error` is the plain distance for the regimes that recover
/// the scale too. Both stay `None` without a caller-supplied truth, and
/// `success` is only ever true when the applicable error beat the
/// threshold. `scale_imag_residue` is specific to dithered recovery: the
/// relative imaginary part of the recovered scale, which would be exactly
/// real in infinite precision.
#[derive(Clone, Debug)]
pub struct RecoveryOutcome {
    pub xhat: RecoveredSignal,
    pub direction_error: Option<f64>,
    pub full_error: Option<f64>,
    pub scale_imag_residue: Option<f64>,
    pub report: RecoveryReport,
    pub success: bool,
}

/// ||xhat/||xhat|| - x|| for unit-norm truth x. A zero estimate has no
/// direction; the distance is reported as 1 (the norm of the truth), which
/// always counts as a failure at the thresholds in use.
pub fn direction_error(xhat: &ComplexVector, x: &ComplexVector) -> f64 {
    let norm = xhat.norm();
    if norm == 0.0 {
        return 1.0;
    }
    let scaled = xhat.scaled(Complex64::new(1.0 / norm, 0.0));
    scaled.sub(x).map(|d| d.norm()).unwrap_or(1.0)
}

/// Frobenius analogue of `direction_error` for matrix estimates.
pub fn direction_error_matrix(xhat: &ComplexMatrix, x: &ComplexMatrix) -> f64 {
    let norm = xhat.norm_fro();
    if norm == 0.0 {
        return 1.0;
    }
    if xhat.rows() != x.rows() || xhat.cols() != x.cols() {
        return 1.0;
    }
    let mut acc = 0.0;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            acc += (xhat.get(i, j) / norm - x.get(i, j)).norm_sqr();
        }
    }
    acc.sqrt()
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::parameter(
            "threshold",
            format!("must be positive, got {threshold}"),
        ));
    }
    Ok(())
}

fn require_clean(obs: &PhaseObservation) -> Result<()> {
    if obs.corrupted() {
        return Err(Error::parameter(
            "observation",
            "corrupted phases passed to a noiseless pipeline".to_string(),
        ));
    }
    Ok(())
}

fn full_err(xhat: &ComplexVector, truth: &ComplexVector) -> f64 {
    xhat.sub(truth).map(|d| d.norm()).unwrap_or(f64::INFINITY)
}

/// Sparse recovery from clean phases: basis pursuit on the linearized
/// system, then complex de-embedding. The signal comes back up to a
/// positive scale, so the metric is the direction error.
pub fn recover_sparse(
    ens: &SensingEnsemble,
    obs: &PhaseObservation,
    field: Field,
    truth: Option<&ComplexVector>,
    threshold: f64,
    opts: &SolverOptions,
) -> Result<RecoveryOutcome> {
    check_threshold(threshold)?;
    require_clean(obs)?;
    let n = ens.n();
    let (sys, report);
    match field {
        Field::Real => {
            sys = build_real(obs, ens)?;
            report = basis_pursuit(sys.matrix(), &sys.rhs(), opts)?;
        }
        Field::Complex => {
            sys = build_complex(obs, ens)?;
            report = basis_pursuit(sys.matrix(), &sys.rhs(), opts)?;
        }
    }
    let u = report
        .solution
        .as_vector()
        .expect("basis pursuit returns a vector");
    let xhat = match field {
        Field::Real => ComplexVector::from_fn(n, |k| Complex64::new(u[k], 0.0))?,
        Field::Complex => unembed_vector(u)?,
    };
    let dir = truth.map(|x| direction_error(&xhat, x));
    let success = dir.map(|e| e < threshold).unwrap_or(false);
    Ok(RecoveryOutcome {
        xhat: RecoveredSignal::Vector(xhat),
        direction_error: dir,
        full_error: None,
        scale_imag_residue: None,
        report,
        success,
    })
}

/// Baseline: classical linear compressive sensing from the full complex
/// measurements y = Phi x, solved as one stacked real basis-pursuit
/// problem. No scale ambiguity here, so the metric is the plain error.
pub fn recover_linear_cs(
    ens: &SensingEnsemble,
    y: &ComplexVector,
    truth: Option<&ComplexVector>,
    threshold: f64,
    opts: &SolverOptions,
) -> Result<RecoveryOutcome> {
    check_threshold(threshold)?;
    let (m, n) = (ens.m(), ens.n());
    if y.len() != m {
        return Err(Error::Dimension {
            context: "measurement vector length",
            left: y.len(),
            right: m,
        });
    }
    let phi = ens.phi();
    let stacked = RealMatrix::from_fn(2 * m, 2 * n, |i, j| {
        let e = phi.get(i % m, j % n);
        match (i < m, j < n) {
            (true, true) => e.re,
            (true, false) => -e.im,
            (false, true) => e.im,
            (false, false) => e.re,
        }
    })?;
    let b = RealVector::from_fn(2 * m, |i, _| {
        if i < m {
            y.get(i).re
        } else {
            y.get(i - m).im
        }
    });
    let report = basis_pursuit(&stacked, &b, opts)?;
    let u = report
        .solution
        .as_vector()
        .expect("basis pursuit returns a vector");
    let xhat = unembed_vector(u)?;
    let full = truth.map(|x| full_err(&xhat, x));
    let dir = truth.map(|x| direction_error(&xhat, x));
    let success = full.map(|e| e < threshold).unwrap_or(false);
    Ok(RecoveryOutcome {
        xhat: RecoveredSignal::Vector(xhat),
        direction_error: dir,
        full_error: full,
        scale_imag_residue: None,
        report,
        success,
    })
}

/// Dithered recovery: solve the lifted system over [x; t], then undo the
/// lift with xhat = (rho / t) * x_lifted. The trailing scale entry t is a
/// complex number that should be real and positive; its relative imaginary
/// part is surfaced in the outcome, and a vanishing |t| (for instance with
/// an all-zero dither, which cannot encode the norm) is an error.
pub fn recover_full_dithered(
    dens: &DitheredEnsemble,
    obs: &PhaseObservation,
    truth: Option<&ComplexVector>,
    threshold: f64,
    opts: &SolverOptions,
) -> Result<RecoveryOutcome> {
    check_threshold(threshold)?;
    require_clean(obs)?;
    let n = dens.base().n();
    let sys = build_dithered(obs, dens)?;
    let report = basis_pursuit(sys.matrix(), &sys.rhs(), opts)?;
    let u = report
        .solution
        .as_vector()
        .expect("basis pursuit returns a vector");
    let lifted = unembed_vector(u)?;
    let t = lifted.get(n);
    if t.norm() < 1e-9 {
        return Err(Error::Numerical(format!(
            "degenerate scale: lifted solution has |t| = {:.3e}, cannot recover the norm",
            t.norm()
        )));
    }
    let scale = Complex64::new(dens.rho(), 0.0) / t;
    let xhat = ComplexVector::from_fn(n, |k| lifted.get(k) * scale)?;
    let full = truth.map(|x| full_err(&xhat, x));
    let dir = truth.map(|x| direction_error(&xhat, x));
    let success = full.map(|e| e < threshold).unwrap_or(false);
    Ok(RecoveryOutcome {
        xhat: RecoveredSignal::Vector(xhat),
        direction_error: dir,
        full_error: full,
        scale_imag_residue: Some(t.im.abs() / t.norm()),
        report,
        success,
    })
}

/// Stable recovery from corrupted phases: basis-pursuit denoising with
/// radius sqrt(2) * tau0 on the complex-case system. The error is measured
/// against the rescaled truth kappa m / ||Phi x||_1 * x, the fixed point the
/// linearization actually targets; tau0 = 0 reduces to `recover_sparse`.
pub fn recover_noisy(
    ens: &SensingEnsemble,
    obs: &PhaseObservation,
    tau0: f64,
    truth: Option<&ComplexVector>,
    threshold: f64,
    opts: &SolverOptions,
) -> Result<RecoveryOutcome> {
    check_threshold(threshold)?;
    if !(tau0.is_finite() && tau0 >= 0.0) {
        return Err(Error::parameter("tau0", format!("must be nonnegative, got {tau0}")));
    }
    let sys = build_complex(obs, ens)?;
    let eps = 2.0_f64.sqrt() * tau0;
    let report = basis_pursuit_denoise(sys.matrix(), &sys.rhs(), eps, opts)?;
    let u = report
        .solution
        .as_vector()
        .expect("basis pursuit denoise returns a vector");
    let xhat = unembed_vector(u)?;
    let target = match truth {
        Some(x) => Some(rescaled_truth(ens, x)?),
        None => None,
    };
    let full = target.as_ref().map(|x| full_err(&xhat, x));
    let dir = truth.map(|x| direction_error(&xhat, x));
    let success = full.map(|e| e < threshold).unwrap_or(false);
    Ok(RecoveryOutcome {
        xhat: RecoveredSignal::Vector(xhat),
        direction_error: dir,
        full_error: full,
        scale_imag_residue: None,
        report,
        success,
    })
}

/// Low-rank recovery from clean phases of trace measurements: nuclear-norm
/// minimization on the matrix-free system, then complex de-embedding.
pub fn recover_lowrank(
    map: &LowRankMap,
    obs: &PhaseObservation,
    truth: Option<&ComplexMatrix>,
    threshold: f64,
    opts: &SolverOptions,
) -> Result<RecoveryOutcome> {
    check_threshold(threshold)?;
    require_clean(obs)?;
    let sys = build_lowrank(obs, map)?;
    let report = nuclear_min(&sys, opts)?;
    let u = report
        .solution
        .as_matrix()
        .expect("nuclear norm solver returns a matrix");
    let xhat = to_complex(u)?;
    let dir = truth.map(|x| direction_error_matrix(&xhat, x));
    let success = dir.map(|e| e < threshold).unwrap_or(false);
    Ok(RecoveryOutcome {
        xhat: RecoveredSignal::Matrix(xhat),
        direction_error: dir,
        full_error: None,
        scale_imag_residue: None,
        report,
        success,
    })
}
