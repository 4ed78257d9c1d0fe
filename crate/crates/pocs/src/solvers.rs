//! Proximal ADMM solvers: equality-constrained basis pursuit, basis pursuit
//! with a residual ball, and nuclear-norm minimization against a matrix-free
//! operator. All three split the variable, project one copy onto the
//! constraint set, and shrink the other.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{RealMatrix, RealVector};
use crate::reformulation::LowRankSystem;

/// ADMM knobs. The penalty is the augmented-Lagrangian weight rho; the
/// over-relaxation factor lives in [1.0, 1.8].
#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub penalty: f64,
    pub over_relax: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            penalty: 1.0,
            over_relax: 1.5,
            abs_tol: 1e-7,
            rel_tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty.is_finite() && self.penalty > 0.0) {
            return Err(Error::parameter("penalty", format!("must be positive, got {}", self.penalty)));
        }
        if !(1.0..=1.8).contains(&self.over_relax) {
            return Err(Error::parameter(
                "over_relax",
                format!("must lie in [1.0, 1.8], got {}", self.over_relax),
            ));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol > 0.0) {
            return Err(Error::parameter("abs_tol", format!("must be positive, got {}", self.abs_tol)));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol >= 0.0) {
            return Err(Error::parameter(
                "rel_tol",
                format!("must be nonnegative, got {}", self.rel_tol),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::parameter("max_iter", "must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// How a solve ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Infeasible,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::Infeasible => "infeasible",
        };
        f.write_str(s)
    }
}

/// Solution payload: the sparse solvers return vectors, the nuclear-norm
/// solver returns the embedded matrix.
#[derive(Clone, Debug)]
pub enum RecoveredPoint {
    Vector(RealVector),
    Matrix(RealMatrix),
}

impl RecoveredPoint {
    pub fn as_vector(&self) -> Option<&RealVector> {
        match self {
            RecoveredPoint::Vector(v) => Some(v),
            RecoveredPoint::Matrix(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&RealMatrix> {
        match self {
            RecoveredPoint::Matrix(m) => Some(m),
            RecoveredPoint::Vector(_) => None,
        }
    }
}

/// What a solver hands back: the point it stopped at (always feasible for
/// the projected copy), the iteration count, and the final ADMM residuals.
#[derive(Clone, Debug)]
pub struct RecoveryReport {
    pub solution: RecoveredPoint,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub status: SolveStatus,
}

impl RecoveryReport {
    /// `status,iterations,primal_residual,dual_residual`
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.16e},{:.16e}",
            self.status, self.iterations, self.primal_residual, self.dual_residual
        )
    }
}

/// Elementwise sign(v) * max(|v| - thr, 0).
pub fn soft_threshold(v: &RealVector, thr: f64) -> RealVector {
    debug_assert!(thr >= 0.0);
    v.map(|x| {
        let mag = x.abs() - thr;
        if mag > 0.0 {
            x.signum() * mag
        } else {
            0.0
        }
    })
}

/// Soft-threshold the singular values: U max(S - thr, 0) V^T.
pub fn singular_value_threshold(a: &RealMatrix, thr: f64) -> RealMatrix {
    debug_assert!(thr >= 0.0);
    let svd = a.matrix().clone().svd(true, true);
    let u = svd.u.expect("svd with u");
    let vt = svd.v_t.expect("svd with v_t");
    let s = svd.singular_values;
    let mut acc = DMatrix::zeros(a.rows(), a.cols());
    for i in 0..s.len() {
        let kept = s[i] - thr;
        if kept > 0.0 {
            acc += u.column(i) * vt.row(i) * kept;
        }
    }
    RealMatrix::from_dmatrix(acc)
}

/// Solve an SPD (or consistent positive semidefinite) p x p system, used for
/// the Gram matrices A A^T. Cholesky when it exists, eigen pseudo-inverse
/// otherwise.
enum SpdSolver {
    Chol(Cholesky<f64, Dyn>),
    Eig { q: DMatrix<f64>, inv_l: DVector<f64> },
}

impl SpdSolver {
    fn new(gram: DMatrix<f64>) -> Self {
        match Cholesky::new(gram.clone()) {
            Some(c) => SpdSolver::Chol(c),
            None => {
                let eig = SymmetricEigen::new(gram);
                let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
                let tol = lmax * 1e-12;
                let inv_l = eig.eigenvalues.map(|l| if l > tol { 1.0 / l } else { 0.0 });
                SpdSolver::Eig {
                    q: eig.eigenvectors,
                    inv_l,
                }
            }
        }
    }

    fn solve(&self, y: &RealVector) -> RealVector {
        match self {
            SpdSolver::Chol(c) => c.solve(y),
            SpdSolver::Eig { q, inv_l } => {
                let coef = (q.transpose() * y).component_mul(inv_l);
                q * coef
            }
        }
    }
}

/// Projection onto the affine set {u : A u = b}, with A A^T factored once.
struct AffineProjector {
    a: DMatrix<f64>,
    at: DMatrix<f64>,
    spd: SpdSolver,
}

impl AffineProjector {
    fn new(a: &DMatrix<f64>) -> Self {
        let at = a.transpose();
        let gram = a * &at;
        Self {
            a: a.clone(),
            at,
            spd: SpdSolver::new(gram),
        }
    }

    /// A^T (A A^T)^dagger b: the least-norm preimage when the system is
    /// consistent.
    fn least_norm(&self, b: &RealVector) -> RealVector {
        &self.at * self.spd.solve(b)
    }

    fn project(&self, w: &RealVector, b: &RealVector) -> RealVector {
        let r = &self.a * w - b;
        w - &self.at * self.spd.solve(&r)
    }
}

struct AdmmOut<T> {
    x: T,
    iterations: usize,
    primal: f64,
    dual: f64,
    status: SolveStatus,
}

fn admm_l1(dim: usize, opts: &SolverOptions, mut project: impl FnMut(&RealVector) -> RealVector) -> AdmmOut<RealVector> {
    let rho = opts.penalty;
    let alpha = opts.over_relax;
    let thr = 1.0 / rho;
    let sq = (dim as f64).sqrt();
    let mut x = RealVector::zeros(dim);
    let mut z = RealVector::zeros(dim);
    let mut y = RealVector::zeros(dim);
    let (mut primal, mut dual) = (0.0, 0.0);
    for it in 1..=opts.max_iter {
        x = project(&(&z - &y));
        let x_relax = &x * alpha + &z * (1.0 - alpha);
        let z_old = z.clone();
        z = soft_threshold(&(&x_relax + &y), thr);
        y += &x_relax - &z;
        primal = (&x - &z).norm();
        dual = rho * (&z - &z_old).norm();
        let eps_pri = sq * opts.abs_tol + opts.rel_tol * x.norm().max(z.norm());
        let eps_dual = sq * opts.abs_tol + opts.rel_tol * rho * y.norm();
        if primal <= eps_pri && dual <= eps_dual {
            return AdmmOut {
                x,
                iterations: it,
                primal,
                dual,
                status: SolveStatus::Converged,
            };
        }
    }
    AdmmOut {
        x,
        iterations: opts.max_iter,
        primal,
        dual,
        status: SolveStatus::MaxIter,
    }
}

fn check_system(a: &RealMatrix, b: &RealVector) -> Result<()> {
    if b.len() != a.rows() {
        return Err(Error::Dimension {
            context: "right-hand side length",
            left: b.len(),
            right: a.rows(),
        });
    }
    if !b.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite {
            what: "right-hand side",
        });
    }
    Ok(())
}

/// min ||u||_1 subject to A u = b.
///
/// The u-step projects onto the constraint set through a once-factored
/// A A^T system; the returned point is the projected (exactly feasible)
/// iterate. Inconsistent systems come back with `SolveStatus::Infeasible`.
/// The right-hand side is normalized internally, which makes the solve
/// scale-equivariant.
pub fn basis_pursuit(a: &RealMatrix, b: &RealVector, opts: &SolverOptions) -> Result<RecoveryReport> {
    opts.validate()?;
    check_system(a, b)?;
    let q = a.cols();
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(RecoveryReport {
            solution: RecoveredPoint::Vector(RealVector::zeros(q)),
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            status: SolveStatus::Converged,
        });
    }
    let bn = b / bnorm;
    let proj = AffineProjector::new(a.matrix());

    let x_ls = proj.least_norm(&bn);
    let feas = (a.matrix() * &x_ls - &bn).norm();
    if feas > 1e-8 {
        return Ok(RecoveryReport {
            solution: RecoveredPoint::Vector(x_ls * bnorm),
            iterations: 0,
            primal_residual: feas * bnorm,
            dual_residual: 0.0,
            status: SolveStatus::Infeasible,
        });
    }

    let out = admm_l1(q, opts, |w| proj.project(w, &bn));
    Ok(RecoveryReport {
        solution: RecoveredPoint::Vector(out.x * bnorm),
        iterations: out.iterations,
        primal_residual: out.primal * bnorm,
        dual_residual: out.dual * bnorm,
        status: out.status,
    })
}

/// Projection machinery for {u : ||A u - b|| <= eps}, built on one SVD of A.
struct BallProjector {
    v: DMatrix<f64>,
    sigma: Vec<f64>,
    d: Vec<f64>,
    b_perp_sq: f64,
    eps: f64,
}

impl BallProjector {
    fn new(a: &DMatrix<f64>, b: &RealVector, eps: f64) -> Self {
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("svd with u");
        let v_t = svd.v_t.expect("svd with v_t");
        let sv = svd.singular_values;
        let tol = if sv.is_empty() { 0.0 } else { sv[0] * 1e-12 };
        let rank = sv.iter().filter(|&&s| s > tol && s > 0.0).count();
        let v = v_t.rows(0, rank).transpose();
        let u_r = u.columns(0, rank).into_owned();
        let d = u_r.transpose() * b;
        let b_perp_sq = (b - &u_r * &d).norm_squared();
        Self {
            v,
            sigma: sv.iter().take(rank).copied().collect(),
            d: d.iter().copied().collect(),
            b_perp_sq,
            eps,
        }
    }

    /// Smallest achievable residual ||A u - b||.
    fn min_residual(&self) -> f64 {
        self.b_perp_sq.sqrt()
    }

    /// Min-norm least-squares point A^dagger b.
    fn least_norm(&self) -> RealVector {
        let coef = DVector::from_fn(self.sigma.len(), |i, _| self.d[i] / self.sigma[i]);
        &self.v * coef
    }

    /// Euclidean projection of w onto the residual ball. The Lagrange
    /// multiplier solves a one-dimensional secular equation, attacked with
    /// safeguarded Newton + bisection to 1e-12.
    fn project(&self, w: &RealVector) -> RealVector {
        let r = self.sigma.len();
        if r == 0 {
            return w.clone();
        }
        let c = self.v.transpose() * w;
        let gamma: Vec<f64> = (0..r).map(|i| self.sigma[i] * c[i] - self.d[i]).collect();

        if self.eps == 0.0 {
            let coef = DVector::from_fn(r, |i, _| gamma[i] / self.sigma[i]);
            return w - &self.v * coef;
        }

        let g = |mu: f64| -> f64 {
            let mut acc = self.b_perp_sq;
            for (gi, si) in gamma.iter().zip(self.sigma.iter()) {
                let t = gi / (1.0 + mu * si * si);
                acc += t * t;
            }
            acc
        };
        let gp = |mu: f64| -> f64 {
            let mut acc = 0.0;
            for (gi, si) in gamma.iter().zip(self.sigma.iter()) {
                let s2 = si * si;
                let den = 1.0 + mu * s2;
                acc -= 2.0 * s2 * gi * gi / (den * den * den);
            }
            acc
        };

        let eps2 = self.eps * self.eps;
        if g(0.0) <= eps2 {
            return w.clone();
        }

        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut grow = 0;
        while g(hi) > eps2 {
            hi *= 4.0;
            grow += 1;
            if grow > 200 {
                break;
            }
        }
        let mut mu = 0.0;
        for _ in 0..200 {
            let gm = g(mu);
            if (gm.sqrt() - self.eps).abs() <= 1e-12 * self.eps.max(1.0) {
                break;
            }
            if gm > eps2 {
                lo = mu;
            } else {
                hi = mu;
            }
            let slope = gp(mu);
            let mut next = if slope < 0.0 { mu - (gm - eps2) / slope } else { f64::NAN };
            if !next.is_finite() || next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
            if (hi - lo) <= f64::EPSILON * hi.max(1.0) {
                mu = 0.5 * (lo + hi);
                break;
            }
            mu = next;
        }

        let coef = DVector::from_fn(r, |i, _| {
            let s2 = self.sigma[i] * self.sigma[i];
            mu * self.sigma[i] * gamma[i] / (1.0 + mu * s2)
        });
        w - &self.v * coef
    }
}

/// One-shot Euclidean projection of `w` onto {u : ||A u - b|| <= eps}.
/// Computes the SVD of A internally; the denoising solver caches it instead.
pub fn project_onto_residual_ball(
    a: &RealMatrix,
    b: &RealVector,
    w: &RealVector,
    eps: f64,
) -> Result<RealVector> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::parameter("eps", format!("must be nonnegative, got {eps}")));
    }
    check_system(a, b)?;
    if w.len() != a.cols() {
        return Err(Error::Dimension {
            context: "projection point length",
            left: w.len(),
            right: a.cols(),
        });
    }
    let proj = BallProjector::new(a.matrix(), b, eps);
    if proj.min_residual() > eps + 1e-12 * b.norm().max(1.0) {
        return Err(Error::Numerical(format!(
            "residual ball is empty: min residual {} > eps {eps}",
            proj.min_residual()
        )));
    }
    Ok(proj.project(w))
}

/// min ||u||_1 subject to ||A u - b|| <= eps.
///
/// Same splitting as `basis_pursuit` with the affine projection swapped for
/// the residual-ball projection. eps = 0 falls back to basis pursuit.
pub fn basis_pursuit_denoise(
    a: &RealMatrix,
    b: &RealVector,
    eps: f64,
    opts: &SolverOptions,
) -> Result<RecoveryReport> {
    opts.validate()?;
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::parameter("eps", format!("must be nonnegative, got {eps}")));
    }
    check_system(a, b)?;
    if eps == 0.0 {
        return basis_pursuit(a, b, opts);
    }
    let q = a.cols();
    if b.norm() <= eps {
        // Zero is feasible, and nothing beats its l1 norm.
        return Ok(RecoveryReport {
            solution: RecoveredPoint::Vector(RealVector::zeros(q)),
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            status: SolveStatus::Converged,
        });
    }
    let proj = BallProjector::new(a.matrix(), b, eps);
    if proj.min_residual() > eps + 1e-12 * b.norm().max(1.0) {
        return Ok(RecoveryReport {
            solution: RecoveredPoint::Vector(proj.least_norm()),
            iterations: 0,
            primal_residual: proj.min_residual(),
            dual_residual: 0.0,
            status: SolveStatus::Infeasible,
        });
    }
    let out = admm_l1(q, opts, |w| proj.project(w));
    Ok(RecoveryReport {
        solution: RecoveredPoint::Vector(out.x),
        iterations: out.iterations,
        primal_residual: out.primal,
        dual_residual: out.dual,
        status: out.status,
    })
}

/// min ||U||_* subject to forward(U) = e_1, for the matrix-free low-rank
/// system. The affine projection runs through the (m+1) x (m+1) Gram matrix
/// of the operator; the shrinkage step thresholds singular values.
pub fn nuclear_min(sys: &LowRankSystem, opts: &SolverOptions) -> Result<RecoveryReport> {
    opts.validate()?;
    let (rows, cols) = sys.shape();
    let p = sys.m() + 1;
    let e1 = sys.rhs();

    let mut gram = DMatrix::zeros(p, p);
    for i in 0..p {
        let mut ei = RealVector::zeros(p);
        ei[i] = 1.0;
        let col = sys.forward(&sys.adjoint(&ei)?)?;
        gram.set_column(i, &col);
    }
    let spd = SpdSolver::new(gram);

    let project = |w: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let wm = RealMatrix::from_dmatrix(w.clone());
        let r = sys.forward(&wm)? - &e1;
        let corr = sys.adjoint(&spd.solve(&r))?;
        Ok(w - corr.matrix())
    };

    let u_ls = project(&DMatrix::zeros(rows, cols))?;
    let feas = (sys.forward(&RealMatrix::from_dmatrix(u_ls.clone()))? - &e1).norm();
    if feas > 1e-8 {
        return Ok(RecoveryReport {
            solution: RecoveredPoint::Matrix(RealMatrix::from_dmatrix(u_ls)),
            iterations: 0,
            primal_residual: feas,
            dual_residual: 0.0,
            status: SolveStatus::Infeasible,
        });
    }

    let rho = opts.penalty;
    let alpha = opts.over_relax;
    let thr = 1.0 / rho;
    let sq = ((rows * cols) as f64).sqrt();
    let mut x = DMatrix::<f64>::zeros(rows, cols);
    let mut z = DMatrix::<f64>::zeros(rows, cols);
    let mut y = DMatrix::<f64>::zeros(rows, cols);
    let (mut primal, mut dual) = (0.0, 0.0);
    let mut iterations = opts.max_iter;
    let mut status = SolveStatus::MaxIter;
    for it in 1..=opts.max_iter {
        x = project(&(&z - &y))?;
        let x_relax = &x * alpha + &z * (1.0 - alpha);
        let z_old = z.clone();
        z = singular_value_threshold(&RealMatrix::from_dmatrix(&x_relax + &y), thr)
            .matrix()
            .clone();
        y += &x_relax - &z;
        primal = (&x - &z).norm();
        dual = rho * (&z - &z_old).norm();
        let eps_pri = sq * opts.abs_tol + opts.rel_tol * x.norm().max(z.norm());
        let eps_dual = sq * opts.abs_tol + opts.rel_tol * rho * y.norm();
        if primal <= eps_pri && dual <= eps_dual {
            iterations = it;
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok(RecoveryReport {
        solution: RecoveredPoint::Matrix(RealMatrix::from_dmatrix(x)),
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::to_real;
    use crate::reformulation::{build_lowrank, rescaled_truth_lowrank};
    use crate::sensing::{gen_lowrank_signal, measure_lowrank_phases, LowRankMap};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_matrix(p: usize, q: usize, rng: &mut ChaCha8Rng) -> RealMatrix {
        RealMatrix::from_fn(p, q, |_, _| rng.sample(StandardNormal)).unwrap()
    }

    #[test]
    fn soft_threshold_examples() {
        let v = RealVector::from_vec(vec![3.0, -1.0, 0.2]);
        let t = soft_threshold(&v, 1.0);
        assert_eq!(t.as_slice(), &[2.0, 0.0, 0.0]);
        let id = soft_threshold(&v, 0.0);
        assert_eq!(id.as_slice(), v.as_slice());
    }

    #[test]
    fn svt_reduces_rank() {
        let a = RealMatrix::new(3, 3, vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        let t = singular_value_threshold(&a, 1.0);
        let sv = t.matrix().clone().svd(false, false).singular_values;
        assert!((sv[0] - 2.0).abs() < 1e-12);
        assert!(sv[1] < 1e-12);
        let same = singular_value_threshold(&a, 0.0);
        assert!((same.matrix() - a.matrix()).norm() < 1e-12);
    }

    #[test]
    fn bp_identity_system() {
        let a = RealMatrix::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let b = RealVector::from_vec(vec![1.0, -2.0, 0.5]);
        let rep = basis_pursuit(&a, &b, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        let x = rep.solution.as_vector().unwrap();
        assert!((x - &b).norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn bp_zero_rhs() {
        let a = RealMatrix::new(2, 4, vec![1.0; 8]).unwrap();
        let b = RealVector::zeros(2);
        let rep = basis_pursuit(&a, &b, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert_eq!(rep.iterations, 0);
        assert!(rep.solution.as_vector().unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bp_prefers_sparser_point() {
        // Feasible points include (1,1,0) with l1 = 2 and (0,0,1) with l1 = 1.
        let a = RealMatrix::new(2, 3, vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let b = RealVector::from_vec(vec![1.0, 1.0]);
        let rep = basis_pursuit(&a, &b, &SolverOptions::default()).unwrap();
        let x = rep.solution.as_vector().unwrap();
        let target = RealVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!((x - target).norm() <= 1e-6, "got {x:?}");
    }

    #[test]
    fn bp_scaling_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let a = gaussian_matrix(6, 16, &mut rng);
        let b = RealVector::from_fn(6, |_, _| rng.sample(StandardNormal));
        let base = basis_pursuit(&a, &b, &SolverOptions::default()).unwrap();
        let x0 = base.solution.as_vector().unwrap();
        for lam in [0.5, 2.0, 1024.0, 3.7] {
            let rep = basis_pursuit(&a, &(&b * lam), &SolverOptions::default()).unwrap();
            let x1 = rep.solution.as_vector().unwrap();
            let diff = (x1 - x0 * lam).norm();
            assert!(diff <= 1e-8 * (lam * x0.norm()).max(1e-30), "lambda {lam}: {diff}");
        }
    }

    #[test]
    fn bp_flags_inconsistent_system() {
        let a = RealMatrix::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let b = RealVector::from_vec(vec![1.0, 2.0]);
        let rep = basis_pursuit(&a, &b, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Infeasible);
    }

    #[test]
    fn bp_handles_redundant_consistent_rows() {
        let a = RealMatrix::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let b = RealVector::from_vec(vec![2.0, 2.0]);
        let rep = basis_pursuit(&a, &b, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        let x = rep.solution.as_vector().unwrap();
        assert!((x[0] - 2.0).abs() <= 1e-8);
        assert!(x[1].abs() <= 1e-8);
    }

    #[test]
    fn bp_overdetermined_consistent_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let a = gaussian_matrix(10, 4, &mut rng);
        let x0 = RealVector::from_vec(vec![1.0, 0.0, -2.0, 0.0]);
        let b = a.matrix() * &x0;
        let rep = basis_pursuit(&a, &b, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        let x = rep.solution.as_vector().unwrap();
        assert!((x - &x0).norm() <= 1e-8 * x0.norm());
    }

    #[test]
    fn bp_respects_max_iter() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let a = gaussian_matrix(4, 12, &mut rng);
        let b = RealVector::from_fn(4, |_, _| rng.sample(StandardNormal));
        let opts = SolverOptions {
            max_iter: 1,
            ..Default::default()
        };
        let rep = basis_pursuit(&a, &b, &opts).unwrap();
        assert_eq!(rep.status, SolveStatus::MaxIter);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn bp_rejects_bad_options() {
        let a = RealMatrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let b = RealVector::from_vec(vec![1.0]);
        let opts = SolverOptions {
            over_relax: 2.5,
            ..Default::default()
        };
        assert!(basis_pursuit(&a, &b, &opts).is_err());
        let opts = SolverOptions {
            penalty: 0.0,
            ..Default::default()
        };
        assert!(basis_pursuit(&a, &b, &opts).is_err());
    }

    #[test]
    fn ball_projection_satisfies_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for trial in 0..20 {
            let a = gaussian_matrix(6, 10, &mut rng);
            let b = RealVector::from_fn(6, |_, _| rng.sample(StandardNormal));
            let w = RealVector::from_fn(10, |_, _| rng.sample(StandardNormal));
            let eps = 0.1 + 0.05 * trial as f64;
            let u = project_onto_residual_ball(&a, &b, &w, eps).unwrap();
            let resid = (a.matrix() * &u - &b).norm();
            assert!(resid <= eps + 1e-10, "trial {trial}: residual {resid} vs eps {eps}");
            if (a.matrix() * &w - &b).norm() > eps {
                // Active constraint: residual pinned to the boundary and the
                // step aligned with the constraint gradient.
                assert!((resid - eps).abs() <= 1e-10);
                let v = &w - &u;
                let t = a.matrix().transpose() * (a.matrix() * &u - &b);
                let mu = v.dot(&t) / t.dot(&t);
                assert!(mu >= -1e-12);
                assert!((&v - t * mu).norm() <= 1e-8 * v.norm().max(1.0));
            } else {
                assert_eq!(u, w);
            }
        }
    }

    #[test]
    fn bpdn_zero_eps_matches_bp() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let a = gaussian_matrix(5, 12, &mut rng);
        let b = RealVector::from_fn(5, |_, _| rng.sample(StandardNormal));
        let opts = SolverOptions::default();
        let r1 = basis_pursuit(&a, &b, &opts).unwrap();
        let r2 = basis_pursuit_denoise(&a, &b, 0.0, &opts).unwrap();
        assert_eq!(
            r1.solution.as_vector().unwrap(),
            r2.solution.as_vector().unwrap()
        );
    }

    #[test]
    fn bpdn_large_eps_returns_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let a = gaussian_matrix(5, 12, &mut rng);
        let b = RealVector::from_fn(5, |_, _| rng.sample(StandardNormal));
        let rep = basis_pursuit_denoise(&a, &b, b.norm() * 1.5, &SolverOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.solution.as_vector().unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bpdn_solution_is_feasible_and_monotone_in_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let a = gaussian_matrix(8, 20, &mut rng);
        let b = RealVector::from_fn(8, |_, _| rng.sample(StandardNormal));
        let opts = SolverOptions::default();
        let mut last_l1 = f64::INFINITY;
        for eps in [0.05, 0.1, 0.2, 0.4] {
            let rep = basis_pursuit_denoise(&a, &b, eps, &opts).unwrap();
            assert_eq!(rep.status, SolveStatus::Converged);
            let x = rep.solution.as_vector().unwrap();
            let resid = (a.matrix() * x - &b).norm();
            assert!(resid <= eps + 1e-9);
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            assert!(l1 <= last_l1 + 1e-8, "l1 not monotone: {l1} after {last_l1}");
            last_l1 = l1;
        }
    }

    #[test]
    fn bpdn_rejects_negative_eps() {
        let a = RealMatrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let b = RealVector::from_vec(vec![1.0]);
        assert!(basis_pursuit_denoise(&a, &b, -0.1, &SolverOptions::default()).is_err());
    }

    #[test]
    fn bpdn_detects_empty_ball() {
        // Rank-one rows cannot reach b = (1, 2) closer than its distance to
        // the line span{(1, 1)}.
        let a = RealMatrix::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let b = RealVector::from_vec(vec![1.0, 2.0]);
        let rep = basis_pursuit_denoise(&a, &b, 0.1, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Infeasible);
    }

    #[test]
    fn nuclear_min_returns_unique_preimage_when_overdetermined() {
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        let (n1, n2) = (3, 3);
        let m = 2 * n1 * n2;
        let map = LowRankMap::sample(m, n1, n2, &mut rng).unwrap();
        let x = gen_lowrank_signal(n1, n2, 2, &mut rng).unwrap();
        let obs = measure_lowrank_phases(&map, &x).unwrap();
        let sys = build_lowrank(&obs, &map).unwrap();
        let rep = nuclear_min(&sys, &SolverOptions::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        let u = rep.solution.as_matrix().unwrap();
        let truth = to_real(&rescaled_truth_lowrank(&map, &x).unwrap());
        assert!((u.matrix() - truth.matrix()).norm() <= 1e-6 * truth.norm_fro());
    }

    #[test]
    fn nuclear_min_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let map = LowRankMap::sample(30, 4, 4, &mut rng).unwrap();
        let x = gen_lowrank_signal(4, 4, 1, &mut rng).unwrap();
        let obs = measure_lowrank_phases(&map, &x).unwrap();
        let sys = build_lowrank(&obs, &map).unwrap();
        let r1 = nuclear_min(&sys, &SolverOptions::default()).unwrap();
        let r2 = nuclear_min(&sys, &SolverOptions::default()).unwrap();
        assert_eq!(
            r1.solution.as_matrix().unwrap().matrix(),
            r2.solution.as_matrix().unwrap().matrix()
        );
        assert_eq!(r1.iterations, r2.iterations);
    }

    #[test]
    fn report_csv_line_shape() {
        let rep = RecoveryReport {
            solution: RecoveredPoint::Vector(RealVector::zeros(2)),
            iterations: 12,
            primal_residual: 1e-9,
            dual_residual: 2e-10,
            status: SolveStatus::Converged,
        };
        let line = rep.csv_line();
        assert!(line.starts_with("converged,12,"));
        assert_eq!(line.split(',').count(), 4);
    }
}
