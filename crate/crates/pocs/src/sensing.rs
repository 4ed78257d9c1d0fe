//! Sensing ensembles, synthetic signals, and phase measurements, with the
//! dithered and noisy variants.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    phase, sample_complex_gaussian, sample_complex_gaussian_vector, ComplexMatrix, ComplexVector,
};

/// Complex Gaussian sensing matrix of shape (m, n).
#[derive(Clone, Debug)]
pub struct SensingEnsemble {
    phi: ComplexMatrix,
}

impl SensingEnsemble {
    pub fn new(phi: ComplexMatrix) -> Self {
        Self { phi }
    }

    pub fn sample<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Self> {
        Ok(Self::new(sample_complex_gaussian(m, n, rng)?))
    }

    pub fn m(&self) -> usize {
        self.phi.rows()
    }

    pub fn n(&self) -> usize {
        self.phi.cols()
    }

    pub fn phi(&self) -> &ComplexMatrix {
        &self.phi
    }
}

/// Sensing matrix plus a dither tau and its scale rho; the extended matrix
/// [Phi, tau/rho] treats the dither as one extra signal coordinate.
#[derive(Clone, Debug)]
pub struct DitheredEnsemble {
    base: SensingEnsemble,
    dither: ComplexVector,
    rho: f64,
}

impl DitheredEnsemble {
    pub fn new(base: SensingEnsemble, dither: ComplexVector, rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::parameter("rho", format!("must be positive, got {rho}")));
        }
        if dither.len() != base.m() {
            return Err(Error::Dimension {
                context: "dither length vs measurement count",
                left: dither.len(),
                right: base.m(),
            });
        }
        Ok(Self { base, dither, rho })
    }

    /// Draws Phi first, then tau with i.i.d. N(0, rho^2) + i N(0, rho^2)
    /// entries, off a single RNG stream.
    pub fn sample<R: Rng + ?Sized>(m: usize, n: usize, rho: f64, rng: &mut R) -> Result<Self> {
        let base = SensingEnsemble::sample(m, n, rng)?;
        let dither = sample_complex_gaussian_vector(m, rng)?.scaled(Complex64::new(rho, 0.0));
        Self::new(base, dither, rho)
    }

    pub fn base(&self) -> &SensingEnsemble {
        &self.base
    }

    pub fn dither(&self) -> &ComplexVector {
        &self.dither
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// The m x (n+1) extended ensemble [Phi, tau/rho].
    pub fn extended(&self) -> SensingEnsemble {
        let m = self.base.m();
        let n = self.base.n();
        let phi = ComplexMatrix::from_fn(m, n + 1, |i, j| {
            if j < n {
                self.base.phi().get(i, j)
            } else {
                let t = self.dither.get(i);
                Complex64::new(t.re / self.rho, t.im / self.rho)
            }
        })
        .expect("extended ensemble shape is valid");
        SensingEnsemble::new(phi)
    }
}

/// Rank-one-probing linear map U -> (<Phi_k, U>)_k given by m complex atoms.
#[derive(Clone, Debug)]
pub struct LowRankMap {
    atoms: Vec<ComplexMatrix>,
}

impl LowRankMap {
    pub fn new(atoms: Vec<ComplexMatrix>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty {
                what: "low-rank map atoms",
            });
        }
        let (n1, n2) = (atoms[0].rows(), atoms[0].cols());
        for a in &atoms {
            if a.rows() != n1 || a.cols() != n2 {
                return Err(Error::Dimension {
                    context: "low-rank map atom shapes",
                    left: n1 * n2,
                    right: a.rows() * a.cols(),
                });
            }
        }
        Ok(Self { atoms })
    }

    pub fn sample<R: Rng + ?Sized>(m: usize, n1: usize, n2: usize, rng: &mut R) -> Result<Self> {
        if m == 0 {
            return Err(Error::Empty {
                what: "low-rank map atoms",
            });
        }
        let atoms = (0..m)
            .map(|_| sample_complex_gaussian(n1, n2, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }

    pub fn m(&self) -> usize {
        self.atoms.len()
    }

    pub fn n1(&self) -> usize {
        self.atoms[0].rows()
    }

    pub fn n2(&self) -> usize {
        self.atoms[0].cols()
    }

    pub fn atom(&self, k: usize) -> &ComplexMatrix {
        &self.atoms[k]
    }

    /// <Phi_k, X> = Tr(Phi_k^* X) for every atom.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexVector> {
        let mut out = Vec::with_capacity(self.m());
        for a in &self.atoms {
            out.push(a.dot_conj(x)?);
        }
        ComplexVector::new(out)
    }
}

/// Which field the unknown signal lives over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

/// How phases get corrupted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    /// z + tau with tau uniform on the complex disk of radius tau0.
    Disk,
    /// z * exp(i theta), theta uniform with |e^{i theta} - 1| <= tau0.
    PhaseJitter,
}

/// Vector of observed phases: unit-modulus (or exactly zero) entries when
/// clean, plus a corruption flag and the noise bound tau0.
#[derive(Clone, Debug)]
pub struct PhaseObservation {
    entries: ComplexVector,
    corrupted: bool,
    noise_bound: f64,
}

impl PhaseObservation {
    /// Wraps a clean phase vector; every entry must have modulus 1 or be
    /// exactly 0.
    pub fn new_clean(entries: ComplexVector) -> Result<Self> {
        for z in entries.iter() {
            let m = z.norm();
            if m != 0.0 && (m - 1.0).abs() > 1e-9 {
                return Err(Error::parameter(
                    "phases",
                    format!("clean observation has entry of modulus {m}"),
                ));
            }
        }
        Ok(Self {
            entries,
            corrupted: false,
            noise_bound: 0.0,
        })
    }

    pub fn new_corrupted(entries: ComplexVector, noise_bound: f64) -> Result<Self> {
        if !(noise_bound.is_finite() && noise_bound >= 0.0) {
            return Err(Error::parameter(
                "noise_bound",
                format!("must be nonnegative, got {noise_bound}"),
            ));
        }
        Ok(Self {
            entries,
            corrupted: true,
            noise_bound,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn phases(&self) -> &ComplexVector {
        &self.entries
    }

    pub fn corrupted(&self) -> bool {
        self.corrupted
    }

    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }
}

/// Exactly s-sparse unit-norm signal with a uniformly random support and
/// Gaussian values. `Field::Real` zeroes the imaginary parts.
pub fn gen_sparse_signal<R: Rng + ?Sized>(n: usize, s: usize, field: Field, rng: &mut R) -> Result<ComplexVector> {
    if n == 0 {
        return Err(Error::Empty { what: "signal" });
    }
    if s == 0 || s > n {
        return Err(Error::parameter("s", format!("need 1 <= s <= n = {n}, got {s}")));
    }
    // Partial Fisher-Yates: the first s slots end up a uniform s-subset.
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); n];
    loop {
        for &k in idx.iter().take(s) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = match field {
                Field::Real => 0.0,
                Field::Complex => rng.sample(StandardNormal),
            };
            entries[k] = Complex64::new(re, im);
        }
        let norm = entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for z in entries.iter_mut() {
                *z = Complex64::new(z.re / norm, z.im / norm);
            }
            return ComplexVector::new(entries);
        }
        // Astronomically unlikely; redraw the values.
    }
}

/// Unit-Frobenius rank-r matrix G H^* with complex Gaussian factors.
pub fn gen_lowrank_signal<R: Rng + ?Sized>(n1: usize, n2: usize, r: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if r == 0 || r > n1.min(n2) {
        return Err(Error::parameter(
            "r",
            format!("need 1 <= r <= min(n1, n2) = {}, got {r}", n1.min(n2)),
        ));
    }
    let g = sample_complex_gaussian(n1, r, rng)?;
    let h = sample_complex_gaussian(n2, r, rng)?;
    let x = g.matrix() * h.matrix().adjoint();
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return Err(Error::Numerical("degenerate low-rank draw".into()));
    }
    Ok(ComplexMatrix::from_dmatrix(x.map(|z| Complex64::new(z.re / norm, z.im / norm))))
}

/// z = sign(Phi x): the phases of the measurements.
pub fn measure_phases(ens: &SensingEnsemble, x: &ComplexVector) -> Result<PhaseObservation> {
    let y = ens.phi().mul_vec(x)?;
    let z = ComplexVector::new(y.iter().map(|&v| phase(v)).collect())?;
    PhaseObservation::new_clean(z)
}

/// z_d = sign(Phi x + tau): phases of the dithered measurements.
pub fn measure_phases_dithered(dens: &DitheredEnsemble, x: &ComplexVector) -> Result<PhaseObservation> {
    let y = dens.base().phi().mul_vec(x)?;
    let z = ComplexVector::new(
        y.iter()
            .zip(dens.dither().iter())
            .map(|(&v, &t)| phase(v + t))
            .collect(),
    )?;
    PhaseObservation::new_clean(z)
}

/// Phases of the low-rank measurements <Phi_k, X>.
pub fn measure_lowrank_phases(map: &LowRankMap, x: &ComplexMatrix) -> Result<PhaseObservation> {
    let y = map.apply(x)?;
    let z = ComplexVector::new(y.iter().map(|&v| phase(v)).collect())?;
    PhaseObservation::new_clean(z)
}

/// Entrywise corruption with ||z_corrupt - z||_inf <= tau0.
pub fn corrupt_phases<R: Rng + ?Sized>(
    obs: &PhaseObservation,
    tau0: f64,
    model: NoiseModel,
    rng: &mut R,
) -> Result<PhaseObservation> {
    if !(tau0.is_finite() && tau0 >= 0.0) {
        return Err(Error::parameter("tau0", format!("must be nonnegative, got {tau0}")));
    }
    if obs.corrupted() {
        return Err(Error::parameter("obs", "already corrupted"));
    }
    if tau0 == 0.0 {
        // Zero-radius noise is a no-op; keep the observation clean.
        return Ok(obs.clone());
    }
    let entries = match model {
        NoiseModel::Disk => ComplexVector::new(
            obs.phases()
                .iter()
                .map(|&z| {
                    // sqrt(u) makes the radius density uniform over the disk.
                    let r = tau0 * rng.random::<f64>().sqrt();
                    let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                    z + Complex64::new(r * th.cos(), r * th.sin())
                })
                .collect(),
        )?,
        NoiseModel::PhaseJitter => {
            let half = (tau0 / 2.0).min(1.0).asin();
            ComplexVector::new(
                obs.phases()
                    .iter()
                    .map(|&z| {
                        let th = rng.random_range(-2.0 * half..=2.0 * half);
                        z * Complex64::new(th.cos(), th.sin())
                    })
                    .collect(),
            )?
        }
    };
    PhaseObservation::new_corrupted(entries, tau0)
}
