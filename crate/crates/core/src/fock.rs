//! Dense operator algebra on the two-mode truncated Fock space.
//!
//! Composite basis states are ordered row-major: `|n_c, n_m>` has index
//! `n_c * cutoff_mech + n_m`. Every routine in the crate that indexes a
//! density matrix relies on this ordering.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// One of the two bosonic modes. Also used to name the subsystem for
/// partial transposition (cavity = subsystem 0, mechanics = subsystem 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Cavity,
    Mech,
}

impl Mode {
    pub fn subsystem_index(self) -> usize {
        match self {
            Mode::Cavity => 0,
            Mode::Mech => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockSpace {
    cutoff_cavity: usize,
    cutoff_mech: usize,
}

impl FockSpace {
    pub fn new(cutoff_cavity: usize, cutoff_mech: usize) -> Result<Self> {
        for c in [cutoff_cavity, cutoff_mech] {
            if c < 2 {
                return Err(Error::InvalidCutoff(c));
            }
        }
        Ok(FockSpace { cutoff_cavity, cutoff_mech })
    }

    /// The four-level space of the beam-splitter regime.
    pub fn linear() -> Self {
        FockSpace { cutoff_cavity: 2, cutoff_mech: 2 }
    }

    /// 10 x 10 levels used for the nonlinear regime.
    pub fn nonlinear() -> Self {
        FockSpace { cutoff_cavity: 10, cutoff_mech: 10 }
    }

    pub fn cutoff(&self, mode: Mode) -> usize {
        match mode {
            Mode::Cavity => self.cutoff_cavity,
            Mode::Mech => self.cutoff_mech,
        }
    }

    pub fn dim(&self) -> usize {
        self.cutoff_cavity * self.cutoff_mech
    }

    #[inline]
    pub fn index(&self, n_cavity: usize, n_mech: usize) -> usize {
        n_cavity * self.cutoff_mech + n_mech
    }

    #[inline]
    pub fn levels(&self, index: usize) -> (usize, usize) {
        (index / self.cutoff_mech, index % self.cutoff_mech)
    }

    #[inline]
    pub fn level(&self, index: usize, mode: Mode) -> usize {
        match mode {
            Mode::Cavity => index / self.cutoff_mech,
            Mode::Mech => index % self.cutoff_mech,
        }
    }

    pub fn identity(&self) -> Operator {
        Operator { space: *self, mat: CMatrix::identity(self.dim(), self.dim()) }
    }

    /// Truncated ladder operator of `mode`, tensored with the identity on the
    /// other mode.
    pub fn annihilation(&self, mode: Mode) -> Operator {
        let d = self.dim();
        let mut mat = CMatrix::zeros(d, d);
        for col in 0..d {
            let (nc, nm) = self.levels(col);
            let target = match mode {
                Mode::Cavity if nc > 0 => Some((self.index(nc - 1, nm), nc)),
                Mode::Mech if nm > 0 => Some((self.index(nc, nm - 1), nm)),
                _ => None,
            };
            if let Some((row, n)) = target {
                mat[(row, col)] = C64::new((n as f64).sqrt(), 0.0);
            }
        }
        Operator { space: *self, mat }
    }

    pub fn creation(&self, mode: Mode) -> Operator {
        self.annihilation(mode).dagger()
    }

    pub fn number(&self, mode: Mode) -> Operator {
        let d = self.dim();
        let diag = (0..d).map(|i| C64::new(self.level(i, mode) as f64, 0.0));
        Operator {
            space: *self,
            mat: CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, diag)),
        }
    }

    /// `P_n (x) I` for the cavity, `I (x) P_n` for the mechanics.
    pub fn fock_projector(&self, mode: Mode, n: usize) -> Result<Operator> {
        let cutoff = self.cutoff(mode);
        if n >= cutoff {
            return Err(Error::LevelOutOfRange { level: n, cutoff });
        }
        let d = self.dim();
        let mut mat = CMatrix::zeros(d, d);
        for i in 0..d {
            if self.level(i, mode) == n {
                mat[(i, i)] = ONE;
            }
        }
        Ok(Operator { space: *self, mat })
    }

    pub fn basis_state(&self, n_cavity: usize, n_mech: usize) -> Result<DensityMatrix> {
        if n_cavity >= self.cutoff_cavity {
            return Err(Error::LevelOutOfRange { level: n_cavity, cutoff: self.cutoff_cavity });
        }
        if n_mech >= self.cutoff_mech {
            return Err(Error::LevelOutOfRange { level: n_mech, cutoff: self.cutoff_mech });
        }
        let d = self.dim();
        let mut mat = CMatrix::zeros(d, d);
        let i = self.index(n_cavity, n_mech);
        mat[(i, i)] = ONE;
        Ok(DensityMatrix { space: *self, mat })
    }

    pub fn vacuum(&self) -> DensityMatrix {
        self.basis_state(0, 0).expect("vacuum always exists")
    }
}

impl fmt::Display for FockSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.cutoff_cavity, self.cutoff_mech)
    }
}

fn check_dim(space: &FockSpace, mat: &CMatrix) -> Result<()> {
    let d = space.dim();
    if mat.nrows() != d || mat.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: mat.nrows().max(mat.ncols()) });
    }
    Ok(())
}

/// Largest element-wise deviation from Hermiticity.
pub fn hermiticity_error(mat: &CMatrix) -> f64 {
    let n = mat.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(mat: &CMatrix) -> Result<Vec<f64>> {
    let eig = mat.clone().symmetric_eigenvalues();
    let mut vals: Vec<f64> = eig.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    vals.sort_by(|a, b| a.total_cmp(b));
    Ok(vals)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: FockSpace,
    mat: CMatrix,
}

impl Operator {
    pub fn from_matrix(space: FockSpace, mat: CMatrix) -> Result<Self> {
        check_dim(&space, &mat)?;
        Ok(Operator { space, mat })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dagger(&self) -> Operator {
        Operator { space: self.space, mat: self.mat.adjoint() }
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator { space: self.space, mat: self.mat.scale(s) }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_error(&self.mat) <= tol
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator { space: self.space, mat: &self.mat * &other.mat - &other.mat * &self.mat }
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { space: self.space, mat: &self.mat * &rhs.mat }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { space: self.space, mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { space: self.space, mat: &self.mat - &rhs.mat }
    }
}

/// A bipartite state on a [`FockSpace`].
///
/// Construction checks dimensions only. Physical validity (Hermitian, unit
/// trace, positive) is maintained by the integrators and can be audited with
/// [`DensityMatrix::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: FockSpace,
    mat: CMatrix,
}

/// Tolerances of the density-matrix invariants.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-8;

impl DensityMatrix {
    pub fn from_matrix(space: FockSpace, mat: CMatrix) -> Result<Self> {
        check_dim(&space, &mat)?;
        Ok(DensityMatrix { space, mat })
    }

    /// `|psi><psi|` for the (normalized) amplitude vector `psi`.
    pub fn pure(space: FockSpace, amplitudes: &[C64]) -> Result<Self> {
        let d = space.dim();
        if amplitudes.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: amplitudes.len() });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Numerical("zero state vector".into()));
        }
        let mat = CMatrix::from_fn(d, d, |i, j| amplitudes[i] * amplitudes[j].conj() / (norm * norm));
        Ok(DensityMatrix { space, mat })
    }

    /// Convex combination `sum_k w_k rho_k`; weights are used as given.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Numerical("empty mixture".into()))?;
        let space = first.1.space;
        let mut mat = CMatrix::zeros(space.dim(), space.dim());
        for (w, rho) in parts {
            check_dim(&space, &rho.mat)?;
            mat += rho.mat.scale(*w);
        }
        Ok(DensityMatrix { space, mat })
    }

    /// Random full-rank state from the Ginibre ensemble, `G G^dag / Tr`.
    pub fn random<R: Rng + ?Sized>(space: FockSpace, rng: &mut R) -> Self {
        let d = space.dim();
        let g = CMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let mut mat = &g * g.adjoint();
        let tr = mat.trace().re;
        mat.unscale_mut(tr);
        let mut rho = DensityMatrix { space, mat };
        rho.symmetrize();
        rho
    }

    /// Random pure state with Gaussian amplitudes.
    pub fn random_pure<R: Rng + ?Sized>(space: FockSpace, rng: &mut R) -> Self {
        let psi: Vec<C64> = (0..space.dim())
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::pure(space, &psi).expect("non-zero amplitudes")
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.mat)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `rho <- (rho + rho^dagger) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.mat.nrows();
        for i in 0..n {
            self.mat[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                let avg = (self.mat[(i, j)] + self.mat[(j, i)].conj()) * 0.5;
                self.mat[(i, j)] = avg;
                self.mat[(j, i)] = avg.conj();
            }
        }
    }

    /// Rescales to unit trace and returns the factor that was divided out.
    pub fn normalize(&mut self) -> f64 {
        let tr = self.mat.trace().re;
        if tr != 0.0 {
            self.mat.unscale_mut(tr);
        }
        tr
    }

    /// Checks Hermiticity, unit trace and positivity against the crate-wide
    /// tolerances.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::Numerical(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Numerical(format!("density matrix trace {tr}")));
        }
        let min = self.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::Numerical(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Diagonal of the reduced state of `mode`: the Fock-number distribution.
    pub fn populations(&self, mode: Mode) -> Vec<f64> {
        let mut p = vec![0.0; self.space.cutoff(mode)];
        for i in 0..self.dim() {
            p[self.space.level(i, mode)] += self.mat[(i, i)].re;
        }
        p
    }

    /// `<n>` of `mode`, read off the diagonal.
    pub fn mean_number(&self, mode: Mode) -> f64 {
        (0..self.dim()).map(|i| self.space.level(i, mode) as f64 * self.mat[(i, i)].re).sum()
    }
}

/// `Tr[op rho]`, required to be real.
pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<f64> {
    let d = rho.dim();
    if op.mat.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, got: op.mat.nrows() });
    }
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += op.mat[(i, j)] * rho.mat[(j, i)];
        }
    }
    if acc.im.abs() > 1e-9 * (1.0 + acc.re.abs()) {
        return Err(Error::NonHermitianExpectation(acc.im));
    }
    Ok(acc.re)
}

/// Partial transpose of `rho` on one subsystem. The result is Hermitian with
/// the same trace but generally not positive.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: Mode) -> CMatrix {
    let space = rho.space;
    let d = space.dim();
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        let (ic, im) = space.levels(i);
        for j in 0..d {
            let (jc, jm) = space.levels(j);
            let (r, c) = match subsystem {
                Mode::Cavity => (space.index(jc, im), space.index(ic, jm)),
                Mode::Mech => (space.index(ic, jm), space.index(jc, im)),
            };
            out[(r, c)] = rho.mat[(i, j)];
        }
    }
    out
}
