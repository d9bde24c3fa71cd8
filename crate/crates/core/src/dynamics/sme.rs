//! Conditional evolution under continuous photon-number measurement.
//!
//! The measured channels are `C_n = sqrt(eta) P_n`, one per cavity Fock level.
//! Each control step of width `dt` is split into `n_substeps` substeps of
//! width `h`. Three schemes are available:
//!
//! * [`Scheme::Kraus`] (default): the exact unitary `exp(-i H h)` followed by
//!   the first-order measurement/decay Kraus map
//!   `rho -> M rho M + h (kappa a rho a^dag + gamma b rho b^dag)` with a
//!   diagonal `M` built from the measurement record `dy_n = 2 sqrt(eta) <P_n> h + dW_n`.
//!   Positivity is preserved by construction and the map agrees with the
//!   Ito expansion of the normalized stochastic master equation to order `h`.
//! * [`Scheme::EulerMaruyama`]: the textbook increment
//!   `drho = L rho h + sum_n H(C_n) rho dW_n`.
//! * [`Scheme::Milstein`]: Euler-Maruyama plus the commutative-noise
//!   Milstein correction.
//!
//! With [`NoiseSource::Zero`] every scheme integrates the unconditional
//! master equation (the measurement then only dephases).

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::dynamics::hamiltonian::HamiltonianTerms;
use crate::dynamics::noise::NoiseSource;
use crate::dynamics::params::{ControlAction, PhysicsParams};
use crate::dynamics::superop::{dissipator_raw, measurement_raw};
use crate::error::{Error, Result};
use crate::fock::{CMatrix, DensityMatrix, FockSpace, Mode, Operator, C64};

/// Largest tolerated deviation of the per-substep renormalization factor from 1.
pub const BLOWUP_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Kraus,
    EulerMaruyama,
    Milstein,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmeOptions {
    pub n_substeps: usize,
    pub scheme: Scheme,
}

impl Default for SmeOptions {
    fn default() -> Self {
        SmeOptions { n_substeps: 10, scheme: Scheme::Kraus }
    }
}

/// A state trajectory: `states[0]` is the initial state and `states[t + 1]`
/// the state after control step `t`; `increments[t]` holds the Wiener
/// increments of step `t`, one per cavity level.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<DensityMatrix>,
    pub increments: Vec<Vec<f64>>,
}

/// Ladder-operator action as index shifts: `(a rho a^dag)_{ij} =
/// c_i c_j rho_{up(i), up(j)}` with `up(i)` the basis index one quantum higher.
#[derive(Clone, Debug)]
struct Ladder {
    up: Vec<Option<(usize, f64)>>,
}

impl Ladder {
    fn new(space: FockSpace, mode: Mode) -> Self {
        let up = (0..space.dim())
            .map(|i| {
                let (nc, nm) = space.levels(i);
                let (nc2, nm2) = match mode {
                    Mode::Cavity => (nc + 1, nm),
                    Mode::Mech => (nc, nm + 1),
                };
                let n = if mode == Mode::Cavity { nc2 } else { nm2 };
                (n < space.cutoff(mode)).then(|| (space.index(nc2, nm2), (n as f64).sqrt()))
            })
            .collect();
        Ladder { up }
    }

    /// `out += w * A rho A^dag`.
    fn add_jump(&self, rho: &CMatrix, w: f64, out: &mut CMatrix) {
        let d = rho.nrows();
        for j in 0..d {
            let Some((uj, cj)) = self.up[j] else { continue };
            for i in 0..d {
                if let Some((ui, ci)) = self.up[i] {
                    out[(i, j)] += rho[(ui, uj)] * (w * ci * cj);
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SmeIntegrator {
    space: FockSpace,
    params: PhysicsParams,
    options: SmeOptions,
    terms: HamiltonianTerms,
    n_cav: Vec<usize>,
    n_mech: Vec<usize>,
    ladder_a: Ladder,
    ladder_b: Ladder,
    a: CMatrix,
    b: CMatrix,
    /// `sqrt(eta) P_n` for every cavity level.
    channels: Vec<CMatrix>,
}

impl SmeIntegrator {
    pub fn new(space: FockSpace, params: PhysicsParams, options: SmeOptions) -> Result<Self> {
        params.validate()?;
        if options.n_substeps == 0 {
            return Err(Error::Config("n_substeps must be at least 1".into()));
        }
        let levels = space.cutoff(Mode::Cavity);
        let channels = (0..levels)
            .map(|n| Ok(space.fock_projector(Mode::Cavity, n)?.scale(params.eta.sqrt()).into_matrix()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SmeIntegrator {
            space,
            params,
            options,
            terms: HamiltonianTerms::new(space),
            n_cav: (0..space.dim()).map(|i| space.level(i, Mode::Cavity)).collect(),
            n_mech: (0..space.dim()).map(|i| space.level(i, Mode::Mech)).collect(),
            ladder_a: Ladder::new(space, Mode::Cavity),
            ladder_b: Ladder::new(space, Mode::Mech),
            a: space.annihilation(Mode::Cavity).into_matrix(),
            b: space.annihilation(Mode::Mech).into_matrix(),
            channels,
        })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    pub fn options(&self) -> SmeOptions {
        self.options
    }

    /// Number of measured channels (cavity Fock levels).
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn hamiltonian(&self, action: ControlAction) -> Operator {
        self.terms.for_action(&self.params, action)
    }

    /// Advances `rho` by one control step under the Hamiltonian of `action`
    /// and returns the Wiener increment of every channel over the step.
    pub fn step(&self, rho: &mut DensityMatrix, action: ControlAction, noise: &NoiseSource, step: usize) -> Result<Vec<f64>> {
        let h = self.hamiltonian(action);
        self.step_with_hamiltonian(rho, &h, noise, step)
    }

    pub fn step_with_hamiltonian(
        &self,
        rho: &mut DensityMatrix,
        hamiltonian: &Operator,
        noise: &NoiseSource,
        step: usize,
    ) -> Result<Vec<f64>> {
        if rho.space() != self.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: rho.dim() });
        }
        if hamiltonian.space() != self.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: hamiltonian.matrix().nrows() });
        }
        let n_sub = self.options.n_substeps;
        let hs = self.params.dt / n_sub as f64;
        let nch = self.n_channels();
        let draws = match noise {
            NoiseSource::Wiener(w) => Some(w.increments(step as u64, n_sub * nch, hs)),
            NoiseSource::Zero => None,
        };
        let propagator = match self.options.scheme {
            Scheme::Kraus => Some(unitary(hamiltonian.matrix(), hs)?),
            _ => None,
        };
        let mut total = vec![0.0; nch];
        for s in 0..n_sub {
            let dw = draws.as_ref().map(|d| &d[s * nch..(s + 1) * nch]);
            if let Some(dw) = dw {
                for (t, x) in total.iter_mut().zip(dw) {
                    *t += x;
                }
            }
            let (next, reference) = match self.options.scheme {
                Scheme::Kraus => {
                    let u = propagator.as_ref().expect("computed above");
                    let rotated = u * rho.matrix() * u.adjoint();
                    self.kraus_substep(&rotated, dw, hs)
                }
                Scheme::EulerMaruyama => (self.euler_substep(rho.matrix(), hamiltonian.matrix(), dw, hs, false), 1.0),
                Scheme::Milstein => (self.euler_substep(rho.matrix(), hamiltonian.matrix(), dw, hs, true), 1.0),
            };
            *rho.matrix_mut() = next;
            rho.symmetrize();
            let factor = rho.normalize() / reference;
            if !factor.is_finite() || (factor - 1.0).abs() > BLOWUP_THRESHOLD {
                return Err(Error::IntegrationBlowup { step, factor });
            }
        }
        Ok(total)
    }

    /// One measurement/decay Kraus substep on an already rotated state.
    /// Returns the unnormalized state and the trace it should have to first
    /// order (the likelihood of the record), so that the ratio isolates
    /// discretization error.
    fn kraus_substep(&self, rho: &CMatrix, dw: Option<&[f64]>, h: f64) -> (CMatrix, f64) {
        let p = &self.params;
        let d = rho.nrows();
        let nch = self.n_channels();
        let se = p.eta.sqrt();
        let mut pops = vec![0.0; nch];
        for i in 0..d {
            pops[self.n_cav[i]] += rho[(i, i)].re;
        }
        let mu: Vec<f64> = match dw {
            Some(dw) => (0..nch)
                .map(|k| {
                    let dy = 2.0 * se * pops[k] * h + dw[k];
                    1.0 - 0.5 * p.eta * h + se * dy + 0.5 * p.eta * (dy * dy - h)
                })
                .collect(),
            None => vec![1.0 - 0.5 * p.eta * h; nch],
        };
        let m: Vec<f64> = (0..d)
            .map(|i| mu[self.n_cav[i]] - 0.5 * h * (p.kappa * self.n_cav[i] as f64 + p.gamma * self.n_mech[i] as f64))
            .collect();
        let mut out = CMatrix::from_fn(d, d, |i, j| rho[(i, j)] * (m[i] * m[j]));
        if p.kappa > 0.0 {
            self.ladder_a.add_jump(rho, h * p.kappa, &mut out);
        }
        if p.gamma > 0.0 {
            self.ladder_b.add_jump(rho, h * p.gamma, &mut out);
        }
        let reference = match dw {
            Some(_) => (0..nch).map(|k| pops[k] * mu[k] * mu[k]).sum(),
            None => {
                // averaged record: the measurement jump sum_n C_n rho C_n
                for i in 0..d {
                    for j in 0..d {
                        if self.n_cav[i] == self.n_cav[j] {
                            out[(i, j)] += rho[(i, j)] * (h * p.eta);
                        }
                    }
                }
                1.0
            }
        };
        (out, reference)
    }

    fn euler_substep(&self, rho: &CMatrix, ham: &CMatrix, dw: Option<&[f64]>, h: f64, milstein: bool) -> CMatrix {
        let p = &self.params;
        let mi = C64::new(0.0, -1.0);
        let mut drift = (ham * rho - rho * ham) * mi;
        if p.kappa > 0.0 {
            drift += dissipator_raw(&self.a, rho) * C64::new(p.kappa, 0.0);
        }
        if p.gamma > 0.0 {
            drift += dissipator_raw(&self.b, rho) * C64::new(p.gamma, 0.0);
        }
        for c in &self.channels {
            drift += dissipator_raw(c, rho);
        }
        let mut next = rho + drift * C64::new(h, 0.0);
        if let Some(dw) = dw {
            let innovations: Vec<CMatrix> = self.channels.iter().map(|c| measurement_raw(c, rho)).collect();
            for (g, &w) in innovations.iter().zip(dw) {
                next += g * C64::new(w, 0.0);
            }
            if milstein {
                for (n, cn) in self.channels.iter().enumerate() {
                    for (m, gm) in innovations.iter().enumerate() {
                        let weight = dw[n] * dw[m] - if n == m { h } else { 0.0 };
                        if weight != 0.0 {
                            next += measurement_derivative(cn, rho, gm) * C64::new(0.5 * weight, 0.0);
                        }
                    }
                }
            }
        }
        next
    }

    /// Integrates `actions.len()` control steps from `rho0`.
    pub fn run_trajectory(&self, rho0: &DensityMatrix, actions: &[ControlAction], noise: &NoiseSource) -> Result<Trajectory> {
        let mut states = Vec::with_capacity(actions.len() + 1);
        let mut increments = Vec::with_capacity(actions.len());
        let mut rho = rho0.clone();
        states.push(rho.clone());
        for (t, &action) in actions.iter().enumerate() {
            increments.push(self.step(&mut rho, action, noise, t)?);
            states.push(rho.clone());
        }
        Ok(Trajectory { states, increments })
    }
}

/// Directional derivative of `rho -> H(C) rho` along `x` for Hermitian `C`.
fn measurement_derivative(c: &CMatrix, rho: &CMatrix, x: &CMatrix) -> CMatrix {
    let two_c = c * C64::new(2.0, 0.0);
    let mean_rho = (&two_c * rho).trace().re;
    let mean_x = (&two_c * x).trace().re;
    c * x + x * c - x * C64::new(mean_rho, 0.0) - rho * C64::new(mean_x, 0.0)
}

/// `exp(-i H h)` for Hermitian `H`.
pub fn unitary(ham: &CMatrix, h: f64) -> Result<CMatrix> {
    let eig = SymmetricEigen::new(ham.clone());
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Hamiltonian eigen-decomposition failed".into()));
    }
    let v = &eig.eigenvectors;
    let mut vd = v.clone();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::new(0.0, -lam * h).exp();
        for r in 0..vd.nrows() {
            vd[(r, k)] *= phase;
        }
    }
    Ok(vd * v.adjoint())
}
