//! The two optomechanical Hamiltonians (hbar = 1).

use crate::dynamics::params::{ControlAction, PhysicsParams};
use crate::fock::{FockSpace, Mode, Operator};

/// Action-independent operator pieces from which either Hamiltonian is
/// assembled as a linear combination.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    space: FockSpace,
    n_cavity: Operator,
    n_mech: Operator,
    /// `a^dag b + b^dag a`
    exchange: Operator,
    /// `(b^dag + b) a^dag a`
    radiation_pressure: Operator,
    /// `a^dag + a`
    drive: Operator,
}

impl HamiltonianTerms {
    pub fn new(space: FockSpace) -> Self {
        let a = space.annihilation(Mode::Cavity);
        let b = space.annihilation(Mode::Mech);
        let ad = a.dagger();
        let bd = b.dagger();
        let n_cavity = space.number(Mode::Cavity);
        let n_mech = space.number(Mode::Mech);
        let exchange = &(&ad * &b) + &(&bd * &a);
        let radiation_pressure = &(&bd + &b) * &n_cavity;
        let drive = &ad + &a;
        HamiltonianTerms { space, n_cavity, n_mech, exchange, radiation_pressure, drive }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    /// `H = w_m a^dag a + w_m b^dag b + G (a^dag b + b^dag a)`.
    pub fn linear(&self, params: &PhysicsParams, g: f64) -> Operator {
        let w = params.omega_m;
        let m = self.n_cavity.matrix().scale(w)
            + self.n_mech.matrix().scale(w)
            + self.exchange.matrix().scale(g);
        Operator::from_matrix(self.space, m).expect("same space")
    }

    /// `H = -Delta a^dag a + w_m b^dag b + g0 (b^dag + b) a^dag a + alpha_L (a^dag + a)`.
    pub fn nonlinear(&self, params: &PhysicsParams, delta: f64, alpha_l: f64) -> Operator {
        let m = self.n_cavity.matrix().scale(-delta)
            + self.n_mech.matrix().scale(params.omega_m)
            + self.radiation_pressure.matrix().scale(params.g0)
            + self.drive.matrix().scale(alpha_l);
        Operator::from_matrix(self.space, m).expect("same space")
    }

    /// Hamiltonian for an action of either regime; the action is clamped first.
    pub fn for_action(&self, params: &PhysicsParams, action: ControlAction) -> Operator {
        match action.clamped() {
            ControlAction::Linear { g } => self.linear(params, g),
            ControlAction::Nonlinear { delta, alpha_l } => self.nonlinear(params, delta, alpha_l),
        }
    }
}

pub fn hamiltonian_linear(space: FockSpace, params: &PhysicsParams, action: ControlAction) -> Operator {
    HamiltonianTerms::new(space).for_action(params, action)
}

pub fn hamiltonian_nonlinear(space: FockSpace, params: &PhysicsParams, action: ControlAction) -> Operator {
    HamiltonianTerms::new(space).for_action(params, action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_without_coupling_is_diagonal() {
        let s = FockSpace::linear();
        let p = PhysicsParams::linear();
        let h = hamiltonian_linear(s, &p, ControlAction::Linear { g: 0.0 });
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { [0.0, 1.0, 1.0, 2.0][i] } else { 0.0 };
                assert_abs_diff_eq!(h.element(i, j).re, expected);
                assert_abs_diff_eq!(h.element(i, j).im, 0.0);
            }
        }
    }

    #[test]
    fn linear_coupling_element() {
        let s = FockSpace::linear();
        let h = hamiltonian_linear(s, &PhysicsParams::linear(), ControlAction::Linear { g: 1.0 });
        assert_abs_diff_eq!(h.element(s.index(0, 1), s.index(1, 0)).re, 1.0);
        for g in [-4.3, 0.2, 9.0] {
            let h = hamiltonian_linear(s, &PhysicsParams::linear(), ControlAction::Linear { g });
            assert!(h.is_hermitian(0.0));
        }
        // clamped to the action box
        let h = hamiltonian_linear(s, &PhysicsParams::linear(), ControlAction::Linear { g: 9.0 });
        assert_abs_diff_eq!(h.element(s.index(0, 1), s.index(1, 0)).re, 5.0);
    }

    #[test]
    fn nonlinear_free_mechanics_spectrum() {
        let s = FockSpace::nonlinear();
        let mut p = PhysicsParams::nonlinear();
        p.g0 = 0.0;
        let h = hamiltonian_nonlinear(s, &p, ControlAction::Nonlinear { delta: 0.0, alpha_l: 0.0 });
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                let expected = if i == j { s.level(i, Mode::Mech) as f64 } else { 0.0 };
                assert_abs_diff_eq!(h.element(i, j).re, expected);
            }
        }
    }

    #[test]
    fn nonlinear_matrix_elements() {
        let s = FockSpace::nonlinear();
        let p = PhysicsParams::nonlinear();
        let h = hamiltonian_nonlinear(s, &p, ControlAction::Nonlinear { delta: 0.0, alpha_l: 0.0 });
        assert_abs_diff_eq!(h.element(s.index(1, 0), s.index(1, 1)).re, p.g0, epsilon = 1e-15);
        let h = hamiltonian_nonlinear(s, &p, ControlAction::Nonlinear { delta: 0.0, alpha_l: 1.0 });
        assert_abs_diff_eq!(h.element(s.index(0, 0), s.index(1, 0)).re, 1.0);
        assert_abs_diff_eq!(h.element(s.index(1, 0), s.index(0, 0)).re, 1.0);
        assert!(h.is_hermitian(1e-15));
    }
}
