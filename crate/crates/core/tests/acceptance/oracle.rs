//! Unconditional master equation integrated with classical RK4, built from
//! scratch so that it shares no code with the library integrator.

use nalgebra::{Complex, DMatrix};
use optomech::dynamics::{ControlAction, PhysicsParams};
use optomech::fock::FockSpace;

type M = DMatrix<Complex<f64>>;

fn lowering(n: usize) -> M {
    M::from_fn(n, n, |i, j| if j == i + 1 { Complex::new((j as f64).sqrt(), 0.0) } else { Complex::new(0.0, 0.0) })
}

fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

struct Operators {
    a: M,
    b: M,
    projectors: Vec<M>,
}

impl Operators {
    fn new(nc: usize, nm: usize) -> Self {
        let (ic, im) = (M::identity(nc, nc), M::identity(nm, nm));
        let projectors = (0..nc)
            .map(|n| {
                let p = M::from_fn(nc, nc, |i, j| if i == n && j == n { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) });
                kron(&p, &im)
            })
            .collect();
        Operators { a: kron(&lowering(nc), &im), b: kron(&ic, &lowering(nm)), projectors }
    }

    fn hamiltonian(&self, p: &PhysicsParams, action: ControlAction) -> M {
        let (a, b) = (&self.a, &self.b);
        let (ad, bd) = (a.adjoint(), b.adjoint());
        let c = |x: f64| Complex::new(x, 0.0);
        match action {
            ControlAction::Linear { g } => (&ad * a + &bd * b) * c(p.omega_m) + (&ad * b + &bd * a) * c(g),
            ControlAction::Nonlinear { delta, alpha_l } => {
                &ad * a * c(-delta) + &bd * b * c(p.omega_m) + (&bd + b) * (&ad * a) * c(p.g0) + (&ad + a) * c(alpha_l)
            }
        }
    }
}

fn dissipator(l: &M, rho: &M) -> M {
    let ld = l.adjoint();
    let ldl = &ld * l;
    l * rho * &ld - (&ldl * rho + rho * &ldl) * Complex::new(0.5, 0.0)
}

fn rhs(ops: &Operators, h: &M, p: &PhysicsParams, rho: &M) -> M {
    let i = Complex::new(0.0, 1.0);
    let mut d = (h * rho - rho * h) * (-i);
    d += dissipator(&ops.a, rho) * Complex::new(p.kappa, 0.0);
    d += dissipator(&ops.b, rho) * Complex::new(p.gamma, 0.0);
    for proj in &ops.projectors {
        d += dissipator(proj, rho) * Complex::new(p.eta, 0.0);
    }
    d
}

/// `<a^dag a>` after each control step (index 0 is the initial value) for
/// the initial state `|1, 0>`, with `substeps` RK4 steps per control step.
pub fn photon_number_series(space: FockSpace, p: &PhysicsParams, actions: &[ControlAction], substeps: usize) -> Vec<f64> {
    let (nc, nm) = (space.cutoff(optomech::fock::Mode::Cavity), space.cutoff(optomech::fock::Mode::Mech));
    let ops = Operators::new(nc, nm);
    let dim = nc * nm;
    let mut rho = M::zeros(dim, dim);
    rho[(nm, nm)] = Complex::new(1.0, 0.0);
    let number = ops.a.adjoint() * &ops.a;
    let n_of = |r: &M| (&number * r).trace().re;
    let h_step = p.dt / substeps as f64;
    let half = Complex::new(0.5 * h_step, 0.0);
    let full = Complex::new(h_step, 0.0);
    let sixth = Complex::new(h_step / 6.0, 0.0);
    let two = Complex::new(2.0, 0.0);
    let mut out = vec![n_of(&rho)];
    for &action in actions {
        let h = ops.hamiltonian(p, action.clamped());
        for _ in 0..substeps {
            let k1 = rhs(&ops, &h, p, &rho);
            let k2 = rhs(&ops, &h, p, &(&rho + &k1 * half));
            let k3 = rhs(&ops, &h, p, &(&rho + &k2 * half));
            let k4 = rhs(&ops, &h, p, &(&rho + &k3 * full));
            rho += (k1 + &k2 * two + &k3 * two + k4) * sixth;
        }
        out.push(n_of(&rho));
    }
    out
}
