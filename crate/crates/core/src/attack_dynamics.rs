//! How an attack sequence propagates through the defender's filter and
//! controller.
//!
//! The attack-effect ("hat") system maps `e_t` to the innovation bias
//! `ε_t = ν_tᵉ − ν_t⁰` through the state `θ_t = (ω_t, π_t, ρ_t)`:
//!
//! * `ω_t`: bias of the defender's estimate `x̂ᵉ_{t−1}` (so `ω_{t+1}` is the
//!   bias of `x̂ᵉ_t`, one step ahead of the time index);
//! * `π_t`: state of the loop through the defender's controller;
//! * `ρ_t`: state of the direct actuator path.
//!
//! The augmented `ξ`-system stacks `ξ_t = (x̂_t, θ_t, x̂⁰_t, x*)` and obeys
//! `ξ_{t+1} = 𝒜ξ_t + ℬe_t + 𝒦ν_{t+1}` with output
//! `ζ_t = 𝒞ξ_t + 𝒟e_t + ℳν_t = (x̂_t − x*, ν_tᵉ)`.

use crate::numerics::{Matrix, Vector};
use crate::pipeline::{ControllerGains, FilterGains};
use crate::plant::SystemModel;

#[derive(Clone, Debug)]
pub struct HatSystem {
    pub a_hat: Matrix,
    pub b_hat: Matrix,
    pub c_hat: Matrix,
    pub d_hat: Matrix,
    /// `γ_t = [CBL, C, 0] θ_t`.
    pub gamma_out: Matrix,
    /// `β_t = [0, 0, C] θ_t + Ψ e_t`.
    pub beta_out: Matrix,
}

/// Per-step signals of the hat system.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackEffectState {
    pub theta: Vector,
    pub epsilon: Vector,
    pub gamma: Vector,
    pub beta: Vector,
}

impl AttackEffectState {
    pub fn omega(&self) -> Vector {
        let n = self.theta.len() / 3;
        self.theta.rows(0, n).clone_owned()
    }
}

impl HatSystem {
    pub fn state_dim(&self) -> usize {
        self.a_hat.nrows()
    }

    /// `(θ_{t+1}, ε_t)` from `(θ_t, e_t)`.
    pub fn step(&self, theta: &Vector, e: &Vector) -> (Vector, Vector) {
        let eps = &self.c_hat * theta + &self.d_hat * e;
        let next = &self.a_hat * theta + &self.b_hat * e;
        (next, eps)
    }

    /// Drive the system from `θ_0 = 0` with `e_0, e_1, …`.
    pub fn simulate(&self, attacks: &[Vector]) -> Vec<AttackEffectState> {
        let mut theta = Vector::zeros(self.state_dim());
        let mut out = Vec::with_capacity(attacks.len());
        for e in attacks {
            let (next, epsilon) = self.step(&theta, e);
            out.push(AttackEffectState {
                gamma: &self.gamma_out * &theta,
                beta: &self.beta_out * &theta + &self.d_hat * e,
                epsilon,
                theta,
            });
            theta = next;
        }
        out
    }
}

fn place(dst: &mut Matrix, row: usize, col: usize, src: &Matrix) {
    dst.view_mut((row, col), src.shape()).copy_from(src);
}

/// `Ω = [(I − KC)A + BL, KC, KC]`, so that `ω_{t+1} = Ωθ_t + KΨe_t`.
pub fn omega_matrix(model: &SystemModel, gains: &FilterGains, ctrl: &ControllerGains) -> Matrix {
    let n = model.n();
    let kc = &gains.k * model.c();
    let first = (Matrix::identity(n, n) - &kc) * model.a() + model.b() * &ctrl.l;
    let mut omega = Matrix::zeros(n, 3 * n);
    place(&mut omega, 0, 0, &first);
    place(&mut omega, 0, n, &kc);
    place(&mut omega, 0, 2 * n, &kc);
    omega
}

pub fn build_hat_system(model: &SystemModel, gains: &FilterGains, ctrl: &ControllerGains) -> HatSystem {
    let (n, p, s) = (model.n(), model.p(), model.s());
    let (a, b, c) = (model.a(), model.b(), model.c());
    let bl = b * &ctrl.l;

    let mut a_hat = Matrix::zeros(3 * n, 3 * n);
    place(&mut a_hat, 0, 0, &omega_matrix(model, gains, ctrl));
    place(&mut a_hat, n, 0, &(a * &bl));
    place(&mut a_hat, n, n, a);
    place(&mut a_hat, 2 * n, 2 * n, a);

    let mut b_hat = Matrix::zeros(3 * n, s);
    place(&mut b_hat, 0, 0, &(&gains.k * model.psi()));
    place(&mut b_hat, 2 * n, 0, model.gamma());

    let mut c_hat = Matrix::zeros(p, 3 * n);
    place(&mut c_hat, 0, 0, &-(c * a));
    place(&mut c_hat, 0, n, c);
    place(&mut c_hat, 0, 2 * n, c);

    let mut gamma_out = Matrix::zeros(p, 3 * n);
    place(&mut gamma_out, 0, 0, &(c * &bl));
    place(&mut gamma_out, 0, n, c);
    let mut beta_out = Matrix::zeros(p, 3 * n);
    place(&mut beta_out, 0, 2 * n, c);

    HatSystem {
        a_hat,
        b_hat,
        c_hat,
        d_hat: model.psi().clone(),
        gamma_out,
        beta_out,
    }
}

/// The augmented `ξ`-system used by attack synthesis.
#[derive(Clone, Debug)]
pub struct AugmentedDynamics {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub acal: Matrix,
    pub bcal: Matrix,
    pub kcal: Matrix,
    pub ccal: Matrix,
    pub dcal: Matrix,
    pub mcal: Matrix,
    pub hcal: Matrix,
    pub ctil: Matrix,
    pub omega: Matrix,
    pub hat: HatSystem,
}

/// Components of `ξ_t`, in storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct XiParts {
    pub x_hat: Vector,
    pub theta: Vector,
    pub x_hat_nominal: Vector,
    pub x_star: Vector,
}

impl AugmentedDynamics {
    pub fn xi_dim(&self) -> usize {
        6 * self.n
    }

    /// All block matrices in the model file layout, for inspection.
    pub fn dump(&self) -> String {
        crate::model_file::write_matrices(&[
            ("A_hat", &self.hat.a_hat),
            ("B_hat", &self.hat.b_hat),
            ("C_hat", &self.hat.c_hat),
            ("D_hat", &self.hat.d_hat),
            ("Omega", &self.omega),
            ("A_aug", &self.acal),
            ("B_aug", &self.bcal),
            ("K_aug", &self.kcal),
            ("C_aug", &self.ccal),
            ("D_aug", &self.dcal),
            ("M_aug", &self.mcal),
        ])
    }

    pub fn assemble_xi(&self, parts: &XiParts) -> Vector {
        let n = self.n;
        let mut xi = Vector::zeros(6 * n);
        xi.rows_mut(0, n).copy_from(&parts.x_hat);
        xi.rows_mut(n, 3 * n).copy_from(&parts.theta);
        xi.rows_mut(4 * n, n).copy_from(&parts.x_hat_nominal);
        xi.rows_mut(5 * n, n).copy_from(&parts.x_star);
        xi
    }

    pub fn split_xi(&self, xi: &Vector) -> XiParts {
        let n = self.n;
        XiParts {
            x_hat: xi.rows(0, n).clone_owned(),
            theta: xi.rows(n, 3 * n).clone_owned(),
            x_hat_nominal: xi.rows(4 * n, n).clone_owned(),
            x_star: xi.rows(5 * n, n).clone_owned(),
        }
    }

    /// `ζ_t = 𝒞ξ_t + 𝒟e_t + ℳν_t`.
    pub fn zeta(&self, xi: &Vector, e: &Vector, nu: &Vector) -> Vector {
        &self.ccal * xi + &self.dcal * e + &self.mcal * nu
    }
}

pub fn build_augmented(model: &SystemModel, gains: &FilterGains, ctrl: &ControllerGains) -> AugmentedDynamics {
    let (n, p, s) = (model.n(), model.p(), model.s());
    let hat = build_hat_system(model, gains, ctrl);
    let omega = omega_matrix(model, gains, ctrl);
    let bl = model.b() * &ctrl.l;
    let (a, k) = (model.a(), &gains.k);

    // The attacker's filter sees the defender's input u_tᵉ = L(x̂⁰_t + ω_{t+1}),
    // hence the BL coupling from x̂⁰ into the x̂ row.
    let mut acal = Matrix::zeros(6 * n, 6 * n);
    place(&mut acal, 0, 0, a);
    place(&mut acal, 0, n, &(&bl * &omega));
    place(&mut acal, 0, 4 * n, &bl);
    place(&mut acal, n, n, &hat.a_hat);
    place(&mut acal, 4 * n, 4 * n, &(a + &bl));
    place(&mut acal, 5 * n, 5 * n, &Matrix::identity(n, n));

    let mut bcal = Matrix::zeros(6 * n, s);
    place(&mut bcal, 0, 0, &(model.gamma() + &bl * k * model.psi()));
    place(&mut bcal, n, 0, &hat.b_hat);

    let mut kcal = Matrix::zeros(6 * n, p);
    place(&mut kcal, 0, 0, k);
    place(&mut kcal, 4 * n, 0, k);

    let mut hcal = Matrix::zeros(n, 6 * n);
    place(&mut hcal, 0, 0, &Matrix::identity(n, n));
    place(&mut hcal, 0, 5 * n, &-Matrix::identity(n, n));

    let mut ctil = Matrix::zeros(p, 6 * n);
    place(&mut ctil, 0, n, &hat.c_hat);

    let mut ccal = Matrix::zeros(n + p, 6 * n);
    place(&mut ccal, 0, 0, &hcal);
    place(&mut ccal, n, 0, &ctil);

    let mut dcal = Matrix::zeros(n + p, s);
    place(&mut dcal, n, 0, model.psi());

    let mut mcal = Matrix::zeros(n + p, p);
    place(&mut mcal, n, 0, &Matrix::identity(p, p));

    AugmentedDynamics {
        n,
        p,
        s,
        acal,
        bcal,
        kcal,
        ccal,
        dcal,
        mcal,
        hcal,
        ctil,
        omega,
        hat,
    }
}

/// `ξ_{t+1} = 𝒜ξ_t + ℬe_t + 𝒦ν_{t+1}`.
pub fn propagate_xi(aug: &AugmentedDynamics, xi: &Vector, e: &Vector, nu_next: &Vector) -> Vector {
    &aug.acal * xi + &aug.bcal * e + &aug.kcal * nu_next
}
