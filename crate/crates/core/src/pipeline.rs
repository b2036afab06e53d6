//! The defender's stack: steady-state Kalman filter, LQG state feedback and
//! the per-step chi-squared detector on the filter innovations.

use crate::error::{Error, Result};
use crate::numerics::{
    chi_square_quantile, cholesky, solve_control_dare, solve_filter_dare, spectral_radius, Matrix,
    SymmetricMatrix, Vector,
};
use crate::plant::SystemModel;

/// Steady-state Kalman filter quantities.
#[derive(Clone, Debug)]
pub struct FilterGains {
    /// Kalman gain `K = PCᵀΣ_ν⁻¹` (n×p).
    pub k: Matrix,
    /// Steady prediction covariance.
    pub p: SymmetricMatrix,
    /// Innovation covariance `Σ_ν = CPCᵀ + Σ_v`.
    pub sigma_nu: SymmetricMatrix,
    pub sigma_nu_inv: SymmetricMatrix,
    /// Posterior covariance `P̂ = P − PCᵀΣ_ν⁻¹CP`.
    pub p_hat: SymmetricMatrix,
}

impl FilterGains {
    /// `νᵀΣ_ν⁻¹ν` using the inverse cached at design time.
    pub fn statistic(&self, nu: &Vector) -> f64 {
        nu.dot(&(self.sigma_nu_inv.as_matrix() * nu))
    }
}

#[derive(Clone, Debug)]
pub struct ControllerGains {
    /// Feedback `u = L x̂` (m×n).
    pub l: Matrix,
    pub s: SymmetricMatrix,
    pub qp: SymmetricMatrix,
    pub rp: SymmetricMatrix,
}

impl ControllerGains {
    pub fn closed_loop(&self, model: &SystemModel) -> Matrix {
        model.a() + model.b() * &self.l
    }
}

/// `x_pred` is the one-step prediction `x̂_{t|t−1}`, `x_post` the filtered `x̂_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState {
    pub x_pred: Vector,
    pub x_post: Vector,
}

impl FilterState {
    /// A filter that has not yet seen data, predicting `x_pred`.
    pub fn from_prediction(x_pred: Vector) -> Self {
        let x_post = x_pred.clone();
        FilterState { x_pred, x_post }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorConfig {
    pub threshold: f64,
    pub false_alarm_prob: f64,
}

pub const DEFAULT_FALSE_ALARM_PROB: f64 = 0.05;

impl DetectorConfig {
    /// Threshold at the `1 − false_alarm_prob` quantile of `χ²_p`.
    pub fn new(false_alarm_prob: f64, p: usize) -> Result<Self> {
        let threshold = chi_square_quantile(1.0 - false_alarm_prob, p as u32)?;
        Ok(DetectorConfig {
            threshold,
            false_alarm_prob,
        })
    }

    pub fn alarm(&self, g: f64) -> bool {
        g > self.threshold
    }
}

pub fn kalman_design(model: &SystemModel) -> Result<FilterGains> {
    let c = model.c();
    let p = solve_filter_dare(model.a(), c, model.sigma_w(), model.sigma_v())?;
    let sigma_nu = SymmetricMatrix::new(c * p.as_matrix() * c.transpose() + model.sigma_v().as_matrix())?;
    let chol = cholesky(&sigma_nu, "kalman_design")?;
    let pct = p.as_matrix() * c.transpose();
    // K = PCᵀΣ_ν⁻¹ = (Σ_ν⁻¹ C P)ᵀ
    let k = chol.solve(&pct.transpose()).transpose();
    let p_hat = SymmetricMatrix::new(p.as_matrix() - &k * pct.transpose())?;
    let sigma_nu_inv = SymmetricMatrix::new(chol.inverse())?;
    Ok(FilterGains {
        k,
        p,
        sigma_nu,
        sigma_nu_inv,
        p_hat,
    })
}

pub fn lqg_design(model: &SystemModel, qp: SymmetricMatrix, rp: SymmetricMatrix) -> Result<ControllerGains> {
    let (a, b) = (model.a(), model.b());
    let s = solve_control_dare(a, b, &qp, &rp)?;
    let inner = b.transpose() * s.as_matrix() * b + rp.as_matrix();
    let chol = cholesky(&inner, "lqg_design")?;
    let l = -chol.solve(&(b.transpose() * s.as_matrix() * a));
    let rho = spectral_radius(&(a + b * &l));
    if rho >= 1.0 {
        return Err(Error::Unstable {
            context: "lqg_design",
            spectral_radius: rho,
        });
    }
    Ok(ControllerGains { l, s, qp, rp })
}

/// LQG design with `Q′ = I_n`, `R′ = I_m`.
pub fn lqg_design_default(model: &SystemModel) -> Result<ControllerGains> {
    lqg_design(model, SymmetricMatrix::identity(model.n()), SymmetricMatrix::identity(model.m()))
}

/// One filter/controller update on measurement `y`.
///
/// Returns the new state (posterior at `t`, prediction for `t + 1`), the
/// innovation `ν_t` and the control `u_t = L x̂_t`.
pub fn filter_step(
    model: &SystemModel,
    gains: &FilterGains,
    ctrl: &ControllerGains,
    state: &FilterState,
    y: &Vector,
) -> (FilterState, Vector, Vector) {
    let nu = y - model.c() * &state.x_pred;
    let x_post = &state.x_pred + &gains.k * &nu;
    let u = &ctrl.l * &x_post;
    let x_pred = model.a() * &x_post + model.b() * &u;
    (FilterState { x_pred, x_post }, nu, u)
}

/// `g = νᵀΣ_ν⁻¹ν`.
pub fn detector_statistic(nu: &Vector, sigma_nu: &SymmetricMatrix) -> Result<f64> {
    if nu.len() != sigma_nu.dim() {
        return Err(Error::shape(
            "detector_statistic",
            format!("nu has length {}, Sigma_nu is {}x{}", nu.len(), sigma_nu.dim(), sigma_nu.dim()),
        ));
    }
    let chol = cholesky(sigma_nu, "detector_statistic")?;
    Ok(nu.dot(&chol.solve(nu)).max(0.0))
}
