//! Finite-horizon optimal attack synthesis.
//!
//! The attacker minimizes
//! `J_α = E Σ_{t=0}^{N} [α (x_t − x*)ᵀQ_t(x_t − x*) + ν_tᵉᵀR_tν_tᵉ]`
//! over policies `e_t = 𝓛_t ξ_t + 𝓞_t ν_t`. In `ξ` coordinates the stage cost
//! is `ζ_tᵀℱ_tζ_t` with `ℱ_t = diag(αQ_t, R_t)`, plus the constant
//! `α tr(P̂Q_t)` from the attacker's estimation error.
//!
//! The backward recursion keeps a quadratic value function
//! `V_t(ξ, ν) = ξᵀ𝒬_tξ + 2ξᵀℛ_tν + νᵀ𝒮_tν + const`. At each step the
//! curvature `G_t = 𝒟ᵀℱ_t𝒟 + ℬᵀ𝒬_{t+1}ℬ` must be positive definite for
//! `t < N`; at `t = N` it may be singular and the pseudoinverse picks the
//! minimum-norm minimizer.

use serde::{Deserialize, Serialize};

use crate::attack_dynamics::AugmentedDynamics;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, definiteness, pseudo_inverse, solve_discrete_lyapunov, Matrix, SymmetricMatrix, Vector, PINV_CUTOFF, PSD_TOLERANCE};
use crate::pipeline::{ControllerGains, FilterGains};
use crate::plant::SystemModel;

/// How the objective weights detection against control damage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum Weighting {
    Finite(f64),
    /// Limit α → 0: only the detection term counts.
    Zero,
    /// Limit α → ∞: only the control term counts.
    Infinity,
}

impl Weighting {
    /// Numeric value written to CSV files.
    pub fn value(&self) -> f64 {
        match self {
            Weighting::Finite(a) => *a,
            Weighting::Zero => 0.0,
            Weighting::Infinity => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AttackObjective {
    q: Vec<SymmetricMatrix>,
    r: Vec<SymmetricMatrix>,
    x_star: Vector,
    alpha: f64,
}

impl AttackObjective {
    /// `q` and `r` hold `Q_0..Q_N` and `R_0..R_N`.
    pub fn new(q: Vec<SymmetricMatrix>, r: Vec<SymmetricMatrix>, x_star: Vector, alpha: f64) -> Result<Self> {
        const CTX: &str = "AttackObjective";
        if q.is_empty() || q.len() != r.len() {
            return Err(Error::shape(
                CTX,
                format!("need N+1 matrices for both Q and R, got {} and {}", q.len(), r.len()),
            ));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain(CTX, format!("alpha must be positive and finite, got {alpha}")));
        }
        let n = x_star.len();
        let p = r[0].dim();
        for (t, (qt, rt)) in q.iter().zip(&r).enumerate() {
            if qt.dim() != n || rt.dim() != p {
                return Err(Error::shape(CTX, format!("Q_{t} or R_{t} has the wrong size")));
            }
            for (name, m) in [("Q_t", qt), ("R_t", rt)] {
                let d = m.definiteness();
                if !d.is_pd {
                    return Err(Error::Definiteness {
                        context: name,
                        min_eigenvalue: d.min_eigenvalue,
                    });
                }
            }
        }
        Ok(AttackObjective { q, r, x_star, alpha })
    }

    /// Time-invariant weights over `t = 0..=horizon`.
    pub fn constant(q: SymmetricMatrix, r: SymmetricMatrix, x_star: Vector, horizon: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![q; horizon + 1], vec![r; horizon + 1], x_star, alpha)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.q.clone(), self.r.clone(), self.x_star.clone(), alpha)
    }

    pub fn horizon(&self) -> usize {
        self.q.len() - 1
    }

    pub fn q(&self) -> &[SymmetricMatrix] {
        &self.q
    }

    pub fn r(&self) -> &[SymmetricMatrix] {
        &self.r
    }

    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ℱ_t = diag(w_q Q_t, w_r R_t)`.
    pub(crate) fn stage_weights(&self, w_q: f64, w_r: f64) -> Vec<Matrix> {
        self.q
            .iter()
            .zip(&self.r)
            .map(|(q, r)| {
                let (n, p) = (q.dim(), r.dim());
                let mut f = Matrix::zeros(n + p, n + p);
                f.view_mut((0, 0), (n, n)).copy_from(&(q.as_matrix() * w_q));
                f.view_mut((n, n), (p, p)).copy_from(&(r.as_matrix() * w_r));
                f
            })
            .collect()
    }

    fn check_against(&self, aug: &AugmentedDynamics) -> Result<()> {
        if self.x_star.len() != aug.n || self.r[0].dim() != aug.p {
            return Err(Error::shape(
                "AttackObjective",
                format!("objective sized for n={}, p={}, dynamics have n={}, p={}", self.x_star.len(), self.r[0].dim(), aug.n, aug.p),
            ));
        }
        Ok(())
    }
}

/// Gains of `e_t = 𝓛_t ξ_t + 𝓞_t ν_t` for `t = 0..=N`; zero outside the window.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackPolicy {
    pub l_gains: Vec<Matrix>,
    pub o_gains: Vec<Matrix>,
    pub mode: Weighting,
    pub x_star: Vector,
}

impl AttackPolicy {
    /// The no-attack policy.
    pub fn zero(aug: &AugmentedDynamics, horizon: usize, x_star: Vector) -> Self {
        AttackPolicy {
            l_gains: vec![Matrix::zeros(aug.s, aug.xi_dim()); horizon + 1],
            o_gains: vec![Matrix::zeros(aug.s, aug.p); horizon + 1],
            mode: Weighting::Zero,
            x_star,
        }
    }

    pub fn horizon(&self) -> usize {
        self.l_gains.len() - 1
    }

    pub fn attack_dim(&self) -> usize {
        self.l_gains[0].nrows()
    }

    /// `e_t`, zero for `t < 0` or `t > N`.
    pub fn attack(&self, t: i64, xi: &Vector, nu: &Vector) -> Vector {
        if t < 0 || t as usize > self.horizon() {
            return Vector::zeros(self.attack_dim());
        }
        let t = t as usize;
        &self.l_gains[t] * xi + &self.o_gains[t] * nu
    }

    pub fn is_finite(&self) -> bool {
        self.l_gains.iter().chain(&self.o_gains).all(|g| g.iter().all(|x| x.is_finite()))
    }

    pub fn to_document(&self, model_hash: &str) -> PolicyDocument {
        PolicyDocument {
            model_sha256: model_hash.to_string(),
            horizon: self.horizon(),
            weighting: self.mode,
            x_star: self.x_star.iter().copied().collect(),
            gains: self
                .l_gains
                .iter()
                .zip(&self.o_gains)
                .enumerate()
                .map(|(t, (l, o))| GainEntry {
                    t,
                    l: rows_of(l),
                    o: rows_of(o),
                })
                .collect(),
        }
    }
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<Matrix> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::parse("gains", "ragged gain matrix"));
    }
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(rows.len(), ncols, &data))
}

/// Serialized policy: gains per step plus the hash of the model they were designed for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub model_sha256: String,
    pub horizon: usize,
    pub weighting: Weighting,
    pub x_star: Vec<f64>,
    pub gains: Vec<GainEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainEntry {
    pub t: usize,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    #[serde(rename = "O")]
    pub o: Vec<Vec<f64>>,
}

impl PolicyDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("<policy>", e.to_string()))
    }

    pub fn into_policy(self) -> Result<AttackPolicy> {
        if self.gains.len() != self.horizon + 1 {
            return Err(Error::parse("gains", format!("expected {} entries, found {}", self.horizon + 1, self.gains.len())));
        }
        let xi_dim = 6 * self.x_star.len();
        let mut l_gains = Vec::with_capacity(self.gains.len());
        let mut o_gains = Vec::with_capacity(self.gains.len());
        for g in &self.gains {
            let p = g.o.first().map_or(0, Vec::len);
            l_gains.push(from_rows(&g.l, xi_dim)?);
            o_gains.push(from_rows(&g.o, p)?);
        }
        Ok(AttackPolicy {
            l_gains,
            o_gains,
            mode: self.weighting,
            x_star: Vector::from_vec(self.x_star),
        })
    }
}

/// Matrices produced by the backward recursion, indexed by `t = 0..=N`.
#[derive(Clone, Debug)]
pub struct RecursionCertificates {
    pub qcal: Vec<Matrix>,
    pub rcal: Vec<Matrix>,
    pub scal: Vec<Matrix>,
    /// `Π_t = Σ_{k>t} tr(Σ_ν(𝒦ᵀ𝒬_k𝒦 + 2𝒦ᵀℛ_k + 𝒮_k))`; filled by [`synthesize`]
    /// only when the innovation covariance is supplied, otherwise zero.
    pub pi: Vec<f64>,
    pub f: Vec<Matrix>,
    /// `G_t = 𝒟ᵀℱ_t𝒟 + ℬᵀ𝒬_{t+1}ℬ`.
    pub curvature: Vec<Matrix>,
}

impl RecursionCertificates {
    pub fn horizon(&self) -> usize {
        self.qcal.len() - 1
    }

    /// `Π_t` for the innovation covariance `sigma_nu`.
    pub fn fill_pi(&mut self, aug: &AugmentedDynamics, sigma_nu: &Matrix) {
        let big_n = self.horizon();
        self.pi = vec![0.0; big_n + 1];
        for t in (0..big_n).rev() {
            self.pi[t] = self.pi[t + 1] + noise_trace(aug, sigma_nu, &self.qcal[t + 1], &self.rcal[t + 1], &self.scal[t + 1]);
        }
    }
}

/// `tr(Σ_ν(𝒦ᵀ𝒬𝒦 + 2𝒦ᵀℛ + 𝒮))`.
pub(crate) fn noise_trace(aug: &AugmentedDynamics, sigma_nu: &Matrix, q: &Matrix, r: &Matrix, s: &Matrix) -> f64 {
    let k = &aug.kcal;
    let inner = k.transpose() * q * k + k.transpose() * r * 2.0 + s;
    (sigma_nu * inner).trace()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthesisOptions {
    pub pinv_cutoff: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { pinv_cutoff: PINV_CUTOFF }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Curvature {
    /// Cholesky for `t < N`, pseudoinverse at `t = N`.
    DefiniteInterior,
    /// Pseudoinverse at every step.
    Pseudo,
}

pub(crate) struct Recursion {
    pub l: Vec<Matrix>,
    pub o: Vec<Matrix>,
    pub certs: RecursionCertificates,
}

/// The generic backward pass for stage weights `f[0..=N]`.
pub(crate) fn backward_recursion(aug: &AugmentedDynamics, f: Vec<Matrix>, curvature: Curvature, cutoff: f64) -> Result<Recursion> {
    let big_n = f.len() - 1;
    let dim = aug.xi_dim();
    let (acal, bcal, ccal, dcal, mcal) = (&aug.acal, &aug.bcal, &aug.ccal, &aug.dcal, &aug.mcal);
    let (bt, at) = (bcal.transpose(), acal.transpose());
    let mut q_next = Matrix::zeros(dim, dim);
    let mut l = vec![Matrix::zeros(0, 0); big_n + 1];
    let mut o = l.clone();
    let mut qcal = l.clone();
    let mut rcal = l.clone();
    let mut scal = l.clone();
    let mut curv = l.clone();

    for t in (0..=big_n).rev() {
        let ft = &f[t];
        let dtf = dcal.transpose() * ft;
        let bq = &bt * &q_next;
        let g = &dtf * dcal + &bq * bcal;
        let g = (&g + g.transpose()) * 0.5;
        let h = &dtf * ccal + &bq * acal;
        let hm = &dtf * mcal;

        let (lt, ot) = if curvature == Curvature::DefiniteInterior && t < big_n {
            let chol = cholesky(&g, "synthesize").map_err(|_| Error::Certificate {
                t,
                detail: format!("curvature matrix is not positive definite (min eigenvalue {:e})", definiteness(&g, PSD_TOLERANCE).min_eigenvalue),
            })?;
            (-chol.solve(&h), -chol.solve(&hm))
        } else {
            let gp = pseudo_inverse(&g, cutoff);
            (-(&gp * &h), -(&gp * &hm))
        };

        let cf = ccal.transpose() * ft;
        let qt = &cf * ccal + &at * &q_next * acal + h.transpose() * &lt;
        let qt = (&qt + qt.transpose()) * 0.5;
        let rt = &cf * mcal + h.transpose() * &ot;
        let st = mcal.transpose() * ft * mcal + hm.transpose() * &ot;
        let st = (&st + st.transpose()) * 0.5;

        q_next = qt.clone();
        l[t] = lt;
        o[t] = ot;
        qcal[t] = qt;
        rcal[t] = rt;
        scal[t] = st;
        curv[t] = g;
    }

    Ok(Recursion {
        l,
        o,
        certs: RecursionCertificates {
            qcal,
            rcal,
            scal,
            pi: vec![0.0; big_n + 1],
            f,
            curvature: curv,
        },
    })
}

/// The optimal policy for a finite `α` and its recursion certificates.
pub fn synthesize(aug: &AugmentedDynamics, obj: &AttackObjective) -> Result<(AttackPolicy, RecursionCertificates)> {
    synthesize_with(aug, obj, SynthesisOptions::default())
}

pub fn synthesize_with(aug: &AugmentedDynamics, obj: &AttackObjective, opts: SynthesisOptions) -> Result<(AttackPolicy, RecursionCertificates)> {
    obj.check_against(aug)?;
    let rec = backward_recursion(aug, obj.stage_weights(obj.alpha(), 1.0), Curvature::DefiniteInterior, opts.pinv_cutoff)?;
    let policy = AttackPolicy {
        l_gains: rec.l,
        o_gains: rec.o,
        mode: Weighting::Finite(obj.alpha()),
        x_star: obj.x_star().clone(),
    };
    Ok((policy, rec.certs))
}

/// Stationary statistics of the nominal loop at attack onset.
#[derive(Clone, Debug)]
pub struct SteadyPrior {
    pub x_bar_0: Vector,
    /// Covariance of the nominal prediction `x̂_{0|−1}`.
    pub sigma_0: SymmetricMatrix,
    pub sigma_xi0: SymmetricMatrix,
    /// `Σ*_{ξ₀} = Σ_{ξ₀} + ξ*ξ*ᵀ` with `ξ* = (0, 0, 0, x*)`.
    pub sigma_xi0_star: SymmetricMatrix,
}

pub fn steady_prior(model: &SystemModel, gains: &FilterGains, ctrl: &ControllerGains, x_star: &Vector) -> Result<SteadyPrior> {
    let n = model.n();
    if x_star.len() != n {
        return Err(Error::shape("steady_prior", format!("x_star has length {}, expected {n}", x_star.len())));
    }
    let f = ctrl.closed_loop(model);
    let kk = &gains.k * gains.sigma_nu.as_matrix() * gains.k.transpose();
    let sigma_0 = solve_discrete_lyapunov(&f, &SymmetricMatrix::new(&f * kk * f.transpose())?)?;
    // x̂_{0|−1} enters both the x̂ and x̂⁰ blocks of ξ₀ before the first innovation.
    let mut sel = Matrix::zeros(6 * n, n);
    sel.view_mut((0, 0), (n, n)).fill_with_identity();
    sel.view_mut((4 * n, 0), (n, n)).fill_with_identity();
    let sigma_xi0 = SymmetricMatrix::new(&sel * sigma_0.as_matrix() * sel.transpose())?;
    let mut xi_star = Vector::zeros(6 * n);
    xi_star.rows_mut(5 * n, n).copy_from(x_star);
    let sigma_xi0_star = SymmetricMatrix::new(sigma_xi0.as_matrix() + &xi_star * xi_star.transpose())?;
    Ok(SteadyPrior {
        x_bar_0: Vector::zeros(n),
        sigma_0,
        sigma_xi0,
        sigma_xi0_star,
    })
}

/// `J* = tr(Σ*𝒬₀) + Σ_t [α tr(P̂Q_t) + tr(Σ_ν(𝒦ᵀ𝒬_t𝒦 + 2𝒦ᵀℛ_t + 𝒮_t))]`.
pub fn optimal_cost(aug: &AugmentedDynamics, obj: &AttackObjective, prior: &SteadyPrior, gains: &FilterGains, certs: &RecursionCertificates) -> Result<f64> {
    if certs.horizon() != obj.horizon() {
        return Err(Error::shape(
            "optimal_cost",
            format!("certificates cover N={}, objective has N={}", certs.horizon(), obj.horizon()),
        ));
    }
    let sigma_nu = gains.sigma_nu.as_matrix();
    let mut j = (prior.sigma_xi0_star.as_matrix() * &certs.qcal[0]).trace();
    for t in 0..=obj.horizon() {
        j += obj.alpha() * (gains.p_hat.as_matrix() * obj.q()[t].as_matrix()).trace();
        j += noise_trace(aug, sigma_nu, &certs.qcal[t], &certs.rcal[t], &certs.scal[t]);
    }
    Ok(j)
}

/// Largest relative gap between `𝒬_t` and the alternate form
/// `𝒳_tᵀℱ_t𝒳_t + 𝒴_tᵀ𝒬_{t+1}𝒴_t` with `𝒳 = 𝒞 + 𝒟𝓛`, `𝒴 = 𝒜 + ℬ𝓛`.
pub fn alternate_form_deviation(aug: &AugmentedDynamics, policy: &AttackPolicy, certs: &RecursionCertificates) -> f64 {
    let big_n = certs.horizon();
    let dim = aug.xi_dim();
    let mut worst: f64 = 0.0;
    for t in 0..=big_n {
        let x = &aug.ccal + &aug.dcal * &policy.l_gains[t];
        let y = &aug.acal + &aug.bcal * &policy.l_gains[t];
        let q_next = if t < big_n { certs.qcal[t + 1].clone() } else { Matrix::zeros(dim, dim) };
        let alt = x.transpose() * &certs.f[t] * &x + y.transpose() * q_next * &y;
        let gap = (&alt - &certs.qcal[t]).amax() / (1.0 + certs.qcal[t].amax());
        worst = worst.max(gap);
    }
    worst
}

/// Smallest `λ_min(𝒬_t) / (1 + max|λ|)` over `t`; nonnegative up to rounding when every `𝒬_t ⪰ 0`.
pub fn value_psd_margin(certs: &RecursionCertificates) -> f64 {
    certs
        .qcal
        .iter()
        .map(|q| {
            let d = definiteness(q, PSD_TOLERANCE);
            d.min_eigenvalue / (1.0 + d.max_abs_eigenvalue)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of the interior curvature matrices `G_t`, `t < N`.
pub fn interior_curvature_min(certs: &RecursionCertificates) -> f64 {
    let big_n = certs.horizon();
    certs.curvature[..big_n]
        .iter()
        .map(|g| definiteness(g, PSD_TOLERANCE).min_eigenvalue)
        .fold(f64::INFINITY, f64::min)
}

/// `‖G G† b − b‖ / ‖b‖` for `b = 𝒟ᵀℱ_N(𝒞ξ + ℳν)` at the given samples; the
/// terminal least-squares problem is consistent when this vanishes.
pub fn terminal_range_residual(aug: &AugmentedDynamics, certs: &RecursionCertificates, samples: &[(Vector, Vector)]) -> f64 {
    let big_n = certs.horizon();
    let g = &certs.curvature[big_n];
    let proj = g * pseudo_inverse(g, PINV_CUTOFF);
    let dtf = aug.dcal.transpose() * &certs.f[big_n];
    samples
        .iter()
        .map(|(xi, nu)| {
            let b = &dtf * (&aug.ccal * xi + &aug.mcal * nu);
            let scale = b.norm();
            if scale == 0.0 {
                0.0
            } else {
                (&proj * &b - &b).norm() / scale
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack_dynamics::build_augmented;
    use crate::bundled;
    use crate::pipeline::{kalman_design, lqg_design_default};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Setup {
        model: SystemModel,
        gains: FilterGains,
        ctrl: ControllerGains,
        aug: AugmentedDynamics,
    }

    fn setup(model: SystemModel) -> Setup {
        let gains = kalman_design(&model).unwrap();
        let ctrl = lqg_design_default(&model).unwrap();
        let aug = build_augmented(&model, &gains, &ctrl);
        Setup { model, gains, ctrl, aug }
    }

    fn objective(s: &Setup, horizon: usize, alpha: f64) -> AttackObjective {
        let n = s.model.n();
        let x_star = Vector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
        AttackObjective::constant(SymmetricMatrix::identity(n), s.gains.sigma_nu_inv.clone(), x_star, horizon, alpha).unwrap()
    }

    fn rv(rng: &mut ChaCha8Rng, k: usize) -> Vector {
        Vector::from_fn(k, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn objective_rejects_bad_inputs() {
        let i2 = SymmetricMatrix::identity(2);
        let x = Vector::zeros(2);
        assert!(matches!(
            AttackObjective::constant(i2.clone(), i2.clone(), x.clone(), 3, 0.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            AttackObjective::constant(i2.clone(), i2.clone(), x.clone(), 3, f64::NAN),
            Err(Error::Domain { .. })
        ));
        let singular = SymmetricMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(
            AttackObjective::constant(singular, i2.clone(), x.clone(), 3, 1.0),
            Err(Error::Definiteness { .. })
        ));
        assert!(matches!(
            AttackObjective::new(vec![i2.clone(); 3], vec![i2.clone(); 2], x, 1.0),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn policy_lengths_and_dimensions() {
        let s = setup(bundled::synthetic4());
        let (policy, certs) = synthesize(&s.aug, &objective(&s, 7, 1.0)).unwrap();
        assert_eq!(policy.l_gains.len(), 8);
        assert_eq!(policy.o_gains.len(), 8);
        assert_eq!(certs.qcal.len(), 8);
        assert_eq!(policy.l_gains[0].shape(), (4, 24));
        assert_eq!(policy.o_gains[0].shape(), (4, 4));
        assert!(policy.is_finite());
        assert_eq!(policy.mode, Weighting::Finite(1.0));
    }

    #[test]
    fn attack_is_zero_outside_window() {
        let s = setup(bundled::oscillator2());
        let (policy, _) = synthesize(&s.aug, &objective(&s, 3, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xi = rv(&mut rng, 12);
        let nu = rv(&mut rng, 2);
        assert_eq!(policy.attack(-1, &xi, &nu).amax(), 0.0);
        assert_eq!(policy.attack(4, &xi, &nu).amax(), 0.0);
        assert_eq!(policy.attack(2, &xi, &nu), &policy.l_gains[2] * &xi + &policy.o_gains[2] * &nu);
    }

    /// Dense oracle for one stage: the minimizer of `‖ℱ^{1/2}(𝒞ξ + 𝒟e + ℳν)‖²`.
    #[test]
    fn single_stage_matches_least_squares_oracle() {
        for model in [bundled::oscillator2(), bundled::synthetic4()] {
            let s = setup(model);
            let obj = objective(&s, 0, 0.7);
            let (policy, certs) = synthesize(&s.aug, &obj).unwrap();
            assert_eq!(policy.l_gains.len(), 1);
            let f = &certs.f[0];
            let fh = f.clone().cholesky().unwrap().l().transpose();
            let a = &fh * &s.aug.dcal;
            let mut rng = ChaCha8Rng::seed_from_u64(20);
            for _ in 0..20 {
                let xi = rv(&mut rng, s.aug.xi_dim());
                let nu = rv(&mut rng, s.aug.p);
                let rhs = -(&fh * (&s.aug.ccal * &xi + &s.aug.mcal * &nu));
                let e_ls = pseudo_inverse(&a, 1e-12) * &rhs;
                let e = policy.attack(0, &xi, &nu);
                let cost = |e: &Vector| (&fh * (&s.aug.ccal * &xi + &s.aug.dcal * e + &s.aug.mcal * &nu)).norm_squared();
                assert!((cost(&e) - cost(&e_ls)).abs() <= 1e-8 * (1.0 + cost(&e_ls)));
                // Minimum-norm solution: the component in the null space of 𝒟ᵀℱ𝒟 vanishes.
                assert!((&e - &e_ls).norm() <= 1e-8 * (1.0 + e_ls.norm()));
            }
        }
    }

    #[test]
    fn certificates_hold_on_bundled_models() {
        for model in [bundled::oscillator2(), bundled::synthetic4()] {
            let s = setup(model);
            let (policy, certs) = synthesize(&s.aug, &objective(&s, 15, 1.0)).unwrap();
            assert!(value_psd_margin(&certs) >= -PSD_TOLERANCE);
            assert!(interior_curvature_min(&certs) > 0.0);
            assert!(alternate_form_deviation(&s.aug, &policy, &certs) <= 1e-8);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let samples: Vec<_> = (0..100).map(|_| (rv(&mut rng, s.aug.xi_dim()), rv(&mut rng, s.aug.p))).collect();
            assert!(terminal_range_residual(&s.aug, &certs, &samples) <= 1e-8);
        }
    }

    #[test]
    fn interior_gains_do_not_depend_on_cutoff() {
        let s = setup(bundled::oscillator2());
        let obj = objective(&s, 10, 2.0);
        let (p1, _) = synthesize_with(&s.aug, &obj, SynthesisOptions { pinv_cutoff: 1e-11 }).unwrap();
        let (p2, _) = synthesize_with(&s.aug, &obj, SynthesisOptions { pinv_cutoff: 1e-7 }).unwrap();
        for t in 0..10 {
            assert!((&p1.l_gains[t] - &p2.l_gains[t]).amax() <= 1e-8);
            assert!((&p1.o_gains[t] - &p2.o_gains[t]).amax() <= 1e-8);
        }
    }

    #[test]
    fn steady_prior_scalar_closed_form() {
        // f = 0.5 and K Σ_ν Kᵀ = 1 give σ₀ = 0.25 / 0.75.
        use crate::plant::ModelParts;
        let m = |x: f64| Matrix::from_element(1, 1, x);
        let model = SystemModel::new(ModelParts {
            a: m(0.9),
            b: m(1.0),
            c: m(1.0),
            gamma: m(1.0),
            psi: m(1.0),
            sigma_w: m(1.0),
            sigma_v: m(1.0),
            sigma_x: m(1.0),
            x_bar: Vector::zeros(1),
        })
        .unwrap();
        let mut gains = kalman_design(&model).unwrap();
        let mut ctrl = lqg_design_default(&model).unwrap();
        ctrl.l = m(-0.4);
        gains.k = m(1.0);
        gains.sigma_nu = SymmetricMatrix::identity(1);
        let prior = steady_prior(&model, &gains, &ctrl, &Vector::zeros(1)).unwrap();
        approx::assert_relative_eq!(prior.sigma_0[(0, 0)], 1.0 / 3.0, epsilon = 1e-14);
        assert_eq!(prior.sigma_xi0_star, prior.sigma_xi0);
        assert_eq!(prior.sigma_xi0[(0, 4)], prior.sigma_0[(0, 0)]);
        assert_eq!(prior.x_bar_0, Vector::zeros(1));
    }

    #[test]
    fn steady_prior_solves_its_lyapunov_equation() {
        let s = setup(bundled::synthetic4());
        let x_star = Vector::from_vec(vec![1.0, -1.0, 0.0, 0.0]);
        let prior = steady_prior(&s.model, &s.gains, &s.ctrl, &x_star).unwrap();
        let f = s.ctrl.closed_loop(&s.model);
        let kk = &s.gains.k * s.gains.sigma_nu.as_matrix() * s.gains.k.transpose();
        let rhs = &f * (prior.sigma_0.as_matrix() + kk) * f.transpose();
        assert!((rhs - prior.sigma_0.as_matrix()).amax() <= 1e-10 * (1.0 + prior.sigma_0.amax()));
        let n = 4;
        assert_eq!(prior.sigma_xi0_star[(5 * n, 5 * n)], 1.0);
        assert_eq!(prior.sigma_xi0_star[(5 * n + 1, 5 * n)], -1.0);
    }

    #[test]
    fn optimal_cost_is_nonnegative_and_checks_horizon() {
        let s = setup(bundled::oscillator2());
        let obj = objective(&s, 5, 1.0);
        let (_, certs) = synthesize(&s.aug, &obj).unwrap();
        let prior = steady_prior(&s.model, &s.gains, &s.ctrl, obj.x_star()).unwrap();
        assert!(optimal_cost(&s.aug, &obj, &prior, &s.gains, &certs).unwrap() >= 0.0);
        let other = objective(&s, 6, 1.0);
        assert!(matches!(optimal_cost(&s.aug, &other, &prior, &s.gains, &certs), Err(Error::Shape { .. })));
    }

    #[test]
    fn pi_accumulates_noise_terms() {
        let s = setup(bundled::oscillator2());
        let obj = objective(&s, 4, 1.0);
        let (_, mut certs) = synthesize(&s.aug, &obj).unwrap();
        certs.fill_pi(&s.aug, s.gains.sigma_nu.as_matrix());
        assert_eq!(certs.pi[4], 0.0);
        for t in 0..4 {
            let step = noise_trace(&s.aug, s.gains.sigma_nu.as_matrix(), &certs.qcal[t + 1], &certs.rcal[t + 1], &certs.scal[t + 1]);
            approx::assert_relative_eq!(certs.pi[t] - certs.pi[t + 1], step, max_relative = 1e-12);
        }
    }

    #[test]
    fn policy_document_round_trips() {
        let s = setup(bundled::synthetic4());
        let (policy, _) = synthesize(&s.aug, &objective(&s, 3, 0.5)).unwrap();
        let doc = policy.to_document("abc");
        let back = PolicyDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.into_policy().unwrap(), policy);
        assert!(PolicyDocument::from_json("{").is_err());
    }

    #[test]
    fn certificate_error_names_step() {
        // With ℬ = 0 the curvature is ΨᵀRΨ, singular because Ψ has a zero column.
        let s = setup(bundled::oscillator2());
        let mut aug = s.aug.clone();
        aug.bcal.fill(0.0);
        match synthesize(&aug, &objective(&s, 3, 1.0)) {
            Err(Error::Certificate { t, .. }) => assert_eq!(t, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
