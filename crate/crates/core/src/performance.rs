//! Closed-form evaluation of the detection and control costs of any linear
//! attack policy, the limiting policies for `α → 0` and `α → ∞`, and the
//! trade-off sweep over `α`.
//!
//! For a policy `e_t = 𝓛_tξ_t + 𝓞_tν_t` the closed loop is
//! `ξ_{t+1} = (𝒜 + ℬ𝓛_t)ξ_t + ℬ𝓞_tν_t + 𝒦ν_{t+1}` and
//! `ν_tᵉ = (𝒞̃ + Ψ𝓛_t)ξ_t + (I + Ψ𝓞_t)ν_t`, so each cost is a backward
//! Lyapunov-type recursion followed by the same trace formula as `J*`.

use rayon::prelude::*;

use crate::attack_dynamics::AugmentedDynamics;
use crate::error::{Error, Result};
use crate::numerics::{definiteness, pseudo_inverse, Matrix, Vector, PINV_CUTOFF, PSD_TOLERANCE};
use crate::pipeline::FilterGains;
use crate::synthesis::{
    backward_recursion, noise_trace, optimal_cost, synthesize, AttackObjective, AttackPolicy, Curvature, SteadyPrior, Weighting,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostReport {
    pub alpha: Weighting,
    /// Detection cost `E Σ ν_tᵉᵀR_tν_tᵉ`.
    pub j_d: f64,
    /// Control cost `E Σ (x_t − x*)ᵀQ_t(x_t − x*)`.
    pub j_c: f64,
    /// Optimal `J_α` from the synthesis recursion, when the policy is that optimum.
    pub j_star: Option<f64>,
}

/// Backward recursions of the detection (`~`) and control (`¯`) costs, `t = 0..=N+1`.
#[derive(Clone, Debug)]
pub struct PerformanceCertificates {
    pub q_tilde: Vec<Matrix>,
    pub r_tilde: Vec<Matrix>,
    pub s_tilde: Vec<Matrix>,
    pub q_bar: Vec<Matrix>,
    pub r_bar: Vec<Matrix>,
    pub s_bar: Vec<Matrix>,
}

/// `𝒱_t` (detection-only) or `𝒲_t` (control-only), `t = 0..=N+1`.
#[derive(Clone, Debug)]
pub struct AsymptoticCertificates {
    pub mode: Weighting,
    pub v: Vec<Matrix>,
    pub w: Vec<Matrix>,
}

fn check_policy(aug: &AugmentedDynamics, obj: &AttackObjective, policy: &AttackPolicy) -> Result<()> {
    const CTX: &str = "evaluate_costs";
    if policy.l_gains.len() != obj.horizon() + 1 || policy.o_gains.len() != policy.l_gains.len() {
        return Err(Error::shape(
            CTX,
            format!("policy covers {} steps, objective has N+1 = {}", policy.l_gains.len(), obj.horizon() + 1),
        ));
    }
    let bad = policy
        .l_gains
        .iter()
        .zip(&policy.o_gains)
        .any(|(l, o)| l.shape() != (aug.s, aug.xi_dim()) || o.shape() != (aug.s, aug.p));
    if bad {
        return Err(Error::shape(CTX, "gain matrix has the wrong size"));
    }
    Ok(())
}

/// The detection and control costs of `policy`, valid for any linear policy.
pub fn evaluate_costs(
    aug: &AugmentedDynamics,
    obj: &AttackObjective,
    policy: &AttackPolicy,
    prior: &SteadyPrior,
    gains: &FilterGains,
) -> Result<(CostReport, PerformanceCertificates)> {
    check_policy(aug, obj, policy)?;
    let big_n = obj.horizon();
    let dim = aug.xi_dim();
    let p = aug.p;
    let psi = aug.dcal.rows(aug.n, p).clone_owned();
    let h = &aug.hcal;
    let ip = Matrix::identity(p, p);

    let zeros = |r, c| vec![Matrix::zeros(r, c); big_n + 2];
    let mut certs = PerformanceCertificates {
        q_tilde: zeros(dim, dim),
        r_tilde: zeros(dim, p),
        s_tilde: zeros(p, p),
        q_bar: zeros(dim, dim),
        r_bar: zeros(dim, p),
        s_bar: zeros(p, p),
    };

    for t in (0..=big_n).rev() {
        let (l, o) = (&policy.l_gains[t], &policy.o_gains[t]);
        let closed = &aug.acal + &aug.bcal * l;
        let bo = &aug.bcal * o;
        let out_xi = &aug.ctil + &psi * l;
        let out_nu = &ip + &psi * o;
        let r = obj.r()[t].as_matrix();
        let q = obj.q()[t].as_matrix();

        let qt = &certs.q_tilde[t + 1];
        let q_tilde = closed.transpose() * qt * &closed + out_xi.transpose() * r * &out_xi;
        let r_tilde = closed.transpose() * qt * &bo + out_xi.transpose() * r * &out_nu;
        let s_tilde = bo.transpose() * qt * &bo + out_nu.transpose() * r * &out_nu;

        let qb = &certs.q_bar[t + 1];
        let q_bar = closed.transpose() * qb * &closed + h.transpose() * q * h;
        let r_bar = closed.transpose() * qb * &bo;
        let s_bar = bo.transpose() * qb * &bo;

        certs.q_tilde[t] = (&q_tilde + q_tilde.transpose()) * 0.5;
        certs.r_tilde[t] = r_tilde;
        certs.s_tilde[t] = (&s_tilde + s_tilde.transpose()) * 0.5;
        certs.q_bar[t] = (&q_bar + q_bar.transpose()) * 0.5;
        certs.r_bar[t] = r_bar;
        certs.s_bar[t] = (&s_bar + s_bar.transpose()) * 0.5;
    }

    let sigma_nu = gains.sigma_nu.as_matrix();
    let sigma_star = prior.sigma_xi0_star.as_matrix();
    let mut j_d = (sigma_star * &certs.q_tilde[0]).trace();
    let mut j_c = (sigma_star * &certs.q_bar[0]).trace();
    for t in 0..=big_n {
        j_d += noise_trace(aug, sigma_nu, &certs.q_tilde[t], &certs.r_tilde[t], &certs.s_tilde[t]);
        j_c += noise_trace(aug, sigma_nu, &certs.q_bar[t], &certs.r_bar[t], &certs.s_bar[t]);
        j_c += (gains.p_hat.as_matrix() * obj.q()[t].as_matrix()).trace();
    }

    let report = CostReport {
        alpha: policy.mode,
        j_d,
        j_c,
        j_star: None,
    };
    Ok((report, certs))
}

/// The limiting policy for `mode` (`Zero` or `Infinity`), using pseudoinverses throughout.
pub fn asymptotic_policy(aug: &AugmentedDynamics, obj: &AttackObjective, mode: Weighting) -> Result<(AttackPolicy, AsymptoticCertificates)> {
    let (w_q, w_r) = match mode {
        Weighting::Zero => (0.0, 1.0),
        Weighting::Infinity => (1.0, 0.0),
        Weighting::Finite(_) => {
            return Err(Error::domain("asymptotic_policy", "mode must be Zero or Infinity"));
        }
    };
    let rec = backward_recursion(aug, obj.stage_weights(w_q, w_r), Curvature::Pseudo, PINV_CUTOFF)?;
    let mut o_gains = rec.o;
    if mode == Weighting::Infinity {
        for o in &mut o_gains {
            o.fill(0.0);
        }
    }
    let dim = aug.xi_dim();
    let mut values = rec.certs.qcal;
    values.push(Matrix::zeros(dim, dim));
    let (v, w) = match mode {
        Weighting::Zero => (values, Vec::new()),
        _ => (Vec::new(), values),
    };
    let policy = AttackPolicy {
        l_gains: rec.l,
        o_gains,
        mode,
        x_star: obj.x_star().clone(),
    };
    Ok((policy, AsymptoticCertificates { mode, v, w }))
}

/// Largest `‖M M† b − b‖ / ‖b‖` with `M = ℬᵀ𝒲_{t+1}ℬ`, `b = ℬᵀ𝒲_{t+1}𝒜ξ` over
/// steps and samples.
pub fn control_range_residual(aug: &AugmentedDynamics, certs: &AsymptoticCertificates, samples: &[Vector]) -> f64 {
    let bt = aug.bcal.transpose();
    let mut worst: f64 = 0.0;
    for w_next in certs.w.iter().skip(1) {
        let m = &bt * w_next * &aug.bcal;
        let proj = &m * pseudo_inverse(&m, PINV_CUTOFF);
        let bwa = &bt * w_next * &aug.acal;
        for xi in samples {
            let b = &bwa * xi;
            let scale = b.norm();
            if scale > 0.0 {
                worst = worst.max((&proj * &b - &b).norm() / scale);
            }
        }
    }
    worst
}

/// Smallest `λ_min / (1 + max|λ|)` across the control-only value matrices `𝒲_t`.
pub fn control_value_psd_margin(certs: &AsymptoticCertificates) -> f64 {
    certs
        .w
        .iter()
        .map(|w| {
            let d = definiteness(w, PSD_TOLERANCE);
            d.min_eigenvalue / (1.0 + d.max_abs_eigenvalue)
        })
        .fold(f64::INFINITY, f64::min)
}

/// One row of a sweep: the weighting and its report, or the reason it failed.
#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub alpha: Weighting,
    pub outcome: std::result::Result<CostReport, String>,
}

/// Optimal cost report for a single finite `α`.
pub fn finite_alpha_report(aug: &AugmentedDynamics, obj: &AttackObjective, prior: &SteadyPrior, gains: &FilterGains) -> Result<CostReport> {
    let (policy, certs) = synthesize(aug, obj)?;
    let (mut report, _) = evaluate_costs(aug, obj, &policy, prior, gains)?;
    report.j_star = Some(optimal_cost(aug, obj, prior, gains, &certs)?);
    Ok(report)
}

/// Synthesize and evaluate at each `α` (ascending), then append the `α → 0`
/// and `α → ∞` rows. Failures at individual points are recorded in place.
pub fn alpha_sweep(
    aug: &AugmentedDynamics,
    obj_base: &AttackObjective,
    alphas: &[f64],
    prior: &SteadyPrior,
    gains: &FilterGains,
) -> Result<Vec<SweepEntry>> {
    if alphas.is_empty() {
        return Err(Error::domain("alpha_sweep", "empty grid"));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::domain("alpha_sweep", "grid values must be positive and finite"));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("alpha_sweep", "grid must be strictly ascending"));
    }
    let mut entries: Vec<SweepEntry> = alphas
        .par_iter()
        .map(|&alpha| SweepEntry {
            alpha: Weighting::Finite(alpha),
            outcome: obj_base
                .with_alpha(alpha)
                .and_then(|obj| finite_alpha_report(aug, &obj, prior, gains))
                .map_err(|e| e.to_string()),
        })
        .collect();
    for mode in [Weighting::Zero, Weighting::Infinity] {
        let outcome = asymptotic_policy(aug, obj_base, mode)
            .and_then(|(policy, _)| evaluate_costs(aug, obj_base, &policy, prior, gains))
            .map(|(report, _)| report)
            .map_err(|e| e.to_string());
        entries.push(SweepEntry { alpha: mode, outcome });
    }
    Ok(entries)
}

/// `n` log-spaced points from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && min.is_finite() && max.is_finite()) || n == 0 {
        return Err(Error::domain("log_grid", format!("need 0 < min <= max and n >= 1, got {min}, {max}, {n}")));
    }
    if n == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.log10(), max.log10());
    Ok((0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect())
}

/// Default sweep grid: 25 points over `[1e-6, 1e6]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-6, 1e6, 25).expect("valid default grid")
}

/// Violations of the sweep's monotonicity and lower-bound properties, empty when all hold.
pub fn check_sweep(entries: &[SweepEntry], slack: f64) -> Vec<String> {
    let mut problems = Vec::new();
    let finite: Vec<(f64, CostReport)> = entries
        .iter()
        .filter_map(|e| match (&e.alpha, &e.outcome) {
            (Weighting::Finite(a), Ok(r)) => Some((*a, *r)),
            _ => None,
        })
        .collect();
    for e in entries {
        if let Err(msg) = &e.outcome {
            problems.push(format!("alpha={}: {msg}", e.alpha.value()));
        }
    }
    for w in finite.windows(2) {
        let ((a0, r0), (a1, r1)) = (w[0], w[1]);
        if r1.j_c > r0.j_c + slack * (1.0 + r0.j_c.abs()) {
            problems.push(format!("J_c increases from alpha={a0:e} to alpha={a1:e}: {} -> {}", r0.j_c, r1.j_c));
        }
        if r1.j_d < r0.j_d - slack * (1.0 + r0.j_d.abs()) {
            problems.push(format!("J_d decreases from alpha={a0:e} to alpha={a1:e}: {} -> {}", r0.j_d, r1.j_d));
        }
    }
    let bound = |mode: Weighting| entries.iter().find(|e| e.alpha == mode).and_then(|e| e.outcome.as_ref().ok()).copied();
    if let Some(zero) = bound(Weighting::Zero) {
        for (a, r) in &finite {
            if r.j_d < zero.j_d - slack * (1.0 + zero.j_d.abs()) {
                problems.push(format!("J_d at alpha={a:e} is below the alpha=0 bound: {} < {}", r.j_d, zero.j_d));
            }
        }
    }
    if let Some(inf) = bound(Weighting::Infinity) {
        for (a, r) in &finite {
            if r.j_c < inf.j_c - slack * (1.0 + inf.j_c.abs()) {
                problems.push(format!("J_c at alpha={a:e} is below the alpha=inf bound: {} < {}", r.j_c, inf.j_c));
            }
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack_dynamics::build_augmented;
    use crate::bundled;
    use crate::numerics::SymmetricMatrix;
    use crate::pipeline::{kalman_design, lqg_design_default, ControllerGains};
    use crate::plant::SystemModel;
    use crate::synthesis::steady_prior;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Case {
        gains: FilterGains,
        aug: AugmentedDynamics,
        prior: SteadyPrior,
        obj: AttackObjective,
    }

    fn case(model: SystemModel, horizon: usize, alpha: f64) -> Case {
        let gains = kalman_design(&model).unwrap();
        let ctrl: ControllerGains = lqg_design_default(&model).unwrap();
        let aug = build_augmented(&model, &gains, &ctrl);
        let n = model.n();
        let x_star = Vector::from_fn(n, |i, _| [1.0, -0.5, 0.0, 0.0][i]);
        let obj = AttackObjective::constant(SymmetricMatrix::identity(n), gains.sigma_nu_inv.clone(), x_star.clone(), horizon, alpha).unwrap();
        let prior = steady_prior(&model, &gains, &ctrl, &x_star).unwrap();
        Case { gains, aug, prior, obj }
    }

    fn j_alpha(c: &Case, policy: &AttackPolicy) -> f64 {
        let (r, _) = evaluate_costs(&c.aug, &c.obj, policy, &c.prior, &c.gains).unwrap();
        c.obj.alpha() * r.j_c + r.j_d
    }

    #[test]
    fn zero_policy_detection_cost_is_trace_sum() {
        let c = case(bundled::synthetic4(), 12, 1.0);
        let policy = AttackPolicy::zero(&c.aug, 12, c.obj.x_star().clone());
        let (r, certs) = evaluate_costs(&c.aug, &c.obj, &policy, &c.prior, &c.gains).unwrap();
        let expected: f64 = c.obj.r().iter().map(|r| (r.as_matrix() * c.gains.sigma_nu.as_matrix()).trace()).sum();
        approx::assert_relative_eq!(r.j_d, expected, max_relative = 1e-10);
        assert_eq!(certs.q_tilde[13].amax(), 0.0);
        assert_eq!(certs.q_bar[13].amax(), 0.0);
        // R = Σ_ν⁻¹ gives p per step.
        approx::assert_relative_eq!(r.j_d, 13.0 * 4.0, max_relative = 1e-10);
    }

    #[test]
    fn scalarization_identity_on_bundled_models() {
        for model in [bundled::oscillator2(), bundled::synthetic4()] {
            for alpha in [1e-3, 1.0, 1e3] {
                let c = case(model.clone(), 20, alpha);
                let r = finite_alpha_report(&c.aug, &c.obj, &c.prior, &c.gains).unwrap();
                let j_star = r.j_star.unwrap();
                let gap = (j_star - (alpha * r.j_c + r.j_d)).abs() / j_star;
                assert!(gap <= 1e-8, "alpha {alpha}: gap {gap:e}");
            }
        }
    }

    #[test]
    fn synthesized_policy_beats_perturbations() {
        let c = case(bundled::oscillator2(), 5, 1.0);
        let (policy, _) = synthesize(&c.aug, &c.obj).unwrap();
        let best = j_alpha(&c, &policy);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..40 {
            let mut p = policy.clone();
            let t = rng.random_range(0..=5);
            let mut delta = Matrix::from_fn(c.aug.s, c.aug.xi_dim(), |_, _| rng.random_range(-1.0..1.0));
            delta *= 1e-3 / delta.norm();
            if rng.random_bool(0.5) {
                p.l_gains[t] += delta;
            } else {
                let mut d = Matrix::from_fn(c.aug.s, c.aug.p, |_, _| rng.random_range(-1.0..1.0));
                d *= 1e-3 / d.norm();
                p.o_gains[t] += d;
            }
            assert!(j_alpha(&c, &p) >= best - 1e-8 * best.abs());
        }
    }

    #[test]
    fn alpha_infinity_has_zero_feedthrough() {
        let c = case(bundled::synthetic4(), 8, 1.0);
        let (policy, certs) = asymptotic_policy(&c.aug, &c.obj, Weighting::Infinity).unwrap();
        assert!(policy.o_gains.iter().all(|o| o.iter().all(|&x| x == 0.0)));
        assert_eq!(certs.w.len(), 10);
        assert_eq!(certs.w[9].amax(), 0.0);
        assert!(control_value_psd_margin(&certs) >= -PSD_TOLERANCE);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let samples: Vec<Vector> = (0..100).map(|_| Vector::from_fn(c.aug.xi_dim(), |_, _| rng.random_range(-1.0..1.0))).collect();
        assert!(control_range_residual(&c.aug, &certs, &samples) <= 1e-8);
    }

    #[test]
    fn alpha_zero_never_worse_than_no_attack() {
        let c = case(bundled::oscillator2(), 10, 1.0);
        let (policy, certs) = asymptotic_policy(&c.aug, &c.obj, Weighting::Zero).unwrap();
        assert_eq!(certs.v.len(), 12);
        let (r0, _) = evaluate_costs(&c.aug, &c.obj, &policy, &c.prior, &c.gains).unwrap();
        let none = AttackPolicy::zero(&c.aug, 10, c.obj.x_star().clone());
        let (rz, _) = evaluate_costs(&c.aug, &c.obj, &none, &c.prior, &c.gains).unwrap();
        assert!(r0.j_d <= rz.j_d + 1e-9);
    }

    #[test]
    fn finite_mode_is_rejected_for_asymptotic_policy() {
        let c = case(bundled::oscillator2(), 2, 1.0);
        assert!(asymptotic_policy(&c.aug, &c.obj, Weighting::Finite(1.0)).is_err());
    }

    #[test]
    fn evaluate_costs_rejects_mismatched_policy() {
        let c = case(bundled::oscillator2(), 4, 1.0);
        let short = AttackPolicy::zero(&c.aug, 3, c.obj.x_star().clone());
        assert!(matches!(evaluate_costs(&c.aug, &c.obj, &short, &c.prior, &c.gains), Err(Error::Shape { .. })));
    }

    #[test]
    fn sweep_is_monotone_and_bounded() {
        let c = case(bundled::oscillator2(), 10, 1.0);
        let grid = log_grid(1e-4, 1e4, 9).unwrap();
        let entries = alpha_sweep(&c.aug, &c.obj, &grid, &c.prior, &c.gains).unwrap();
        assert_eq!(entries.len(), 11);
        assert_eq!(entries[9].alpha, Weighting::Zero);
        assert_eq!(entries[10].alpha, Weighting::Infinity);
        for (e, a) in entries.iter().zip(&grid) {
            assert_eq!(e.alpha, Weighting::Finite(*a));
        }
        let problems = check_sweep(&entries, 1e-9);
        assert!(problems.is_empty(), "{problems:?}");
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        let c = case(bundled::oscillator2(), 2, 1.0);
        assert!(alpha_sweep(&c.aug, &c.obj, &[1.0, 0.5], &c.prior, &c.gains).is_err());
        assert!(alpha_sweep(&c.aug, &c.obj, &[], &c.prior, &c.gains).is_err());
        assert!(alpha_sweep(&c.aug, &c.obj, &[0.0, 1.0], &c.prior, &c.gains).is_err());
    }

    #[test]
    fn check_sweep_flags_violations() {
        let mk = |a: f64, j_d: f64, j_c: f64| SweepEntry {
            alpha: Weighting::Finite(a),
            outcome: Ok(CostReport { alpha: Weighting::Finite(a), j_d, j_c, j_star: None }),
        };
        let entries = vec![mk(1.0, 2.0, 5.0), mk(2.0, 1.0, 6.0)];
        assert_eq!(check_sweep(&entries, 1e-9).len(), 2);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = default_grid();
        assert_eq!(g.len(), 25);
        approx::assert_relative_eq!(g[0], 1e-6, max_relative = 1e-14);
        approx::assert_relative_eq!(g[12], 1.0, max_relative = 1e-14);
        approx::assert_relative_eq!(g[24], 1e6, max_relative = 1e-14);
        assert_eq!(log_grid(3.0, 5.0, 1).unwrap(), vec![3.0]);
        assert!(log_grid(0.0, 1.0, 3).is_err());
    }
}
