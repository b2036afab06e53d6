//! Paired closed-loop simulation.
//!
//! Each run drives two copies of the loop with one noise realization: the
//! attacked twin, whose sensors and actuators pass through the attack policy,
//! and the nominal twin, which never sees an attack. The attacker runs its own
//! Kalman filter on the clean measurements, a copy of the defender's filter on
//! the tampered ones, and reconstructs the nominal estimate from the two.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attack_dynamics::{build_augmented, AugmentedDynamics, XiParts};
use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::pipeline::{filter_step, kalman_design, lqg_design_default, ControllerGains, DetectorConfig, FilterGains, FilterState};
use crate::plant::{self, PlantState, SystemModel};
use crate::synthesis::{AttackObjective, AttackPolicy};

/// A designed loop: plant, filter, controller and the attack dynamics they induce.
#[derive(Clone, Debug)]
pub struct LoopDesign {
    pub model: SystemModel,
    pub gains: FilterGains,
    pub ctrl: ControllerGains,
    pub aug: AugmentedDynamics,
}

impl LoopDesign {
    pub fn new(model: SystemModel, gains: FilterGains, ctrl: ControllerGains) -> Self {
        let aug = build_augmented(&model, &gains, &ctrl);
        LoopDesign { model, gains, ctrl, aug }
    }

    /// Validate the model and design with `Q′ = I`, `R′ = I`.
    pub fn with_default_controller(model: SystemModel) -> Result<Self> {
        model.ensure_valid()?;
        let gains = kalman_design(&model)?;
        let ctrl = lqg_design_default(&model)?;
        Ok(Self::new(model, gains, ctrl))
    }
}

pub const DEFAULT_BURN_IN: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimulationConfig {
    pub burn_in: usize,
    pub horizon: usize,
    pub master_seed: u64,
    pub runs: usize,
}

impl SimulationConfig {
    pub fn new(horizon: usize, master_seed: u64) -> Self {
        SimulationConfig {
            burn_in: DEFAULT_BURN_IN,
            horizon,
            master_seed,
            runs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in == 0 {
            return Err(Error::domain("SimulationConfig", "burn_in must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::domain("SimulationConfig", "runs must be at least 1"));
        }
        Ok(())
    }
}

/// The generator for run `run_index`: stream `run_index` of the master seed.
pub fn run_rng(master_seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: i64,
    pub x: Vector,
    pub x_nominal: Vector,
    /// Measurement received by the defender, `ỹ + Ψe`.
    pub y: Vector,
    /// Measurement before tampering.
    pub y_clean: Vector,
    pub u: Vector,
    pub u_nominal: Vector,
    pub e: Vector,
    pub x_hat_attacker: Vector,
    /// Defender's prediction `x̂ᵉ_{t|t−1}` before the measurement at `t`.
    pub x_pred_system: Vector,
    pub x_hat_system: Vector,
    pub x_hat_nominal: Vector,
    /// The attacker's reconstruction of `x̂⁰_t`.
    pub x_hat_nominal_reconstructed: Vector,
    pub theta: Vector,
    /// Innovation bias predicted by the attack-effect system.
    pub epsilon: Vector,
    pub nu_attacker: Vector,
    pub nu_system: Vector,
    pub nu_nominal: Vector,
    pub g_system: f64,
    pub g_nominal: f64,
}

impl StepRecord {
    /// `‖ν_t − ν_t⁰‖_∞`.
    pub fn nu_error(&self) -> f64 {
        (&self.nu_attacker - &self.nu_nominal).amax()
    }

    /// `‖(ν_tᵉ − ν_t⁰) − ε_t‖_∞`.
    pub fn bias_error(&self) -> f64 {
        (&self.nu_system - &self.nu_nominal - &self.epsilon).amax()
    }

    pub fn reconstruction_error(&self) -> f64 {
        (&self.x_hat_nominal_reconstructed - &self.x_hat_nominal).amax()
    }
}

#[derive(Clone, Debug)]
pub struct PairedTrajectory {
    pub burn_in: usize,
    pub horizon: usize,
    /// One record per `t = −burn_in..=horizon`.
    pub records: Vec<StepRecord>,
}

impl PairedTrajectory {
    /// Records for `t = 0..=N`.
    pub fn attack_window(&self) -> &[StepRecord] {
        &self.records[self.burn_in..]
    }

    pub fn max_nu_error(&self) -> f64 {
        self.attack_window().iter().map(StepRecord::nu_error).fold(0.0, f64::max)
    }

    pub fn max_bias_error(&self) -> f64 {
        self.attack_window().iter().map(StepRecord::bias_error).fold(0.0, f64::max)
    }

    pub fn max_reconstruction_error(&self) -> f64 {
        self.records.iter().map(StepRecord::reconstruction_error).fold(0.0, f64::max)
    }
}

/// Run one paired simulation from `t = −burn_in` to `N`, calling `visit` at each step.
fn simulate<F: FnMut(&StepRecord)>(design: &LoopDesign, policy: &AttackPolicy, cfg: &SimulationConfig, run_index: u64, mut visit: F) {
    let LoopDesign { model, gains, ctrl, aug } = design;
    let hat = &aug.hat;
    let (a, b, c) = (model.a(), model.b(), model.c());
    let k = &gains.k;
    let mut rng = run_rng(cfg.master_seed, run_index);

    let mut state = model.sample_initial_state(&mut rng);
    let mut state_nom = state.clone();
    let mut sys = FilterState::from_prediction(model.x_bar().clone());
    let mut nom = sys.clone();
    let mut att_pred = model.x_bar().clone();
    let mut theta = Vector::zeros(hat.state_dim());

    for t in -(cfg.burn_in as i64)..=(cfg.horizon as i64) {
        let (w, v) = model.sample_noise(&mut rng);
        let y_clean = c * &state.x + &v;
        let y_nom = c * &state_nom.x + &v;

        let nu_att = &y_clean - c * &att_pred;
        let x_hat_att = &att_pred + k * &nu_att;
        let x_nom_rec = &sys.x_pred + k * (&y_clean - c * &sys.x_pred) - &aug.omega * &theta;
        let xi = aug.assemble_xi(&XiParts {
            x_hat: x_hat_att.clone(),
            theta: theta.clone(),
            x_hat_nominal: x_nom_rec.clone(),
            x_star: policy.x_star.clone(),
        });
        let e = policy.attack(t, &xi, &nu_att);
        let y = &y_clean + model.psi() * &e;

        let x_pred_system = sys.x_pred.clone();
        let (sys_next, nu_sys, u) = filter_step(model, gains, ctrl, &sys, &y);
        let (nom_next, nu_nom, u_nom) = filter_step(model, gains, ctrl, &nom, &y_nom);
        let (theta_next, epsilon) = hat.step(&theta, &e);

        visit(&StepRecord {
            t,
            x: state.x.clone(),
            x_nominal: state_nom.x.clone(),
            y,
            y_clean,
            g_system: gains.statistic(&nu_sys),
            g_nominal: gains.statistic(&nu_nom),
            u: u.clone(),
            u_nominal: u_nom.clone(),
            e: e.clone(),
            x_hat_attacker: x_hat_att.clone(),
            x_pred_system,
            x_hat_system: sys_next.x_post.clone(),
            x_hat_nominal: nom_next.x_post.clone(),
            x_hat_nominal_reconstructed: x_nom_rec,
            theta: theta.clone(),
            epsilon,
            nu_attacker: nu_att,
            nu_system: nu_sys,
            nu_nominal: nu_nom,
        });

        att_pred = a * &x_hat_att + b * &u + model.gamma() * &e;
        theta = theta_next;
        state = plant::step(model, &state, &u, &e, &w);
        state_nom = PlantState {
            x: a * &state_nom.x + b * &u_nom + &w,
        };
        sys = sys_next;
        nom = nom_next;
    }
}

/// One paired run, keeping every step.
pub fn run_paired(design: &LoopDesign, policy: &AttackPolicy, cfg: &SimulationConfig, run_index: u64) -> Result<PairedTrajectory> {
    cfg.validate()?;
    if policy.horizon() != cfg.horizon {
        return Err(Error::shape(
            "run_paired",
            format!("policy horizon {} differs from simulation horizon {}", policy.horizon(), cfg.horizon),
        ));
    }
    let mut records = Vec::with_capacity(cfg.burn_in + cfg.horizon + 1);
    simulate(design, policy, cfg, run_index, |r| records.push(r.clone()));
    Ok(PairedTrajectory {
        burn_in: cfg.burn_in,
        horizon: cfg.horizon,
        records,
    })
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return Estimate { mean, stderr: f64::NAN };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate {
            mean,
            stderr: (var / n).sqrt(),
        }
    }

    /// `|mean − target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.stderr
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EmpiricalCosts {
    pub runs: usize,
    pub j_d: Estimate,
    pub j_c: Estimate,
    /// `α J_c + J_d` per run, with `α` from the objective.
    pub j_alpha: Estimate,
}

/// Per-run `(J_d, J_c)` samples, in run order.
pub fn cost_samples(design: &LoopDesign, policy: &AttackPolicy, obj: &AttackObjective, cfg: &SimulationConfig) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    if policy.horizon() != cfg.horizon || obj.horizon() != cfg.horizon {
        return Err(Error::shape("monte_carlo_costs", "policy, objective and simulation horizons differ"));
    }
    let x_star = obj.x_star();
    Ok((0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let (mut j_d, mut j_c) = (0.0, 0.0);
            simulate(design, policy, cfg, run, |r| {
                if r.t >= 0 {
                    let t = r.t as usize;
                    let dx = &r.x - x_star;
                    j_c += dx.dot(&(obj.q()[t].as_matrix() * &dx));
                    j_d += r.nu_system.dot(&(obj.r()[t].as_matrix() * &r.nu_system));
                }
            });
            (j_d, j_c)
        })
        .collect())
}

/// Monte Carlo estimates of the detection and control costs; `runs ≥ 2`.
pub fn monte_carlo_costs(design: &LoopDesign, policy: &AttackPolicy, obj: &AttackObjective, cfg: &SimulationConfig) -> Result<EmpiricalCosts> {
    if cfg.runs < 2 {
        return Err(Error::domain("monte_carlo_costs", "need at least 2 runs for a standard error"));
    }
    let samples = cost_samples(design, policy, obj, cfg)?;
    let d: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let c: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let a: Vec<f64> = samples.iter().map(|s| obj.alpha() * s.1 + s.0).collect();
    Ok(EmpiricalCosts {
        runs: cfg.runs,
        j_d: Estimate::from_samples(&d),
        j_c: Estimate::from_samples(&c),
        j_alpha: Estimate::from_samples(&a),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlarmReport {
    pub attacked_rate: f64,
    pub nominal_rate: f64,
    pub attacked_mean_g: f64,
    pub nominal_mean_g: f64,
}

/// Alarm rates and mean statistics of both twins over `t = 0..=N`.
pub fn alarm_report(traj: &PairedTrajectory, detector: &DetectorConfig) -> AlarmReport {
    let window = traj.attack_window();
    let n = window.len() as f64;
    let rate = |f: fn(&StepRecord) -> f64| window.iter().filter(|r| detector.alarm(f(r))).count() as f64 / n;
    let mean = |f: fn(&StepRecord) -> f64| window.iter().map(f).sum::<f64>() / n;
    AlarmReport {
        attacked_rate: rate(|r| r.g_system),
        nominal_rate: rate(|r| r.g_nominal),
        attacked_mean_g: mean(|r| r.g_system),
        nominal_mean_g: mean(|r| r.g_nominal),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineReport {
    pub steps: usize,
    pub dof: usize,
    pub g: Estimate,
    pub alarm_rate: f64,
    /// Half-width `3√(q(1−q)/steps)` of the binomial band around `q`.
    pub alarm_band: f64,
    pub threshold: f64,
    pub false_alarm_prob: f64,
    pub statistics: Vec<f64>,
}

impl BaselineReport {
    pub fn mean_within_3_stderr(&self) -> bool {
        self.g.z_score(self.dof as f64) <= 3.0
    }

    pub fn alarm_rate_in_band(&self) -> bool {
        (self.alarm_rate - self.false_alarm_prob).abs() <= self.alarm_band
    }
}

/// A long attack-free run recording the detector statistic after `burn_in` steps.
pub fn baseline_run(design: &LoopDesign, detector: &DetectorConfig, steps: usize, burn_in: usize, seed: u64) -> Result<BaselineReport> {
    if steps < 2 {
        return Err(Error::domain("baseline_run", "need at least 2 steps"));
    }
    let LoopDesign { model, gains, ctrl, .. } = design;
    let mut rng = run_rng(seed, 0);
    let mut state = model.sample_initial_state(&mut rng);
    let mut filter = FilterState::from_prediction(model.x_bar().clone());
    let zero_e = Vector::zeros(model.s());
    let mut statistics = Vec::with_capacity(steps);
    for k in 0..burn_in + steps {
        let (w, v) = model.sample_noise(&mut rng);
        let (y, _) = plant::output(model, &state, &zero_e, &v);
        let (next, nu, u) = filter_step(model, gains, ctrl, &filter, &y);
        if k >= burn_in {
            statistics.push(gains.statistic(&nu));
        }
        state = plant::step(model, &state, &u, &zero_e, &w);
        filter = next;
    }
    let q = detector.false_alarm_prob;
    let alarms = statistics.iter().filter(|&&g| detector.alarm(g)).count();
    Ok(BaselineReport {
        steps,
        dof: model.p(),
        g: Estimate::from_samples(&statistics),
        alarm_rate: alarms as f64 / steps as f64,
        alarm_band: 3.0 * (q * (1.0 - q) / steps as f64).sqrt(),
        threshold: detector.threshold,
        false_alarm_prob: q,
        statistics,
    })
}

/// A random draw used to seed independent experiments from one master seed.
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    run_rng(master_seed, label).random()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::numerics::{Matrix, SymmetricMatrix};
    use crate::performance::evaluate_costs;
    use crate::synthesis::{steady_prior, synthesize};

    fn design(model: SystemModel) -> LoopDesign {
        LoopDesign::with_default_controller(model).unwrap()
    }

    fn objective(d: &LoopDesign, horizon: usize, alpha: f64) -> AttackObjective {
        let n = d.model.n();
        let x_star = Vector::from_fn(n, |i, _| [1.0, -1.0, 0.0, 0.0][i]);
        AttackObjective::constant(SymmetricMatrix::identity(n), d.gains.sigma_nu_inv.clone(), x_star, horizon, alpha).unwrap()
    }

    #[test]
    fn zero_policy_twins_coincide() {
        let d = design(bundled::synthetic4());
        let policy = AttackPolicy::zero(&d.aug, 30, Vector::zeros(4));
        let cfg = SimulationConfig { burn_in: 20, ..SimulationConfig::new(30, 3) };
        let traj = run_paired(&d, &policy, &cfg, 0).unwrap();
        assert_eq!(traj.records.len(), 51);
        for r in &traj.records {
            assert_eq!(r.x, r.x_nominal);
            assert_eq!(r.nu_system, r.nu_nominal);
            assert_eq!(r.u, r.u_nominal);
            assert_eq!(r.g_system, r.g_nominal);
            assert_eq!(r.e.amax(), 0.0);
        }
        let det = DetectorConfig::new(0.05, 4).unwrap();
        let rep = alarm_report(&traj, &det);
        assert_eq!(rep.attacked_rate, rep.nominal_rate);
    }

    #[test]
    fn attacked_run_satisfies_path_identities() {
        let d = design(bundled::synthetic4());
        let obj = objective(&d, 60, 1.0);
        let (policy, _) = synthesize(&d.aug, &obj).unwrap();
        let cfg = SimulationConfig::new(60, 11);
        let traj = run_paired(&d, &policy, &cfg, 2).unwrap();
        assert_eq!(traj.records.len(), 261);
        assert!(traj.max_nu_error() <= 1e-8);
        assert!(traj.max_bias_error() <= 1e-8);
        assert!(traj.max_reconstruction_error() <= 1e-8);
        assert!(traj.attack_window().iter().any(|r| r.e.amax() > 1e-3));
        for r in &traj.records[..traj.burn_in] {
            assert_eq!(r.x, r.x_nominal);
            assert_eq!(r.nu_system, r.nu_nominal);
        }
        // Attack onset: the attacker's estimate equals the nominal estimate.
        let onset = &traj.records[traj.burn_in];
        assert!((&onset.x_hat_attacker - &onset.x_hat_nominal).amax() <= 1e-12);
    }

    #[test]
    fn theta_matches_hat_system_propagation() {
        let d = design(bundled::oscillator2());
        let obj = objective(&d, 40, 1.0);
        let (policy, _) = synthesize(&d.aug, &obj).unwrap();
        let traj = run_paired(&d, &policy, &SimulationConfig::new(40, 5), 0).unwrap();
        let attacks: Vec<Vector> = traj.attack_window().iter().map(|r| r.e.clone()).collect();
        let states = d.aug.hat.simulate(&attacks);
        for (r, s) in traj.attack_window().iter().zip(&states) {
            assert!((&r.theta - &s.theta).amax() <= 1e-10);
        }
    }

    #[test]
    fn runs_are_deterministic_and_distinct() {
        let d = design(bundled::oscillator2());
        let policy = AttackPolicy::zero(&d.aug, 5, Vector::zeros(2));
        let cfg = SimulationConfig::new(5, 9);
        let a = run_paired(&d, &policy, &cfg, 1).unwrap();
        let b = run_paired(&d, &policy, &cfg, 1).unwrap();
        let c = run_paired(&d, &policy, &cfg, 2).unwrap();
        assert_eq!(a.records, b.records);
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn horizon_mismatch_is_rejected() {
        let d = design(bundled::oscillator2());
        let policy = AttackPolicy::zero(&d.aug, 5, Vector::zeros(2));
        assert!(run_paired(&d, &policy, &SimulationConfig::new(6, 1), 0).is_err());
        let bad = SimulationConfig { burn_in: 0, ..SimulationConfig::new(5, 1) };
        assert!(run_paired(&d, &policy, &bad, 0).is_err());
    }

    #[test]
    fn monte_carlo_is_bit_identical_across_calls() {
        let d = design(bundled::oscillator2());
        let obj = objective(&d, 5, 1.0);
        let (policy, _) = synthesize(&d.aug, &obj).unwrap();
        let cfg = SimulationConfig { runs: 64, burn_in: 50, ..SimulationConfig::new(5, 21) };
        let a = monte_carlo_costs(&d, &policy, &obj, &cfg).unwrap();
        let b = monte_carlo_costs(&d, &policy, &obj, &cfg).unwrap();
        assert_eq!(a, b);
        let single = SimulationConfig { runs: 1, ..cfg };
        assert!(monte_carlo_costs(&d, &policy, &obj, &single).is_err());
    }

    #[test]
    fn zero_policy_detection_cost_matches_trace() {
        let d = design(bundled::synthetic4());
        let obj = objective(&d, 10, 1.0);
        let policy = AttackPolicy::zero(&d.aug, 10, obj.x_star().clone());
        let cfg = SimulationConfig { runs: 2000, burn_in: 100, ..SimulationConfig::new(10, 4) };
        let mc = monte_carlo_costs(&d, &policy, &obj, &cfg).unwrap();
        // R = Σ_ν⁻¹ over 11 steps, p = 4.
        assert!(mc.j_d.z_score(44.0) <= 3.0, "{:?}", mc.j_d);
    }

    #[test]
    fn stderr_shrinks_like_inverse_sqrt_runs() {
        let d = design(bundled::oscillator2());
        let obj = objective(&d, 5, 1.0);
        let policy = AttackPolicy::zero(&d.aug, 5, obj.x_star().clone());
        let base = SimulationConfig { burn_in: 50, ..SimulationConfig::new(5, 8) };
        let small = monte_carlo_costs(&d, &policy, &obj, &SimulationConfig { runs: 400, ..base }).unwrap();
        let large = monte_carlo_costs(&d, &policy, &obj, &SimulationConfig { runs: 1600, ..base }).unwrap();
        let ratio = small.j_d.stderr / large.j_d.stderr;
        assert!((1.6..2.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn burn_in_prediction_covariance_matches_steady_prior() {
        let d = design(bundled::oscillator2());
        let prior = steady_prior(&d.model, &d.gains, &d.ctrl, &Vector::zeros(2)).unwrap();
        let policy = AttackPolicy::zero(&d.aug, 0, Vector::zeros(2));
        let cfg = SimulationConfig::new(0, 31);
        let preds: Vec<Vector> = (0..10_000u64)
            .into_par_iter()
            .map(|run| run_paired(&d, &policy, &cfg, run).unwrap().records[cfg.burn_in].x_pred_system.clone())
            .collect();
        let mut cov = Matrix::zeros(2, 2);
        for p in &preds {
            cov += p * p.transpose();
        }
        cov /= preds.len() as f64;
        let rel = (&cov - prior.sigma_0.as_matrix()).norm() / prior.sigma_0.norm();
        assert!(rel <= 0.1, "relative Frobenius gap {rel}");
    }

    #[test]
    fn empirical_costs_agree_with_closed_form() {
        let d = design(bundled::oscillator2());
        let obj = objective(&d, 10, 1.0);
        let (policy, _) = synthesize(&d.aug, &obj).unwrap();
        let prior = steady_prior(&d.model, &d.gains, &d.ctrl, obj.x_star()).unwrap();
        let (analytic, _) = evaluate_costs(&d.aug, &obj, &policy, &prior, &d.gains).unwrap();
        let cfg = SimulationConfig { runs: 3000, ..SimulationConfig::new(10, 12) };
        let mc = monte_carlo_costs(&d, &policy, &obj, &cfg).unwrap();
        assert!(mc.j_d.z_score(analytic.j_d) <= 3.5, "{:?} vs {}", mc.j_d, analytic.j_d);
        assert!(mc.j_c.z_score(analytic.j_c) <= 3.5, "{:?} vs {}", mc.j_c, analytic.j_c);
    }

    #[test]
    fn baseline_statistics_are_calibrated() {
        let d = design(bundled::oscillator2());
        let det = DetectorConfig::new(0.05, 2).unwrap();
        let rep = baseline_run(&d, &det, 20_000, 200, 3).unwrap();
        assert_eq!(rep.statistics.len(), 20_000);
        assert!(rep.mean_within_3_stderr(), "{:?}", rep.g);
        assert!(rep.alarm_rate_in_band(), "{}", rep.alarm_rate);
        assert!(baseline_run(&d, &det, 1, 0, 3).is_err());
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(1, 0), derive_seed(1, 0));
    }

    #[test]
    fn estimate_of_constant_samples() {
        let e = Estimate::from_samples(&[2.0, 2.0, 2.0]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.stderr, 0.0);
        assert!(Estimate::from_samples(&[1.0]).stderr.is_nan());
    }
}
