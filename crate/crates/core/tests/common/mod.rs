#![allow(dead_code)]

use cps_attack::harness::LoopDesign;
use cps_attack::numerics::{Matrix, SymmetricMatrix, Vector};
use cps_attack::pipeline::{kalman_design, lqg_design_default};
use cps_attack::plant::{ModelParts, SystemModel};
use cps_attack::synthesis::{AttackObjective, AttackPolicy};
use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_pd<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Matrix {
    let m = gaussian_matrix(rng, n, n);
    let s = (&m * m.transpose()) / n as f64 + Matrix::identity(n, n) * 0.1;
    (&s + s.transpose()) * (0.5 * scale)
}

fn spectral_radius(a: &Matrix) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A random model with the given dimensions that passes validation and
/// admits both steady-state designs.
pub fn random_model<R: Rng>(rng: &mut R, n: usize, m: usize, p: usize, s: usize) -> LoopDesign {
    assert!(s <= n + p);
    loop {
        let a0 = gaussian_matrix(rng, n, n);
        let rho: f64 = rng.random_range(0.3..1.1);
        let a = &a0 * (rho / spectral_radius(&a0).max(1e-6));
        let mut gamma = gaussian_matrix(rng, n, s);
        let mut psi = gaussian_matrix(rng, p, s);
        for j in 0..s {
            match rng.random_range(0..3) {
                0 => psi.column_mut(j).fill(0.0),
                1 => gamma.column_mut(j).fill(0.0),
                _ => {}
            }
        }
        let parts = ModelParts {
            a,
            b: gaussian_matrix(rng, n, m),
            c: gaussian_matrix(rng, p, n),
            gamma,
            psi,
            sigma_w: random_pd(rng, n, 0.1),
            sigma_v: random_pd(rng, p, 0.1),
            sigma_x: Matrix::identity(n, n),
            x_bar: Vector::zeros(n),
        };
        let Ok(model) = SystemModel::new(parts) else { continue };
        if !model.validate().accepted() {
            continue;
        }
        let (Ok(gains), Ok(ctrl)) = (kalman_design(&model), lqg_design_default(&model)) else { continue };
        return LoopDesign::new(model, gains, ctrl);
    }
}

/// Random objective with PD weights and a Gaussian target.
pub fn random_objective<R: Rng>(rng: &mut R, d: &LoopDesign, horizon: usize, alpha: f64) -> AttackObjective {
    let q = SymmetricMatrix::new(random_pd(rng, d.model.n(), 1.0)).unwrap();
    let r = SymmetricMatrix::new(random_pd(rng, d.model.p(), 1.0)).unwrap();
    let x_star = gaussian_vector(rng, d.model.n());
    AttackObjective::constant(q, r, x_star, horizon, alpha).unwrap()
}

/// Largest `‖Π b − b‖ / ‖b‖` where `Π` projects onto the range of the
/// symmetric `g` (eigenvectors with `|λ| > tol · max|λ|`).
pub fn range_residual(g: &Matrix, bs: &[Vector], tol: f64) -> f64 {
    let sym = (g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let mut proj = Matrix::zeros(g.nrows(), g.nrows());
    for (i, l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > tol * top {
            let v = eig.eigenvectors.column(i);
            proj += v * v.transpose();
        }
    }
    bs.iter()
        .map(|b| {
            let s = b.norm();
            if s == 0.0 {
                0.0
            } else {
                (&proj * b - b).norm() / s
            }
        })
        .fold(0.0, f64::max)
}

pub fn min_max_eig(g: &Matrix) -> (f64, f64) {
    let sym = (g + g.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym).eigenvalues;
    (e.min(), e.iter().fold(0.0f64, |a, l| a.max(l.abs())))
}

/// An affine function `c + G z` of the Gaussian basis `z`.
#[derive(Clone)]
struct Affine {
    c: Vector,
    g: Matrix,
}

impl Affine {
    fn constant(c: Vector, d: usize) -> Self {
        let n = c.len();
        Affine { c, g: Matrix::zeros(n, d) }
    }
    fn basis(offset: usize, n: usize, d: usize) -> Self {
        let mut g = Matrix::zeros(n, d);
        g.view_mut((0, offset), (n, n)).fill_with_identity();
        Affine { c: Vector::zeros(n), g }
    }
    fn map(&self, m: &Matrix) -> Self {
        Affine { c: m * &self.c, g: m * &self.g }
    }
    fn add(&self, o: &Affine) -> Self {
        Affine { c: &self.c + &o.c, g: &self.g + &o.g }
    }
    fn sub(&self, o: &Affine) -> Self {
        Affine { c: &self.c - &o.c, g: &self.g - &o.g }
    }
    fn stack(parts: &[&Affine]) -> Self {
        let rows: usize = parts.iter().map(|p| p.c.len()).sum();
        let d = parts[0].g.ncols();
        let mut c = Vector::zeros(rows);
        let mut g = Matrix::zeros(rows, d);
        let mut r = 0;
        for p in parts {
            let k = p.c.len();
            c.rows_mut(r, k).copy_from(&p.c);
            g.view_mut((r, 0), (k, d)).copy_from(&p.g);
            r += k;
        }
        Affine { c, g }
    }
    fn expect_quadratic(&self, q: &Matrix, cov: &Matrix) -> f64 {
        self.c.dot(&(q * &self.c)) + (q * &self.g * cov * self.g.transpose()).trace()
    }
}

/// Stationary covariance of the nominal prediction `x̂_{t|t−1}` by fixed-point iteration.
pub fn stationary_prediction_covariance(d: &LoopDesign) -> Matrix {
    let f = d.model.a() + d.model.b() * &d.ctrl.l;
    let kk = &d.gains.k * d.gains.sigma_nu.as_matrix() * d.gains.k.transpose();
    let mut s = Matrix::zeros(d.model.n(), d.model.n());
    for _ in 0..100_000 {
        let next = &f * (&s + &kk) * f.transpose();
        let done = (&next - &s).amax() <= 1e-15 * (1.0 + next.amax());
        s = next;
        if done {
            break;
        }
    }
    s
}

/// Exact `(J_d, J_c)` of any linear policy, by propagating the closed loop
/// (plant, defender filter, attacker filter, reconstruction) as affine
/// functions of the onset state and the noise sequence.
pub fn exact_costs(d: &LoopDesign, policy: &AttackPolicy, obj: &AttackObjective) -> (f64, f64) {
    let model = &d.model;
    let (n, p) = (model.n(), model.p());
    let big_n = obj.horizon();
    let dim = 2 * n + (big_n + 1) * (n + p);
    let mut cov = Matrix::zeros(dim, dim);
    cov.view_mut((0, 0), (n, n)).copy_from(&stationary_prediction_covariance(d));
    cov.view_mut((n, n), (n, n)).copy_from(&d.gains.p);
    for t in 0..=big_n {
        let o = 2 * n + t * (n + p);
        cov.view_mut((o, o), (n, n)).copy_from(model.sigma_w().as_matrix());
        cov.view_mut((o + n, o + n), (p, p)).copy_from(model.sigma_v().as_matrix());
    }
    let (a, b, c, k, l) = (model.a(), model.b(), model.c(), &d.gains.k, &d.ctrl.l);
    let hat = &d.aug.hat;
    let x_hat0 = Affine::basis(0, n, dim);
    let mut x = x_hat0.add(&Affine::basis(n, n, dim));
    let mut sys_pred = x_hat0.clone();
    let mut att_pred = x_hat0;
    let mut theta = Affine::constant(Vector::zeros(hat.state_dim()), dim);
    let x_star = Affine::constant(obj.x_star().clone(), dim);
    let (mut j_d, mut j_c) = (0.0, 0.0);
    for t in 0..=big_n {
        let o = 2 * n + t * (n + p);
        let w = Affine::basis(o, n, dim);
        let v = Affine::basis(o + n, p, dim);
        let y_clean = x.map(c).add(&v);
        let nu_att = y_clean.sub(&att_pred.map(c));
        let x_hat_att = att_pred.add(&nu_att.map(k));
        let x_rec = sys_pred.add(&y_clean.sub(&sys_pred.map(c)).map(k)).sub(&theta.map(&d.aug.omega));
        let xi = Affine::stack(&[&x_hat_att, &theta, &x_rec, &x_star]);
        let e = xi.map(&policy.l_gains[t]).add(&nu_att.map(&policy.o_gains[t]));
        let y = y_clean.add(&e.map(model.psi()));
        let nu_sys = y.sub(&sys_pred.map(c));
        let x_post = sys_pred.add(&nu_sys.map(k));
        let u = x_post.map(l);

        j_c += x.sub(&x_star).expect_quadratic(obj.q()[t].as_matrix(), &cov);
        j_d += nu_sys.expect_quadratic(obj.r()[t].as_matrix(), &cov);

        sys_pred = x_post.map(a).add(&u.map(b));
        theta = theta.map(&hat.a_hat).add(&e.map(&hat.b_hat));
        att_pred = x_hat_att.map(a).add(&u.map(b)).add(&e.map(model.gamma()));
        x = x.map(a).add(&u.map(b)).add(&e.map(model.gamma())).add(&w);
    }
    (j_d, j_c)
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
