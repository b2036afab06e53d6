//! The discrete-time plant
//!
//! ```text
//! x_{t+1} = A x_t + B u_t + Γ e_t + w_t
//! y_t     = C x_t + Ψ e_t + v_t
//! ```
//!
//! with structural validation and noise sampling.

use nalgebra::Cholesky;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{numerical_rank, Matrix, SymmetricMatrix, Vector};

/// Relative singular-value cutoff for the observability, controllability and
/// attack-injectivity rank tests.
pub const RANK_CUTOFF: f64 = 1e-8;

/// Raw matrices of a plant, before shape checking.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParts {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub gamma: Matrix,
    pub psi: Matrix,
    pub sigma_w: Matrix,
    pub sigma_v: Matrix,
    pub sigma_x: Matrix,
    pub x_bar: Vector,
}

/// A shape-checked plant. Immutable once built; Cholesky factors of the noise
/// covariances are cached when they exist.
#[derive(Clone, Debug)]
pub struct SystemModel {
    parts: ModelParts,
    sigma_w: SymmetricMatrix,
    sigma_v: SymmetricMatrix,
    sigma_x: SymmetricMatrix,
    chol_w: Option<Matrix>,
    chol_v: Option<Matrix>,
    chol_x: Option<Matrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantState {
    pub x: Vector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub observable: bool,
    pub controllable: bool,
    pub attack_injective: bool,
    pub noise_pd: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.observable && self.controllable && self.attack_injective && self.noise_pd
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "observable       {}", self.observable)?;
        writeln!(f, "controllable     {}", self.controllable)?;
        writeln!(f, "attack_injective {}", self.attack_injective)?;
        writeln!(f, "noise_pd         {}", self.noise_pd)?;
        for m in &self.messages {
            writeln!(f, "  - {m}")?;
        }
        write!(f, "accepted         {}", self.accepted())
    }
}

fn lower_cholesky(m: &Matrix) -> Option<Matrix> {
    if m.is_empty() {
        return Some(m.clone());
    }
    Cholesky::new(m.clone()).map(|c| c.l())
}

impl SystemModel {
    pub fn new(parts: ModelParts) -> Result<Self> {
        const CTX: &str = "SystemModel::new";
        let n = parts.a.nrows();
        let want = |name: &str, m: &Matrix, r: usize, c: usize| -> Result<()> {
            if m.shape() != (r, c) {
                return Err(Error::shape(
                    CTX,
                    format!("{name} must be {r}x{c}, got {}x{}", m.nrows(), m.ncols()),
                ));
            }
            Ok(())
        };
        want("A", &parts.a, n, n)?;
        let m = parts.b.ncols();
        want("B", &parts.b, n, m)?;
        let p = parts.c.nrows();
        want("C", &parts.c, p, n)?;
        let s = parts.gamma.ncols();
        want("Gamma", &parts.gamma, n, s)?;
        want("Psi", &parts.psi, p, s)?;
        want("Sigma_w", &parts.sigma_w, n, n)?;
        want("Sigma_v", &parts.sigma_v, p, p)?;
        want("Sigma_x", &parts.sigma_x, n, n)?;
        if parts.x_bar.len() != n {
            return Err(Error::shape(CTX, format!("x_bar must have length {n}")));
        }
        let sigma_w = SymmetricMatrix::new(parts.sigma_w.clone())?;
        let sigma_v = SymmetricMatrix::new(parts.sigma_v.clone())?;
        let sigma_x = SymmetricMatrix::new(parts.sigma_x.clone())?;
        Ok(SystemModel {
            chol_w: lower_cholesky(&sigma_w),
            chol_v: lower_cholesky(&sigma_v),
            chol_x: lower_cholesky(&sigma_x),
            parts,
            sigma_w,
            sigma_v,
            sigma_x,
        })
    }

    pub fn parts(&self) -> &ModelParts {
        &self.parts
    }
    pub fn a(&self) -> &Matrix {
        &self.parts.a
    }
    pub fn b(&self) -> &Matrix {
        &self.parts.b
    }
    pub fn c(&self) -> &Matrix {
        &self.parts.c
    }
    pub fn gamma(&self) -> &Matrix {
        &self.parts.gamma
    }
    pub fn psi(&self) -> &Matrix {
        &self.parts.psi
    }
    pub fn sigma_w(&self) -> &SymmetricMatrix {
        &self.sigma_w
    }
    pub fn sigma_v(&self) -> &SymmetricMatrix {
        &self.sigma_v
    }
    pub fn sigma_x(&self) -> &SymmetricMatrix {
        &self.sigma_x
    }
    pub fn x_bar(&self) -> &Vector {
        &self.parts.x_bar
    }

    /// State dimension n.
    pub fn n(&self) -> usize {
        self.parts.a.nrows()
    }
    /// Input dimension m.
    pub fn m(&self) -> usize {
        self.parts.b.ncols()
    }
    /// Output dimension p.
    pub fn p(&self) -> usize {
        self.parts.c.nrows()
    }
    /// Attack dimension s.
    pub fn s(&self) -> usize {
        self.parts.gamma.ncols()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Fails with [`Error::InvalidModel`] unless every structural assumption holds.
    pub fn ensure_valid(&self) -> Result<ValidationReport> {
        let report = validate(self);
        if report.accepted() {
            Ok(report)
        } else {
            Err(Error::InvalidModel(report.messages.clone()))
        }
    }

    /// Draw `(w, v)` with `w ~ N(0, Σ_w)` and `v ~ N(0, Σ_v)`.
    ///
    /// # Panics
    ///
    /// If either noise covariance is not positive definite. [`validate`]
    /// reports this as `noise_pd = false`.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vector, Vector) {
        let lw = self
            .chol_w
            .as_ref()
            .expect("sample_noise requires a positive definite Sigma_w");
        let lv = self
            .chol_v
            .as_ref()
            .expect("sample_noise requires a positive definite Sigma_v");
        (lw * standard_normal(rng, self.n()), lv * standard_normal(rng, self.p()))
    }

    /// Draw an initial state from `N(x̄, Σ_x)`.
    pub fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> PlantState {
        let lx = self
            .chol_x
            .as_ref()
            .expect("sample_initial_state requires a positive definite Sigma_x");
        PlantState {
            x: self.x_bar() + lx * standard_normal(rng, self.n()),
        }
    }
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vector {
    Vector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Stack `[C; CA; …; CA^{n-1}]`.
pub fn observability_matrix(a: &Matrix, c: &Matrix) -> Matrix {
    let n = a.nrows();
    let p = c.nrows();
    let mut out = Matrix::zeros(p * n, n);
    let mut block = c.clone();
    for i in 0..n {
        out.view_mut((i * p, 0), (p, n)).copy_from(&block);
        block = &block * a;
    }
    out
}

/// `[B, AB, …, A^{n-1}B]`.
pub fn controllability_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = Matrix::zeros(n, m * n);
    let mut block = b.clone();
    for i in 0..n {
        out.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = a * &block;
    }
    out
}

pub fn validate(model: &SystemModel) -> ValidationReport {
    let n = model.n();
    let mut messages = Vec::new();

    let observable = numerical_rank(&observability_matrix(model.a(), model.c()), RANK_CUTOFF) == n;
    if !observable {
        messages.push("observable: (A, C) is not observable".to_string());
    }
    let controllable =
        numerical_rank(&controllability_matrix(model.a(), model.b()), RANK_CUTOFF) == n;
    if !controllable {
        messages.push("controllable: (A, B) is not controllable".to_string());
    }

    let s = model.s();
    let mut stacked = Matrix::zeros(n + model.p(), s);
    stacked.view_mut((0, 0), (n, s)).copy_from(model.gamma());
    stacked.view_mut((n, 0), (model.p(), s)).copy_from(model.psi());
    let rank = numerical_rank(&stacked, RANK_CUTOFF);
    let attack_injective = s > 0 && rank == s;
    if !attack_injective {
        messages.push(format!(
            "attack_injective: [Gamma; Psi] has rank {rank} < {s} columns; remove redundant attack columns"
        ));
    }

    let mut noise_pd = true;
    for (name, factor) in [
        ("Sigma_w", &model.chol_w),
        ("Sigma_v", &model.chol_v),
        ("Sigma_x", &model.chol_x),
    ] {
        if factor.is_none() {
            noise_pd = false;
            messages.push(format!("noise_pd: {name} is not positive definite"));
        }
    }

    ValidationReport {
        observable,
        controllable,
        attack_injective,
        noise_pd,
        messages,
    }
}

/// `A x + B u + Γ e + w`.
pub fn step(model: &SystemModel, state: &PlantState, u: &Vector, e: &Vector, w: &Vector) -> PlantState {
    PlantState {
        x: model.a() * &state.x + model.b() * u + model.gamma() * e + w,
    }
}

/// Returns `(y, y_clean)` where `y_clean = C x + v` is what the attacker reads
/// before tampering and `y = y_clean + Ψ e` is what the system receives.
pub fn output(model: &SystemModel, state: &PlantState, e: &Vector, v: &Vector) -> (Vector, Vector) {
    let y_clean = model.c() * &state.x + v;
    let y = &y_clean + model.psi() * e;
    (y, y_clean)
}
