//! Matrix-analytic primitives: Riccati and Lyapunov fixed points, the
//! Moore–Penrose pseudoinverse, chi-squared quantiles and definiteness
//! certificates.
//!
//! Everything here is a pure function of its inputs.

use std::ops::Deref;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value cutoff used by [`pseudo_inverse`] throughout the crate.
pub const PINV_CUTOFF: f64 = 1e-11;

/// Relative eigenvalue slack used when certifying positive semidefiniteness.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// A square matrix stored symmetrized, `(M + Mᵀ) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::shape(
                "SymmetricMatrix::new",
                format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols()),
            ));
        }
        Ok(Self::symmetrize(m))
    }

    fn symmetrize(m: Matrix) -> Self {
        let t = m.transpose();
        SymmetricMatrix((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        SymmetricMatrix(Matrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix(Matrix::zeros(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymmetricMatrix(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    pub fn definiteness(&self) -> DefinitenessReport {
        definiteness(&self.0, PSD_TOLERANCE)
    }

    /// Inverse through a Cholesky factorization.
    pub fn inverse_pd(&self, context: &'static str) -> Result<SymmetricMatrix> {
        let chol = cholesky(&self.0, context)?;
        Ok(Self::symmetrize(chol.inverse()))
    }
}

impl Deref for SymmetricMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl From<SymmetricMatrix> for Matrix {
    fn from(s: SymmetricMatrix) -> Matrix {
        s.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefinitenessReport {
    pub min_eigenvalue: f64,
    pub max_abs_eigenvalue: f64,
    pub is_psd: bool,
    pub is_pd: bool,
    pub tolerance_used: f64,
}

/// Eigenvalue-based definiteness certificate of the symmetric part of `m`.
///
/// PSD means `λ_min ≥ −tol·(1 + |λ|_max)`, PD means `λ_min > tol·(1 + |λ|_max)`.
pub fn definiteness(m: &Matrix, tol: f64) -> DefinitenessReport {
    if m.is_empty() {
        return DefinitenessReport {
            min_eigenvalue: f64::INFINITY,
            max_abs_eigenvalue: 0.0,
            is_psd: true,
            is_pd: true,
            tolerance_used: tol,
        };
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let min = eig.min();
    let max_abs = eig.amax();
    let slack = tol * (1.0 + max_abs);
    DefinitenessReport {
        min_eigenvalue: min,
        max_abs_eigenvalue: max_abs,
        is_psd: min >= -slack,
        is_pd: min > slack,
        tolerance_used: tol,
    }
}

pub(crate) fn cholesky(m: &Matrix, context: &'static str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::Definiteness {
        context,
        min_eigenvalue: definiteness(m, PSD_TOLERANCE).min_eigenvalue,
    })
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Thin SVD `(U, σ, V)` with `σ` sorted nonincreasing.
pub fn svd(m: &Matrix) -> (Matrix, Vector, Matrix) {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (Matrix::zeros(rows, 0), Vector::zeros(0), Matrix::zeros(cols, 0));
    }
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = fm.thin_svd().expect("SVD converges on finite input");
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    (
        Matrix::from_fn(rows, k, |i, j| u[(i, j)]),
        Vector::from_fn(k, |i, _| s[i]),
        Matrix::from_fn(cols, k, |i, j| v[(i, j)]),
    )
}

/// Number of singular values above `rel_cutoff · σ_max`.
pub fn numerical_rank(m: &Matrix, rel_cutoff: f64) -> usize {
    let (_, sv, _) = svd(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_cutoff * smax).count()
}

/// Moore–Penrose pseudoinverse by SVD, discarding singular values at or
/// below `cutoff · σ_max`.
pub fn pseudo_inverse(m: &Matrix, cutoff: f64) -> Matrix {
    let (rows, cols) = m.shape();
    let (u, sv, v) = svd(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let mut out = Matrix::zeros(cols, rows);
    if smax == 0.0 {
        return out;
    }
    for (i, &s) in sv.iter().enumerate() {
        if s > cutoff * smax {
            out += (v.column(i) * u.column(i).transpose()) / s;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiOptions {
    /// Stop when `‖X_{k+1} − X_k‖_F ≤ tolerance · ‖X_{k+1}‖_F`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        RiccatiOptions {
            tolerance: 1e-13,
            max_iterations: 100_000,
        }
    }
}

fn check_square(m: &Matrix, n: usize, context: &'static str, name: &str) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::shape(
            context,
            format!("{name} must be {n}x{n}, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

/// Steady prediction covariance of the Kalman filter:
/// `P = APAᵀ + Σ_w − APCᵀ(CPCᵀ + Σ_v)⁻¹CPAᵀ`.
pub fn solve_filter_dare(
    a: &Matrix,
    c: &Matrix,
    sigma_w: &SymmetricMatrix,
    sigma_v: &SymmetricMatrix,
) -> Result<SymmetricMatrix> {
    solve_filter_dare_with(a, c, sigma_w, sigma_v, RiccatiOptions::default())
}

pub fn solve_filter_dare_with(
    a: &Matrix,
    c: &Matrix,
    sigma_w: &SymmetricMatrix,
    sigma_v: &SymmetricMatrix,
    opts: RiccatiOptions,
) -> Result<SymmetricMatrix> {
    const CTX: &str = "solve_filter_dare";
    let n = a.nrows();
    check_square(a, n, CTX, "A")?;
    if c.ncols() != n {
        return Err(Error::shape(CTX, format!("C must have {n} columns")));
    }
    let p_out = c.nrows();
    check_square(sigma_w, n, CTX, "Sigma_w")?;
    check_square(sigma_v, p_out, CTX, "Sigma_v")?;

    let at = a.transpose();
    let ct = c.transpose();
    let mut p = sigma_w.as_matrix().clone();
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let apct = a * &p * &ct;
        let innov = c * &p * &ct + sigma_v.as_matrix();
        let chol = cholesky(&innov, CTX)?;
        let next = a * &p * &at + sigma_w.as_matrix() - &apct * chol.solve(&apct.transpose());
        let next = (&next + next.transpose()) * 0.5;
        if !next.iter().all(|x| x.is_finite()) {
            break;
        }
        change = (&next - &p).amax() / next.amax().max(f64::MIN_POSITIVE);
        p = next;
        if change <= opts.tolerance {
            return SymmetricMatrix::new(p);
        }
    }
    Err(Error::Diverged {
        solver: CTX,
        iterations: opts.max_iterations,
        last_change: change,
    })
}

/// Steady LQR cost-to-go matrix:
/// `S = AᵀSA + Q′ − AᵀSB(BᵀSB + R′)⁻¹BᵀSA`.
pub fn solve_control_dare(
    a: &Matrix,
    b: &Matrix,
    qp: &SymmetricMatrix,
    rp: &SymmetricMatrix,
) -> Result<SymmetricMatrix> {
    solve_control_dare_with(a, b, qp, rp, RiccatiOptions::default())
}

pub fn solve_control_dare_with(
    a: &Matrix,
    b: &Matrix,
    qp: &SymmetricMatrix,
    rp: &SymmetricMatrix,
    opts: RiccatiOptions,
) -> Result<SymmetricMatrix> {
    const CTX: &str = "solve_control_dare";
    let n = a.nrows();
    check_square(a, n, CTX, "A")?;
    if b.nrows() != n {
        return Err(Error::shape(CTX, format!("B must have {n} rows")));
    }
    let m = b.ncols();
    check_square(qp, n, CTX, "Qp")?;
    check_square(rp, m, CTX, "Rp")?;

    let at = a.transpose();
    let bt = b.transpose();
    let mut s = qp.as_matrix().clone();
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let btsa = &bt * &s * a;
        let inner = &bt * &s * b + rp.as_matrix();
        let chol = cholesky(&inner, CTX)?;
        let next = &at * &s * a + qp.as_matrix() - btsa.transpose() * chol.solve(&btsa);
        let next = (&next + next.transpose()) * 0.5;
        if !next.iter().all(|x| x.is_finite()) {
            break;
        }
        change = (&next - &s).amax() / next.amax().max(f64::MIN_POSITIVE);
        s = next;
        if change <= opts.tolerance {
            return SymmetricMatrix::new(s);
        }
    }
    Err(Error::Diverged {
        solver: CTX,
        iterations: opts.max_iterations,
        last_change: change,
    })
}

const LYAPUNOV_DIRECT_MAX: usize = 50;

/// Unique solution of `Σ = FΣFᵀ + W` for stable `F`.
pub fn solve_discrete_lyapunov(f: &Matrix, w: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    const CTX: &str = "solve_discrete_lyapunov";
    let n = f.nrows();
    check_square(f, n, CTX, "F")?;
    check_square(w, n, CTX, "W")?;
    let rho = spectral_radius(f);
    if rho >= 1.0 {
        return Err(Error::Unstable {
            context: CTX,
            spectral_radius: rho,
        });
    }
    if n == 0 {
        return Ok(SymmetricMatrix::zeros(0));
    }
    if n <= LYAPUNOV_DIRECT_MAX {
        // vec(FΣFᵀ) = (F ⊗ F) vec(Σ) for column-major vec.
        let kron = f.kronecker(f);
        let lhs = Matrix::identity(n * n, n * n) - kron;
        let rhs = Vector::from_column_slice(w.as_slice());
        let sol = lhs
            .lu()
            .solve(&rhs)
            .ok_or(Error::Unstable {
                context: CTX,
                spectral_radius: rho,
            })?;
        return SymmetricMatrix::new(Matrix::from_column_slice(n, n, sol.as_slice()));
    }
    // Smith doubling: Σ_{k+1} = Σ_k + F_k Σ_k F_kᵀ, F_{k+1} = F_k².
    let mut sigma = w.as_matrix().clone();
    let mut fk = f.clone();
    for _ in 0..64 {
        let term = &fk * &sigma * fk.transpose();
        let done = term.norm() <= 1e-16 * sigma.norm();
        sigma += term;
        fk = &fk * &fk;
        if done {
            return SymmetricMatrix::new(sigma);
        }
    }
    Err(Error::Diverged {
        solver: CTX,
        iterations: 64,
        last_change: f64::NAN,
    })
}

/// CDF of the chi-squared distribution with `dof` degrees of freedom.
pub fn chi_square_cdf(x: f64, dof: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(dof as f64 / 2.0, x / 2.0)
}

fn chi_square_pdf(x: f64, dof: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = dof as f64 / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - statrs::function::gamma::ln_gamma(k))
        .exp()
}

/// Threshold `τ` with `P(χ²_dof ≤ τ) = prob`.
///
/// Bracketed Newton iteration on the regularized lower incomplete gamma
/// function; falls back to bisection whenever a Newton step leaves the bracket.
pub fn chi_square_quantile(prob: f64, dof: u32) -> Result<f64> {
    const CTX: &str = "chi_square_quantile";
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::domain(CTX, format!("prob must lie in (0,1), got {prob}")));
    }
    if dof == 0 {
        return Err(Error::domain(CTX, "dof must be positive"));
    }
    let k = dof as f64;
    let mut lo = 0.0;
    let mut hi = k.max(1.0);
    while chi_square_cdf(hi, dof) < prob {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = chi_square_cdf(x, dof) - prob;
        if fx.abs() <= 1e-15 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = chi_square_pdf(x, dof);
        let newton = if d > 0.0 { x - fx / d } else { f64::NAN };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(x)
}
