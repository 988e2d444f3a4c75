//! Solvers for the normal equations `R x = y` (real symmetric `R`, complex
//! `y`): Cholesky, Jacobi and Gauss-Seidel.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::linalg::{
    condition_estimate, dot_real_complex, norm, power_iteration, Cholesky, SymMatrix, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolverMethod {
    #[default]
    Direct,
    Jacobi,
    GaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub method: SolverMethod,
    /// Relative residual target `‖Rx − y‖ ≤ tol·‖y‖` for iterative methods.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Direct solves reject matrices whose condition estimate exceeds this.
    pub condition_limit: f64,
    /// Power-iteration steps used by the condition and spectral estimates.
    pub spectral_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            method: SolverMethod::Direct,
            tolerance: 1e-10,
            max_iterations: 10_000,
            condition_limit: 1e12,
            spectral_iterations: 30,
        }
    }
}

impl SolverSettings {
    pub fn with_method(mut self, method: SolverMethod) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverWarning {
    /// `2·diag(R) − R` is not positive definite, so Jacobi is not guaranteed
    /// to converge.
    JacobiPrecondition,
    /// `R` is not positive definite, so Gauss-Seidel is not guaranteed to
    /// converge.
    GaussSeidelPrecondition,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveDiagnostics {
    pub method: SolverMethod,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Spectral radius of the iteration matrix (iterative methods).
    pub spectral_radius: Option<f64>,
    /// 2-norm condition estimate (direct method).
    pub condition: Option<f64>,
    /// Outcome of the convergence precheck (iterative methods).
    pub precheck_passed: Option<bool>,
    pub warnings: Vec<SolverWarning>,
}

fn relative_residual(r: &SymMatrix, x: &[C64], y: &[C64]) -> f64 {
    let rx = r.mul_vec(x);
    let res: Vec<C64> = rx.iter().zip(y).map(|(a, b)| a - b).collect();
    let ny = norm(y);
    if ny == 0.0 {
        norm(&res)
    } else {
        norm(&res) / ny
    }
}

/// Solves `R x = y`.
pub fn solve_normal_equations(
    r: &SymMatrix,
    y: &[C64],
    settings: &SolverSettings,
) -> Result<(Vec<C64>, SolveDiagnostics)> {
    assert_eq!(r.dim(), y.len(), "right-hand side has wrong length");
    match settings.method {
        SolverMethod::Direct => solve_direct(r, y, settings),
        SolverMethod::Jacobi => solve_jacobi(r, y, settings),
        SolverMethod::GaussSeidel => solve_gauss_seidel(r, y, settings),
    }
}

fn solve_direct(
    r: &SymMatrix,
    y: &[C64],
    settings: &SolverSettings,
) -> Result<(Vec<C64>, SolveDiagnostics)> {
    let chol = Cholesky::new(r).ok_or(Error::Rank {
        condition: f64::INFINITY,
    })?;
    let condition = condition_estimate(r, &chol, settings.spectral_iterations);
    if !(condition <= settings.condition_limit) {
        return Err(Error::Rank { condition });
    }
    let x = chol.solve(y);
    let diag = SolveDiagnostics {
        method: SolverMethod::Direct,
        iterations: 1,
        relative_residual: relative_residual(r, &x, y),
        condition: Some(condition),
        ..Default::default()
    };
    Ok((x, diag))
}

/// Jacobi converges iff `R` and `2·diag(R) − R` are both positive definite.
pub fn jacobi_precheck(r: &SymMatrix) -> bool {
    if Cholesky::new(r).is_none() {
        return false;
    }
    let mut twice_diag_minus = r.clone();
    twice_diag_minus.scale(-1.0);
    for i in 0..r.dim() {
        twice_diag_minus.add_to(i, i, 2.0 * r.get(i, i));
    }
    Cholesky::new(&twice_diag_minus).is_some()
}

/// Spectral radius of the Jacobi iteration matrix `I − D⁻¹R`.
pub fn jacobi_spectral_radius(r: &SymMatrix, iterations: usize) -> f64 {
    let n = r.dim();
    let d = r.diagonal();
    power_iteration(n, iterations, |x| {
        let rx = r.mul_vec_real(x);
        (0..n).map(|i| x[i] - rx[i] / d[i]).collect()
    })
}

fn solve_jacobi(
    r: &SymMatrix,
    y: &[C64],
    settings: &SolverSettings,
) -> Result<(Vec<C64>, SolveDiagnostics)> {
    let n = r.dim();
    let d = r.diagonal();
    if d.contains(&0.0) {
        return Err(Error::Rank {
            condition: f64::INFINITY,
        });
    }
    let precheck = jacobi_precheck(r);
    let mut diag = SolveDiagnostics {
        method: SolverMethod::Jacobi,
        precheck_passed: Some(precheck),
        spectral_radius: Some(jacobi_spectral_radius(r, settings.spectral_iterations)),
        ..Default::default()
    };
    if !precheck {
        diag.warnings.push(SolverWarning::JacobiPrecondition);
    }
    let mut x = vec![C64::zero(); n];
    let mut next = vec![C64::zero(); n];
    for it in 1..=settings.max_iterations {
        for i in 0..n {
            let off = dot_real_complex(r.row(i), &x) - x[i] * d[i];
            next[i] = (y[i] - off) / d[i];
        }
        core::mem::swap(&mut x, &mut next);
        let res = relative_residual(r, &x, y);
        if !res.is_finite() {
            return Err(Error::Solver {
                iterations: it,
                residual: res,
            });
        }
        if res <= settings.tolerance || norm(y) == 0.0 {
            diag.iterations = it;
            diag.relative_residual = res;
            return Ok((x, diag));
        }
    }
    Err(Error::Solver {
        iterations: settings.max_iterations,
        residual: relative_residual(r, &x, y),
    })
}

fn solve_gauss_seidel(
    r: &SymMatrix,
    y: &[C64],
    settings: &SolverSettings,
) -> Result<(Vec<C64>, SolveDiagnostics)> {
    let n = r.dim();
    let d = r.diagonal();
    if d.contains(&0.0) {
        return Err(Error::Rank {
            condition: f64::INFINITY,
        });
    }
    let precheck = Cholesky::new(r).is_some();
    let mut diag = SolveDiagnostics {
        method: SolverMethod::GaussSeidel,
        precheck_passed: Some(precheck),
        ..Default::default()
    };
    if !precheck {
        diag.warnings.push(SolverWarning::GaussSeidelPrecondition);
    }
    let mut x = vec![C64::zero(); n];
    let mut prev_step = f64::NAN;
    let mut ratio = None;
    for it in 1..=settings.max_iterations {
        let mut step = 0.0;
        for i in 0..n {
            let off = dot_real_complex(r.row(i), &x) - x[i] * d[i];
            let xi = (y[i] - off) / d[i];
            step += (xi - x[i]).norm_sqr();
            x[i] = xi;
        }
        let step = step.sqrt();
        if prev_step > 0.0 && step > 0.0 {
            ratio = Some(step / prev_step);
        }
        prev_step = step;
        let res = relative_residual(r, &x, y);
        if !res.is_finite() {
            return Err(Error::Solver {
                iterations: it,
                residual: res,
            });
        }
        if res <= settings.tolerance || norm(y) == 0.0 {
            diag.iterations = it;
            diag.relative_residual = res;
            diag.spectral_radius = ratio;
            return Ok((x, diag));
        }
    }
    Err(Error::Solver {
        iterations: settings.max_iterations,
        residual: relative_residual(r, &x, y),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CodeModel, SystemConfig};
    use crate::estimator::stacked::{all_periods, StackedMatrix, SymbolSource};
    use crate::model::{generate_codes, generate_symbols};
    use crate::rng::{complex_gaussian, trial_stream};

    #[test]
    fn diagonal_system_takes_one_jacobi_step() {
        let r = SymMatrix::scaled_identity(5, 7.0);
        let y: Vec<C64> = (0..5).map(|i| C64::new(i as f64, 2.0)).collect();
        let settings = SolverSettings::default().with_method(SolverMethod::Jacobi);
        let (x, diag) = solve_normal_equations(&r, &y, &settings).unwrap();
        assert_eq!(diag.iterations, 1);
        for (xi, yi) in x.iter().zip(&y) {
            assert!((xi - yi / 7.0).norm() < 1e-15);
        }
        assert_eq!(diag.precheck_passed, Some(true));
    }

    #[test]
    fn gauss_seidel_matches_direct_below_unit_load() {
        let cfg = SystemConfig::new(25, 50, 1, 1).with_code_model(CodeModel::Independent);
        let mut s = trial_stream(11, "gs", 0);
        let codes = generate_codes(&cfg, &mut s);
        let sym = generate_symbols(&cfg, &mut s);
        let st = StackedMatrix::build(&codes, &sym.symbols, &all_periods(1), SymbolSource::Truth)
            .unwrap();
        let r = st.gram();
        let y: Vec<C64> = (0..25).map(|_| complex_gaussian(&mut s, 1.0)).collect();
        let (xd, _) = solve_normal_equations(&r, &y, &SolverSettings::default()).unwrap();
        let gs = SolverSettings::default().with_method(SolverMethod::GaussSeidel);
        let (xg, diag) = solve_normal_equations(&r, &y, &gs).unwrap();
        assert_eq!(diag.precheck_passed, Some(true));
        let err: Vec<C64> = xd.iter().zip(&xg).map(|(a, b)| a - b).collect();
        assert!(norm(&err) / norm(&xd) < 1e-8);
    }

    #[test]
    fn singular_matrix_is_a_rank_error() {
        let r = SymMatrix::from_row_major(2, vec![1.0, 1.0, 1.0, 1.0]);
        let y = vec![C64::new(1.0, 0.0); 2];
        assert!(matches!(
            solve_normal_equations(&r, &y, &SolverSettings::default()),
            Err(Error::Rank { .. })
        ));
    }

    #[test]
    fn ill_conditioned_matrix_is_a_rank_error() {
        let r = SymMatrix::from_row_major(2, vec![1.0, 0.0, 0.0, 1e-14]);
        let y = vec![C64::new(1.0, 0.0); 2];
        let err = solve_normal_equations(&r, &y, &SolverSettings::default()).unwrap_err();
        match err {
            Error::Rank { condition } => assert!(condition > 1e12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jacobi_warns_and_fails_when_precondition_is_violated() {
        // unit diagonal with a large eigenvalue of R: 2I − R indefinite
        let r = SymMatrix::from_row_major(3, vec![1.0, 0.9, 0.9, 0.9, 1.0, 0.9, 0.9, 0.9, 1.0]);
        assert!(!jacobi_precheck(&r));
        assert!(jacobi_spectral_radius(&r, 200) > 1.0);
        let y = vec![C64::new(1.0, 0.0); 3];
        let settings = SolverSettings {
            max_iterations: 200,
            ..SolverSettings::default().with_method(SolverMethod::Jacobi)
        };
        match solve_normal_equations(&r, &y, &settings) {
            Err(Error::Solver { iterations, .. }) => assert!(iterations <= 200),
            other => panic!("expected solver error, got {other:?}"),
        }
        // Gauss-Seidel still converges: R is positive definite.
        let gs = SolverSettings::default().with_method(SolverMethod::GaussSeidel);
        assert!(solve_normal_equations(&r, &y, &gs).is_ok());
    }
}
