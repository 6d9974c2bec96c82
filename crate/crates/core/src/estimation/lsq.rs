//! Weighted nonlinear least squares on top of `levenberg-marquardt`.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Residual function returning already-weighted residuals r_k/σ_k.
pub(crate) struct Problem<'a> {
    f: &'a (dyn Fn(&[f64]) -> Option<Vec<f64>> + Sync),
    x: DVector<f64>,
    scale: Vec<f64>,
}

impl Problem<'_> {
    fn eval(&self, x: &[f64]) -> Option<Vec<f64>> {
        let r = (self.f)(x)?;
        r.iter().all(|v| v.is_finite()).then_some(r)
    }
}

/// Central-difference Jacobian of `f` at `x` with steps 1e-6·max(|x_i|, scale_i).
pub(crate) fn jacobian(
    f: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    x: &[f64],
    scale: &[f64],
) -> Option<DMatrix<f64>> {
    let mut cols = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(scale[i]);
        xp[i] = x[i] + h;
        let up = f(&xp)?;
        xp[i] = x[i] - h;
        let down = f(&xp)?;
        xp[i] = x[i];
        cols.push(DVector::from_iterator(up.len(), up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h))));
    }
    Some(DMatrix::from_columns(&cols))
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.x.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.x.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        self.eval(self.x.as_slice()).map(DVector::from_vec)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        jacobian(&|x| self.eval(x), self.x.as_slice(), &self.scale)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub x: Vec<f64>,
    /// (JᵀJ)⁻¹ of the weighted residuals.
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub dof: usize,
}

/// Minimizes Σ r_k² from `x0`. `scale` sets the finite-difference floor of
/// each parameter.
pub(crate) fn minimize(
    f: &(dyn Fn(&[f64]) -> Option<Vec<f64>> + Sync),
    x0: &[f64],
    scale: &[f64],
) -> Result<Solution> {
    let problem = Problem {
        f,
        x: DVector::from_column_slice(x0),
        scale: scale.to_vec(),
    };
    let (problem, report) = LevenbergMarquardt::new()
        .with_ftol(1e-14)
        .with_xtol(1e-14)
        .with_gtol(1e-14)
        .with_patience(400)
        .minimize(problem);
    if report.termination.was_usage_issue() {
        return Err(Error::Fit(format!("optimizer rejected the problem: {:?}", report.termination)));
    }
    let x = problem.x.as_slice().to_vec();
    let r = problem
        .residuals()
        .ok_or_else(|| Error::Fit(format!("residuals not finite at the optimum ({:?})", report.termination)))?;
    let j = problem
        .jacobian()
        .ok_or_else(|| Error::Fit("Jacobian not finite at the optimum".into()))?;
    let jtj = j.transpose() * &j;
    let covariance = jtj
        .clone()
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-14).ok())
        .ok_or_else(|| Error::Fit("normal matrix is singular".into()))?;
    Ok(Solution {
        chi2: r.norm_squared(),
        dof: r.len().saturating_sub(x.len()),
        x,
        covariance,
    })
}
