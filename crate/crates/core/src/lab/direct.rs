use super::{check_grid, g_value, membership_diagnostic, spectral_of};
use crate::error::{Error, Result};
use crate::models::{Membership, ModelElement, OperatorModel};
use crate::stieltjes::StieltjesFunction;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub t: f64,
    pub cesaro_norm: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateVerdict {
    AllWithinBound,
    /// The grid points where `‖C_t x‖ > bound + tol`.
    Violations(Vec<f64>),
}

/// `‖C_t x‖` against `4M‖g(A)x‖/g(1/t)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub g: String,
    pub model: String,
    pub element: String,
    pub semigroup_bound: f64,
    pub g_norm: f64,
    pub t_grid: Vec<f64>,
    pub rows: Vec<RateRow>,
    pub max_ratio: f64,
    pub verdict: RateVerdict,
}

impl RateReport {
    pub fn within_bound(&self) -> bool {
        self.verdict == RateVerdict::AllWithinBound
    }

    /// `t,cesaro_norm,bound,ratio` with one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,cesaro_norm,bound,ratio\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.t, r.cesaro_norm, r.bound, r.ratio);
        }
        out
    }
}

/// Compares `‖C_t x‖` with `4M‖g(A)x‖/g(1/t)` for `x ∈ dom(g(A))`.
pub fn direct_rate_check(
    model: &OperatorModel,
    g: &StieltjesFunction,
    x: &ModelElement,
    t_grid: &[f64],
    tol: f64,
) -> Result<RateReport> {
    check_grid(t_grid)?;
    let phi = spectral_of(g);
    let inner = tol * 1e-3;
    let g_norm = match membership_diagnostic(model, phi.as_ref(), x, inner)? {
        Membership::Member { .. } => model.spectral_norm(phi.as_ref(), x, inner)?,
        other => {
            return Err(Error::PreconditionFailed(format!(
                "{} is not certified to lie in dom(g(A)) (membership {})",
                x.label(),
                other.name()
            )))
        }
    };
    let m = model.semigroup_bound();
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let cesaro_norm = model.cesaro_norm(t, x, inner)?;
            let bound = 4.0 * m * g_norm / g_value(g, 1.0 / t, inner)?;
            let ratio = if bound > 0.0 { cesaro_norm / bound } else { 0.0 };
            Ok(RateRow { t, cesaro_norm, bound, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations: Vec<f64> = rows.iter().filter(|r| r.cesaro_norm > r.bound + tol).map(|r| r.t).collect();
    let max_ratio = rows.iter().fold(0.0f64, |a, r| a.max(r.ratio));
    Ok(RateReport {
        g: g.name(),
        model: model.label(),
        element: x.label(),
        semigroup_bound: m,
        g_norm,
        t_grid: t_grid.to_vec(),
        rows,
        max_ratio,
        verdict: if violations.is_empty() { RateVerdict::AllWithinBound } else { RateVerdict::Violations(violations) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::default_t_grid;
    use crate::models::L1Element;

    #[test]
    fn window_is_within_bound() {
        let g = StieltjesFunction::power(0.5).unwrap();
        let x = ModelElement::L1(L1Element::window(1.0, 2.0).unwrap());
        let r = direct_rate_check(&OperatorModel::L1, &g, &x, &[1.0, 10.0, 100.0], 1e-8).unwrap();
        assert!(r.within_bound());
        // ‖g(A)u‖ = ∫_1^2 √s ds
        let oracle = 2.0 / 3.0 * (2f64.powf(1.5) - 1.0);
        assert!((r.g_norm - oracle).abs() < 1e-9);
        for row in &r.rows {
            assert_eq!(row.ratio, row.cesaro_norm / row.bound);
        }
    }

    #[test]
    fn matrix_example_has_large_slack() {
        let g = StieltjesFunction::power(0.5).unwrap();
        let m = OperatorModel::matrix(vec![1.0]).unwrap();
        let r = direct_rate_check(&m, &g, &ModelElement::Vector(vec![1.0]), &[100.0], 1e-8).unwrap();
        let row = r.rows[0];
        assert!((row.cesaro_norm - (1.0 - (-100.0f64).exp()) / 100.0).abs() < 1e-15);
        // g(1/t) = √t = 10, so the bound is 4·1·1/10
        assert!((row.bound - 0.4).abs() < 1e-12);
        assert!(r.within_bound());
    }

    #[test]
    fn zero_has_zero_ratios() {
        let g = StieltjesFunction::power(0.5).unwrap();
        let x = ModelElement::L1(L1Element::zero());
        let r = direct_rate_check(&OperatorModel::L1, &g, &x, &default_t_grid(), 1e-8).unwrap();
        assert!(r.rows.iter().all(|row| row.ratio == 0.0));
        assert!(r.to_csv().starts_with("t,cesaro_norm,bound,ratio\n1,0,0,0\n"));
    }

    #[test]
    fn non_members_are_rejected() {
        let g = StieltjesFunction::power(0.5).unwrap();
        let x = ModelElement::L1(L1Element::power(1.5).unwrap());
        assert!(matches!(
            direct_rate_check(&OperatorModel::L1, &g, &x, &[1.0], 1e-8),
            Err(Error::PreconditionFailed(_))
        ));
    }
}
