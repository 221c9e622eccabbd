use super::graph::{Graph, Var};
use super::params::{ParamId, ParamStore};
use crate::error::Result;

/// Result of comparing backward() against central differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Largest `|analytic - numeric|` over all coordinates.
    pub max_abs_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub coordinates: usize,
}

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Finite-difference formula used by [`finite_diff_check_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// `(f(x+h) - f(x-h)) / 2h`.
    #[default]
    Central,
    /// `(-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h`; fourth-order, so a
    /// larger `h` keeps roundoff below the truncation error.
    FivePoint,
}

/// Checks every coordinate of every parameter with central differences.
///
/// `loss` must build a deterministic scalar loss on the given graph.
pub fn finite_diff_check<F>(params: &mut ParamStore, h: f64, loss: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<'_>) -> Result<Var>,
{
    finite_diff_check_with(params, h, Stencil::Central, loss)
}

pub fn finite_diff_check_with<F>(params: &mut ParamStore, h: f64, stencil: Stencil, loss: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<'_>) -> Result<Var>,
{
    let grads = {
        let mut g = Graph::new(params);
        let l = loss(&mut g)?;
        g.backward(l)?
    };
    let eval = |store: &ParamStore| -> Result<f64> {
        let mut g = Graph::new(store);
        let l = loss(&mut g)?;
        Ok(g.scalar(l))
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        max_abs_error: 0.0,
        worst: None,
        coordinates: 0,
    };
    let ids: Vec<ParamId> = params.ids().collect();
    for id in ids {
        let n = params.get(id).len();
        let analytic = grads.dense(id, n);
        for (i, &a) in analytic.iter().enumerate() {
            let orig = params.get(id).data()[i];
            let mut at = |d: f64| -> Result<f64> {
                params.get_mut(id).data_mut()[i] = orig + d;
                eval(params)
            };
            let numeric = match stencil {
                Stencil::Central => (at(h)? - at(-h)?) / (2.0 * h),
                Stencil::FivePoint => (8.0 * (at(h)? - at(-h)?) - (at(2.0 * h)? - at(-2.0 * h)?)) / (12.0 * h),
            };
            params.get_mut(id).data_mut()[i] = orig;
            let err = relative_error(a, numeric);
            report.max_abs_error = report.max_abs_error.max((a - numeric).abs());
            report.coordinates += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((params.name(id).to_string(), i));
            }
        }
    }
    Ok(report)
}
