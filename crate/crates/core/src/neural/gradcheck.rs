//! Central finite-difference gradient checking.

use super::store::{Gradients, ParamId, ParamStore};
use crate::error::{Error, Result};

/// Denominator floor for the relative error, so that near-zero gradients
/// are compared absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    pub tolerance: f64,
    pub step: f64,
    /// Restrict to these parameters; all when empty.
    pub only: Vec<ParamId>,
}

impl GradCheckOptions {
    pub fn new(tolerance: f64) -> Self {
        GradCheckOptions {
            tolerance,
            step: 1e-5,
            only: Vec::new(),
        }
    }
}

/// Compare analytic and finite-difference gradients of a scalar function.
///
/// `f` returns the function value and its analytic gradient at the
/// current parameter values.
pub fn grad_check<F>(store: &mut ParamStore, f: F, tolerance: f64) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<(f64, Gradients)>,
{
    grad_check_with(store, f, &GradCheckOptions::new(tolerance))
}

pub fn grad_check_with<F>(
    store: &mut ParamStore,
    mut f: F,
    options: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<(f64, Gradients)>,
{
    let (value, analytic) = f(store)?;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("function value {value}")));
    }
    if !analytic.is_finite() {
        return Err(Error::NonFinite("analytic gradient".into()));
    }

    let ids: Vec<ParamId> = if options.only.is_empty() {
        store.ids().collect()
    } else {
        options.only.clone()
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        checked: 0,
        tolerance: options.tolerance,
    };
    let h = options.step;
    for id in ids {
        let len = store.value(id).len();
        for flat in 0..len {
            let original = flat_get(store, id, flat);
            flat_set(store, id, flat, original + h);
            let plus = f(store)?.0;
            flat_set(store, id, flat, original - h);
            let minus = f(store)?.0;
            flat_set(store, id, flat, original);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "perturbed value of {}[{flat}]",
                    store.name(id)
                )));
            }
            let numeric = (plus - minus) / (2.0 * h);
            let exact = analytic.get(id).as_slice().expect("standard layout")[flat];
            let denom = exact.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
            let err = (exact - numeric).abs() / denom;
            report.checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((store.name(id).to_owned(), flat));
            }
        }
    }
    Ok(report)
}

fn flat_get(store: &ParamStore, id: ParamId, flat: usize) -> f64 {
    store.value(id).as_slice().expect("standard layout")[flat]
}

fn flat_set(store: &mut ParamStore, id: ParamId, flat: usize, value: f64) {
    store.value_mut(id).as_slice_mut().expect("standard layout")[flat] = value;
}
