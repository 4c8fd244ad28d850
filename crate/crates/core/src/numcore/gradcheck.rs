//! Central finite-difference verification of analytic gradients.

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Compares `analytic` against central differences of `f` at `params`.
///
/// Each coordinate is perturbed by `±h`; the relative error of coordinate
/// `i` is `|analytic_i − numeric_i| / max(1, |analytic_i|)`. Returns the
/// maximum over coordinates.
pub fn finite_diff_check<F>(mut f: F, params: &[f64], analytic: &[f64], h: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "one analytic value per parameter");
    let mut theta = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + h;
        let up = f(&theta);
        theta[i] = orig - h;
        let down = f(&theta);
        theta[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}

/// Like [`finite_diff_check`] but only over the listed coordinates; used for
/// models too large to sweep exhaustively.
pub fn finite_diff_check_coords<F>(
    mut f: F,
    params: &[f64],
    analytic: &[f64],
    coords: &[usize],
    h: f64,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let mut theta = params.to_vec();
    let mut worst: f64 = 0.0;
    for &i in coords {
        let orig = theta[i];
        theta[i] = orig + h;
        let up = f(&theta);
        theta[i] = orig - h;
        let down = f(&theta);
        theta[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max((analytic[i] - numeric).abs() / analytic[i].abs().max(1.0));
    }
    worst
}
