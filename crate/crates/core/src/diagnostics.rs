//! Goodness-of-fit by time rescaling.

use crate::dataset::Dataset;
use crate::error::Result;
use crate::models::IntensityModel;

/// Inter-event gaps on the compensator clock, pooled over the dataset.
///
/// Sequences are laid end to end: the unobserved tail `Λ(t_N, T)` of one
/// sequence is carried into the first gap of the next. Under the true model
/// the gaps are then i.i.d. unit exponentials; per-sequence gaps alone are
/// not, because the window censors long gaps.
pub fn rescaled_intervals(model: &dyn IntensityModel, params: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(data.num_events());
    let mut carry = 0.0;
    for seq in data.sequences() {
        let history = seq.history();
        let mut prev = 0.0;
        for (n, &t) in seq.times().iter().enumerate() {
            out.push(carry + model.compensator(params, prev, t, history.prefix(n), None)?);
            carry = 0.0;
            prev = t;
        }
        carry += model.compensator(params, prev, seq.t_end(), history, None)?;
    }
    Ok(out)
}

/// One-sample Kolmogorov–Smirnov test against the unit exponential.
/// Returns the statistic and its asymptotic p-value.
pub fn ks_exponential(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = 1.0 - (-x.max(0.0)).exp();
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    let sn = nf.sqrt();
    (d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

/// `P(K > x)` for the Kolmogorov distribution.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
