//! Per-event weights `h_n(T)` and their weak derivatives `∂h_n/∂t_n`.
//!
//! A valid weight vanishes at both ends of the support of `t_n`. For the
//! fixed-window kinds the support is `[t_{n-1}, T]` with `t_0 = 0`; the
//! fixed-length kind uses `[t_{n-1}, t_{n+1}]`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::sequence::EventSequence;

/// Denominator floor for the square-root weight's derivative.
pub const SQRT_DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// Distance from `t_n` to the nearer end of `[t_{n-1}, T]`.
    TentH0,
    /// `(t_n − t_{n-1})(T − t_n)`.
    ProductH1,
    /// `√((t_n − t_{n-1})(T − t_n))`.
    SqrtH2,
    /// `min(t_n − t_{n-1}, t_{n+1} − t_n)` for sequences truncated to a
    /// common length.
    FixedLength,
    /// Distance of the whole sequence to the boundary of the ordered simplex
    /// `{0 ≤ t_1 ≤ … ≤ t_N ≤ T}`, shared by every coordinate.
    PoissonDistance,
    /// `h ≡ 1`. Does not vanish on the boundary; plain (autoregressive)
    /// score matching is this weight.
    Unit,
}

/// How the right end `T` of each event's support is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Each sequence's own observation window.
    #[default]
    #[serde(rename = "fixed_T", alias = "fixed_t")]
    FixedT,
    /// The largest event time of the batch, for data whose `T` is unknown.
    /// Biased when sequences were observed over different windows.
    #[serde(rename = "batch_max_T", alias = "batch_max_t")]
    BatchMaxT,
    /// Truncate every sequence to the shortest length in the batch and use
    /// the fixed-length weight; the final kept event only bounds its
    /// predecessor and receives `h = 0`.
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightFunction {
    pub kind: WeightKind,
    #[serde(default)]
    pub window_mode: WindowMode,
}

/// Right end of the support of `t_n` used by the window-based kinds.
///
/// Conditional (autoregressive) scores treat `t_n` as ranging over
/// `[t_{n-1}, T]`. With the joint score of a Poisson process `t_n` is also
/// bounded by its successor, so the support is `[t_{n-1}, t_{n+1}]` with
/// `t_{N+1} = T`; a weight that does not vanish at `t_{n+1}` leaves a
/// boundary term that biases the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    #[default]
    WindowEnd,
    NextEvent,
}

/// `(h_n, ∂h_n/∂t_n)` for one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightValue {
    pub h: f64,
    pub dh: f64,
    /// Set when the square-root weight's derivative hit the denominator floor.
    pub clamped: bool,
}

impl WeightValue {
    fn new(h: f64, dh: f64) -> Self {
        Self {
            h,
            dh,
            clamped: false,
        }
    }
}

impl WeightFunction {
    pub fn new(kind: WeightKind) -> Self {
        Self {
            kind,
            window_mode: if kind == WeightKind::FixedLength {
                WindowMode::Truncate
            } else {
                WindowMode::FixedT
            },
        }
    }

    pub fn with_window_mode(kind: WeightKind, window_mode: WindowMode) -> Self {
        Self { kind, window_mode }
    }

    pub fn tent() -> Self {
        Self::new(WeightKind::TentH0)
    }

    pub fn unit() -> Self {
        Self::new(WeightKind::Unit)
    }

    /// Weight of event `n` (zero-based) of `seq` with support end `t_end`.
    ///
    /// `truncated` marks sequences cut to a common length, where the final
    /// event is a boundary for the fixed-length weight.
    pub fn weight_and_derivative(
        &self,
        seq: &EventSequence,
        n: usize,
        t_end: f64,
        truncated: bool,
    ) -> Result<WeightValue> {
        self.weight_with_support(seq, n, t_end, truncated, Support::WindowEnd)
    }

    /// As [`weight_and_derivative`](Self::weight_and_derivative) with an
    /// explicit support.
    pub fn weight_with_support(
        &self,
        seq: &EventSequence,
        n: usize,
        t_end: f64,
        truncated: bool,
        support: Support,
    ) -> Result<WeightValue> {
        let times = seq.times();
        if n >= times.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: times.len(),
            });
        }
        let t = times[n];
        let prev = if n == 0 { 0.0 } else { times[n - 1] };
        let t_end = match support {
            Support::WindowEnd => t_end,
            Support::NextEvent => times.get(n + 1).copied().unwrap_or(t_end),
        };
        Ok(match self.kind {
            WeightKind::TentH0 => tent_between(prev, t, t_end),
            WeightKind::ProductH1 => {
                let left = t - prev;
                let right = t_end - t;
                WeightValue::new(left * right, right - left)
            }
            WeightKind::SqrtH2 => sqrt_weight(prev, t, t_end),
            WeightKind::FixedLength => match times.get(n + 1) {
                Some(&next) => tent_between(prev, t, next),
                None if truncated => WeightValue::new(0.0, 0.0),
                None => {
                    return Err(Error::UnsupportedContext(
                        "fixed-length weight needs a following event; truncate the batch".into(),
                    ))
                }
            },
            WeightKind::PoissonDistance => {
                let (h, grad) = poisson_distance_weight(times, t_end);
                WeightValue::new(h, grad[n])
            }
            WeightKind::Unit => WeightValue::new(1.0, 0.0),
        })
    }

    /// Weights of every event of `seq`.
    pub fn sequence_weights(
        &self,
        seq: &EventSequence,
        t_end: f64,
        truncated: bool,
        support: Support,
    ) -> Result<Vec<WeightValue>> {
        if self.kind == WeightKind::PoissonDistance {
            let (h, grad) = poisson_distance_weight(seq.times(), t_end);
            return Ok(grad.into_iter().map(|g| WeightValue::new(h, g)).collect());
        }
        (0..seq.len())
            .map(|n| self.weight_with_support(seq, n, t_end, truncated, support))
            .collect()
    }

    /// Applies the window mode to a dataset: returns the (possibly truncated)
    /// dataset together with every sequence's weights.
    pub fn prepare(&self, data: &Dataset, support: Support) -> Result<PreparedWeights> {
        let (data, truncated) = match self.window_mode {
            WindowMode::Truncate => (data.truncate_to_min(), true),
            _ => (data.clone(), false),
        };
        let batch_end = match self.window_mode {
            WindowMode::BatchMaxT => Some(data.max_event_time().unwrap_or(0.0)),
            _ => None,
        };
        let weights = data
            .sequences()
            .iter()
            .map(|s| self.sequence_weights(s, batch_end.unwrap_or(s.t_end()), truncated, support))
            .collect::<Result<Vec<_>>>()?;
        let clamped = weights.iter().flatten().filter(|w| w.clamped).count();
        if clamped > 0 {
            log::debug!("{clamped} square-root weight derivatives hit the denominator floor");
        }
        Ok(PreparedWeights { data, weights })
    }
}

/// A dataset after window handling, with the weight of every event.
#[derive(Debug, Clone)]
pub struct PreparedWeights {
    pub data: Dataset,
    pub weights: Vec<Vec<WeightValue>>,
}

impl Dataset {
    /// Cut every sequence to the length of the shortest one.
    pub fn truncate_to_min(&self) -> Dataset {
        let n = self.min_length();
        let seqs = self.sequences().iter().map(|s| s.truncated(n)).collect();
        Dataset::new(seqs, self.num_types()).expect("prefixes of valid sequences are valid")
    }
}

/// Distance from `t` to the nearer of `lo`, `hi`; slope −1 at the midpoint.
fn tent_between(lo: f64, t: f64, hi: f64) -> WeightValue {
    let left = t - lo;
    let right = hi - t;
    if left < right {
        WeightValue::new(left, 1.0)
    } else {
        WeightValue::new(right, -1.0)
    }
}

fn sqrt_weight(prev: f64, t: f64, t_end: f64) -> WeightValue {
    let left = t - prev;
    let right = t_end - t;
    let prod = left * right;
    let h = prod.max(0.0).sqrt();
    let denom = 2.0 * h;
    let clamped = denom < SQRT_DENOM_FLOOR;
    WeightValue {
        h,
        dh: (right - left) / denom.max(SQRT_DENOM_FLOOR),
        clamped,
    }
}

/// Distance of `times` to the boundary of `{0 ≤ t_1 ≤ … ≤ t_N ≤ T}` and its
/// weak gradient, taken from the nearest facet.
pub fn poisson_distance_weight(times: &[f64], t_end: f64) -> (f64, Vec<f64>) {
    let n = times.len();
    let mut grad = vec![0.0; n];
    if n == 0 {
        return (t_end, grad);
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    // facet 0: t_1 ≥ 0; facets 1..n-1: t_{i+1} ≥ t_i; facet n: t_N ≤ T
    let mut best = (times[0], 0usize);
    for i in 1..n {
        let d = (times[i] - times[i - 1]) / sqrt2;
        if d < best.0 {
            best = (d, i);
        }
    }
    let last = t_end - times[n - 1];
    if last < best.0 {
        best = (last, n);
    }
    let (h, facet) = best;
    match facet {
        0 => grad[0] = 1.0,
        f if f == n => grad[n - 1] = -1.0,
        f => {
            grad[f - 1] = -1.0 / sqrt2;
            grad[f] = 1.0 / sqrt2;
        }
    }
    (h, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(times: &[f64], t_end: f64) -> EventSequence {
        EventSequence::new(times.to_vec(), t_end).unwrap()
    }

    fn eval(kind: WeightKind, times: &[f64], n: usize, t_end: f64) -> WeightValue {
        WeightFunction::new(kind)
            .weight_and_derivative(&seq(times, t_end), n, t_end, false)
            .unwrap()
    }

    #[test]
    fn tent_left_of_midpoint() {
        let w = eval(WeightKind::TentH0, &[2.0, 4.0], 1, 10.0);
        assert_eq!((w.h, w.dh), (2.0, 1.0));
        let w = eval(WeightKind::TentH0, &[2.0, 8.0], 1, 10.0);
        assert_eq!((w.h, w.dh), (2.0, -1.0));
        // kink takes the right limit
        let w = eval(WeightKind::TentH0, &[2.0, 6.0], 1, 10.0);
        assert_eq!((w.h, w.dh), (4.0, -1.0));
    }

    #[test]
    fn tent_vanishes_at_window_end() {
        let w = eval(WeightKind::TentH0, &[2.0, 10.0], 1, 10.0);
        assert_eq!(w.h, 0.0);
        assert_eq!(tent_between(2.0, 2.0, 10.0).h, 0.0);
    }

    #[test]
    fn product_weight() {
        let w = eval(WeightKind::ProductH1, &[2.0, 4.0], 1, 10.0);
        assert_eq!((w.h, w.dh), (12.0, 4.0));
    }

    #[test]
    fn sqrt_weight_midpoint() {
        let w = eval(WeightKind::SqrtH2, &[5.0], 0, 10.0);
        assert_eq!((w.h, w.dh), (5.0, 0.0));
        assert!(!w.clamped);
        let w = eval(WeightKind::SqrtH2, &[10.0], 0, 10.0);
        assert!(w.clamped && w.dh.is_finite() && w.h == 0.0);
    }

    #[test]
    fn fixed_length_weight() {
        let w = eval(WeightKind::FixedLength, &[1.0, 2.0, 5.0], 1, 10.0);
        assert_eq!((w.h, w.dh), (1.0, 1.0));
        let f = WeightFunction::new(WeightKind::FixedLength);
        let s = seq(&[1.0, 2.0, 5.0], 10.0);
        assert!(matches!(
            f.weight_and_derivative(&s, 2, 10.0, false),
            Err(Error::UnsupportedContext(_))
        ));
        let last = f.weight_and_derivative(&s, 2, 10.0, true).unwrap();
        assert_eq!(last.h, 0.0);
        assert!(matches!(
            f.weight_and_derivative(&s, 3, 10.0, true),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn config_names() {
        let w: WeightFunction = serde_json::from_str(r#"{"kind": "tent_h0", "window_mode": "fixed_T"}"#).unwrap();
        assert_eq!(w, WeightFunction::tent());
        let w: WeightFunction = serde_json::from_str(r#"{"kind": "sqrt_h2", "window_mode": "batch_max_T"}"#).unwrap();
        assert_eq!(w.window_mode, WindowMode::BatchMaxT);
        assert_eq!(serde_json::to_string(&WindowMode::FixedT).unwrap(), "\"fixed_T\"");
    }

    #[test]
    fn next_event_support() {
        let f = WeightFunction::new(WeightKind::ProductH1);
        let s = seq(&[2.0, 4.0, 5.0], 10.0);
        let w = f.weight_with_support(&s, 1, 10.0, false, Support::NextEvent).unwrap();
        assert_eq!((w.h, w.dh), (2.0, -1.0));
        let last = f.weight_with_support(&s, 2, 10.0, false, Support::NextEvent).unwrap();
        assert_eq!((last.h, last.dh), (5.0, 4.0));
    }

    #[test]
    fn poisson_distance_examples() {
        let (h, g) = poisson_distance_weight(&[3.0, 7.0], 10.0);
        assert!((h - 4.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((g[0] + 1.0 / 2f64.sqrt()).abs() < 1e-15 && (g[1] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let (h, g) = poisson_distance_weight(&[1e-9, 5.0], 10.0);
        assert_eq!((h, g[0]), (1e-9, 1.0));
        let (h, _) = poisson_distance_weight(&[5.0], 10.0);
        assert_eq!(h, 5.0);
    }

    #[test]
    fn prepare_window_modes() {
        let a = seq(&[1.0, 2.0, 3.0], 10.0);
        let b = seq(&[4.0, 6.0], 8.0);
        let d = Dataset::new(vec![a, b], 1).unwrap();

        let batch = WeightFunction::with_window_mode(WeightKind::TentH0, WindowMode::BatchMaxT);
        let p = batch.prepare(&d, Support::WindowEnd).unwrap();
        // T = 6: second sequence's last event sits on the boundary
        assert_eq!(p.weights[1][1].h, 0.0);

        let trunc = WeightFunction::new(WeightKind::FixedLength);
        let p = trunc.prepare(&d, Support::WindowEnd).unwrap();
        assert_eq!(p.data.sequences()[0].times(), &[1.0, 2.0]);
        assert_eq!(p.weights[0][0].h, 1.0);
        assert_eq!(p.weights[0][1].h, 0.0);
    }
}
