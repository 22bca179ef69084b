use proptest::prelude::*;
use tpp_core::models::{compensator, d2log_intensity_dt2, dlog_intensity_dt, intensity, HawkesModel, SinePoisson};
use tpp_core::sequence::SequenceRecord;
use tpp_core::weights::{Support, WeightValue};
use tpp_core::{EventSequence, IntensityModel, WeightFunction, WeightKind};

/// Strictly increasing times in (0, t_end) with optional marks.
fn sequence(max_len: usize, k: usize) -> impl Strategy<Value = EventSequence> {
    (1.0f64..12.0, prop::collection::vec((0.0f64..1.0, 0..k), 0..max_len)).prop_filter_map(
        "ties",
        move |(t_end, raw)| {
            let mut times: Vec<f64> = raw.iter().map(|(u, _)| t_end * (0.001 + 0.998 * u)).collect();
            times.sort_by(f64::total_cmp);
            if times.windows(2).any(|w| w[1] - w[0] < 1e-6) {
                return None;
            }
            let marks: Vec<usize> = raw.iter().map(|(_, m)| *m).collect();
            if k == 1 {
                EventSequence::new(times, t_end).ok()
            } else {
                EventSequence::with_marks(times, marks, t_end, k).ok()
            }
        },
    )
}

fn models() -> Vec<(Box<dyn IntensityModel>, Vec<f64>)> {
    vec![
        (Box::new(SinePoisson::default()), vec![1.3]),
        (Box::new(HawkesModel::exponential(2, 5.0)), vec![1.0, 0.7, 1.6, 0.2, 1.0, 1.0]),
        (Box::new(HawkesModel::gaussian(2)), vec![1.0, 0.7, 0.6, 0.2, 0.5, 0.4, 0.8]),
        (Box::new(HawkesModel::half_sin(2)), vec![0.4, 0.7, 0.3, 0.2, 0.1, 0.4]),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(seq in sequence(20, 3)) {
        let rec: SequenceRecord = serde_json::from_str(&seq.to_json_line()).unwrap();
        prop_assert_eq!(EventSequence::from_record(rec, 3).unwrap(), seq);
    }

    #[test]
    fn history_lengths(seq in sequence(20, 1)) {
        for n in 0..=seq.len() {
            prop_assert_eq!(seq.history_before(n).unwrap().len(), n);
        }
        prop_assert!(seq.history_before(seq.len() + 1).is_err());
    }

    #[test]
    fn compensator_additive_and_monotone(seq in sequence(15, 2), u in 0.0f64..1.0, v in 0.0f64..1.0, w in 0.0f64..1.0) {
        let mut cuts = [u, v, w].map(|x| x * seq.t_end());
        cuts.sort_by(f64::total_cmp);
        let [a, b, c] = cuts;
        for (model, p) in models().iter().skip(1) {
            let h = seq.history();
            let ab = compensator(model.as_ref(), p, a, b, h).unwrap();
            let bc = compensator(model.as_ref(), p, b, c, h).unwrap();
            let ac = compensator(model.as_ref(), p, a, c, h).unwrap();
            prop_assert!((ab + bc - ac).abs() < 1e-10 * ac.max(1.0), "{} {ab} {bc} {ac}", model.name());
            prop_assert!(ab >= 0.0 && ac >= ab);
        }
        let sp = SinePoisson::default();
        let ab = compensator(&sp, &[1.3], a, b, seq.history()).unwrap();
        let ac = compensator(&sp, &[1.3], a, c, seq.history()).unwrap();
        prop_assert!(ab >= 0.0 && ac >= ab - 1e-12);
    }

    #[test]
    fn log_intensity_derivatives_match_differences(seq in sequence(10, 2), u in 0.05f64..0.95) {
        let t = u * seq.t_end();
        // keep clear of kernel kinks at event times and at the half-sine end
        let clear = seq.times().iter().all(|&tj| (t - tj).abs() > 1e-3 && (t - tj - std::f64::consts::PI).abs() > 1e-3);
        prop_assume!(clear);
        for (model, p) in models() {
            let h = seq.history().before(t);
            let step = 1e-6 * t.max(1.0);
            let lp = intensity(model.as_ref(), &p, t + step, h, None).unwrap().ln();
            let lm = intensity(model.as_ref(), &p, t - step, h, None).unwrap().ln();
            let fd = (lp - lm) / (2.0 * step);
            let an = dlog_intensity_dt(model.as_ref(), &p, t, h, None).unwrap();
            prop_assert!((an - fd).abs() <= 1e-5 * an.abs().max(1.0), "{} {an} {fd}", model.name());
            let dp = dlog_intensity_dt(model.as_ref(), &p, t + step, h, None).unwrap();
            let dm = dlog_intensity_dt(model.as_ref(), &p, t - step, h, None).unwrap();
            let fd2 = (dp - dm) / (2.0 * step);
            let an2 = d2log_intensity_dt2(model.as_ref(), &p, t, h, None).unwrap();
            prop_assert!((an2 - fd2).abs() <= 1e-5 * an2.abs().max(1.0), "{} {an2} {fd2}", model.name());
        }
    }

    #[test]
    fn weights_nonnegative(seq in sequence(20, 1)) {
        for kind in [WeightKind::TentH0, WeightKind::ProductH1, WeightKind::SqrtH2, WeightKind::PoissonDistance] {
            let w = WeightFunction::new(kind);
            for support in [Support::WindowEnd, Support::NextEvent] {
                for v in w.sequence_weights(&seq, seq.t_end(), false, support).unwrap() {
                    prop_assert!(v.h >= 0.0 && v.h.is_finite() && v.dh.is_finite());
                }
            }
        }
    }

    #[test]
    fn weights_vanish_at_boundaries(prev in 0.0f64..5.0, gap in 0.1f64..5.0, tail in 0.1f64..5.0) {
        let t_end = prev + gap + tail;
        let at = |t: f64, kind: WeightKind| -> WeightValue {
            let times = if prev > 0.0 { vec![prev, t] } else { vec![t] };
            let seq = EventSequence::new(times, t_end).unwrap();
            WeightFunction::new(kind).weight_and_derivative(&seq, seq.len() - 1, t_end, false).unwrap()
        };
        for kind in [WeightKind::TentH0, WeightKind::ProductH1, WeightKind::SqrtH2] {
            prop_assert!(at(t_end, kind).h.abs() < 1e-12);
            // the left boundary itself is not a valid time; approach it
            prop_assert!(at(prev + 1e-14, kind).h.abs() < 1e-6);
        }
    }

    #[test]
    fn tent_dominates_lipschitz_candidates(prev in 0.0f64..5.0, len in 0.1f64..5.0, knots in prop::collection::vec(-1.0f64..1.0, 1..6), u in 0.0f64..1.0) {
        let t_end = prev + len;
        let t = prev + u * len;
        prop_assume!(t > prev);
        let times = if prev > 0.0 { vec![prev, t] } else { vec![t] };
        let seq = EventSequence::new(times, t_end).unwrap();
        let tent = WeightFunction::tent().weight_and_derivative(&seq, seq.len() - 1, t_end, false).unwrap().h;
        // the product weight scaled by 1/len is 1-Lipschitz and vanishes at both ends
        let h1 = WeightFunction::new(WeightKind::ProductH1).weight_and_derivative(&seq, seq.len() - 1, t_end, false).unwrap().h;
        prop_assert!(tent >= h1 / len - 1e-12);
        // random 1-Lipschitz piecewise-linear g with g(a) = g(b) = 0
        let n = knots.len() + 1;
        let dx = len / n as f64;
        let mut slopes: Vec<f64> = knots.clone();
        slopes.push(-knots.iter().sum::<f64>());
        let max = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        prop_assume!(max > 0.0);
        let slopes: Vec<f64> = slopes.iter().map(|s| s / max).collect();
        let mut g = 0.0;
        let mut x = prev;
        for s in &slopes {
            let end = x + dx;
            if t <= end {
                g += s * (t - x);
                break;
            }
            g += s * dx;
            x = end;
        }
        prop_assert!(tent >= g.abs() - 1e-12, "tent {tent} g {g}");
    }

    #[test]
    fn tent_derivative_integrates(prev in 0.0f64..5.0, len in 0.1f64..5.0, u in 0.01f64..0.99, v in 0.01f64..0.99) {
        let t_end = prev + len;
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let at = |t: f64| {
            let times = if prev > 0.0 { vec![prev, t] } else { vec![t] };
            let seq = EventSequence::new(times, t_end).unwrap();
            WeightFunction::tent().weight_and_derivative(&seq, seq.len() - 1, t_end, false).unwrap()
        };
        let (a, b) = (prev + lo * len, prev + hi * len);
        let steps = 20_000;
        let dx = (b - a) / steps as f64;
        let mut integral = 0.0;
        for i in 0..steps {
            let x0 = a + i as f64 * dx;
            integral += 0.5 * (at(x0).dh + at(x0 + dx).dh) * dx;
        }
        prop_assert!((at(b).h - at(a).h - integral).abs() < 1e-6 * len.max(1.0) + 2.0 * dx);
    }
}
