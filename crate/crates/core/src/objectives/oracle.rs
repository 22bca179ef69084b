//! Explicit score-matching losses that use the true score, available only for
//! simulated data, and their comparison with the implicit objectives.

use rayon::prelude::*;

use super::{support_for, ScoreMatching};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{IntensityModel, Jet, ScoreJet, ScoreKind, TypeJets};
use crate::weights::WeightFunction;

/// `Σ_n ½(ψ_θ(t_n) − ψ_true(t_n))² h_n` for every sequence.
pub fn explicit_loss_per_sequence(
    model: &dyn IntensityModel,
    params: &[f64],
    truth: &[f64],
    data: &Dataset,
    weight: WeightFunction,
    kind: ScoreKind,
) -> Result<Vec<f64>> {
    let prepared = weight.prepare(data, support_for(kind))?;
    let seqs = prepared.data.sequences();
    (0..seqs.len())
        .into_par_iter()
        .map(|m| {
            let seq = &seqs[m];
            let history = seq.history();
            let mut jets = TypeJets::for_model(model);
            let mut total = Jet::default();
            let mut fit = ScoreJet::default();
            let mut true_score = ScoreJet::default();
            let mut value = 0.0;
            for (n, w) in prepared.weights[m].iter().enumerate() {
                if w.h == 0.0 {
                    continue;
                }
                let t = seq.times()[n];
                model.eval_jets(params, t, history.prefix(n), false, &mut jets)?;
                jets.total_into(&mut total);
                fit.fill(&total, kind);
                model.eval_jets(truth, t, history.prefix(n), false, &mut jets)?;
                jets.total_into(&mut total);
                true_score.fill(&total, kind);
                let d = fit.psi - true_score.psi;
                value += 0.5 * d * d * w.h;
            }
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::non_finite_in(m))
            }
        })
        .collect()
}

/// Differences of the explicit and implicit losses between two parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGap {
    /// `L̂(θ₁) − L̂(θ₂)`.
    pub lhs: f64,
    /// `Ĵ(θ₁) − Ĵ(θ₂)`.
    pub rhs: f64,
    /// Standard error of the mean per-sequence `lhs − rhs`.
    pub std_err: f64,
}

impl OracleGap {
    /// `|lhs − rhs|` in standard errors.
    pub fn z_score(&self) -> f64 {
        let d = (self.lhs - self.rhs).abs();
        if self.std_err > 0.0 {
            d / self.std_err
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Compares explicit and implicit weighted score matching between `p1` and
/// `p2` on data generated with `truth`.
pub fn explicit_oracle_gap(
    model: &dyn IntensityModel,
    p1: &[f64],
    p2: &[f64],
    truth: &[f64],
    data: &Dataset,
    weight: WeightFunction,
    kind: ScoreKind,
) -> Result<OracleGap> {
    let l1 = explicit_loss_per_sequence(model, p1, truth, data, weight, kind)?;
    let l2 = explicit_loss_per_sequence(model, p2, truth, data, weight, kind)?;
    let implicit = ScoreMatching::new(model, data, weight, kind)?;
    let j1 = implicit.per_sequence_values(p1)?;
    let j2 = implicit.per_sequence_values(p2)?;
    let m = l1.len();
    if m == 0 {
        return Ok(OracleGap {
            lhs: 0.0,
            rhs: 0.0,
            std_err: 0.0,
        });
    }
    let diffs: Vec<f64> = (0..m).map(|i| (l1[i] - l2[i]) - (j1[i] - j2[i])).collect();
    let mf = m as f64;
    let lhs = l1.iter().zip(&l2).map(|(a, b)| a - b).sum::<f64>() / mf;
    let rhs = j1.iter().zip(&j2).map(|(a, b)| a - b).sum::<f64>() / mf;
    let mean = diffs.iter().sum::<f64>() / mf;
    let var = if m > 1 {
        diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (mf - 1.0)
    } else {
        0.0
    };
    Ok(OracleGap {
        lhs,
        rhs,
        std_err: (var / mf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::HawkesModel;
    use crate::sequence::EventSequence;

    fn data() -> Dataset {
        Dataset::new(
            vec![
                EventSequence::new(vec![0.2, 0.5, 1.9], 3.0).unwrap(),
                EventSequence::new(vec![1.1, 2.4], 3.0).unwrap(),
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn identical_arguments_give_zero_gap() {
        let m = HawkesModel::exponential(1, 5.0);
        let p = [0.8, 1.2];
        let g = explicit_oracle_gap(&m, &p, &p, &[1.0, 1.6], &data(), WeightFunction::tent(), ScoreKind::Conditional)
            .unwrap();
        assert_eq!((g.lhs, g.rhs), (0.0, 0.0));
    }

    #[test]
    fn explicit_loss_vanishes_at_truth() {
        let m = HawkesModel::exponential(1, 5.0);
        let truth = [1.0, 1.6];
        let l = explicit_loss_per_sequence(&m, &truth, &truth, &data(), WeightFunction::tent(), ScoreKind::Conditional)
            .unwrap();
        assert!(l.iter().all(|&v| v == 0.0));
        let l = explicit_loss_per_sequence(&m, &[0.5, 0.5], &truth, &data(), WeightFunction::tent(), ScoreKind::Conditional)
            .unwrap();
        assert!(l.iter().all(|&v| v >= 0.0) && l.iter().any(|&v| v > 0.0));
    }
}
