//! Intensity curves of fitted models on a time grid.

use serde::Serialize;
use tpp_core::models::intensity;
use tpp_core::{Error, History, IntensityModel, Result};

/// `λ_k(t)` for each labelled parameter vector and type on a common grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curves {
    pub header: Vec<String>,
    pub grid: Vec<f64>,
    /// `columns[c][i]` is column `c` at `grid[i]`.
    pub columns: Vec<Vec<f64>>,
}

impl Curves {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut head = vec!["t".to_string()];
        head.extend(self.header.iter().cloned());
        w.write_record(&head).map_err(csv_err)?;
        for (i, t) in self.grid.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.columns.iter().map(|c| c[i].to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `n` equally spaced points on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Evaluates every `(label, θ)` on `grid`. Hawkes intensities condition on
/// the events of `history` strictly before each grid point; one column per
/// type is written for marked models, labelled `label:k` with 1-based `k`.
pub fn export_intensity_curves(
    model: &dyn IntensityModel,
    params: &[(String, Vec<f64>)],
    grid: &[f64],
    history: History<'_>,
    t_end: f64,
) -> Result<Curves> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::DomainError("curve grid must be strictly increasing".into()));
    }
    if grid.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return Err(Error::DomainError(format!("curve grid must lie in [0, {t_end}]")));
    }
    let k = model.num_types();
    let mut header = Vec::new();
    let mut columns = Vec::new();
    for (label, theta) in params {
        for ty in 0..k {
            header.push(if k == 1 { label.clone() } else { format!("{label}:{}", ty + 1) });
            let col = grid
                .iter()
                .map(|&t| intensity(model, theta, t, history.before(t), if k == 1 { None } else { Some(ty) }))
                .collect::<Result<Vec<_>>>()?;
            columns.push(col);
        }
    }
    Ok(Curves {
        header,
        grid: grid.to_vec(),
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tpp_core::models::{HawkesModel, SinePoisson};
    use tpp_core::EventSequence;

    #[test]
    fn sine_curve_at_zero() {
        let m = SinePoisson::default();
        let grid = uniform_grid(2.0, 5);
        let c = export_intensity_curves(&m, &[("truth".into(), vec![2.0])], &grid, History::empty(), 2.0).unwrap();
        assert_eq!(c.columns[0][0], 1.0);
        assert!((c.columns[0][2] - (2.0 * 1.0f64.sin()).exp()).abs() < 1e-14);
        assert!(c.to_csv().unwrap().starts_with("t,truth\n0,1\n"));
    }

    #[test]
    fn truth_column_matches_intensity() {
        let m = HawkesModel::exponential(2, 5.0);
        let s = EventSequence::with_marks(vec![0.5, 1.0, 2.5], vec![0, 1, 0], 4.0, 2).unwrap();
        let p = vec![1.0, 1.0, 1.6, 0.2, 1.0, 1.0];
        let grid = uniform_grid(4.0, 41);
        let c = export_intensity_curves(&m, &[("truth".into(), p.clone())], &grid, s.history(), 4.0).unwrap();
        assert_eq!(c.header, vec!["truth:1", "truth:2"]);
        for (i, &t) in grid.iter().enumerate() {
            let h = s.history().before(t);
            assert_eq!(c.columns[1][i], intensity(&m, &p, t, h, Some(1)).unwrap());
        }
    }

    #[test]
    fn nearby_estimates_give_nearby_curves() {
        let m = HawkesModel::gaussian(1);
        let s = EventSequence::new(vec![0.5, 1.0, 2.5], 4.0).unwrap();
        let a = vec![1.0, 0.8, 1.0];
        let b: Vec<f64> = a.iter().map(|x| x + 1e-6).collect();
        let grid = uniform_grid(4.0, 4001);
        let c = export_intensity_curves(&m, &[("a".into(), a), ("b".into(), b)], &grid, s.history(), 4.0).unwrap();
        let sup = c.columns[0].iter().zip(&c.columns[1]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-4, "{sup}");
    }

    #[test]
    fn bad_grids() {
        let m = SinePoisson::default();
        let p = [("x".to_string(), vec![1.0])];
        assert!(matches!(
            export_intensity_curves(&m, &p, &[0.0, 0.0], History::empty(), 1.0),
            Err(Error::DomainError(_))
        ));
        assert!(export_intensity_curves(&m, &p, &[0.5, 1.5], History::empty(), 1.0).is_err());
    }
}
