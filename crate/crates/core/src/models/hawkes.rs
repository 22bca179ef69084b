use super::kernels::{ExpKernel, GaussKernel, HalfSinKernel, Kernel};
use super::{check_domain, IntensityModel, TypeJets};
use crate::error::{Error, Result};
use crate::params::ParamSpec;
use crate::sequence::History;

/// Multivariate Hawkes process
/// `λ_k(t) = μ_k + Σ_{t_j<t} α_{k,k_j} φ(t − t_j)`.
///
/// Parameters are laid out as `mu_1..mu_K`, then `alpha_i_j` row-major
/// (`i` the excited type, `j` the source type), then the kernel shape
/// parameter when it is estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesModel<K: Kernel> {
    num_types: usize,
    kernel: K,
    shape: f64,
    estimate_shape: bool,
}

pub type ExpHawkes = HawkesModel<ExpKernel>;
pub type GaussHawkes = HawkesModel<GaussKernel>;
pub type HalfSinHawkes = HawkesModel<HalfSinKernel>;

impl ExpHawkes {
    /// Exponential kernels with decay `beta` held fixed.
    pub fn exponential(num_types: usize, beta: f64) -> Self {
        Self::with_kernel(num_types, ExpKernel, beta, false)
    }

    /// Exponential kernels with the decay rate estimated as `beta`.
    pub fn exponential_free_beta(num_types: usize) -> Self {
        Self::with_kernel(num_types, ExpKernel, 1.0, true)
    }
}

impl GaussHawkes {
    /// Gaussian kernels with one shared, estimated `sigma`.
    pub fn gaussian(num_types: usize) -> Self {
        Self::with_kernel(num_types, GaussKernel, 1.0, true)
    }
}

impl HalfSinHawkes {
    pub fn half_sin(num_types: usize) -> Self {
        Self::with_kernel(num_types, HalfSinKernel, 0.0, false)
    }
}

impl<K: Kernel> HawkesModel<K> {
    pub fn with_kernel(num_types: usize, kernel: K, shape: f64, estimate_shape: bool) -> Self {
        assert!(num_types >= 1);
        let estimate_shape = estimate_shape && kernel.shape_name().is_some();
        Self {
            num_types,
            kernel,
            shape,
            estimate_shape,
        }
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn estimates_shape(&self) -> bool {
        self.estimate_shape
    }

    /// Fixed shape value used when the shape is not estimated.
    pub fn fixed_shape(&self) -> f64 {
        self.shape
    }

    fn mu_index(&self, k: usize) -> usize {
        k
    }

    fn alpha_index(&self, i: usize, j: usize) -> usize {
        self.num_types + i * self.num_types + j
    }

    fn shape_index(&self) -> usize {
        self.num_types + self.num_types * self.num_types
    }

    fn shape_of(&self, params: &[f64]) -> f64 {
        if self.estimate_shape {
            params[self.shape_index()]
        } else {
            self.shape
        }
    }

    fn alpha(&self, params: &[f64], i: usize, j: usize) -> f64 {
        params[self.alpha_index(i, j)]
    }

    /// `Σ_k α_{k,j}`: total excitation produced by a type-`j` event.
    fn column_sum(&self, params: &[f64], j: usize) -> f64 {
        (0..self.num_types).map(|k| self.alpha(params, k, j)).sum()
    }
}

impl<K: Kernel + 'static> IntensityModel for HawkesModel<K> {
    fn name(&self) -> &'static str {
        match self.kernel.shape_name() {
            Some("beta") => "exp_hawkes",
            Some("sigma") => "gauss_hawkes",
            _ => "half_sin_hawkes",
        }
    }

    fn num_types(&self) -> usize {
        self.num_types
    }

    fn param_specs(&self) -> Vec<ParamSpec> {
        let k = self.num_types;
        let mut specs: Vec<ParamSpec> = (1..=k).map(|i| ParamSpec::positive(format!("mu_{i}"))).collect();
        for i in 1..=k {
            for j in 1..=k {
                specs.push(ParamSpec::positive(format!("alpha_{i}_{j}")));
            }
        }
        if self.estimate_shape {
            if let Some(name) = self.kernel.shape_name() {
                specs.push(ParamSpec::positive(name));
            }
        }
        specs
    }

    fn num_params(&self) -> usize {
        self.shape_index() + usize::from(self.estimate_shape)
    }

    fn eval_jets(
        &self,
        params: &[f64],
        t: f64,
        history: History<'_>,
        with_grads: bool,
        out: &mut TypeJets,
    ) -> Result<()> {
        check_domain(t, &history)?;
        let kk = self.num_types;
        let r = out.num_params();
        let shape = self.shape_of(params);
        out.clear(with_grads);

        // per-source sums of φ, φ', φ'' and their shape derivatives
        out.scratch.clear();
        out.scratch.resize(6 * kk, 0.0);
        let end = self.kernel.support_end();
        for (tj, c) in history.iter() {
            let tau = t - tj;
            if tau >= end {
                continue;
            }
            if c >= kk {
                return Err(Error::MarkMismatch(format!("type {} of {kk}", c + 1)));
            }
            let j = self.kernel.eval(shape, tau);
            let s = &mut out.scratch[6 * c..6 * c + 6];
            s[0] += j.value;
            s[1] += j.d1;
            s[2] += j.d2;
            s[3] += j.ds_value;
            s[4] += j.ds_d1;
            s[5] += j.ds_d2;
        }

        for k in 0..kk {
            let mut v = params[self.mu_index(k)];
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            let (mut sv, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for c in 0..kk {
                let a = self.alpha(params, k, c);
                let s = &out.scratch[6 * c..6 * c + 6];
                v += a * s[0];
                d1 += a * s[1];
                d2 += a * s[2];
                sv += a * s[3];
                s1 += a * s[4];
                s2 += a * s[5];
            }
            out.value[k] = v;
            out.d1[k] = d1;
            out.d2[k] = d2;
            if with_grads {
                let row = k * r;
                out.grad_value[row + self.mu_index(k)] = 1.0;
                for c in 0..kk {
                    let idx = row + self.alpha_index(k, c);
                    out.grad_value[idx] = out.scratch[6 * c];
                    out.grad_d1[idx] = out.scratch[6 * c + 1];
                    out.grad_d2[idx] = out.scratch[6 * c + 2];
                }
                if self.estimate_shape {
                    let idx = row + self.shape_index();
                    out.grad_value[idx] = sv;
                    out.grad_d1[idx] = s1;
                    out.grad_d2[idx] = s2;
                }
            }
        }
        Ok(())
    }

    fn compensator(
        &self,
        params: &[f64],
        a: f64,
        b: f64,
        history: History<'_>,
        mut grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        if !(a <= b) {
            return Err(Error::DomainError(format!("compensator over [{a}, {b}]")));
        }
        let kk = self.num_types;
        let shape = self.shape_of(params);
        let len = b - a;
        let mut total = len * (0..kk).map(|k| params[self.mu_index(k)]).sum::<f64>();
        if let Some(g) = grad.as_deref_mut() {
            for k in 0..kk {
                g[self.mu_index(k)] += len;
            }
        }
        for (tj, c) in history.iter() {
            if tj >= b {
                break;
            }
            if c >= kk {
                return Err(Error::MarkMismatch(format!("type {} of {kk}", c + 1)));
            }
            let (gb, dgb) = self.kernel.integral(shape, b - tj);
            let (ga, dga) = self.kernel.integral(shape, (a - tj).max(0.0));
            let piece = gb - ga;
            let col = self.column_sum(params, c);
            total += col * piece;
            if let Some(g) = grad.as_deref_mut() {
                for k in 0..kk {
                    g[self.alpha_index(k, c)] += piece;
                }
                if self.estimate_shape {
                    g[self.shape_index()] += col * (dgb - dga);
                }
            }
        }
        Ok(total)
    }

    fn upper_bound(&self, params: &[f64], history: History<'_>, lo: f64, hi: f64) -> f64 {
        let shape = self.shape_of(params);
        let base: f64 = (0..self.num_types).map(|k| params[self.mu_index(k)]).sum();
        let end = self.kernel.support_end();
        history
            .iter()
            .filter(|&(tj, _)| hi - tj > 0.0 && lo - tj < end)
            .map(|(tj, c)| self.column_sum(params, c) * self.kernel.sup_on(shape, lo - tj, hi - tj))
            .sum::<f64>()
            + base
    }

    fn bound_horizon(&self, params: &[f64]) -> Option<f64> {
        self.kernel.bound_step(self.shape_of(params))
    }

    fn branching_matrix(&self, params: &[f64]) -> Option<Vec<f64>> {
        let m = self.kernel.mass(self.shape_of(params));
        let kk = self.num_types;
        Some(
            (0..kk * kk)
                .map(|idx| params[self.alpha_index(idx / kk, idx % kk)] * m)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        compensator, conditional_score, dlog_intensity_dt, dscore_dt, intensity, ScoreKind,
    };

    fn one_event() -> (Vec<f64>, ExpHawkes) {
        (vec![1.0], HawkesModel::exponential(1, 5.0))
    }

    #[test]
    fn exp_hawkes_reference_values() {
        let (h, m) = one_event();
        let p = [1.0, 1.6];
        let hist = History::new(&h, None);
        // 1 + 1.6 e^{-1}
        let lam = intensity(&m, &p, 1.2, hist, None).unwrap();
        assert!((lam - 1.588_607_105_874_307_7).abs() < 1e-12);
        let dl = dlog_intensity_dt(&m, &p, 1.2, hist, None).unwrap();
        assert!((dl - (-1.852_588_672_484_758_9)).abs() < 1e-12, "{dl}");
        let psi = conditional_score(&m, &p, 1.2, hist, ScoreKind::Conditional).unwrap();
        assert!((psi - (-3.441_195_778_359_066_6)).abs() < 1e-12, "{psi}");
    }

    #[test]
    fn empty_history_is_baseline() {
        let m = HawkesModel::exponential(1, 5.0);
        let p = [0.7, 1.6];
        let e = History::empty();
        assert_eq!(intensity(&m, &p, 3.0, e, None).unwrap(), 0.7);
        assert_eq!(dlog_intensity_dt(&m, &p, 3.0, e, None).unwrap(), 0.0);
        let psi = conditional_score(&m, &p, 3.0, e, ScoreKind::Conditional).unwrap();
        assert_eq!(psi, -0.7);
        assert_eq!(dscore_dt(&m, &p, 3.0, e, ScoreKind::Conditional).unwrap(), 0.0);
    }

    #[test]
    fn domain_error_on_stale_time() {
        let (h, m) = one_event();
        let hist = History::new(&h, None);
        assert!(matches!(
            intensity(&m, &[1.0, 1.0], 1.0, hist, None),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            intensity(&m, &[1.0, 1.0], 0.5, hist, None),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn compensator_reference_values() {
        let m = HawkesModel::exponential(1, 5.0);
        assert_eq!(compensator(&m, &[1.0, 1.6], 0.0, 2.0, History::empty()).unwrap(), 2.0);
        let h = [0.0];
        let c = compensator(&m, &[1e-300, 1.6], 0.0, 10.0, History::new(&h, None)).unwrap();
        let expected = 1.6 / 5.0 * (1.0 - (-50f64).exp());
        assert!((c - expected).abs() < 1e-14);
    }

    #[test]
    fn param_layout() {
        let m = HawkesModel::gaussian(2);
        let names: Vec<_> = m.param_specs().into_iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            ["mu_1", "mu_2", "alpha_1_1", "alpha_1_2", "alpha_2_1", "alpha_2_2", "sigma"]
        );
        assert_eq!(m.num_params(), 7);
        assert_eq!(HawkesModel::exponential(2, 5.0).num_params(), 6);
        assert_eq!(HawkesModel::exponential_free_beta(1).num_params(), 3);
        assert_eq!(HawkesModel::half_sin(2).num_params(), 6);
    }

    #[test]
    fn marked_intensity_uses_source_row() {
        let m = HawkesModel::exponential(2, 5.0);
        // mu = (1, 2); alpha_12 = 0.2 excites type 1 from type 2 events
        let p = [1.0, 2.0, 1.6, 0.2, 1.0, 1.0];
        let times = [1.0];
        let marks = [1];
        let hist = History::new(&times, Some(&marks));
        let e = (-1f64).exp();
        assert!((intensity(&m, &p, 1.2, hist, Some(0)).unwrap() - (1.0 + 0.2 * e)).abs() < 1e-14);
        assert!((intensity(&m, &p, 1.2, hist, Some(1)).unwrap() - (2.0 + 1.0 * e)).abs() < 1e-14);
        assert!((intensity(&m, &p, 1.2, hist, None).unwrap() - (3.0 + 1.2 * e)).abs() < 1e-14);
    }

    #[test]
    fn branching_matrix_masses() {
        let p = [1.0, 1.0, 1.6, 0.2, 1.0, 1.0];
        let b = HawkesModel::exponential(2, 5.0).branching_matrix(&p).unwrap();
        for (x, y) in b.iter().zip([0.32, 0.04, 0.2, 0.2]) {
            assert!((x - y).abs() < 1e-15);
        }
        let rho = crate::models::spectral_radius(&b, 2);
        let exact = (0.52 + (0.52f64 * 0.52 - 4.0 * 0.056).sqrt()) / 2.0;
        assert!((rho - exact).abs() < 1e-10);
    }
}
