use super::{check_domain, IntensityModel, TypeJets};
use crate::error::{Error, Result};
use crate::params::ParamSpec;
use crate::quadrature::GaussLegendre;
use crate::sequence::History;

/// Inhomogeneous Poisson process with `λ(t) = exp(θ sin t)`.
///
/// The compensator has no elementary closed form and is computed with a
/// Gauss–Legendre rule of `nodes` points.
#[derive(Debug, Clone, PartialEq)]
pub struct SinePoisson {
    rule: GaussLegendre,
}

impl Default for SinePoisson {
    fn default() -> Self {
        Self::new(100)
    }
}

impl SinePoisson {
    pub fn new(nodes: usize) -> Self {
        Self {
            rule: GaussLegendre::new(nodes.max(1)),
        }
    }

    pub fn nodes(&self) -> usize {
        self.rule.len()
    }
}

impl IntensityModel for SinePoisson {
    fn name(&self) -> &'static str {
        "sine_poisson"
    }

    fn num_types(&self) -> usize {
        1
    }

    fn param_specs(&self) -> Vec<ParamSpec> {
        vec![ParamSpec::free("theta")]
    }

    fn num_params(&self) -> usize {
        1
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
        let theta = params[0];
        let (s, c) = t.sin_cos();
        let lam = (theta * s).exp();
        let poly = theta * theta * c * c - theta * s;
        out.value[0] = lam;
        out.d1[0] = lam * theta * c;
        out.d2[0] = lam * poly;
        if with_grads {
            out.grad_value[0] = lam * s;
            out.grad_d1[0] = lam * c * (theta * s + 1.0);
            out.grad_d2[0] = lam * (s * poly + 2.0 * theta * c * c - s);
        }
        Ok(())
    }

    fn compensator(
        &self,
        params: &[f64],
        a: f64,
        b: f64,
        _history: History<'_>,
        grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        if !(a <= b) {
            return Err(Error::DomainError(format!("compensator over [{a}, {b}]")));
        }
        let theta = params[0];
        let mut value = 0.0;
        let mut dtheta = 0.0;
        for (x, w) in self.rule.on(a, b) {
            let s = x.sin();
            let lam = (theta * s).exp();
            value += w * lam;
            dtheta += w * s * lam;
        }
        if let Some(g) = grad {
            g[0] += dtheta;
        }
        Ok(value)
    }

    fn upper_bound(&self, params: &[f64], _history: History<'_>, _lo: f64, _hi: f64) -> f64 {
        params[0].abs().exp()
    }

    fn bound_horizon(&self, _params: &[f64]) -> Option<f64> {
        None
    }
}
