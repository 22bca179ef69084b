//! Parametric conditional-intensity families.
//!
//! Every model evaluates, for each event type, the intensity and its first
//! two time derivatives together with their gradients with respect to the
//! model parameters. Score-based objectives are built from these "jets".

mod hawkes;
mod kernels;
mod sine_poisson;

pub use hawkes::{ExpHawkes, GaussHawkes, HalfSinHawkes, HawkesModel};
pub use kernels::{ExpKernel, GaussKernel, HalfSinKernel, Kernel, KernelJet};
pub use sine_poisson::SinePoisson;

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::params::{ParamSpec, ParamVector};
use crate::sequence::History;

/// Intensity jets for every type at one time point.
///
/// Gradients are stored row-major: `grad_value[k * r + i]` is
/// `∂λ_k/∂θ_i`.
#[derive(Debug, Clone)]
pub struct TypeJets {
    num_types: usize,
    num_params: usize,
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub grad_value: Vec<f64>,
    pub grad_d1: Vec<f64>,
    pub grad_d2: Vec<f64>,
    pub(crate) scratch: Vec<f64>,
}

impl TypeJets {
    pub fn new(num_types: usize, num_params: usize) -> Self {
        Self {
            num_types,
            num_params,
            value: vec![0.0; num_types],
            d1: vec![0.0; num_types],
            d2: vec![0.0; num_types],
            grad_value: vec![0.0; num_types * num_params],
            grad_d1: vec![0.0; num_types * num_params],
            grad_d2: vec![0.0; num_types * num_params],
            scratch: Vec::new(),
        }
    }

    pub fn for_model(model: &dyn IntensityModel) -> Self {
        Self::new(model.num_types(), model.num_params())
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub(crate) fn clear(&mut self, with_grads: bool) {
        self.value.fill(0.0);
        self.d1.fill(0.0);
        self.d2.fill(0.0);
        if with_grads {
            self.grad_value.fill(0.0);
            self.grad_d1.fill(0.0);
            self.grad_d2.fill(0.0);
        }
    }

    pub fn grad_value_of(&self, k: usize) -> &[f64] {
        &self.grad_value[k * self.num_params..(k + 1) * self.num_params]
    }

    /// Jet of the total intensity `Σ_k λ_k`.
    pub fn total_into(&self, out: &mut Jet) {
        let r = self.num_params;
        out.resize(r);
        out.value = self.value.iter().sum();
        out.d1 = self.d1.iter().sum();
        out.d2 = self.d2.iter().sum();
        out.grad_value.fill(0.0);
        out.grad_d1.fill(0.0);
        out.grad_d2.fill(0.0);
        for k in 0..self.num_types {
            let rows = k * r..(k + 1) * r;
            for (o, g) in out.grad_value.iter_mut().zip(&self.grad_value[rows.clone()]) {
                *o += g;
            }
            for (o, g) in out.grad_d1.iter_mut().zip(&self.grad_d1[rows.clone()]) {
                *o += g;
            }
            for (o, g) in out.grad_d2.iter_mut().zip(&self.grad_d2[rows]) {
                *o += g;
            }
        }
    }

    /// Jet of a single type.
    pub fn type_into(&self, k: usize, out: &mut Jet) {
        let r = self.num_params;
        out.resize(r);
        out.value = self.value[k];
        out.d1 = self.d1[k];
        out.d2 = self.d2[k];
        let rows = k * r..(k + 1) * r;
        out.grad_value.copy_from_slice(&self.grad_value[rows.clone()]);
        out.grad_d1.copy_from_slice(&self.grad_d1[rows.clone()]);
        out.grad_d2.copy_from_slice(&self.grad_d2[rows]);
    }
}

/// Intensity, `dλ/dt`, `d²λ/dt²` and their parameter gradients for one
/// (possibly aggregated) type.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub grad_value: Vec<f64>,
    pub grad_d1: Vec<f64>,
    pub grad_d2: Vec<f64>,
}

impl Jet {
    fn resize(&mut self, r: usize) {
        self.grad_value.resize(r, 0.0);
        self.grad_d1.resize(r, 0.0);
        self.grad_d2.resize(r, 0.0);
    }
}

/// Which score an objective matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// Derivative of the joint Poisson log-density in `t_n`: `∂ log λ / ∂t`.
    /// The compensator does not depend on `t_n` for a Poisson process.
    Joint,
    /// Derivative of the conditional density of `t_n` given the history:
    /// `∂ log λ / ∂t − λ`.
    Conditional,
}

/// A score, its time derivative, and their parameter gradients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreJet {
    pub psi: f64,
    pub dpsi: f64,
    pub grad_psi: Vec<f64>,
    pub grad_dpsi: Vec<f64>,
}

impl ScoreJet {
    /// Builds the score jet from the jet of the total intensity.
    pub fn fill(&mut self, jet: &Jet, kind: ScoreKind) {
        let r = jet.grad_value.len();
        self.grad_psi.resize(r, 0.0);
        self.grad_dpsi.resize(r, 0.0);
        let lam = jet.value;
        let l1 = jet.d1 / lam;
        let l2 = jet.d2 / lam - l1 * l1;
        let d2_over = jet.d2 / lam;
        for i in 0..r {
            let gv = jet.grad_value[i];
            let gl1 = (jet.grad_d1[i] - l1 * gv) / lam;
            let gl2 = (jet.grad_d2[i] - d2_over * gv) / lam - 2.0 * l1 * gl1;
            match kind {
                ScoreKind::Joint => {
                    self.grad_psi[i] = gl1;
                    self.grad_dpsi[i] = gl2;
                }
                ScoreKind::Conditional => {
                    self.grad_psi[i] = gl1 - gv;
                    self.grad_dpsi[i] = gl2 - jet.grad_d1[i];
                }
            }
        }
        match kind {
            ScoreKind::Joint => {
                self.psi = l1;
                self.dpsi = l2;
            }
            ScoreKind::Conditional => {
                self.psi = l1 - lam;
                self.dpsi = l2 - jet.d1;
            }
        }
    }
}

/// Behavioral contract of a conditional-intensity family.
pub trait IntensityModel: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn num_types(&self) -> usize;

    fn param_specs(&self) -> Vec<ParamSpec>;

    fn num_params(&self) -> usize {
        self.param_specs().len()
    }

    /// Fills per-type jets at `t > last(history)`.
    ///
    /// With `with_grads == false` the gradient buffers are left untouched.
    fn eval_jets(
        &self,
        params: &[f64],
        t: f64,
        history: History<'_>,
        with_grads: bool,
        out: &mut TypeJets,
    ) -> Result<()>;

    /// `∫_a^b λ_total(τ) dτ`, where each history event contributes from its
    /// own time onward. Parameter gradients are added into `grad`.
    fn compensator(
        &self,
        params: &[f64],
        a: f64,
        b: f64,
        history: History<'_>,
        grad: Option<&mut [f64]>,
    ) -> Result<f64>;

    /// An upper bound of `λ_total` on `[lo, hi]` given events before `lo`.
    fn upper_bound(&self, params: &[f64], history: History<'_>, lo: f64, hi: f64) -> f64;

    /// Longest interval over which [`upper_bound`](Self::upper_bound) stays
    /// tight enough for thinning; `None` means unlimited.
    fn bound_horizon(&self, params: &[f64]) -> Option<f64>;

    /// Row-major `K×K` matrix of kernel masses `∫ g_ij`, if the model excites.
    fn branching_matrix(&self, _params: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Positive parameters at 0.5, free ones at 0.
    fn default_init(&self) -> ParamVector {
        ParamVector::constant(self.param_specs(), 0.5, 0.0).expect("constant init is valid")
    }
}

pub(crate) fn check_domain(t: f64, history: &History<'_>) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::DomainError(format!("time {t} is not finite")));
    }
    match history.last() {
        Some(last) if t <= last => Err(Error::DomainError(format!(
            "time {t} not after last history event {last}"
        ))),
        _ => Ok(()),
    }
}

fn check_params(model: &dyn IntensityModel, params: &[f64]) -> Result<()> {
    if params.len() != model.num_params() {
        return Err(Error::InvalidParameter(format!(
            "{} expects {} parameters, got {}",
            model.name(),
            model.num_params(),
            params.len()
        )));
    }
    Ok(())
}

fn jets_at(
    model: &dyn IntensityModel,
    params: &[f64],
    t: f64,
    history: History<'_>,
    with_grads: bool,
) -> Result<TypeJets> {
    check_params(model, params)?;
    let mut jets = TypeJets::for_model(model);
    model.eval_jets(params, t, history, with_grads, &mut jets)?;
    Ok(jets)
}

fn jet_of(jets: &TypeJets, k: Option<usize>) -> Result<Jet> {
    let mut jet = Jet::default();
    match k {
        None => jets.total_into(&mut jet),
        Some(k) if k < jets.num_types() => jets.type_into(k, &mut jet),
        Some(k) => {
            return Err(Error::MarkMismatch(format!(
                "type {} of {}",
                k + 1,
                jets.num_types()
            )))
        }
    }
    Ok(jet)
}

/// `λ_k(t | history)`; `k = None` gives the total intensity.
pub fn intensity(
    model: &dyn IntensityModel,
    params: &[f64],
    t: f64,
    history: History<'_>,
    k: Option<usize>,
) -> Result<f64> {
    let jets = jets_at(model, params, t, history, false)?;
    Ok(jet_of(&jets, k)?.value)
}

/// `∂ log λ_k / ∂t`.
pub fn dlog_intensity_dt(
    model: &dyn IntensityModel,
    params: &[f64],
    t: f64,
    history: History<'_>,
    k: Option<usize>,
) -> Result<f64> {
    let jet = jet_of(&jets_at(model, params, t, history, false)?, k)?;
    Ok(jet.d1 / jet.value)
}

/// `∂² log λ_k / ∂t²`.
pub fn d2log_intensity_dt2(
    model: &dyn IntensityModel,
    params: &[f64],
    t: f64,
    history: History<'_>,
    k: Option<usize>,
) -> Result<f64> {
    let jet = jet_of(&jets_at(model, params, t, history, false)?, k)?;
    let l1 = jet.d1 / jet.value;
    Ok(jet.d2 / jet.value - l1 * l1)
}

/// Score of an event time built from the total intensity.
pub fn score_jet(
    model: &dyn IntensityModel,
    params: &[f64],
    t: f64,
    history: History<'_>,
    kind: ScoreKind,
) -> Result<ScoreJet> {
    let jet = jet_of(&jets_at(model, params, t, history, true)?, None)?;
    let mut s = ScoreJet::default();
    s.fill(&jet, kind);
    Ok(s)
}

pub fn conditional_score(
    model: &dyn IntensityModel,
    params: &[f64],
    t: f64,
    history: History<'_>,
    kind: ScoreKind,
) -> Result<f64> {
    Ok(score_jet(model, params, t, history, kind)?.psi)
}

pub fn dscore_dt(
    model: &dyn IntensityModel,
    params: &[f64],
    t: f64,
    history: History<'_>,
    kind: ScoreKind,
) -> Result<f64> {
    Ok(score_jet(model, params, t, history, kind)?.dpsi)
}

/// `∫_a^b λ_total`.
pub fn compensator(
    model: &dyn IntensityModel,
    params: &[f64],
    a: f64,
    b: f64,
    history: History<'_>,
) -> Result<f64> {
    check_params(model, params)?;
    model.compensator(params, a, b, history, None)
}

/// Parameter gradients of the quantities every objective consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradBundle {
    pub log_intensity: Vec<f64>,
    pub dlog_dt: Vec<f64>,
    pub d2log_dt2: Vec<f64>,
    pub intensity: Vec<f64>,
    pub dintensity_dt: Vec<f64>,
    pub compensator: Vec<f64>,
}

/// Gradients at `t` of the total intensity family; the compensator gradient
/// is over `[last(history) or 0, t]`.
pub fn param_grads(
    model: &dyn IntensityModel,
    params: &[f64],
    t: f64,
    history: History<'_>,
) -> Result<GradBundle> {
    let jet = jet_of(&jets_at(model, params, t, history, true)?, None)?;
    let mut joint = ScoreJet::default();
    joint.fill(&jet, ScoreKind::Joint);
    let lam = jet.value;
    let a = history.last().unwrap_or(0.0);
    let mut comp = vec![0.0; params.len()];
    model.compensator(params, a, t, history, Some(&mut comp))?;
    Ok(GradBundle {
        log_intensity: jet.grad_value.iter().map(|g| g / lam).collect(),
        dlog_dt: joint.grad_psi,
        d2log_dt2: joint.grad_dpsi,
        intensity: jet.grad_value.clone(),
        dintensity_dt: jet.grad_d1.clone(),
        compensator: comp,
    })
}

/// Spectral radius of a nonnegative row-major `k×k` matrix.
///
/// Power iteration on `B + I` avoids the oscillation of periodic matrices;
/// `ρ(B + I) = ρ(B) + 1` for nonnegative `B`.
pub fn spectral_radius(matrix: &[f64], k: usize) -> f64 {
    let mut v = vec![1.0; k];
    let mut rho = 0.0;
    for _ in 0..10_000 {
        let mut w = vec![0.0; k];
        for i in 0..k {
            w[i] = v[i] + (0..k).map(|j| matrix[i * k + j] * v[j]).sum::<f64>();
        }
        let norm = w.iter().cloned().fold(0.0, f64::max);
        if norm == 0.0 {
            return 0.0;
        }
        for x in &mut w {
            *x /= norm;
        }
        let done = (norm - rho).abs() < 1e-14 * norm.max(1.0);
        rho = norm;
        v = w;
        if done {
            break;
        }
    }
    rho - 1.0
}
