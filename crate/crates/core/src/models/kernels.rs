//! Triggering-kernel shapes `φ(τ)` with `g_ij(τ) = α_ij φ(τ)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Debug;

/// `φ(τ)` and its first two `τ`-derivatives, plus the derivative of each with
/// respect to the kernel's shape parameter (zero for shape-free kernels).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub ds_value: f64,
    pub ds_d1: f64,
    pub ds_d2: f64,
}

pub trait Kernel: Send + Sync + Debug + Clone {
    /// Name of the shape parameter, if the kernel has one.
    fn shape_name(&self) -> Option<&'static str>;

    /// Jet at lag `τ > 0`.
    fn eval(&self, shape: f64, tau: f64) -> KernelJet;

    /// `(∫_0^τ φ, ∂/∂shape of it)` for `τ ≥ 0`.
    fn integral(&self, shape: f64, tau: f64) -> (f64, f64);

    /// `∫_0^∞ φ`.
    fn mass(&self, shape: f64) -> f64;

    /// `sup φ` over `[lo, hi] ∩ (0, ∞)`.
    fn sup_on(&self, shape: f64, lo: f64, hi: f64) -> f64;

    /// Grid step for piecewise thinning bounds; `None` for monotone kernels.
    fn bound_step(&self, shape: f64) -> Option<f64>;

    /// Lags at or beyond this contribute nothing.
    fn support_end(&self) -> f64 {
        f64::INFINITY
    }
}

/// `φ(τ) = exp(−βτ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpKernel;

impl Kernel for ExpKernel {
    fn shape_name(&self) -> Option<&'static str> {
        Some("beta")
    }

    fn eval(&self, beta: f64, tau: f64) -> KernelJet {
        let v = (-beta * tau).exp();
        KernelJet {
            value: v,
            d1: -beta * v,
            d2: beta * beta * v,
            ds_value: -tau * v,
            ds_d1: v * (beta * tau - 1.0),
            ds_d2: beta * v * (2.0 - beta * tau),
        }
    }

    fn integral(&self, beta: f64, tau: f64) -> (f64, f64) {
        let e = (-beta * tau).exp();
        let g = -(-beta * tau).exp_m1() / beta;
        let dg = (tau * e - g) / beta;
        (g, dg)
    }

    fn mass(&self, beta: f64) -> f64 {
        1.0 / beta
    }

    fn sup_on(&self, beta: f64, lo: f64, hi: f64) -> f64 {
        if hi <= 0.0 {
            return 0.0;
        }
        (-beta * lo.max(0.0)).exp()
    }

    fn bound_step(&self, _beta: f64) -> Option<f64> {
        None
    }
}

/// `φ(τ) = exp(−τ²/(2σ²)) / (√(2π) σ)` on `τ > 0`, not renormalized to the
/// half line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussKernel;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl Kernel for GaussKernel {
    fn shape_name(&self) -> Option<&'static str> {
        Some("sigma")
    }

    fn eval(&self, sigma: f64, tau: f64) -> KernelJet {
        // reciprocals are loop-invariant across a history sweep
        let inv = 1.0 / sigma;
        let inv2 = inv * inv;
        let z = tau * inv;
        let z2 = z * z;
        let v = INV_SQRT_2PI * inv * (-0.5 * z2).exp();
        let d1 = -tau * inv2 * v;
        let c2 = (z2 - 1.0) * inv2;
        let d2 = c2 * v;
        // ∂σ log φ = τ²/σ³ − 1/σ
        let ds_value = v * (z2 - 1.0) * inv;
        let ds_d1 = 2.0 * tau * inv2 * inv * v - tau * inv2 * ds_value;
        let ds_d2 = (2.0 - 4.0 * z2) * inv2 * inv * v + c2 * ds_value;
        KernelJet {
            value: v,
            d1,
            d2,
            ds_value,
            ds_d1,
            ds_d2,
        }
    }

    fn integral(&self, sigma: f64, tau: f64) -> (f64, f64) {
        let z = tau / sigma;
        let g = 0.5 * libm::erf(z * std::f64::consts::FRAC_1_SQRT_2);
        let dg = -z * INV_SQRT_2PI / sigma * (-0.5 * z * z).exp();
        (g, dg)
    }

    fn mass(&self, _sigma: f64) -> f64 {
        0.5
    }

    fn sup_on(&self, sigma: f64, lo: f64, hi: f64) -> f64 {
        if hi <= 0.0 {
            return 0.0;
        }
        let z = lo.max(0.0) / sigma;
        INV_SQRT_2PI / sigma * (-0.5 * z * z).exp()
    }

    fn bound_step(&self, sigma: f64) -> Option<f64> {
        Some(sigma / 4.0)
    }
}

/// `φ(τ) = sin τ` on `(0, π)`, zero elsewhere. Derivatives at `τ = π` are
/// the right limits (zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSinKernel;

impl Kernel for HalfSinKernel {
    fn shape_name(&self) -> Option<&'static str> {
        None
    }

    fn eval(&self, _shape: f64, tau: f64) -> KernelJet {
        if tau <= 0.0 || tau >= PI {
            return KernelJet::default();
        }
        let (s, c) = tau.sin_cos();
        KernelJet {
            value: s,
            d1: c,
            d2: -s,
            ..KernelJet::default()
        }
    }

    fn integral(&self, _shape: f64, tau: f64) -> (f64, f64) {
        if tau <= 0.0 {
            return (0.0, 0.0);
        }
        (1.0 - tau.min(PI).cos(), 0.0)
    }

    fn mass(&self, _shape: f64) -> f64 {
        2.0
    }

    fn sup_on(&self, _shape: f64, lo: f64, hi: f64) -> f64 {
        let a = lo.max(0.0);
        let b = hi.min(PI);
        if a >= b {
            return 0.0;
        }
        if a <= FRAC_PI_2 && FRAC_PI_2 <= b {
            1.0
        } else {
            a.sin().max(b.sin()).max(0.0)
        }
    }

    fn bound_step(&self, _shape: f64) -> Option<f64> {
        Some(PI / 8.0)
    }

    fn support_end(&self) -> f64 {
        PI
    }
}
