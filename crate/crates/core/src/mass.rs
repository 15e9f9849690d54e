//! Mass functions m splitting the periodic box into two insulating phases.
//!
//! All built-in models are of the form
//! `m(x) = scale * (L2/2pi) * sin(2pi/L2 * (x2 - g(x1)))` with a trigonometric
//! interface profile `g`, so m, grad m and the Hessian are exact closed forms,
//! m is periodic over the box, and the principal interface through the origin
//! is the graph `x2 = g(x1)`. A mirror interface sits at `x2 = g(x1) + L2/2`;
//! scenarios keep the dynamics near the principal one.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    LinearPeriodic,
    SinusoidalInterface,
    CustomCoefficients,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MassModel {
    pub kind: MassKind,
    /// Overall scale of m (and of |grad m| on the interface).
    pub scale: f64,
    /// sin/cos coefficients of the interface profile g.
    pub a_sin: f64,
    pub a_cos: f64,
    /// Gradient modulation along x1: m is multiplied by
    /// `1 + grad_mod sin(wavenumber x1)`, so |grad m| varies along the
    /// interface without moving its zero set. Requires |grad_mod| < 1.
    pub grad_mod: f64,
    /// Wavenumber of g; must be an integer multiple of 2pi/L1.
    pub wavenumber: f64,
    pub l1: f64,
    pub l2: f64,
}

/// Value, gradient and Hessian of m at a point.
#[derive(Debug, Clone, Copy)]
pub struct MassEval {
    pub m: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl MassModel {
    pub fn linear_periodic(l1: f64, l2: f64) -> Self {
        Self {
            kind: MassKind::LinearPeriodic,
            scale: 1.0,
            a_sin: 0.0,
            a_cos: 0.0,
            grad_mod: 0.0,
            wavenumber: 2.0 * std::f64::consts::PI / l1,
            l1,
            l2,
        }
    }

    pub fn sinusoidal_interface(amplitude: f64, wavenumber: f64, l1: f64, l2: f64) -> Result<Self> {
        let model = Self {
            kind: MassKind::SinusoidalInterface,
            scale: 1.0,
            a_sin: amplitude,
            a_cos: 0.0,
            grad_mod: 0.0,
            wavenumber,
            l1,
            l2,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn custom_coefficients(
        scale: f64,
        a_sin: f64,
        a_cos: f64,
        wavenumber: f64,
        l1: f64,
        l2: f64,
    ) -> Result<Self> {
        let model = Self {
            kind: MassKind::CustomCoefficients,
            scale,
            a_sin,
            a_cos,
            grad_mod: 0.0,
            wavenumber,
            l1,
            l2,
        };
        model.validate()?;
        Ok(model)
    }

    /// Straight interface with |grad m| modulated along x1.
    pub fn modulated_gradient(grad_mod: f64, l1: f64, l2: f64) -> Result<Self> {
        let model = Self {
            kind: MassKind::CustomCoefficients,
            scale: 1.0,
            a_sin: 0.0,
            a_cos: 0.0,
            grad_mod,
            wavenumber: 2.0 * std::f64::consts::PI / l1,
            l1,
            l2,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l1 <= 0.0 || self.l2 <= 0.0 {
            return Err(CoreError::Config("box lengths must be positive".into()));
        }
        if self.scale <= 0.0 {
            return Err(CoreError::Config("mass scale must be positive".into()));
        }
        if self.grad_mod.abs() >= 1.0 {
            return Err(CoreError::Config(
                "|grad_mod| must stay below 1 to keep |grad m| > 0 on the interface".into(),
            ));
        }
        let cycles = self.wavenumber * self.l1 / (2.0 * std::f64::consts::PI);
        if (cycles - cycles.round()).abs() > 1e-9 {
            return Err(CoreError::Config(format!(
                "wavenumber {} is not periodic over L1 = {}",
                self.wavenumber, self.l1
            )));
        }
        Ok(())
    }

    /// Interface height profile g and its first two derivatives.
    #[inline]
    fn profile(&self, x1: f64) -> (f64, f64, f64) {
        let k = self.wavenumber;
        let (s, c) = (k * x1).sin_cos();
        let g = self.a_sin * s + self.a_cos * c;
        let gp = k * (self.a_sin * c - self.a_cos * s);
        let gpp = -k * k * g;
        (g, gp, gpp)
    }

    /// Exact m, grad m, Hessian (analytic differentiation of the sinusoid
    /// times the gradient-modulation factor A(x1) = 1 + grad_mod sin(k x1)).
    pub fn eval(&self, x: [f64; 2]) -> MassEval {
        let (g, gp, gpp) = self.profile(x[0]);
        let k = self.wavenumber;
        let (sk, ck) = (k * x[0]).sin_cos();
        let a = 1.0 + self.grad_mod * sk;
        let ap = self.grad_mod * k * ck;
        let app = -self.grad_mod * k * k * sk;
        let phi = 2.0 * std::f64::consts::PI / self.l2;
        let u = x[1] - g;
        let (s, c) = (phi * u).sin_cos();
        let m = self.scale * a * s / phi;
        let grad = [
            self.scale * (ap * s / phi - a * c * gp),
            self.scale * a * c,
        ];
        let h11 = self.scale
            * (app * s / phi - 2.0 * ap * c * gp - a * phi * s * gp * gp - a * c * gpp);
        let h12 = self.scale * (ap * c + a * phi * s * gp);
        let h22 = -self.scale * phi * a * s;
        MassEval {
            m,
            grad,
            hess: [[h11, h12], [h12, h22]],
        }
    }

    #[inline]
    pub fn m(&self, x: [f64; 2]) -> f64 {
        self.eval(x).m
    }

    /// Unit tangent of the interface flow, `-grad(m)^perp / |grad m|` with
    /// `perp` the counterclockwise quarter turn.
    pub fn tangent(&self, x: [f64; 2]) -> [f64; 2] {
        let e = self.eval(x);
        let n = (e.grad[0] * e.grad[0] + e.grad[1] * e.grad[1]).sqrt();
        [e.grad[1] / n, -e.grad[0] / n]
    }

    /// Signed curvature of the level set of m through x, consistent with
    /// Frenet's `kappa = gamma'' . nu` for the induced parametrization.
    pub fn level_curvature(&self, x: [f64; 2]) -> f64 {
        let e = self.eval(x);
        let [g1, g2] = e.grad;
        let h = e.hess;
        let n2 = g1 * g1 + g2 * g2;
        (2.0 * h[0][1] * g1 * g2 - h[1][1] * g1 * g1 - h[0][0] * g2 * g2) / (n2 * n2.sqrt())
    }

    /// Newton-project x onto the zero set along grad m.
    pub fn project_to_interface(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        let mut p = x;
        for _ in 0..64 {
            let e = self.eval(p);
            let n2 = e.grad[0] * e.grad[0] + e.grad[1] * e.grad[1];
            if n2 < 1e-20 {
                return Err(CoreError::GradientTooSmall(format!(
                    "grad m vanishes near ({}, {})",
                    p[0], p[1]
                )));
            }
            if e.m.abs() < 1e-14 {
                return Ok(p);
            }
            p[0] -= e.m * e.grad[0] / n2;
            p[1] -= e.m * e.grad[1] / n2;
        }
        Err(CoreError::Domain(format!(
            "interface projection did not converge from ({}, {})",
            x[0], x[1]
        )))
    }
}
