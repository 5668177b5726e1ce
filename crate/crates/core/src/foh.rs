//! First-order-hold discretization of time-scaled nonlinear dynamics.
//!
//! For each inter-node interval the flow of `ẋ = σ·f(x, u)` is linearized
//! about the reference trajectory, with the control interpolated linearly
//! between the interval's endpoint nodes. The discrete update is
//!
//! `x_{k+1} = Ā_k x_k + B̄_k u_k + C̄_k u_{k+1} + Σ̄_k σ + z̄_k`
//!
//! where `Σ̄` carries the sensitivity to the time-scaling factor and `z̄`
//! the linearization remainder. All five blocks come from one RK4 pass over
//! an augmented system that integrates the state transition matrix and the
//! four weighted integrals simultaneously.

use crate::dynamics::DynamicsModel;
use nalgebra::{DMatrix, DVector};

/// Per-interval discrete dynamics blocks.
#[derive(Debug, Clone)]
pub struct DiscretizedDynamics {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub c: Vec<DMatrix<f64>>,
    pub sigma: Vec<DVector<f64>>,
    pub z: Vec<DVector<f64>>,
}

impl DiscretizedDynamics {
    pub fn intervals(&self) -> usize {
        self.a.len()
    }

    /// Apply interval `k` to a node state/control triple.
    pub fn step(
        &self,
        k: usize,
        x: &DVector<f64>,
        u0: &DVector<f64>,
        u1: &DVector<f64>,
        sigma: f64,
    ) -> DVector<f64> {
        &self.a[k] * x + &self.b[k] * u0 + &self.c[k] * u1 + &self.sigma[k] * sigma + &self.z[k]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FohError {
    #[error("integration failed at node {node}: {reason}")]
    IntegrationFailure { node: usize, reason: &'static str },
    #[error("reference shape mismatch")]
    ShapeMismatch,
}

struct Augmented {
    x: DVector<f64>,
    phi: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    s: DVector<f64>,
    z: DVector<f64>,
}

impl Augmented {
    fn initial(x0: &DVector<f64>, n: usize, m: usize) -> Self {
        Self {
            x: x0.clone(),
            phi: DMatrix::identity(n, n),
            b: DMatrix::zeros(n, m),
            c: DMatrix::zeros(n, m),
            s: DVector::zeros(n),
            z: DVector::zeros(n),
        }
    }

    fn axpy(&self, h: f64, d: &Augmented) -> Self {
        Self {
            x: &self.x + h * &d.x,
            phi: &self.phi + h * &d.phi,
            b: &self.b + h * &d.b,
            c: &self.c + h * &d.c,
            s: &self.s + h * &d.s,
            z: &self.z + h * &d.z,
        }
    }

    fn combine(&self, h: f64, k1: &Augmented, k2: &Augmented, k3: &Augmented, k4: &Augmented) -> Self {
        let w = h / 6.0;
        Self {
            x: &self.x + w * (&k1.x + 2.0 * &k2.x + 2.0 * &k3.x + &k4.x),
            phi: &self.phi + w * (&k1.phi + 2.0 * &k2.phi + 2.0 * &k3.phi + &k4.phi),
            b: &self.b + w * (&k1.b + 2.0 * &k2.b + 2.0 * &k3.b + &k4.b),
            c: &self.c + w * (&k1.c + 2.0 * &k2.c + 2.0 * &k3.c + &k4.c),
            s: &self.s + w * (&k1.s + 2.0 * &k2.s + 2.0 * &k3.s + &k4.s),
            z: &self.z + w * (&k1.z + 2.0 * &k2.z + 2.0 * &k3.z + &k4.z),
        }
    }
}

/// FOH discretization of `model` about the reference node states/controls.
///
/// `x_ref` has K entries, `u_ref` has K entries; the result has K−1
/// intervals. The interval length is the normalized node spacing
/// `1/(K−1)`, with `sigma_ref` carrying the physical time scale.
pub fn discretize<M: DynamicsModel>(
    model: &M,
    x_ref: &[DVector<f64>],
    u_ref: &[DVector<f64>],
    sigma_ref: f64,
    substeps: usize,
) -> Result<DiscretizedDynamics, FohError> {
    if x_ref.len() != u_ref.len() || x_ref.len() < 2 || sigma_ref <= 0.0 {
        return Err(FohError::ShapeMismatch);
    }
    let n = model.state_dim();
    let m = model.control_dim();
    let k_nodes = x_ref.len();
    let interval = 1.0 / (k_nodes - 1) as f64;
    let dt = interval / substeps as f64;

    let mut out = DiscretizedDynamics {
        a: Vec::with_capacity(k_nodes - 1),
        b: Vec::with_capacity(k_nodes - 1),
        c: Vec::with_capacity(k_nodes - 1),
        sigma: Vec::with_capacity(k_nodes - 1),
        z: Vec::with_capacity(k_nodes - 1),
    };

    for k in 0..k_nodes - 1 {
        let u0 = &u_ref[k];
        let u1 = &u_ref[k + 1];
        let deriv = |tau: f64, aug: &Augmented| -> Result<Augmented, FohError> {
            let lam_plus = (tau / interval).clamp(0.0, 1.0);
            let lam_minus = 1.0 - lam_plus;
            let u = u0 * lam_minus + u1 * lam_plus;
            let f = model.rhs(&aug.x, &u);
            let a_mat = model.jac_state(&aug.x, &u) * sigma_ref;
            let b_mat = model.jac_control(&aug.x, &u) * sigma_ref;
            let phi_inv = aug
                .phi
                .clone()
                .try_inverse()
                .ok_or(FohError::IntegrationFailure {
                    node: k,
                    reason: "singular state transition matrix",
                })?;
            let z = -(&a_mat * &aug.x) - &b_mat * &u;
            Ok(Augmented {
                x: &f * sigma_ref,
                phi: &a_mat * &aug.phi,
                b: &phi_inv * &b_mat * lam_minus,
                c: &phi_inv * &b_mat * lam_plus,
                s: &phi_inv * &f,
                z: phi_inv * z,
            })
        };

        let mut aug = Augmented::initial(&x_ref[k], n, m);
        for s in 0..substeps {
            let t0 = s as f64 * dt;
            let k1 = deriv(t0, &aug)?;
            let k2 = deriv(t0 + 0.5 * dt, &aug.axpy(0.5 * dt, &k1))?;
            let k3 = deriv(t0 + 0.5 * dt, &aug.axpy(0.5 * dt, &k2))?;
            let k4 = deriv(t0 + dt, &aug.axpy(dt, &k3))?;
            aug = aug.combine(dt, &k1, &k2, &k3, &k4);
        }
        if aug.phi.iter().any(|v| !v.is_finite()) || aug.x.iter().any(|v| !v.is_finite()) {
            return Err(FohError::IntegrationFailure {
                node: k,
                reason: "non-finite integration result",
            });
        }

        let a_bar = aug.phi.clone();
        out.b.push(&a_bar * &aug.b);
        out.c.push(&a_bar * &aug.c);
        out.sigma.push(&a_bar * &aug.s);
        out.z.push(&a_bar * &aug.z);
        out.a.push(a_bar);
    }
    Ok(out)
}
