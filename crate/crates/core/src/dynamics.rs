//! Continuous 6-DoF powered-descent dynamics.
//!
//! State layout (14): `[m, r(3), v(3), q(4), ω(3)]` with thrust `T` in the
//! body frame as the control. Mass depletes with thrust magnitude, the
//! attitude follows `q̇ = ½Ω(ω)q`, and the rotational dynamics carry the
//! thrust-offset torque.

use crate::plan::{DescentProblem, TrajectoryPlan, STATE_DIM};
use crate::quat::omega_matrix;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector4};

/// The 14-dimensional state of the continuous dynamics, as named fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousState {
    pub mass: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub quaternion: Vector4<f64>,
    pub angular_velocity: Vector3<f64>,
}

impl ContinuousState {
    pub fn from_vector(x: &DVector<f64>) -> Self {
        Self {
            mass: x[0],
            position: Vector3::new(x[1], x[2], x[3]),
            velocity: Vector3::new(x[4], x[5], x[6]),
            quaternion: Vector4::new(x[7], x[8], x[9], x[10]),
            angular_velocity: Vector3::new(x[11], x[12], x[13]),
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut x = DVector::zeros(STATE_DIM);
        x[0] = self.mass;
        x.fixed_rows_mut::<3>(1).copy_from(&self.position);
        x.fixed_rows_mut::<3>(4).copy_from(&self.velocity);
        x.fixed_rows_mut::<4>(7).copy_from(&self.quaternion);
        x.fixed_rows_mut::<3>(11).copy_from(&self.angular_velocity);
        x
    }
}

/// A dynamics model exposing its right-hand side and analytic Jacobians,
/// enough for first-order-hold discretization.
pub trait DynamicsModel {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn jac_state(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;
    fn jac_control(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

/// Rotation of `u` by quaternion `q` using the raw algebraic form (no
/// renormalization), so the Jacobians below are exact for the same map.
fn rotate_raw(q: &Vector4<f64>, u: &Vector3<f64>) -> Vector3<f64> {
    let qv = Vector3::new(q[1], q[2], q[3]);
    (q[0] * q[0] - qv.dot(&qv)) * u + 2.0 * qv.dot(u) * qv + 2.0 * q[0] * qv.cross(u)
}

/// 3×4 Jacobian of `rotate_raw(q, u)` with respect to `q`.
fn rotate_jac_q(q: &Vector4<f64>, u: &Vector3<f64>) -> DMatrix<f64> {
    let qv = Vector3::new(q[1], q[2], q[3]);
    let col0 = 2.0 * (q[0] * u + qv.cross(u));
    let block: Matrix3<f64> = 2.0
        * (-u * qv.transpose() + qv * u.transpose() + qv.dot(u) * Matrix3::identity()
            - q[0] * skew(u));
    let mut jac = DMatrix::zeros(3, 4);
    for i in 0..3 {
        jac[(i, 0)] = col0[i];
        for j in 0..3 {
            jac[(i, 1 + j)] = block[(i, j)];
        }
    }
    jac
}

/// Powered-descent dynamics bound to one problem instance.
pub struct DescentDynamics {
    gravity: Vector3<f64>,
    fuel_rate: f64,
    thrust_offset: Vector3<f64>,
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
}

impl DescentDynamics {
    pub fn new(problem: &DescentProblem) -> Self {
        let inertia = problem.inertia();
        Self {
            gravity: problem.gravity_vec(),
            fuel_rate: problem.fuel_rate,
            thrust_offset: problem.thrust_offset_vec(),
            inertia,
            inertia_inv: inertia.try_inverse().expect("inertia must be invertible"),
        }
    }
}

impl DynamicsModel for DescentDynamics {
    fn state_dim(&self) -> usize {
        STATE_DIM
    }

    fn control_dim(&self) -> usize {
        3
    }

    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let m = x[0];
        let q = Vector4::new(x[7], x[8], x[9], x[10]);
        let w = Vector3::new(x[11], x[12], x[13]);
        let thrust = Vector3::new(u[0], u[1], u[2]);

        let mut dx = DVector::zeros(STATE_DIM);
        dx[0] = -self.fuel_rate * thrust.norm();
        for i in 0..3 {
            dx[1 + i] = x[4 + i];
        }
        let accel = rotate_raw(&q, &thrust) / m + self.gravity;
        dx.fixed_rows_mut::<3>(4).copy_from(&accel);
        let qdot = 0.5 * omega_matrix(&w) * q;
        dx.fixed_rows_mut::<4>(7).copy_from(&qdot);
        let torque = self.thrust_offset.cross(&thrust) - w.cross(&(self.inertia * w));
        dx.fixed_rows_mut::<3>(11)
            .copy_from(&(self.inertia_inv * torque));
        dx
    }

    fn jac_state(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        let m = x[0];
        let q = Vector4::new(x[7], x[8], x[9], x[10]);
        let w = Vector3::new(x[11], x[12], x[13]);
        let thrust = Vector3::new(u[0], u[1], u[2]);

        let mut a = DMatrix::zeros(STATE_DIM, STATE_DIM);
        // ṙ = v
        for i in 0..3 {
            a[(1 + i, 4 + i)] = 1.0;
        }
        // v̇ terms
        let rotated = rotate_raw(&q, &thrust);
        for i in 0..3 {
            a[(4 + i, 0)] = -rotated[i] / (m * m);
        }
        let dq = rotate_jac_q(&q, &thrust) / m;
        for i in 0..3 {
            for j in 0..4 {
                a[(4 + i, 7 + j)] = dq[(i, j)];
            }
        }
        // q̇ terms
        let om = 0.5 * omega_matrix(&w);
        for i in 0..4 {
            for j in 0..4 {
                a[(7 + i, 7 + j)] = om[(i, j)];
            }
        }
        // q̇ w.r.t. ω: ½ G(q) with G = [−qvᵀ; q0·I + [qv×]]
        let qv = Vector3::new(q[1], q[2], q[3]);
        for j in 0..3 {
            a[(7, 11 + j)] = -0.5 * qv[j];
        }
        let g_block = q[0] * Matrix3::identity() + skew(&qv);
        for i in 0..3 {
            for j in 0..3 {
                a[(8 + i, 11 + j)] = 0.5 * g_block[(i, j)];
            }
        }
        // ω̇ w.r.t. ω
        let jw = self.inertia * w;
        let dw = self.inertia_inv * (skew(&jw) - skew(&w) * self.inertia);
        for i in 0..3 {
            for j in 0..3 {
                a[(11 + i, 11 + j)] = dw[(i, j)];
            }
        }
        a
    }

    fn jac_control(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        let m = x[0];
        let q = Vector4::new(x[7], x[8], x[9], x[10]);
        let thrust = Vector3::new(u[0], u[1], u[2]);

        let mut b = DMatrix::zeros(STATE_DIM, 3);
        let norm = thrust.norm();
        if norm > 1e-12 {
            for j in 0..3 {
                b[(0, j)] = -self.fuel_rate * thrust[j] / norm;
            }
        }
        let qv = Vector3::new(q[1], q[2], q[3]);
        let rot: Matrix3<f64> = (q[0] * q[0] - qv.dot(&qv)) * Matrix3::identity()
            + 2.0 * qv * qv.transpose()
            + 2.0 * q[0] * skew(&qv);
        for i in 0..3 {
            for j in 0..3 {
                b[(4 + i, j)] = rot[(i, j)] / m;
            }
        }
        let torque_jac = self.inertia_inv * skew(&self.thrust_offset);
        for i in 0..3 {
            for j in 0..3 {
                b[(11 + i, j)] = torque_jac[(i, j)];
            }
        }
        b
    }
}

/// State derivative of the continuous dynamics.
///
/// Rejects non-finite inputs and non-positive mass; the hot paths used by
/// discretization call the model directly.
pub fn dynamics_rhs(
    state: &ContinuousState,
    thrust: &Vector3<f64>,
    problem: &DescentProblem,
) -> Result<DVector<f64>, DynamicsError> {
    if state.mass <= 0.0 {
        return Err(DynamicsError::NonPositiveMass(state.mass));
    }
    let x = state.to_vector();
    if x.iter().any(|v| !v.is_finite()) || thrust.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let model = DescentDynamics::new(problem);
    Ok(model.rhs(&x, &DVector::from_column_slice(thrust.as_slice())))
}

/// One RK4 step of `ẋ = σ·f(x, u(τ))` with linearly interpolated control.
pub fn rk4_step<M: DynamicsModel>(
    model: &M,
    x: &DVector<f64>,
    u0: &DVector<f64>,
    u1: &DVector<f64>,
    sigma: f64,
    tau0: f64,
    dt: f64,
    interval: f64,
) -> DVector<f64> {
    let u_at = |tau: f64| -> DVector<f64> {
        let s = (tau / interval).clamp(0.0, 1.0);
        u0 * (1.0 - s) + u1 * s
    };
    let k1 = model.rhs(x, &u_at(tau0)) * sigma;
    let k2 = model.rhs(&(x + 0.5 * dt * &k1), &u_at(tau0 + 0.5 * dt)) * sigma;
    let k3 = model.rhs(&(x + 0.5 * dt * &k2), &u_at(tau0 + 0.5 * dt)) * sigma;
    let k4 = model.rhs(&(x + dt * &k3), &u_at(tau0 + dt)) * sigma;
    x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrate one inter-node interval under first-order-hold controls.
pub fn propagate_interval<M: DynamicsModel>(
    model: &M,
    x0: &DVector<f64>,
    u0: &DVector<f64>,
    u1: &DVector<f64>,
    sigma: f64,
    interval: f64,
    substeps: usize,
) -> DVector<f64> {
    let dt = interval / substeps as f64;
    let mut x = x0.clone();
    for s in 0..substeps {
        x = rk4_step(model, &x, u0, u1, sigma, s as f64 * dt, dt, interval);
    }
    x
}

/// Feasibility audit of a plan against the nonlinear dynamics.
#[derive(Debug, Clone)]
pub struct DefectReport {
    /// Per-interval infinity-norm state defect after nonlinear propagation.
    pub node_defects: Vec<f64>,
    pub max_defect: f64,
    /// Worst violation of ‖T‖ ≤ T_max over the nodes (positive = violated).
    pub max_thrust_upper: f64,
    /// Worst violation of T_min ≤ ‖T‖ (positive = violated).
    pub max_thrust_lower: f64,
    /// Worst violation of cos δ_max·‖T‖ ≤ T₀ (positive = violated).
    pub max_gimbal: f64,
    /// Worst violation of m ≥ m_dry (positive = violated).
    pub max_mass: f64,
}

impl DefectReport {
    pub fn max_constraint_violation(&self) -> f64 {
        self.max_thrust_upper
            .max(self.max_thrust_lower)
            .max(self.max_gimbal)
            .max(self.max_mass)
    }
}

pub const DEFAULT_SUBSTEPS: usize = 15;

/// Integrate the nonlinear dynamics between nodes with FOH controls and
/// report per-node defects plus constraint violations. Never fails: plans
/// that are far from feasible simply produce large defects.
pub fn propagate(plan: &TrajectoryPlan, sigma: f64, problem: &DescentProblem) -> DefectReport {
    propagate_with_substeps(plan, sigma, problem, DEFAULT_SUBSTEPS)
}

pub fn propagate_with_substeps(
    plan: &TrajectoryPlan,
    sigma: f64,
    problem: &DescentProblem,
    substeps: usize,
) -> DefectReport {
    let model = DescentDynamics::new(problem);
    let k = plan.nodes();
    let interval = 1.0 / (k - 1) as f64;
    let mut node_defects = Vec::with_capacity(k - 1);
    for i in 0..k - 1 {
        let x0 = plan.state_column(i);
        let u0 = plan.control_column(i);
        let u1 = plan.control_column(i + 1);
        let prop = propagate_interval(&model, &x0, &u0, &u1, sigma, interval, substeps);
        let target = plan.state_column(i + 1);
        let defect = (prop - target).amax();
        node_defects.push(if defect.is_finite() { defect } else { f64::MAX });
    }
    let max_defect = node_defects.iter().cloned().fold(0.0, f64::max);

    let cos_gimbal = problem.gimbal_max_deg.to_radians().cos();
    let mut max_thrust_upper = f64::NEG_INFINITY;
    let mut max_thrust_lower = f64::NEG_INFINITY;
    let mut max_gimbal = f64::NEG_INFINITY;
    let mut max_mass = f64::NEG_INFINITY;
    for node in 0..k {
        let t = plan.thrust(node);
        let norm = t.norm();
        max_thrust_upper = max_thrust_upper.max(norm - problem.t_max);
        max_thrust_lower = max_thrust_lower.max(problem.t_min - norm);
        max_gimbal = max_gimbal.max(cos_gimbal * norm - t[0]);
        max_mass = max_mass.max(problem.m_dry - plan.mass(node));
    }
    DefectReport {
        node_defects,
        max_defect,
        max_thrust_upper,
        max_thrust_lower,
        max_gimbal,
        max_mass,
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DynamicsError {
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("non-finite state or control input")]
    NonFinite,
}
