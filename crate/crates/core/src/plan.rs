//! Trajectory and problem data model.
//!
//! A [`TrajectoryPlan`] is the 17 × K matrix of states and controls over the
//! horizon — the optimizer's output and the diffusion model's sample space.
//! Row blocks, top to bottom: position (3), velocity (3), quaternion (4),
//! angular velocity (3), mass (1), thrust (3).
//!
//! Frame convention: inertial component 0 is vertical (opposing gravity),
//! components 1 and 2 are the horizontal x/y axes of the landing plane.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

pub const PLAN_ROWS: usize = 17;
pub const STATE_DIM: usize = 14;
pub const CONTROL_DIM: usize = 3;

pub const ROW_POS: usize = 0;
pub const ROW_VEL: usize = 3;
pub const ROW_QUAT: usize = 6;
pub const ROW_OMEGA: usize = 10;
pub const ROW_MASS: usize = 13;
pub const ROW_THRUST: usize = 14;

/// States and controls stored over the horizon as a 17 × K matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPlan {
    data: DMatrix<f64>,
}

impl TrajectoryPlan {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            data: DMatrix::zeros(PLAN_ROWS, nodes),
        }
    }

    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self, PlanError> {
        if data.nrows() != PLAN_ROWS {
            return Err(PlanError::ShapeMismatch {
                rows: data.nrows(),
                cols: data.ncols(),
            });
        }
        Ok(Self { data })
    }

    pub fn nodes(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.data
    }

    pub fn get(&self, row: usize, node: usize) -> f64 {
        self.data[(row, node)]
    }

    pub fn set(&mut self, row: usize, node: usize, value: f64) {
        self.data[(row, node)] = value;
    }

    pub fn position(&self, node: usize) -> Vector3<f64> {
        Vector3::new(
            self.data[(ROW_POS, node)],
            self.data[(ROW_POS + 1, node)],
            self.data[(ROW_POS + 2, node)],
        )
    }

    pub fn velocity(&self, node: usize) -> Vector3<f64> {
        Vector3::new(
            self.data[(ROW_VEL, node)],
            self.data[(ROW_VEL + 1, node)],
            self.data[(ROW_VEL + 2, node)],
        )
    }

    pub fn quaternion(&self, node: usize) -> Vector4<f64> {
        Vector4::new(
            self.data[(ROW_QUAT, node)],
            self.data[(ROW_QUAT + 1, node)],
            self.data[(ROW_QUAT + 2, node)],
            self.data[(ROW_QUAT + 3, node)],
        )
    }

    pub fn angular_velocity(&self, node: usize) -> Vector3<f64> {
        Vector3::new(
            self.data[(ROW_OMEGA, node)],
            self.data[(ROW_OMEGA + 1, node)],
            self.data[(ROW_OMEGA + 2, node)],
        )
    }

    pub fn mass(&self, node: usize) -> f64 {
        self.data[(ROW_MASS, node)]
    }

    pub fn thrust(&self, node: usize) -> Vector3<f64> {
        Vector3::new(
            self.data[(ROW_THRUST, node)],
            self.data[(ROW_THRUST + 1, node)],
            self.data[(ROW_THRUST + 2, node)],
        )
    }

    /// Dynamics state `[m, r, v, q, ω]` at a node.
    pub fn state_column(&self, node: usize) -> DVector<f64> {
        let mut x = DVector::zeros(STATE_DIM);
        x[0] = self.mass(node);
        x.fixed_rows_mut::<3>(1).copy_from(&self.position(node));
        x.fixed_rows_mut::<3>(4).copy_from(&self.velocity(node));
        x.fixed_rows_mut::<4>(7).copy_from(&self.quaternion(node));
        x.fixed_rows_mut::<3>(11)
            .copy_from(&self.angular_velocity(node));
        x
    }

    pub fn control_column(&self, node: usize) -> DVector<f64> {
        DVector::from_column_slice(self.thrust(node).as_slice())
    }

    pub fn set_state_column(&mut self, node: usize, x: &DVector<f64>) {
        self.data[(ROW_MASS, node)] = x[0];
        for i in 0..3 {
            self.data[(ROW_POS + i, node)] = x[1 + i];
            self.data[(ROW_VEL + i, node)] = x[4 + i];
            self.data[(ROW_OMEGA + i, node)] = x[11 + i];
        }
        for i in 0..4 {
            self.data[(ROW_QUAT + i, node)] = x[7 + i];
        }
    }

    pub fn set_control_column(&mut self, node: usize, u: &DVector<f64>) {
        for i in 0..3 {
            self.data[(ROW_THRUST + i, node)] = u[i];
        }
    }

    /// Row-major flattening: row 0 over all nodes, then row 1, and so on.
    pub fn flatten(&self) -> DVector<f64> {
        let k = self.nodes();
        let mut v = DVector::zeros(PLAN_ROWS * k);
        for r in 0..PLAN_ROWS {
            for c in 0..k {
                v[r * k + c] = self.data[(r, c)];
            }
        }
        v
    }

    pub fn from_flat(flat: &DVector<f64>, nodes: usize) -> Result<Self, PlanError> {
        if flat.len() != PLAN_ROWS * nodes {
            return Err(PlanError::ShapeMismatch {
                rows: flat.len(),
                cols: nodes,
            });
        }
        let mut data = DMatrix::zeros(PLAN_ROWS, nodes);
        for r in 0..PLAN_ROWS {
            for c in 0..nodes {
                data[(r, c)] = flat[r * nodes + c];
            }
        }
        Ok(Self { data })
    }

    /// Renormalize every quaternion column in place.
    pub fn normalize_quaternions(&mut self) {
        for k in 0..self.nodes() {
            let q = self.quaternion(k);
            let n = q.norm();
            if n > 1e-12 {
                for i in 0..4 {
                    self.data[(ROW_QUAT + i, k)] = q[i] / n;
                }
            }
        }
    }
}

/// Full nondimensional 6-DoF powered-descent problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentProblem {
    pub gravity: [f64; 3],
    pub fuel_rate: f64,
    pub thrust_offset: [f64; 3],
    /// Diagonal of the inertia tensor.
    pub inertia_diag: [f64; 3],
    pub tf_guess: f64,
    pub nodes: usize,
    pub m_wet: f64,
    pub m_dry: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub gimbal_max_deg: f64,
    pub r0: [f64; 3],
    pub v0: [f64; 3],
    pub q0: [f64; 4],
    pub w0: [f64; 3],
    pub vf: [f64; 3],
    pub qf: [f64; 4],
    /// Landing-site target; only flagged components are pinned in the solver.
    pub final_position: [f64; 3],
    /// Which final-position components carry equality constraints. Multi-site
    /// mode fixes only the vertical component to zero.
    pub final_pos_constrained: [bool; 3],
}

impl DescentProblem {
    pub fn gravity_vec(&self) -> Vector3<f64> {
        Vector3::from(self.gravity)
    }

    pub fn thrust_offset_vec(&self) -> Vector3<f64> {
        Vector3::from(self.thrust_offset)
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.inertia_diag))
    }

    pub fn initial_state(&self) -> DVector<f64> {
        let mut x = DVector::zeros(STATE_DIM);
        x[0] = self.m_wet;
        for i in 0..3 {
            x[1 + i] = self.r0[i];
            x[4 + i] = self.v0[i];
            x[11 + i] = self.w0[i];
        }
        for i in 0..4 {
            x[7 + i] = self.q0[i];
        }
        x
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.t_min > 0.0 && self.t_min < self.t_max) {
            return Err(PlanError::InvalidProblem("need 0 < T_min < T_max"));
        }
        if !(self.m_dry > 0.0 && self.m_dry < self.m_wet) {
            return Err(PlanError::InvalidProblem("need 0 < m_dry < m_wet"));
        }
        if !(self.gimbal_max_deg > 0.0 && self.gimbal_max_deg <= 90.0) {
            return Err(PlanError::InvalidProblem("need 0 < δ_max ≤ 90"));
        }
        if self.nodes < 2 {
            return Err(PlanError::InvalidProblem("need at least two nodes"));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlanError {
    #[error("plan shape mismatch: got {rows}×{cols}")]
    ShapeMismatch { rows: usize, cols: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(&'static str),
}
