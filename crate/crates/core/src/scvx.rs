//! Successive convexification for minimum-time powered descent.
//!
//! Each iteration linearizes the dynamics about the previous iterate (FOH),
//! assembles a second-order cone subproblem with virtual control and soft
//! trust regions, and solves it. Convergence requires the virtual control to
//! vanish and the iterate to stop moving; converged plans are audited by
//! nonlinear re-propagation.

use crate::dynamics::{propagate_with_substeps, DefectReport, DescentDynamics};
use crate::foh::{discretize, DiscretizedDynamics, FohError};
use crate::plan::{DescentProblem, PlanError, TrajectoryPlan, CONTROL_DIM, STATE_DIM};
use crate::quat::{dcm_unchecked, slerp};
use crate::socp::{solve_socp, ConicProgram, SocpError, SparseRow};
use nalgebra::{DVector, Vector3, Vector4};
use serde::{Deserialize, Serialize};

/// Penalty weights of the subproblem objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScvxWeights {
    pub w_nu: f64,
    pub w_delta: f64,
    pub w_delta_sigma: f64,
}

impl Default for ScvxWeights {
    fn default() -> Self {
        Self {
            w_nu: 1e5,
            w_delta: 1e-3,
            w_delta_sigma: 1e-1,
        }
    }
}

impl ScvxWeights {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.w_nu > 0.0 && self.w_delta > 0.0 && self.w_delta_sigma > 0.0 {
            Ok(())
        } else {
            Err(PlanError::InvalidProblem("SCvx weights must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScvxConfig {
    pub weights: ScvxWeights,
    pub max_iters: usize,
    /// Convergence threshold on ‖ν̄‖₁.
    pub nu_tol: f64,
    /// Convergence threshold on the sup-norm iterate change.
    pub step_tol: f64,
    /// RK4 substeps per interval for linearization and auditing.
    pub substeps: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Re-propagation defect bound for a plan to count as converged.
    pub defect_tol: f64,
    /// Once the iterate step falls below this threshold the linearization
    /// reference is under-relaxed, damping two-cycles at active-set
    /// switching nodes.
    pub relax_threshold: f64,
    /// Blend factor for the under-relaxed reference update.
    pub relaxation: f64,
}

impl Default for ScvxConfig {
    fn default() -> Self {
        Self {
            weights: ScvxWeights::default(),
            max_iters: 30,
            nu_tol: 1e-6,
            step_tol: 1e-4,
            substeps: 15,
            sigma_min: 0.3,
            sigma_max: 15.0,
            defect_tol: 1e-4,
            relax_threshold: 0.05,
            relaxation: 0.5,
        }
    }
}

/// Reference trajectory an iteration linearizes about.
#[derive(Debug, Clone)]
pub struct ScvxReference {
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    pub sigma: f64,
}

impl ScvxReference {
    pub fn from_plan(plan: &TrajectoryPlan, sigma: f64) -> Self {
        let k = plan.nodes();
        Self {
            states: (0..k).map(|i| plan.state_column(i)).collect(),
            controls: (0..k).map(|i| plan.control_column(i)).collect(),
            sigma,
        }
    }

    pub fn to_plan(&self) -> TrajectoryPlan {
        let k = self.states.len();
        let mut plan = TrajectoryPlan::zeros(k);
        for i in 0..k {
            plan.set_state_column(i, &self.states[i]);
            plan.set_control_column(i, &self.controls[i]);
        }
        plan
    }
}

/// Default initialization: straight-line position toward the landing target,
/// linearly interpolated velocity and body rates, attitude slerp, linear
/// mass depletion, and hover thrust at the interpolated attitude.
pub fn default_reference(problem: &DescentProblem) -> ScvxReference {
    let k = problem.nodes;
    let g_norm = problem.gravity_vec().norm();
    let r0 = Vector3::from(problem.r0);
    let rf = Vector3::from(problem.final_position);
    let v0 = Vector3::from(problem.v0);
    let vf = Vector3::from(problem.vf);
    let w0 = Vector3::from(problem.w0);
    let q0 = Vector4::from(problem.q0);
    let qf = Vector4::from(problem.qf);

    let mut states = Vec::with_capacity(k);
    let mut controls = Vec::with_capacity(k);
    for i in 0..k {
        let s = i as f64 / (k - 1) as f64;
        let mut x = DVector::zeros(STATE_DIM);
        x[0] = problem.m_wet + s * (problem.m_dry - problem.m_wet);
        let r = r0 + s * (rf - r0);
        let v = v0 + s * (vf - v0);
        let q = slerp(&q0, &qf, s);
        let w = (1.0 - s) * w0;
        for j in 0..3 {
            x[1 + j] = r[j];
            x[4 + j] = v[j];
            x[11 + j] = w[j];
        }
        for j in 0..4 {
            x[7 + j] = q[j];
        }
        // hover thrust rotated into the body frame, clamped to the bounds
        let thrust_inertial = x[0] * g_norm * Vector3::new(1.0, 0.0, 0.0);
        let mut t_body = dcm_unchecked(&q).transpose() * thrust_inertial;
        let norm = t_body.norm();
        let clamped = norm.clamp(problem.t_min * 1.01, problem.t_max * 0.99);
        if norm > 1e-9 {
            t_body *= clamped / norm;
        } else {
            t_body = Vector3::new(clamped, 0.0, 0.0);
        }
        states.push(x);
        controls.push(DVector::from_column_slice(t_body.as_slice()));
    }
    ScvxReference {
        states,
        controls,
        sigma: problem.tf_guess,
    }
}

/// Index map of the subproblem decision vector.
#[derive(Debug, Clone)]
pub struct SubproblemLayout {
    pub nodes: usize,
    pub num_vars: usize,
    x0: usize,
    u0: usize,
    sigma: usize,
    nu0: usize,
    nu_abs0: usize,
    delta0: usize,
    t_delta: usize,
    delta_sigma: usize,
    /// Structural counts: (lower-bound rows, magnitude cones, gimbal cones).
    pub thrust_constraint_counts: (usize, usize, usize),
}

impl SubproblemLayout {
    fn new(nodes: usize) -> Self {
        let x0 = 0;
        let u0 = x0 + STATE_DIM * nodes;
        let sigma = u0 + CONTROL_DIM * nodes;
        let nu0 = sigma + 1;
        let nu_abs0 = nu0 + STATE_DIM * (nodes - 1);
        let delta0 = nu_abs0 + STATE_DIM * (nodes - 1);
        let t_delta = delta0 + nodes;
        let delta_sigma = t_delta + 1;
        Self {
            nodes,
            num_vars: delta_sigma + 1,
            x0,
            u0,
            sigma,
            nu0,
            nu_abs0,
            delta0,
            t_delta,
            delta_sigma,
            thrust_constraint_counts: (0, 0, 0),
        }
    }

    pub fn x(&self, node: usize, i: usize) -> usize {
        self.x0 + node * STATE_DIM + i
    }

    pub fn u(&self, node: usize, i: usize) -> usize {
        self.u0 + node * CONTROL_DIM + i
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn nu(&self, interval: usize, i: usize) -> usize {
        self.nu0 + interval * STATE_DIM + i
    }

    pub fn nu_abs(&self, interval: usize, i: usize) -> usize {
        self.nu_abs0 + interval * STATE_DIM + i
    }

    pub fn delta(&self, node: usize) -> usize {
        self.delta0 + node
    }
}

/// Solution of one convex subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    pub sigma: f64,
    pub virtual_controls: Vec<DVector<f64>>,
    pub trust_radii: Vec<f64>,
    pub trust_radius_sigma: f64,
    pub objective: f64,
}

impl SubproblemSolution {
    pub fn nu_norm1(&self) -> f64 {
        self.virtual_controls
            .iter()
            .map(|v| v.iter().map(|x| x.abs()).sum::<f64>())
            .sum()
    }
}

/// Encode the SOCP subproblem about `reference` with discretized dynamics.
pub fn assemble_subproblem(
    dynamics: &DiscretizedDynamics,
    problem: &DescentProblem,
    weights: &ScvxWeights,
    reference: &ScvxReference,
    config: &ScvxConfig,
) -> Result<(ConicProgram, SubproblemLayout), PlanError> {
    problem.validate()?;
    weights.validate()?;
    let k = problem.nodes;
    if dynamics.intervals() != k - 1 || reference.states.len() != k {
        return Err(PlanError::InvalidProblem(
            "discretization/reference node count mismatch",
        ));
    }
    let mut layout = SubproblemLayout::new(k);
    let mut prog = ConicProgram::new(layout.num_vars);

    // objective: σ + w_ν‖ν̄‖₁ + w_Δ‖Δ̄‖₂ + w_Δσ Δ_σ
    prog.set_cost(layout.sigma(), 1.0);
    for i in 0..k - 1 {
        for j in 0..STATE_DIM {
            prog.set_cost(layout.nu_abs(i, j), weights.w_nu);
        }
    }
    prog.set_cost(layout.t_delta, weights.w_delta);
    prog.set_cost(layout.delta_sigma, weights.w_delta_sigma);

    // initial state
    let x_init = problem.initial_state();
    for i in 0..STATE_DIM {
        prog.add_equality(vec![(layout.x(0, i), 1.0)], x_init[i]);
    }

    // dynamics with virtual control
    for interval in 0..k - 1 {
        let a = &dynamics.a[interval];
        let b = &dynamics.b[interval];
        let c = &dynamics.c[interval];
        let s = &dynamics.sigma[interval];
        let z = &dynamics.z[interval];
        for i in 0..STATE_DIM {
            let mut row: SparseRow = Vec::with_capacity(STATE_DIM + 2 * CONTROL_DIM + 3);
            row.push((layout.x(interval + 1, i), 1.0));
            for j in 0..STATE_DIM {
                let v = a[(i, j)];
                if v != 0.0 {
                    row.push((layout.x(interval, j), -v));
                }
            }
            for j in 0..CONTROL_DIM {
                let vb = b[(i, j)];
                if vb != 0.0 {
                    row.push((layout.u(interval, j), -vb));
                }
                let vc = c[(i, j)];
                if vc != 0.0 {
                    row.push((layout.u(interval + 1, j), -vc));
                }
            }
            if s[i] != 0.0 {
                row.push((layout.sigma(), -s[i]));
            }
            row.push((layout.nu(interval, i), -1.0));
            prog.add_equality(row, z[i]);
        }
    }

    // terminal boundary conditions
    let last = k - 1;
    for i in 0..3 {
        if problem.final_pos_constrained[i] {
            prog.add_equality(vec![(layout.x(last, 1 + i), 1.0)], problem.final_position[i]);
        }
        prog.add_equality(vec![(layout.x(last, 4 + i), 1.0)], problem.vf[i]);
        prog.add_equality(vec![(layout.x(last, 11 + i), 1.0)], 0.0);
    }
    for i in 0..4 {
        prog.add_equality(vec![(layout.x(last, 7 + i), 1.0)], problem.qf[i]);
    }
    // final thrust aligned with the body axis
    prog.add_equality(vec![(layout.u(last, 1), 1.0)], 0.0);
    prog.add_equality(vec![(layout.u(last, 2), 1.0)], 0.0);

    // mass above dry mass
    for node in 0..k {
        prog.add_inequality(vec![(layout.x(node, 0), -1.0)], -problem.m_dry);
    }

    // thrust lower bound, linearized about the reference direction
    let mut lower_rows = 0;
    for node in 0..k {
        let u_ref = &reference.controls[node];
        let norm = u_ref.norm();
        let n_hat = if node == last || norm < 1e-6 {
            DVector::from_vec(vec![1.0, 0.0, 0.0])
        } else {
            u_ref / norm
        };
        let row: SparseRow = (0..CONTROL_DIM).map(|j| (layout.u(node, j), -n_hat[j])).collect();
        prog.add_inequality(row, -problem.t_min);
        lower_rows += 1;
    }

    // time-scale rails and trust region on σ
    prog.add_inequality(vec![(layout.sigma(), 1.0)], config.sigma_max);
    prog.add_inequality(vec![(layout.sigma(), -1.0)], -config.sigma_min);
    prog.add_inequality(
        vec![(layout.sigma(), 1.0), (layout.delta_sigma, -1.0)],
        reference.sigma,
    );
    prog.add_inequality(
        vec![(layout.sigma(), -1.0), (layout.delta_sigma, -1.0)],
        -reference.sigma,
    );

    // |ν| ≤ ν_abs
    for interval in 0..k - 1 {
        for i in 0..STATE_DIM {
            prog.add_inequality(
                vec![(layout.nu(interval, i), 1.0), (layout.nu_abs(interval, i), -1.0)],
                0.0,
            );
            prog.add_inequality(
                vec![(layout.nu(interval, i), -1.0), (layout.nu_abs(interval, i), -1.0)],
                0.0,
            );
        }
    }

    // thrust magnitude and gimbal cones
    let cos_gimbal = problem.gimbal_max_deg.to_radians().cos();
    let mut upper_cones = 0;
    let mut gimbal_cones = 0;
    for node in 0..k {
        prog.add_soc(vec![
            (vec![], problem.t_max),
            (vec![(layout.u(node, 0), -1.0)], 0.0),
            (vec![(layout.u(node, 1), -1.0)], 0.0),
            (vec![(layout.u(node, 2), -1.0)], 0.0),
        ]);
        upper_cones += 1;
        prog.add_soc(vec![
            (vec![(layout.u(node, 0), -1.0)], 0.0),
            (vec![(layout.u(node, 0), -cos_gimbal)], 0.0),
            (vec![(layout.u(node, 1), -cos_gimbal)], 0.0),
            (vec![(layout.u(node, 2), -cos_gimbal)], 0.0),
        ]);
        gimbal_cones += 1;
    }

    // per-node trust regions: ‖(δx, δu)‖² ≤ Δ_k as a rotated cone
    for node in 0..k {
        let mut rows: Vec<(SparseRow, f64)> = Vec::with_capacity(STATE_DIM + CONTROL_DIM + 2);
        rows.push((vec![(layout.delta(node), -1.0)], 1.0));
        for i in 0..STATE_DIM {
            rows.push((vec![(layout.x(node, i), -2.0)], -2.0 * reference.states[node][i]));
        }
        for j in 0..CONTROL_DIM {
            rows.push((vec![(layout.u(node, j), -2.0)], -2.0 * reference.controls[node][j]));
        }
        rows.push((vec![(layout.delta(node), 1.0)], 1.0));
        prog.add_soc(rows);
    }

    // ‖Δ̄‖₂ ≤ t_Δ
    let mut norm_rows: Vec<(SparseRow, f64)> = Vec::with_capacity(k + 1);
    norm_rows.push((vec![(layout.t_delta, -1.0)], 0.0));
    for node in 0..k {
        norm_rows.push((vec![(layout.delta(node), -1.0)], 0.0));
    }
    prog.add_soc(norm_rows);

    layout.thrust_constraint_counts = (lower_rows, upper_cones, gimbal_cones);
    Ok((prog, layout))
}

/// Pull the typed solution out of the raw SOCP vector.
pub fn extract_solution(
    x: &[f64],
    objective: f64,
    layout: &SubproblemLayout,
) -> SubproblemSolution {
    let k = layout.nodes;
    let states = (0..k)
        .map(|n| DVector::from_fn(STATE_DIM, |i, _| x[layout.x(n, i)]))
        .collect();
    let controls = (0..k)
        .map(|n| DVector::from_fn(CONTROL_DIM, |i, _| x[layout.u(n, i)]))
        .collect();
    let virtual_controls = (0..k - 1)
        .map(|n| DVector::from_fn(STATE_DIM, |i, _| x[layout.nu(n, i)]))
        .collect();
    SubproblemSolution {
        states,
        controls,
        sigma: x[layout.sigma()],
        virtual_controls,
        trust_radii: (0..k).map(|n| x[layout.delta(n)]).collect(),
        trust_radius_sigma: x[layout.delta_sigma],
        objective,
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub nu_norm1: f64,
    pub max_step: f64,
    pub max_trust_radius: f64,
    pub trust_radius_sigma: f64,
    pub status: String,
}

/// Structured-text iteration log, one record per line.
pub fn format_iteration_log(records: &[IterationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "iteration={} objective={:.9e} nu_norm1={:.9e} max_step={:.9e} max_trust_radius={:.9e} trust_radius_sigma={:.9e} status={}\n",
            r.iteration, r.objective, r.nu_norm1, r.max_step, r.max_trust_radius, r.trust_radius_sigma, r.status
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct ScvxResult {
    pub plan: TrajectoryPlan,
    pub sigma: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub defect: DefectReport,
}

#[derive(Debug, thiserror::Error)]
pub enum ScvxError {
    #[error("invalid problem: {0}")]
    Invalid(#[from] PlanError),
    #[error("linearization failed at iteration {iteration}: {source}")]
    Discretization {
        iteration: usize,
        source: FohError,
    },
    #[error("subproblem failed at iteration {iteration}: {source}")]
    Subproblem {
        iteration: usize,
        source: SocpError,
    },
}

/// A candidate first reference for the solver.
#[derive(Debug, Clone)]
pub struct InitialGuess {
    pub plan: TrajectoryPlan,
    /// Time scale of the guess; the problem's flight-time guess when absent.
    pub sigma: Option<f64>,
}

impl InitialGuess {
    pub fn from_plan(plan: TrajectoryPlan) -> Self {
        Self { plan, sigma: None }
    }
}

/// Solve the powered-descent problem by successive convexification.
///
/// When `initial_guess` is supplied its plan becomes the first reference;
/// otherwise the default interpolation is used. Non-convergence within the
/// iteration budget returns the best iterate flagged `converged = false`.
pub fn scvx_solve(
    problem: &DescentProblem,
    config: &ScvxConfig,
    initial_guess: Option<&InitialGuess>,
) -> Result<ScvxResult, ScvxError> {
    problem.validate()?;
    let model = DescentDynamics::new(problem);
    let mut reference = match initial_guess {
        Some(guess) => {
            ScvxReference::from_plan(&guess.plan, guess.sigma.unwrap_or(problem.tf_guess))
        }
        None => default_reference(problem),
    };
    let mut log = Vec::new();
    let mut converged = false;
    // convergence is measured between consecutive subproblem solutions; the
    // (possibly under-relaxed) reference only steers the linearization
    let mut last_solution: Option<ScvxReference> = None;

    for iteration in 0..config.max_iters {
        let disc = discretize(
            &model,
            &reference.states,
            &reference.controls,
            reference.sigma,
            config.substeps,
        )
        .map_err(|source| ScvxError::Discretization { iteration, source })?;
        let (prog, layout) =
            assemble_subproblem(&disc, problem, &config.weights, &reference, config)?;
        let raw = solve_socp(&prog).map_err(|source| ScvxError::Subproblem { iteration, source })?;
        let sol = extract_solution(&raw.x, raw.objective, &layout);

        let baseline = last_solution.as_ref().unwrap_or(&reference);
        let mut max_step: f64 = (sol.sigma - baseline.sigma).abs();
        for (a, b) in sol.states.iter().zip(&baseline.states) {
            max_step = max_step.max((a - b).amax());
        }
        for (a, b) in sol.controls.iter().zip(&baseline.controls) {
            max_step = max_step.max((a - b).amax());
        }
        let nu_norm1 = sol.nu_norm1();
        log.push(IterationRecord {
            iteration,
            objective: sol.objective,
            nu_norm1,
            max_step,
            max_trust_radius: sol.trust_radii.iter().cloned().fold(0.0, f64::max),
            trust_radius_sigma: sol.trust_radius_sigma,
            status: "solved".to_string(),
        });

        let solution = ScvxReference {
            states: sol.states,
            controls: sol.controls,
            sigma: sol.sigma,
        };
        let theta = if max_step < config.relax_threshold {
            config.relaxation
        } else {
            1.0
        };
        reference = ScvxReference {
            states: reference
                .states
                .iter()
                .zip(&solution.states)
                .map(|(r, s)| r + theta * (s - r))
                .collect(),
            controls: reference
                .controls
                .iter()
                .zip(&solution.controls)
                .map(|(r, s)| r + theta * (s - r))
                .collect(),
            sigma: reference.sigma + theta * (solution.sigma - reference.sigma),
        };
        last_solution = Some(solution);
        if nu_norm1 < config.nu_tol && max_step < config.step_tol {
            converged = true;
            break;
        }
    }

    let best = last_solution.unwrap_or(reference);
    let mut plan = best.to_plan();
    plan.normalize_quaternions();
    let defect = propagate_with_substeps(&plan, best.sigma, problem, config.substeps);
    let converged = converged && defect.max_defect < config.defect_tol;
    Ok(ScvxResult {
        plan,
        sigma: best.sigma,
        iterations: log,
        converged,
        defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{sample_scenario, Range, ScenarioDistribution};

    /// Mid-range Table 2 draw: a comfortably feasible scenario.
    pub fn nominal_problem() -> DescentProblem {
        let mut dist = ScenarioDistribution::default();
        dist.r0_vert = Range::fixed(2.5);
        dist.r0_x = Range::fixed(0.5);
        dist.r0_y = Range::fixed(-0.5);
        dist.v0_vert = Range::fixed(-0.75);
        dist.v0_x = Range::fixed(-0.35);
        dist.v0_y = Range::fixed(-0.35);
        dist.pitch_deg = Range::fixed(10.0);
        dist.yaw_deg = Range::fixed(-10.0);
        dist.w0_x_deg = Range::fixed(5.0);
        dist.w0_y_deg = Range::fixed(-5.0);
        dist.rf_x = Range::fixed(1.0);
        dist.rf_y = Range::fixed(-1.0);
        dist.m_wet = Range::fixed(3.5);
        dist.m_dry = Range::fixed(1.0);
        dist.gimbal_deg = Range::fixed(50.0);
        dist.t_max = Range::fixed(6.5);
        dist.t_min = Range::fixed(0.5);
        sample_scenario(&dist, 0)
    }

    #[test]
    fn nominal_scenario_converges() {
        let problem = nominal_problem();
        let config = ScvxConfig::default();
        let result = scvx_solve(&problem, &config, None).unwrap();
        assert!(result.converged, "log:\n{}", format_iteration_log(&result.iterations));
        assert!(result.defect.max_defect < 1e-4);

        let plan = &result.plan;
        let last = plan.nodes() - 1;
        // final vertical position pinned to zero, final rates zero
        assert!(plan.position(last)[0].abs() < 1e-6);
        assert!(plan.angular_velocity(last).norm() < 1e-6);
        // mass trace non-increasing and above dry mass
        for k in 0..last {
            assert!(plan.mass(k + 1) <= plan.mass(k) + 1e-9);
        }
        assert!(plan.mass(last) >= problem.m_dry - 1e-6);
        // thrust cones
        let cos_g = problem.gimbal_max_deg.to_radians().cos();
        for k in 0..plan.nodes() {
            let t = plan.thrust(k);
            let norm = t.norm();
            assert!(norm <= problem.t_max + 1e-7, "node {k} ‖T‖ = {norm}");
            assert!(norm >= problem.t_min - 1e-7, "node {k} ‖T‖ = {norm}");
            assert!(cos_g * norm <= t[0] + 1e-7, "node {k} gimbal");
        }
        // quaternion columns unit norm
        for k in 0..plan.nodes() {
            assert!((plan.quaternion(k).norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn virtual_control_decays_monotonically() {
        let problem = nominal_problem();
        let config = ScvxConfig::default();
        let result = scvx_solve(&problem, &config, None).unwrap();
        let nus: Vec<f64> = result.iterations.iter().map(|r| r.nu_norm1).collect();
        assert!(nus.len() >= 2);
        // values below the convergence tolerance are solver noise around
        // zero, not increases
        let decays = nus
            .windows(2)
            .filter(|w| w[1] <= w[0] * (1.0 + 1e-9) || w[1] < config.nu_tol)
            .count();
        let frac = decays as f64 / (nus.len() - 1) as f64;
        assert!(frac >= 0.9, "ν decay fraction {frac}, trace {nus:?}");
    }

    #[test]
    fn warm_start_with_converged_solution_is_fixed_point() {
        let problem = nominal_problem();
        let config = ScvxConfig::default();
        let cold = scvx_solve(&problem, &config, None).unwrap();
        assert!(cold.converged);
        let guess = InitialGuess {
            plan: cold.plan.clone(),
            sigma: Some(cold.sigma),
        };
        let warm = scvx_solve(&problem, &config, Some(&guess)).unwrap();
        assert!(warm.converged);
        assert!(
            warm.iterations.len() <= 2,
            "warm start took {} iterations",
            warm.iterations.len()
        );
    }

    #[test]
    fn subproblem_has_k_thrust_cone_triples() {
        let problem = nominal_problem();
        let model = DescentDynamics::new(&problem);
        let reference = default_reference(&problem);
        let config = ScvxConfig::default();
        let disc = discretize(&model, &reference.states, &reference.controls, reference.sigma, 5)
            .unwrap();
        let (prog, layout) =
            assemble_subproblem(&disc, &problem, &config.weights, &reference, &config).unwrap();
        let k = problem.nodes;
        assert_eq!(layout.thrust_constraint_counts, (k, k, k));
        // pinned site: 14 initial + 14(K−1) dynamics + 3 pos + 3 vel
        // + 4 quat + 3 rate + 2 thrust-direction equalities
        assert_eq!(
            prog.num_equalities(),
            STATE_DIM + STATE_DIM * (k - 1) + 3 + 3 + 4 + 3 + 2
        );
        // SOC blocks: magnitude + gimbal + trust region per node, plus ‖Δ̄‖
        assert_eq!(prog.num_soc_blocks(), 3 * k + 1);
    }

    /// Free-landing mode drops the x/y terminal equalities, leaving only the
    /// vertical row.
    #[test]
    fn free_landing_mode_has_no_final_xy_rows() {
        let mut problem = nominal_problem();
        problem.final_pos_constrained = [true, false, false];
        let model = DescentDynamics::new(&problem);
        let reference = default_reference(&problem);
        let config = ScvxConfig::default();
        let disc = discretize(&model, &reference.states, &reference.controls, reference.sigma, 5)
            .unwrap();
        let (prog, _) =
            assemble_subproblem(&disc, &problem, &config.weights, &reference, &config).unwrap();
        let k = problem.nodes;
        assert_eq!(
            prog.num_equalities(),
            STATE_DIM + STATE_DIM * (k - 1) + 1 + 3 + 4 + 3 + 2
        );
    }

    /// Re-check of a converged run: embedding the solution into a fresh
    /// subproblem about itself satisfies every constraint.
    #[test]
    fn converged_solution_feasible_in_next_subproblem() {
        let problem = nominal_problem();
        let config = ScvxConfig::default();
        let result = scvx_solve(&problem, &config, None).unwrap();
        assert!(result.converged);
        let reference = ScvxReference::from_plan(&result.plan, result.sigma);
        let model = DescentDynamics::new(&problem);
        let disc = discretize(
            &model,
            &reference.states,
            &reference.controls,
            reference.sigma,
            config.substeps,
        )
        .unwrap();
        let (prog, layout) =
            assemble_subproblem(&disc, &problem, &config.weights, &reference, &config).unwrap();

        // candidate vector: the reference itself, ν absorbing the (tiny)
        // discretization residual, trust radii at zero
        let k = problem.nodes;
        let mut y = vec![0.0; layout.num_vars];
        for node in 0..k {
            for i in 0..STATE_DIM {
                y[layout.x(node, i)] = reference.states[node][i];
            }
            for j in 0..CONTROL_DIM {
                y[layout.u(node, j)] = reference.controls[node][j];
            }
        }
        y[layout.sigma()] = reference.sigma;
        for interval in 0..k - 1 {
            let pred = disc.step(
                interval,
                &reference.states[interval],
                &reference.controls[interval],
                &reference.controls[interval + 1],
                reference.sigma,
            );
            let nu = &reference.states[interval + 1] - pred;
            for i in 0..STATE_DIM {
                y[layout.nu(interval, i)] = nu[i];
                y[layout.nu_abs(interval, i)] = nu[i].abs();
            }
        }
        let violation = prog.constraint_violation(&y);
        assert!(violation < 1e-5, "violation {violation}");
    }
}
