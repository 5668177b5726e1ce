//! Second-order cone programming layer.
//!
//! Programs are assembled against a solver-agnostic representation: a linear
//! cost, a stacked constraint matrix `A·x + s = b`, and an ordered list of
//! cone blocks (zero, nonnegative, second-order). The backing solver is an
//! interior-point method; callers only rely on the contract here.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSpec {
    /// Equality rows: s = 0.
    Zero(usize),
    /// Inequality rows: s ≥ 0.
    Nonneg(usize),
    /// Second-order cone of the given dimension: s₀ ≥ ‖s₁..‖₂.
    Soc(usize),
}

/// Sparse row: list of (variable index, coefficient).
pub type SparseRow = Vec<(usize, f64)>;

/// A conic program in the form min cᵀx s.t. A·x + s = b, s ∈ K.
///
/// Rows are kept grouped by cone class in the order zero, nonnegative, then
/// each second-order cone block.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub cost: Vec<f64>,
    zero_rows: Vec<(SparseRow, f64)>,
    nonneg_rows: Vec<(SparseRow, f64)>,
    soc_blocks: Vec<Vec<(SparseRow, f64)>>,
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            cost: vec![0.0; num_vars],
            ..Default::default()
        }
    }

    pub fn set_cost(&mut self, var: usize, coeff: f64) {
        self.cost[var] = coeff;
    }

    pub fn add_cost(&mut self, var: usize, coeff: f64) {
        self.cost[var] += coeff;
    }

    /// Equality row: Σ coeffs·x = rhs.
    pub fn add_equality(&mut self, row: SparseRow, rhs: f64) {
        self.zero_rows.push((row, rhs));
    }

    /// Inequality row: Σ coeffs·x ≤ rhs.
    pub fn add_inequality(&mut self, row: SparseRow, rhs: f64) {
        self.nonneg_rows.push((row, rhs));
    }

    /// Second-order cone block: with s_i = rhs_i − Σ coeffs_i·x, enforce
    /// s₀ ≥ ‖(s₁, …)‖₂.
    pub fn add_soc(&mut self, rows: Vec<(SparseRow, f64)>) {
        assert!(rows.len() >= 2, "SOC block needs at least two rows");
        self.soc_blocks.push(rows);
    }

    pub fn num_equalities(&self) -> usize {
        self.zero_rows.len()
    }

    pub fn num_inequalities(&self) -> usize {
        self.nonneg_rows.len()
    }

    pub fn num_soc_blocks(&self) -> usize {
        self.soc_blocks.len()
    }

    pub fn cones(&self) -> Vec<ConeSpec> {
        let mut cones = Vec::new();
        if !self.zero_rows.is_empty() {
            cones.push(ConeSpec::Zero(self.zero_rows.len()));
        }
        if !self.nonneg_rows.is_empty() {
            cones.push(ConeSpec::Nonneg(self.nonneg_rows.len()));
        }
        for block in &self.soc_blocks {
            cones.push(ConeSpec::Soc(block.len()));
        }
        cones
    }

    fn stacked_rows(&self) -> impl Iterator<Item = &(SparseRow, f64)> {
        self.zero_rows
            .iter()
            .chain(self.nonneg_rows.iter())
            .chain(self.soc_blocks.iter().flatten())
    }

    pub fn num_rows(&self) -> usize {
        self.zero_rows.len()
            + self.nonneg_rows.len()
            + self.soc_blocks.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Residual of x against all constraints: max equality violation and
    /// max cone violation (positive means infeasible by that amount).
    pub fn constraint_violation(&self, x: &[f64]) -> f64 {
        let eval_row = |row: &SparseRow, rhs: f64| -> f64 {
            rhs - row.iter().map(|(j, v)| v * x[*j]).sum::<f64>()
        };
        let mut worst: f64 = 0.0;
        for (row, rhs) in &self.zero_rows {
            worst = worst.max(eval_row(row, *rhs).abs());
        }
        for (row, rhs) in &self.nonneg_rows {
            worst = worst.max(-eval_row(row, *rhs));
        }
        for block in &self.soc_blocks {
            let s: Vec<f64> = block.iter().map(|(row, rhs)| eval_row(row, *rhs)).collect();
            let tail: f64 = s[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(tail - s[0]);
        }
        worst
    }

    fn to_csc(&self) -> (CscMatrix<f64>, Vec<f64>) {
        let m = self.num_rows();
        let n = self.num_vars;
        let mut b = Vec::with_capacity(m);
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, (row, rhs)) in self.stacked_rows().enumerate() {
            b.push(*rhs);
            for (j, v) in row {
                if *v != 0.0 {
                    cols[*j].push((i, *v));
                }
            }
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for col in &mut cols {
            col.sort_by_key(|(i, _)| *i);
            for (i, v) in col.iter() {
                rowval.push(*i);
                nzval.push(*v);
            }
            colptr.push(rowval.len());
        }
        (CscMatrix::new(m, n, colptr, rowval, nzval), b)
    }
}

/// Primal-dual solution of a conic program.
#[derive(Debug, Clone)]
pub struct SocpSolution {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub objective: f64,
    pub iterations: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum SocpError {
    #[error("primal infeasible")]
    PrimalInfeasible,
    #[error("dual infeasible (unbounded)")]
    DualInfeasible,
    #[error("iteration limit reached")]
    MaxIterations,
    #[error("solver failed: {0}")]
    SolverFailure(String),
}

/// Solve a conic program to interior-point accuracy.
///
/// Deterministic for fixed inputs. Feasibility tolerances target 1e-8 on
/// the scaled problem; see the oracle tests for the observed accuracy.
pub fn solve_socp(program: &ConicProgram) -> Result<SocpSolution, SocpError> {
    let (a, b) = program.to_csc();
    let p = CscMatrix::zeros((program.num_vars, program.num_vars));
    let cones: Vec<SupportedConeT<f64>> = program
        .cones()
        .iter()
        .map(|c| match c {
            ConeSpec::Zero(n) => SupportedConeT::ZeroConeT(*n),
            ConeSpec::Nonneg(n) => SupportedConeT::NonnegativeConeT(*n),
            ConeSpec::Soc(n) => SupportedConeT::SecondOrderConeT(*n),
        })
        .collect();
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(200)
        .build()
        .map_err(|e| SocpError::SolverFailure(e.to_string()))?;
    let mut solver = DefaultSolver::new(&p, &program.cost, &a, &b, &cones, settings)
        .map_err(|e| SocpError::SolverFailure(format!("{e:?}")))?;
    solver.solve();
    let status = solver.solution.status;
    match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(SocpSolution {
            x: solver.solution.x.clone(),
            z: solver.solution.z.clone(),
            s: solver.solution.s.clone(),
            objective: solver.solution.obj_val,
            iterations: solver.solution.iterations,
        }),
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            Err(SocpError::PrimalInfeasible)
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            Err(SocpError::DualInfeasible)
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => Err(SocpError::MaxIterations),
        other => Err(SocpError::SolverFailure(format!("{other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// min x s.t. ‖y‖₂ ≤ x, x ≥ 1 → x* = 1, y* = 0.
    #[test]
    fn analytic_cone_problem() {
        // vars: x(0), y1(1), y2(2)
        let mut prog = ConicProgram::new(3);
        prog.set_cost(0, 1.0);
        prog.add_inequality(vec![(0, -1.0)], -1.0); // −x ≤ −1
        prog.add_soc(vec![
            (vec![(0, -1.0)], 0.0), // s0 = x
            (vec![(1, -1.0)], 0.0), // s1 = y1
            (vec![(2, -1.0)], 0.0), // s2 = y2
        ]);
        let sol = solve_socp(&prog).unwrap();
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.x[1], 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.x[2], 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-7);
    }

    /// Hand-solved LP embedded as a cone program:
    /// min −x − 2y s.t. x + y ≤ 4, x ≤ 3, x, y ≥ 0 → vertex (0, 4), obj −8.
    #[test]
    fn lp_vertex_solution() {
        let mut prog = ConicProgram::new(2);
        prog.set_cost(0, -1.0);
        prog.set_cost(1, -2.0);
        prog.add_inequality(vec![(0, 1.0), (1, 1.0)], 4.0);
        prog.add_inequality(vec![(0, 1.0)], 3.0);
        prog.add_inequality(vec![(0, -1.0)], 0.0);
        prog.add_inequality(vec![(1, -1.0)], 0.0);
        let sol = solve_socp(&prog).unwrap();
        assert_abs_diff_eq!(sol.objective, -8.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.x[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.x[1], 4.0, epsilon = 1e-6);
    }

    #[test]
    fn unbounded_reported_as_dual_infeasible() {
        let mut prog = ConicProgram::new(1);
        prog.set_cost(0, -1.0);
        prog.add_inequality(vec![(0, -1.0)], 0.0); // x ≥ 0, min −x
        assert!(matches!(solve_socp(&prog), Err(SocpError::DualInfeasible)));
    }

    #[test]
    fn infeasible_reported_as_primal_infeasible() {
        let mut prog = ConicProgram::new(1);
        prog.add_inequality(vec![(0, 1.0)], -1.0); // x ≤ −1
        prog.add_inequality(vec![(0, -1.0)], 0.0); // x ≥ 0
        assert!(matches!(solve_socp(&prog), Err(SocpError::PrimalInfeasible)));
    }

    /// Random projection problems: min t s.t. ‖x − p‖ ≤ t, A x = b.
    /// The optimum is the distance from p to the affine subspace, computed
    /// independently by least squares.
    #[test]
    fn random_projection_socps_match_least_squares_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.random_range(3..6);
            let k = rng.random_range(1..n - 1);
            let a = nalgebra::DMatrix::<f64>::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
            let x_feas =
                nalgebra::DVector::<f64>::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let b = &a * &x_feas;
            let p = nalgebra::DVector::<f64>::from_fn(n, |_, _| rng.random_range(-2.0..2.0));

            // oracle: project p onto {x : Ax = b} via normal equations
            let aat = &a * a.transpose();
            let lu = aat.lu();
            let lambda = lu.solve(&(&a * &p - &b)).unwrap();
            let x_star = &p - a.transpose() * lambda;
            let dist = (&x_star - &p).norm();

            // cone program: vars (x(n), t)
            let mut prog = ConicProgram::new(n + 1);
            prog.set_cost(n, 1.0);
            for i in 0..k {
                let row: SparseRow = (0..n).map(|j| (j, a[(i, j)])).collect();
                prog.add_equality(row, b[i]);
            }
            let mut soc = vec![(vec![(n, -1.0)], 0.0)];
            for j in 0..n {
                soc.push((vec![(j, -1.0)], -p[j])); // s_j = x_j − p_j
            }
            prog.add_soc(soc);
            let sol = solve_socp(&prog).unwrap();
            assert_abs_diff_eq!(sol.objective, dist, epsilon = 1e-6);
            for j in 0..n {
                assert_abs_diff_eq!(sol.x[j], x_star[j], epsilon = 1e-5);
            }
        }
    }

    /// KKT residual oracle on random feasible SOCPs: stationarity,
    /// primal/dual feasibility, and complementary slackness.
    #[test]
    fn random_socps_satisfy_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = rng.random_range(2..5);
            let mut prog = ConicProgram::new(n + 1);
            for j in 0..n {
                prog.set_cost(j, rng.random_range(-1.0..1.0));
            }
            prog.set_cost(n, 1.0);
            // ball constraint keeps it bounded: ‖x − c‖ ≤ t, t ≤ r
            let r = rng.random_range(0.5..2.0);
            prog.add_inequality(vec![(n, 1.0)], r);
            let mut soc = vec![(vec![(n, -1.0)], 0.0)];
            for j in 0..n {
                soc.push((vec![(j, -1.0)], rng.random_range(-0.5..0.5)));
            }
            prog.add_soc(soc);
            let sol = solve_socp(&prog).unwrap();

            // primal feasibility
            assert!(prog.constraint_violation(&sol.x) < 1e-6);
            // stationarity: c + Aᵀ z = 0
            let (a, _b) = prog.to_csc();
            let mut grad = prog.cost.clone();
            // CSC: iterate columns
            for j in 0..prog.num_vars {
                for idx in a.colptr[j]..a.colptr[j + 1] {
                    grad[j] += a.nzval[idx] * sol.z[a.rowval[idx]];
                }
            }
            for g in &grad {
                assert!(g.abs() < 1e-6, "stationarity residual {g}");
            }
            // complementary slackness
            let gap: f64 = sol.s.iter().zip(&sol.z).map(|(s, z)| s * z).sum();
            assert!(gap.abs() < 1e-6, "complementarity {gap}");
        }
    }
}
