// temporary diagnostic: which component moves late in the iteration?
use descent_core::dynamics::DescentDynamics;
use descent_core::foh::discretize;
use descent_core::scenario::{sample_scenario, Range, ScenarioDistribution};
use descent_core::scvx::*;
use descent_core::socp::solve_socp;

fn main() {
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
    let problem = sample_scenario(&dist, 0);
    let config = ScvxConfig::default();
    let model = DescentDynamics::new(&problem);
    let mut reference = default_reference(&problem);
    for iteration in 0..40 {
        let disc = discretize(&model, &reference.states, &reference.controls, reference.sigma, config.substeps).unwrap();
        let (prog, layout) = assemble_subproblem(&disc, &problem, &config.weights, &reference, &config).unwrap();
        let raw = solve_socp(&prog).unwrap();
        let sol = extract_solution(&raw.x, raw.objective, &layout);
        let mut max_step = (sol.sigma - reference.sigma).abs();
        let mut what = format!("sigma");
        for (k, (a, b)) in sol.states.iter().zip(&reference.states).enumerate() {
            for i in 0..14 {
                let d = (a[i] - b[i]).abs();
                if d > max_step { max_step = d; what = format!("x[{k}][{i}]"); }
            }
        }
        for (k, (a, b)) in sol.controls.iter().zip(&reference.controls).enumerate() {
            for i in 0..3 {
                let d = (a[i] - b[i]).abs();
                if d > max_step { max_step = d; what = format!("u[{k}][{i}]"); }
            }
        }
        // thrust magnitude at a few nodes
        let tn: Vec<String> = (0..problem.nodes).map(|k| format!("{:.3}", sol.controls[k].norm())).collect();
        println!("it={iteration} obj={:.9e} step={:.3e} at {what} |u|={}", sol.objective, max_step, tn.join(","));
        reference = ScvxReference { states: sol.states, controls: sol.controls, sigma: sol.sigma };
    }
}
