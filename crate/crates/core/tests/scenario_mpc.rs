//! Scenario program and receding-horizon controller: closed-form toy optima,
//! reductions to nominal MPC, warm starts, gradients and reproducibility.

use scenario_lfm::gp_ssm::{matern_to_sde, LatentSde};
use scenario_lfm::kernels::{KernelSpec, Smoothness};
use scenario_lfm::lfm::{augment, AugmentedModel, Bicycle, NominalDynamics};
use scenario_lfm::nlp::{grad_check, Problem, Tolerances};
use scenario_lfm::scenario_mpc::{
    sample_scenarios, solve, MpcConfig, ScenarioMpc, ScenarioProblem, ScenarioSet, StateConstraints,
};
use scenario_lfm::harness::{CorridorConstraints, TrackSpec};

/// `dx/dt = u + w`.
struct Integrator;

impl NominalDynamics for Integrator {
    fn state_dim(&self) -> usize {
        1
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn disturbance_dim(&self) -> usize {
        1
    }
    fn drift(&self, _x: &[f64], u: &[f64], w: &[f64], out: &mut [f64]) {
        out[0] = u[0] + w[0];
    }
}

/// The bicycle with its disturbance channel removed.
struct Undisturbed(Bicycle);

impl NominalDynamics for Undisturbed {
    fn state_dim(&self) -> usize {
        4
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn disturbance_dim(&self) -> usize {
        0
    }
    fn drift(&self, x: &[f64], u: &[f64], _w: &[f64], out: &mut [f64]) {
        self.0.drift(x, u, &[0.0], out)
    }
    fn jacobians(&self, x: &[f64], u: &[f64], _w: &[f64], jx: &mut [f64], ju: &mut [f64], _jw: &mut [f64]) {
        self.0.jacobians(x, u, &[0.0], jx, ju, &mut [0.0; 4])
    }
}

const Q: f64 = 1.5;
const QF: f64 = 4.0;
const R: f64 = 0.5;
const DT: f64 = 0.2;

fn ou(sigma2: f64, ell: f64) -> LatentSde {
    matern_to_sde(&KernelSpec::new(sigma2, ell, Smoothness::Half).unwrap()).unwrap()
}

fn toy_config(horizon: usize, scenarios: usize) -> MpcConfig {
    MpcConfig {
        horizon,
        scenarios,
        dt: DT,
        state_weights: vec![Q],
        terminal_weights: vec![QF],
        input_weights: vec![R],
        goal: vec![1.0],
        input_lower: vec![-100.0],
        input_upper: vec![100.0],
        state_bounds: vec![],
        epsilon: 0.05,
        penalty_weight: 1e4,
        tolerances: Tolerances {
            gradient: 1e-11,
            ..Tolerances::default()
        },
        warm_start: true,
        parallel: false,
    }
}

#[test]
fn one_step_toy_matches_closed_form() {
    let model = augment(Integrator, vec![ou(1.0, 2.0)]).unwrap();
    for (x0, z0) in [(0.0, 0.0), (-0.7, 0.4), (2.3, -1.2)] {
        let cfg = toy_config(1, 30);
        let scen = sample_scenarios(model.latents(), &cfg, 11);
        let plan = solve(&model, &[x0, z0], &cfg, &scen, None, None).unwrap();
        let e0 = x0 - 1.0;
        let expected = -QF * DT * (e0 + DT * z0) / (R + QF * DT * DT);
        assert!((plan.inputs[0] - expected).abs() < 1e-6, "{} vs {expected}", plan.inputs[0]);
    }
}

#[test]
fn two_step_toy_matches_normal_equations() {
    let latent = ou(1.0, 2.0);
    let lambda = 1.0 / 2.0;
    let model = augment(Integrator, vec![latent]).unwrap();
    let cfg = toy_config(2, 40);
    let scen = sample_scenarios(model.latents(), &cfg, 5);
    let (x0, z0) = (-0.4, 0.9);
    let plan = solve(&model, &[x0, z0], &cfg, &scen, None, None).unwrap();

    // draws at step 0 enter z1, which reaches x only through the second step
    let m = (0..scen.len())
        .map(|i| (1.0 - lambda * DT) * z0 + scen.scenario(i)[0])
        .sum::<f64>()
        / scen.len() as f64;
    let e0 = x0 - 1.0;
    let a = [[R + (Q + QF) * DT * DT, QF * DT * DT], [QF * DT * DT, R + QF * DT * DT]];
    let b = [
        -(Q + QF) * DT * (e0 + DT * z0) - QF * DT * DT * m,
        -QF * DT * (e0 + DT * z0 + DT * m),
    ];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let u0 = (b[0] * a[1][1] - a[0][1] * b[1]) / det;
    let u1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    assert!((plan.inputs[0] - u0).abs() < 1e-6, "{} vs {u0}", plan.inputs[0]);
    assert!((plan.inputs[1] - u1).abs() < 1e-6, "{} vs {u1}", plan.inputs[1]);
}

fn bicycle_model() -> AugmentedModel<Bicycle> {
    let spec = KernelSpec::new(4.0, 4.0, Smoothness::FiveHalves).unwrap();
    augment(Bicycle::default(), vec![matern_to_sde(&spec).unwrap()]).unwrap()
}

#[test]
fn start_at_goal_gives_zero_plan() {
    let model = bicycle_model();
    let goal = [5.0, 1.0, 0.0, 0.0];
    let mut cfg = MpcConfig::case_study(goal);
    cfg.state_bounds.clear();
    let scen = ScenarioSet::zeros(20, cfg.horizon, 1);
    let xbar = [5.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let plan = solve(&model, &xbar, &cfg, &scen, None, None).unwrap();
    let norm = plan.inputs.iter().map(|u| u * u).sum::<f64>().sqrt();
    assert!(norm < 1e-4, "‖u‖ = {norm}");

    // a cold start elsewhere should still come back to rest
    let warm: Vec<f64> = (0..cfg.horizon * 2).map(|k| 0.1 * (k as f64).sin()).collect();
    let plan = solve(&model, &xbar, &cfg, &scen, None, Some(&warm)).unwrap();
    let norm = plan.inputs.iter().map(|u| u * u).sum::<f64>().sqrt();
    assert!(norm < 1e-4, "‖u‖ = {norm} from a perturbed start");
}

#[test]
fn single_zero_scenario_is_nominal_mpc() {
    let model = bicycle_model();
    let nominal = augment(Undisturbed(Bicycle::default()), vec![]).unwrap();
    let cfg = MpcConfig::case_study([10.0, 2.0, 3.0, 0.0]);
    let corridor = CorridorConstraints { track: TrackSpec::default() };
    for start in [[0.0, 0.0, 0.0, 0.0], [2.0, 0.5, 3.0, 0.3], [6.0, 2.5, 5.0, -0.2]] {
        let mut xbar = start.to_vec();
        xbar.extend([0.0; 3]);
        let ours = solve(&model, &xbar, &MpcConfig { scenarios: 1, ..cfg.clone() }, &ScenarioSet::zeros(1, 7, 1), Some(&corridor), None).unwrap();
        let reference = solve(&nominal, &start, &MpcConfig { scenarios: 1, ..cfg.clone() }, &ScenarioSet::zeros(1, 7, 0), Some(&corridor), None).unwrap();
        for (a, b) in ours.inputs.iter().zip(&reference.inputs) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!((ours.cost - reference.cost).abs() <= 1e-9 * reference.cost.max(1.0));
    }
}

#[test]
fn noiseless_latent_makes_scenario_count_irrelevant() {
    let mut latent = bicycle_model().latents()[0].clone();
    latent.q = 0.0;
    let model = augment(Bicycle::default(), vec![latent]).unwrap();
    let xbar = [1.0, -0.5, 2.0, 0.1, 0.6, -0.2, 0.05];
    let base = MpcConfig::case_study([10.0, 2.0, 3.0, 0.0]);
    let few = MpcConfig { scenarios: 1, ..base.clone() };
    let many = MpcConfig { scenarios: 50, ..base };
    let a = solve(&model, &xbar, &few, &sample_scenarios(model.latents(), &few, 1), None, None).unwrap();
    let b = solve(&model, &xbar, &many, &sample_scenarios(model.latents(), &many, 2), None, None).unwrap();
    for (x, y) in a.inputs.iter().zip(&b.inputs) {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
    assert!((a.cost * 50.0 - b.cost).abs() < 1e-6 * b.cost);
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2]) as f64
    }
}

#[test]
fn warm_start_reaches_same_cost_faster() {
    let model = bicycle_model();
    let mut cfg = MpcConfig::case_study([20.0, 0.0, 3.0, 0.0]);
    cfg.scenarios = 10;
    let mut xbar = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let mut previous: Option<Vec<f64>> = None;
    let (mut warm_iters, mut cold_iters) = (Vec::new(), Vec::new());
    for step in 0..20 {
        let scen = sample_scenarios(model.latents(), &cfg, 100 + step);
        let shifted = previous.as_ref().map(|p| {
            let mut s = p[2..].to_vec();
            s.extend_from_slice(&p[p.len() - 2..]);
            s
        });
        let warm = solve(&model, &xbar, &cfg, &scen, None, shifted.as_deref()).unwrap();
        let cold = solve(&model, &xbar, &cfg, &scen, None, None).unwrap();
        assert!(
            (warm.cost - cold.cost).abs() <= 1e-4 * cold.cost.max(1.0),
            "step {step}: warm {} cold {}",
            warm.cost,
            cold.cost
        );
        warm_iters.push(warm.stats.iterations);
        cold_iters.push(cold.stats.iterations);
        // nominal closed loop: the model advanced without noise
        xbar = model.em_step(&xbar, &warm.inputs[..2], &[0.0], cfg.dt).unwrap();
        previous = Some(warm.inputs);
    }
    let (w, c) = (median(warm_iters), median(cold_iters));
    assert!(w < c, "median iterations warm {w} cold {c}");
}

#[test]
fn returned_merit_never_exceeds_warm_start() {
    let model = bicycle_model();
    let cfg = MpcConfig::case_study([15.0, 1.0, 3.0, 0.0]);
    let corridor = CorridorConstraints { track: TrackSpec::default() };
    for seed in 0..10u64 {
        let scen = sample_scenarios(model.latents(), &MpcConfig { scenarios: 20, ..cfg.clone() }, seed);
        let cfg = MpcConfig { scenarios: 20, ..cfg.clone() };
        let s = seed as f64;
        let xbar = [0.3 * s, 0.1 * s - 0.4, 1.0 + 0.3 * s, 0.05 * s - 0.2, 0.3 - 0.07 * s, 0.0, 0.0];
        let warm: Vec<f64> = (0..14).map(|k| 0.3 * ((k as f64) + s).cos() * if k % 2 == 0 { 4.0 } else { 0.3 }).collect();
        let plan = solve(&model, &xbar, &cfg, &scen, Some(&corridor), Some(&warm)).unwrap();
        assert!(plan.stats.merit <= plan.stats.start_merit, "seed {seed}");
        if plan.stats.restorations == 0 {
            let problem = ScenarioProblem::new(&model, &xbar, &cfg, &scen, Some(&corridor)).unwrap();
            let at_start = problem.evaluate(&warm, 1.0, None).merit(1.0);
            let at_plan = problem.evaluate(&plan.inputs, 1.0, None).merit(1.0);
            assert!(at_plan <= at_start, "seed {seed}: {at_plan} > {at_start}");
        }
    }
}

#[test]
fn full_objective_gradient_matches_differences() {
    let model = bicycle_model();
    let cfg = MpcConfig {
        scenarios: 5,
        ..MpcConfig::case_study([12.0, 1.0, 3.0, 0.0])
    };
    let corridor = CorridorConstraints { track: TrackSpec::default() };
    for seed in 0..5u64 {
        let scen = sample_scenarios(model.latents(), &cfg, seed);
        let s = seed as f64;
        let xbar = [1.0 + s, 0.2 * s, 2.0 + 0.5 * s, 0.1, 0.5, -0.1, 0.02];
        let problem = ScenarioProblem::new(&model, &xbar, &cfg, &scen, Some(&corridor)).unwrap();
        let u: Vec<f64> = (0..14).map(|k| 0.2 * ((k as f64) * 0.7 + s).sin()).collect();
        let err = grad_check(&problem, &u, 1e-6);
        assert!(err < 1e-4, "seed {seed}: relative gradient error {err}");
    }
}

#[test]
fn controller_is_reproducible_and_respects_input_box() {
    let model = bicycle_model();
    let cfg = MpcConfig {
        scenarios: 30,
        ..MpcConfig::case_study([30.0, 0.0, 3.0, 0.0])
    };
    let make = || {
        let c: Box<dyn StateConstraints> = Box::new(CorridorConstraints { track: TrackSpec::default() });
        ScenarioMpc::new(&model, cfg.clone(), Some(c), 42).unwrap()
    };
    let (mut a, mut b) = (make(), make());
    let mut xbar = vec![0.0, 0.0, 0.5, 0.0, 0.8, 0.0, 0.0];
    for _ in 0..5 {
        let oa = a.receding_horizon_step(&xbar).unwrap();
        let ob = b.receding_horizon_step(&xbar).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&oa.plan.inputs), bits(&ob.plan.inputs));
        assert_eq!(oa.scenario_seed, ob.scenario_seed);
        for k in 0..cfg.horizon {
            for j in 0..2 {
                let u = oa.plan.inputs[k * 2 + j];
                assert!(u >= cfg.input_lower[j] && u <= cfg.input_upper[j]);
            }
        }
        xbar = model.em_step(&xbar, &oa.input, &[0.0], cfg.dt).unwrap();
    }
}

#[test]
fn parallel_and_sequential_evaluation_agree_bitwise() {
    let model = bicycle_model();
    let seq = MpcConfig {
        scenarios: 40,
        parallel: false,
        ..MpcConfig::case_study([12.0, 1.0, 3.0, 0.0])
    };
    let par = MpcConfig { parallel: true, ..seq.clone() };
    let scen = sample_scenarios(model.latents(), &seq, 9);
    let xbar = [0.5, 0.2, 2.0, 0.1, 0.4, 0.0, 0.0];
    let a = solve(&model, &xbar, &seq, &scen, None, None).unwrap();
    let b = solve(&model, &xbar, &par, &scen, None, None).unwrap();
    assert_eq!(a.inputs, b.inputs);
    assert_eq!(a.cost.to_bits(), b.cost.to_bits());
}
