use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gbm::analysis::{optimize, optimize_fn, ControlLaw, DesignProblem, DesignVariable, Execution, Gene, Scenario};
use gbm::expr::Expr;
use gbm::library::{instantiate, ComponentKind, Options};
use std::collections::BTreeMap;
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn heat_load_problem() -> DesignProblem {
    let model = instantiate(ComponentKind::HeatLoad, "hl", &Options::default()).unwrap();
    DesignProblem {
        model,
        design: vec![DesignVariable::continuous("size", 0.5, 2.0)],
        controller: vec![],
        vertex_scaling: BTreeMap::from([("Wall Temperature".to_string(), Expr::sym("size"))]),
        edge_scaling: BTreeMap::from([("Convection".to_string(), Expr::sym("size"))]),
        control: ControlLaw::OpenLoop,
        objective: Expr::parse("(x2 - 300)^2 + 10*size").unwrap(),
        scenario: Scenario { x0: None, t_final: 20.0, dt: 0.01, signals: None },
    }
}

/// An objective costing roughly as much as a short simulation.
fn rosenbrock_with_work(x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 0..20_000 {
        acc += ((k as f64) * 1e-4 + x[0]).sin() * 1e-9;
    }
    (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2) + acc
}

fn ga(c: &mut Criterion) {
    let mut group = c.benchmark_group("ga_objective");
    group.sample_size(10);
    let genes = [Gene::continuous(-2.0, 2.0), Gene::continuous(-1.0, 3.0)];
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| optimize_fn(black_box(&genes), rosenbrock_with_work, 7, 160, exec).unwrap())
        });
    }
    group.finish();
}

fn design(c: &mut Criterion) {
    let mut group = c.benchmark_group("design_optimize");
    group.sample_size(10);
    let problem = heat_load_problem();
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| optimize(black_box(&problem), 3, 32, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ga, design);
criterion_main!(benches);
