use std::hint::black_box;

use cascade_risk::assess::{assess, prepare_scenario, AssessConfig};
use cascade_risk::cascade::{dispatch_execute, dispatch_target, simulate_level, LevelOptions};
use cascade_risk::cases;
use cascade_risk::grid::DcModel;
use cascade_risk::risk::{irm, IrmConfig};
use cascade_risk::tree::{Policy, SearchBudget};
use cascade_risk::Topology;
use criterion::{criterion_group, criterion_main, Criterion};

fn exhaustive(levels: usize) -> AssessConfig {
    AssessConfig {
        budget: SearchBudget {
            attempts: usize::MAX,
            policy: Policy::Exhaustive { reverse: false },
            ..SearchBudget::default()
        },
        ..AssessConfig::default()
    }
    .with_depth(levels)
}

fn grid(c: &mut Criterion) {
    let case = cases::rts_gmlc();
    let topo = Topology::intact(&case);
    let x = case.scheduled_state();
    c.bench_function("rts/dc_model_and_flows", |b| {
        b.iter(|| DcModel::new(&case, &topo).unwrap().solve(black_box(&x)))
    });
    c.bench_function("rts/flow_sensitivity", |b| {
        let model = DcModel::new(&case, &topo).unwrap();
        b.iter(|| model.flow_sensitivity())
    });
}

fn dispatch(c: &mut Criterion) {
    let case = cases::rts_gmlc();
    let topo = Topology::intact(&case).apply_outage(&case, &[3]).0;
    let x = case.scheduled_state();
    c.bench_function("rts/dispatch_target", |b| b.iter(|| dispatch_target(&case, &topo, black_box(&x)).unwrap()));
    let target = dispatch_target(&case, &topo, &x).unwrap().target;
    c.bench_function("rts/dispatch_execute", |b| {
        b.iter(|| dispatch_execute(&case, &topo, black_box(&x), &target, 15.0).unwrap())
    });
    let opts = LevelOptions::default();
    c.bench_function("rts/level", |b| b.iter(|| simulate_level(&case, &topo, black_box(&x), 4, &opts).unwrap()));
}

fn tree(c: &mut Criterion) {
    let case = cases::ring6();
    let cfg = exhaustive(3);
    let s = prepare_scenario(&case, &[], &cfg).unwrap();
    c.bench_function("ring6/exhaustive_depth3_with_gradient", |b| {
        b.iter(|| assess(&case, &s, &s.default_target, &cfg).unwrap().subsequent_risk())
    });
    let rts = cases::rts_gmlc();
    let sampled = AssessConfig {
        budget: SearchBudget {
            attempts: 50,
            policy: Policy::Sampled,
            seed: 1,
            ..SearchBudget::default()
        },
        ..AssessConfig::default()
    }
    .with_depth(10);
    let rs = prepare_scenario(&rts, &[], &sampled).unwrap();
    let mut group = c.benchmark_group("rts");
    group.sample_size(10);
    group.bench_function("sampled_50_attempts_depth10", |b| {
        b.iter(|| assess(&rts, &rs, &rs.default_target, &sampled).unwrap().subsequent_risk())
    });
    group.finish();
}

fn iterated(c: &mut Criterion) {
    let case = cases::ring6();
    let cfg = IrmConfig {
        assess: exhaustive(2),
        ..IrmConfig::default()
    };
    let s = prepare_scenario(&case, &[cases::RING6_OVERLOAD_OUTAGE], &cfg.assess).unwrap();
    c.bench_function("ring6/irm_depth2", |b| b.iter(|| irm(&case, &s, &cfg).unwrap().final_risk()));
}

criterion_group!(benches, grid, dispatch, tree, iterated);
criterion_main!(benches);
