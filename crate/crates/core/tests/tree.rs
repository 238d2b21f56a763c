use approx::assert_relative_eq;
use cascade_risk::assess::{assess, prepare_scenario, AssessConfig, Assessment};
use cascade_risk::cascade::{node_outlook, simulate_level, LevelOptions};
use cascade_risk::cases;
use cascade_risk::tree::{MarkovTree, Policy, SearchBudget, ROOT};
use cascade_risk::{NetworkCase, SystemState, Topology};
use serde_json::{json, Value};

fn edit_case(case: &NetworkCase, f: impl FnOnce(&mut Value)) -> NetworkCase {
    let mut v: Value = serde_json::from_str(&case.to_json()).unwrap();
    f(&mut v);
    NetworkCase::from_json(&v.to_string()).unwrap()
}

fn exhaustive(levels: usize, reverse: bool) -> AssessConfig {
    AssessConfig {
        budget: SearchBudget {
            attempts: usize::MAX,
            policy: Policy::Exhaustive { reverse },
            ..SearchBudget::default()
        },
        ..AssessConfig::default()
    }
    .with_depth(levels)
}

fn run(case: &NetworkCase, outages: &[usize], cfg: &AssessConfig) -> Assessment {
    let s = prepare_scenario(case, outages, cfg).unwrap();
    assess(case, &s, &s.default_target, cfg).unwrap()
}

/// Expected cost over all paths, by plain recursion over the level map.
fn recursive_risk(case: &NetworkCase, topo: &Topology, x: &SystemState, levels_left: usize, opts: &LevelOptions) -> f64 {
    if levels_left == 0 || x.total_load() <= 0.0 {
        return 0.0;
    }
    let probs = node_outlook(case, topo, x, opts.tau_d).unwrap().probabilities.by_event;
    let mut risk = 0.0;
    for (event, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            let rec = simulate_level(case, topo, x, event, opts).unwrap();
            risk += p * (rec.cost + recursive_risk(case, rec.topology(), rec.state(), levels_left - 1, opts));
        }
    }
    risk
}

/// Two-bus case with a flat failure rate giving `Pr = 0.1` for the single branch
/// over one interval.
fn single_branch_case() -> NetworkCase {
    let lambda = -(0.9f64).ln() / 15.0;
    edit_case(&cases::two_bus(), |v| {
        v["failure_rate"]["lambda0"] = json!(lambda);
        v["failure_rate"]["lambda1"] = json!(lambda);
        v["failure_rate"]["knee"] = json!(0.95);
        v["costs"]["shed_per_mw"] = json!(5.0);
    })
}

#[test]
fn single_level_risk_example() {
    let case = single_branch_case();
    let a = run(&case, &[], &exhaustive(1, false));
    let root = a.tree.root();
    assert_relative_eq!(root.child_probability(1), 0.1, max_relative = 1e-12);
    let trip = a.tree.node(root.children[&1]);
    assert_relative_eq!(trip.cost, 500.0, max_relative = 1e-12);
    assert_eq!(a.tree.node(root.children[&0]).cost, 0.0);
    assert_relative_eq!(a.subsequent_risk(), 50.0, max_relative = 1e-12);
}

#[test]
fn leaves_carry_their_own_cost() {
    let a = run(&cases::ring6(), &[], &exhaustive(2, false));
    for n in a.tree.nodes().iter().filter(|n| n.terminal) {
        assert_eq!(n.equivalent_cost, n.cost);
        assert_eq!(n.subsequent_risk, 0.0);
    }
}

#[test]
fn exhaustive_matches_recursive_expectation() {
    let case = cases::ring6();
    for outages in [vec![], vec![cases::RING6_OVERLOAD_OUTAGE]] {
        let cfg = exhaustive(2, false);
        let s = prepare_scenario(&case, &outages, &cfg).unwrap();
        let a = assess(&case, &s, &s.default_target, &cfg).unwrap();
        assert!(a.tree.is_complete());
        let oracle = recursive_risk(&case, &s.pre_topology, a.tree.root().state(), 2, &cfg.level_options());
        assert_relative_eq!(a.subsequent_risk(), oracle, max_relative = 1e-9);
    }
}

#[test]
fn replaying_a_path_changes_nothing() {
    let case = cases::ring6();
    let mut a = run(&case, &[], &exhaustive(2, false));
    let before: Vec<_> = a.tree.nodes().iter().map(|n| (n.equivalent_cost, n.gradient.clone())).collect();
    let risk = a.subsequent_risk();
    let grad = a.tree.root_gradient().clone();
    let (_, created) = a.tree.replay_path(&case, &[3, 0]).unwrap();
    assert_eq!(created, 0);
    assert_eq!(a.subsequent_risk(), risk);
    assert_eq!(a.tree.root_gradient(), &grad);
    let after: Vec<_> = a.tree.nodes().iter().map(|n| (n.equivalent_cost, n.gradient.clone())).collect();
    assert_eq!(before, after);
}

#[test]
fn enumeration_order_does_not_matter() {
    let case = cases::ring6();
    let fwd = run(&case, &[], &exhaustive(2, false));
    let rev = run(&case, &[], &exhaustive(2, true));
    assert_eq!(fwd.tree.len(), rev.tree.len());
    assert_relative_eq!(fwd.subsequent_risk(), rev.subsequent_risk(), max_relative = 1e-12);
    let (a, b) = (fwd.tree.root_gradient(), rev.tree.root_gradient());
    let scale = a.amax().max(1.0);
    assert!((a - b).amax() <= 1e-12 * scale, "{a} vs {b}");
}

#[test]
fn exhaustive_risk_never_decreases() {
    let a = run(&cases::ring6(), &[], &exhaustive(2, false));
    for w in a.history.attempts.windows(2) {
        assert!(w[1].subsequent_risk >= w[0].subsequent_risk);
    }
}

#[test]
fn child_probabilities_sum_to_one() {
    let a = run(&cases::ring6(), &[], &exhaustive(2, false));
    for n in a.tree.nodes().iter().filter(|n| !n.terminal) {
        let s: f64 = n.child_probabilities().iter().sum();
        assert!((s - 1.0).abs() <= 1e-12, "node {} sums to {s}", n.label_string());
        let instantiated: f64 = n.children.keys().map(|&e| n.child_probability(e)).sum();
        assert!((instantiated - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn sampled_search_is_deterministic_per_seed() {
    let case = cases::ring6();
    let cfg = AssessConfig {
        budget: SearchBudget {
            attempts: 40,
            policy: Policy::Sampled,
            seed: 7,
            ..SearchBudget::default()
        },
        ..AssessConfig::default()
    }
    .with_depth(4);
    let a = run(&case, &[], &cfg);
    let b = run(&case, &[], &cfg);
    assert_eq!(a.tree.len(), b.tree.len());
    assert_eq!(a.subsequent_risk().to_bits(), b.subsequent_risk().to_bits());
    let paths = |x: &Assessment| x.history.attempts.iter().map(|r| r.path.clone()).collect::<Vec<_>>();
    assert_eq!(paths(&a), paths(&b));
    let labels = |x: &Assessment| x.tree.nodes().iter().map(|n| n.label.clone()).collect::<Vec<_>>();
    assert_eq!(labels(&a), labels(&b));
}

#[test]
fn two_branch_tree_has_bounded_size() {
    let case = edit_case(&cases::two_bus(), |v| {
        let mut second = v["branches"][0].clone();
        second["id"] = json!(2);
        v["branches"].as_array_mut().unwrap().push(second);
    });
    let a = run(&case, &[], &exhaustive(2, false));
    assert!(a.tree.len() <= 1 + 3 + 9, "{} nodes", a.tree.len());
    assert!(a.tree.is_complete());
}

#[test]
fn zero_failure_rates_give_zero_risk() {
    let case = edit_case(&cases::ring6(), |v| {
        for key in ["lambda0", "lambda1", "overload_slope", "lambda_max"] {
            v["failure_rate"][key] = json!(0.0);
        }
    });
    let a = run(&case, &[], &exhaustive(3, false));
    assert_eq!(a.subsequent_risk(), 0.0);
    assert_eq!(a.tree.root().child_probability(0), 1.0);
}

#[test]
fn tree_rejects_zero_depth() {
    let case = cases::ring6();
    let cfg = exhaustive(1, false);
    let mut opts = cfg.tree_options(&case).unwrap();
    opts.depth = 0;
    assert!(MarkovTree::new(&case, case.scheduled_state(), Topology::intact(&case), opts).is_err());
    assert_eq!(ROOT, 0);
}
