use cascade_risk::grid::{
    dc_power_flow, flow_sensitivity, parse_case, parse_matpower, Branch, Bus, CaseFormat, CostConfig,
    FailureRateConfig, Generator, Load, MatpowerOptions,
};
use cascade_risk::{Error, NetworkCase, SystemState, Topology};
use proptest::prelude::*;

fn bus(id: u32) -> Bus {
    Bus { id, name: None }
}

fn branch(id: u32, from: u32, to: u32, y: f64, rate: f64) -> Branch {
    Branch {
        id,
        from,
        to,
        admittance: y,
        rate_mw: rate,
        in_service: true,
        failure: None,
    }
}

fn gen(bus: u32, p: f64, pmax: f64) -> Generator {
    Generator {
        bus,
        p_mw: p,
        p_min: 0.0,
        p_max: pmax,
        ramp_mw_per_min: 1.0,
        cost_per_mw: None,
    }
}

fn load(bus: u32, p: f64) -> Load {
    Load {
        bus,
        p_mw: p,
        shed_cost_per_mw: None,
    }
}

fn build(buses: &[u32], branches: Vec<Branch>, gens: Vec<Generator>, loads: Vec<Load>) -> NetworkCase {
    NetworkCase::new(
        100.0,
        buses.iter().map(|&b| bus(b)).collect(),
        branches,
        gens,
        loads,
        FailureRateConfig::default(),
        CostConfig::default(),
    )
    .unwrap()
}

fn triangle() -> NetworkCase {
    build(
        &[1, 2, 3],
        vec![
            branch(1, 1, 2, 10.0, 100.0),
            branch(2, 2, 3, 10.0, 100.0),
            branch(3, 1, 3, 10.0, 100.0),
        ],
        vec![gen(1, 90.0, 200.0)],
        vec![load(2, 90.0)],
    )
}

#[test]
fn two_bus_flow_and_angle() {
    let case = build(
        &[1, 2],
        vec![branch(1, 1, 2, 10.0, 200.0)],
        vec![gen(1, 100.0, 200.0)],
        vec![load(2, 100.0)],
    );
    let topo = Topology::intact(&case);
    let sol = dc_power_flow(&case, &topo, &case.scheduled_state()).unwrap();
    assert!((sol.flows[0] - 100.0).abs() < 1e-9);
    assert!((sol.angles[0] - sol.angles[1] - 0.1).abs() < 1e-12);
}

#[test]
fn triangle_splits_two_thirds_one_third() {
    let case = triangle();
    let topo = Topology::intact(&case);
    let f = dc_power_flow(&case, &topo, &case.scheduled_state()).unwrap().flows;
    assert!((f[0] - 60.0).abs() < 1e-9);
    assert!((f[1] + 30.0).abs() < 1e-9);
    assert!((f[2] - 30.0).abs() < 1e-9);
}

#[test]
fn flow_sensitivity_matches_finite_difference() {
    let case = triangle();
    let topo = Topology::intact(&case);
    let s = flow_sensitivity(&case, &topo).unwrap();
    let x = case.scheduled_state();
    // balanced move: +1 MW load at bus 2 picked up by generator at bus 1
    let h = 1.0;
    let fwd = x.perturbed(0, h).perturbed(1, h);
    let bwd = x.perturbed(0, -h).perturbed(1, -h);
    let f1 = dc_power_flow(&case, &topo, &fwd).unwrap().flows;
    let f0 = dc_power_flow(&case, &topo, &bwd).unwrap().flows;
    for k in 0..3 {
        let fd = (f1[k] - f0[k]) / (2.0 * h);
        let an = s[(k, 0)] + s[(k, 1)];
        assert!((fd - an).abs() < 1e-6, "branch {k}: {fd} vs {an}");
    }
}

#[test]
fn islanding_and_dead_islands() {
    let case = build(
        &[1, 2, 3, 4],
        vec![
            branch(1, 1, 2, 10.0, 100.0),
            branch(2, 2, 3, 10.0, 100.0),
            branch(3, 3, 4, 10.0, 100.0),
        ],
        vec![gen(1, 50.0, 100.0)],
        vec![load(2, 20.0), load(4, 30.0)],
    );
    let topo = Topology::intact(&case);
    let (cut, warn) = topo.apply_outage(&case, &[1]);
    assert!(warn.already_out.is_empty());
    assert_eq!(cut.islands().len(), 2);
    let dead = &cut.islands()[cut.island_of_bus(3)];
    assert!(!dead.is_energized());
    let x = SystemState::from_parts(&[20.0, 0.0], &[20.0]);
    let sol = dc_power_flow(&case, &cut, &x).unwrap();
    assert_eq!(sol.flows[2], 0.0);
    assert!((sol.flows[0] - 20.0).abs() < 1e-9);
    let (_, warn) = cut.apply_outage(&case, &[1]);
    assert_eq!(warn.already_out, vec![1]);
}

#[test]
fn json_case_rejects_missing_bus() {
    let text = r#"{"base_mva":100,"buses":[{"id":1}],
        "branches":[{"id":1,"from":1,"to":99,"admittance":10,"rate_mw":10}],
        "generators":[],"loads":[]}"#;
    match parse_case(text, CaseFormat::NativeJson) {
        Err(Error::Semantic { message, .. }) => assert!(message.contains("99")),
        other => panic!("expected semantic error, got {other:?}"),
    }
}

#[test]
fn json_syntax_error_has_location() {
    let text = "{\"base_mva\": 100,\n \"buses\": [,]}";
    match parse_case(text, CaseFormat::NativeJson) {
        Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected syntax error, got {other:?}"),
    }
}

const MINI_M: &str = r#"function mpc = mini
% two buses
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	135	1	1.05	0.95;
	2	1	40	10	0	0	1	1	0	135	1	1.05	0.95;
];
mpc.gen = [
	1	40	0	300	-300	1	100	1	250	10	0	0	0	0	0	0	2	0	0	0	0;
	1	0	0	300	-300	1	100	1	50	0	0	0	0	0	0	0	0	0	0	0	0;
];
mpc.branch = [
	1	2	0.01	0.1	0	0	0	0	0	0	1	-360	360;
];
"#;

#[test]
fn matpower_import_aggregates_and_defaults() {
    let case = parse_case(MINI_M, CaseFormat::MatpowerText).unwrap();
    assert_eq!(case.n_buses(), 2);
    assert_eq!(case.n_gens(), 1);
    assert_eq!(case.generators[0].p_max, 300.0);
    assert_eq!(case.generators[0].p_min, 0.0);
    // first unit has ramp_agc 2 MW/min, second defaults to 1% of Pmax
    assert!((case.generators[0].ramp_mw_per_min - 2.5).abs() < 1e-12);
    assert_eq!(case.branches[0].rate_mw, 9999.0);
    assert!((case.branches[0].admittance - 10.0).abs() < 1e-12);
    assert_eq!(case.loads.len(), 1);
    assert_eq!(case.loads[0].p_mw, 40.0);
}

#[test]
fn matpower_missing_bus_is_semantic() {
    let bad = MINI_M.replace("\t1\t2\t0.01", "\t1\t99\t0.01");
    match parse_matpower(&bad, &MatpowerOptions::default()) {
        Err(Error::Semantic { message, .. }) => assert!(message.contains("99"), "{message}"),
        other => panic!("expected semantic error, got {other:?}"),
    }
}

#[test]
fn matpower_bad_number_reports_line() {
    let bad = MINI_M.replace("0.01\t0.1", "0.01\t0.x1");
    match parse_matpower(&bad, &MatpowerOptions::default()) {
        Err(Error::Syntax { line, .. }) => assert_eq!(line, 14),
        other => panic!("expected syntax error, got {other:?}"),
    }
}

#[test]
fn empty_input_rejected() {
    assert!(matches!(parse_case("  ", CaseFormat::NativeJson), Err(Error::InvalidArgument(_))));
}

#[test]
fn rts_case_loads_and_survives_triple_outage() {
    let text = include_str!("../data/case_RTS_GMLC.m");
    let case = parse_case(text, CaseFormat::MatpowerText).unwrap();
    assert_eq!(case.n_buses(), 73);
    assert_eq!(case.n_branches(), 120);
    let topo = Topology::intact(&case);
    assert_eq!(topo.islands().len(), 1);
    let ks: Vec<usize> = [22u32, 23, 24].iter().map(|&id| case.branch_index(id).unwrap()).collect();
    let (cut, _) = topo.apply_outage(&case, &ks);
    assert_eq!(cut.islands().len(), 1);
    // Kirchhoff's current law at every bus
    let x = case.scheduled_state();
    let sol = dc_power_flow(&case, &cut, &x).unwrap();
    let imbalance = x.total_gen() - x.total_load();
    let reference = cut.islands()[0].reference.unwrap();
    let mut net = vec![0.0; case.n_buses()];
    for g in 0..case.n_gens() {
        net[case.gen_bus(g)] += x.gen(g);
    }
    for l in 0..case.n_loads() {
        net[case.load_bus(l)] -= x.load(l);
    }
    for k in 0..case.n_branches() {
        let (u, v) = case.branch_ends(k);
        net[u] -= sol.flows[k];
        net[v] += sol.flows[k];
    }
    for (b, r) in net.iter().enumerate() {
        let expect = if b == reference { imbalance } else { 0.0 };
        assert!((r - expect).abs() < 1e-6, "bus {b}: residual {r}");
    }
}

proptest! {
    #[test]
    fn json_round_trip_is_identity(
        loads in prop::collection::vec(0.0f64..500.0, 3),
        rates in prop::collection::vec(1.0f64..900.0, 3),
        ramp in 0.0f64..20.0,
    ) {
        let mut case = triangle();
        case = case.with_rates(|k, _| rates[k]).unwrap();
        let mut text = case.to_json();
        text = text.replace("\"ramp_mw_per_min\": 1.0", &format!("\"ramp_mw_per_min\": {ramp:?}"));
        let a = NetworkCase::from_json(&text).unwrap();
        let b = NetworkCase::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(&a, &b);
        let scaled = a.with_load_scale(loads[0] / 90.0).unwrap();
        prop_assert_eq!(NetworkCase::from_json(&scaled.to_json()).unwrap(), scaled);
    }
}
