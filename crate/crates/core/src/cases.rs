//! Bundled test systems.

use crate::cascade::dispatch_target;
use crate::error::Result;
use crate::grid::{parse_case, CaseFormat, DcModel, NetworkCase, Topology};

pub const TWO_BUS_JSON: &str = include_str!("../data/two_bus.json");
pub const TRIANGLE_JSON: &str = include_str!("../data/triangle.json");
pub const RING6_JSON: &str = include_str!("../data/ring6.json");
pub const RTS_GMLC_M: &str = include_str!("../data/case_RTS_GMLC.m");
pub const CASE118_M: &str = include_str!("../data/case118.m");

/// One generator feeding one load over a single line.
pub fn two_bus() -> NetworkCase {
    parse_case(TWO_BUS_JSON, CaseFormat::NativeJson).expect("bundled case")
}

pub fn triangle() -> NetworkCase {
    parse_case(TRIANGLE_JSON, CaseFormat::NativeJson).expect("bundled case")
}

/// Six-bus ring with two generators; losing either line next to bus 1
/// overloads the ring.
pub fn ring6() -> NetworkCase {
    parse_case(RING6_JSON, CaseFormat::NativeJson).expect("bundled case")
}

/// Initial outage (branch index) that overloads [`ring6`].
pub const RING6_OVERLOAD_OUTAGE: usize = 0;

/// 73-bus RTS-GMLC with its own ratings.
pub fn rts_gmlc() -> NetworkCase {
    parse_case(RTS_GMLC_M, CaseFormat::MatpowerText).expect("bundled case")
}

/// IEEE 118-bus. The source file rates no branch, so limits are set to
/// `margin` times the base-case DC flow, at least `floor` MW.
pub fn case118(margin: f64, floor: f64) -> Result<NetworkCase> {
    let case = parse_case(CASE118_M, CaseFormat::MatpowerText)?;
    with_flow_margin(&case, margin, floor)
}

/// Copy of `case` whose branch limits are `margin |F|` of the balanced base
/// dispatch, at least `floor` MW.
pub fn with_flow_margin(case: &NetworkCase, margin: f64, floor: f64) -> Result<NetworkCase> {
    let topo = Topology::intact(case);
    let base = dispatch_target(case, &topo, &case.scheduled_state())?.target;
    let flows = DcModel::new(case, &topo)?.solve(&base).flows;
    case.with_rates(|k, _| (margin * flows[k].abs()).max(floor))
}
