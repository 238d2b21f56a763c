use std::path::Path;

use anyhow::{bail, Context, Result};
use cascade_risk::assess::{self, branch_indices, prepare_scenario, AssessConfig, Assessment, Scenario, StorageMode};
use cascade_risk::gradient::direction_distance;
use cascade_risk::report::{self, Strategy, Summary};
use cascade_risk::risk;
use cascade_risk::tree::Policy;
use cascade_risk::NetworkCase;

use crate::config::RunConfig;

const DEFAULT_STEP: f64 = 0.2;

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

struct Prepared {
    case: NetworkCase,
    outages: Vec<usize>,
    scenario: Scenario,
}

fn prepare(cfg: &RunConfig, acfg: &AssessConfig) -> Result<Prepared> {
    let case = cfg.load_case()?;
    let outages = branch_indices(&case, cfg.outages.as_deref().unwrap_or(&[]))?;
    let scenario = prepare_scenario(&case, &outages, acfg)?;
    Ok(Prepared { case, outages, scenario })
}

fn run_assessment(p: &Prepared, acfg: &AssessConfig) -> Result<Assessment> {
    Ok(assess::assess(&p.case, &p.scenario, &p.scenario.default_target, acfg)?)
}

fn print_summary(s: &Summary) {
    println!(
        "R = {} $, R' = {} $, C0 = {} $, attempts = {}, nodes = {}{}",
        s.total_risk,
        s.subsequent_risk,
        s.control_cost,
        s.attempts,
        s.nodes,
        if s.complete { " (complete)" } else { "" }
    );
}

pub fn assess(cfg: &RunConfig) -> Result<u8> {
    let acfg = cfg.assess_config()?;
    let p = prepare(cfg, &acfg)?;
    let a = run_assessment(&p, &acfg)?;
    let dir = cfg.out_dir();
    let summary = Summary::new(&a);
    write(&dir, "tree.csv", &report::tree_csv(&a.tree))?;
    write(&dir, "convergence.csv", &report::convergence_csv(&a))?;
    write(&dir, "summary.json", &report::to_json(&summary))?;
    print_summary(&summary);
    Ok(0)
}

pub fn gradient(cfg: &RunConfig) -> Result<u8> {
    let acfg = cfg.assess_config()?;
    let p = prepare(cfg, &acfg)?;
    let a = run_assessment(&p, &acfg)?;
    let gamma = a.control_gradient().expect("gradient enabled");
    let dir = cfg.out_dir();
    let summary = Summary::new(&a);
    write(&dir, "gradient.csv", &report::gradient_csv(&p.case, gamma.as_slice()))?;
    write(&dir, "convergence.csv", &report::convergence_csv(&a))?;
    write(&dir, "summary.json", &report::to_json(&summary))?;
    print_summary(&summary);
    if let StorageMode::Compressed { threshold } = acfg.storage {
        let dense_cfg = AssessConfig {
            storage: StorageMode::Dense,
            ..acfg
        };
        let dense = run_assessment(&p, &dense_cfg)?;
        let dense_gamma = dense.control_gradient().expect("gradient enabled");
        let stats = a.tree.storage_stats();
        match direction_distance(&gamma, &dense_gamma) {
            Some(d) => println!("threshold {threshold}: direction error vs dense {d:e}"),
            None => println!("threshold {threshold}: direction error vs dense undefined (zero gradient)"),
        }
        println!("stored entries {} of {} dense", stats.stored, stats.dense);
    }
    Ok(0)
}

pub fn validate_gradient(cfg: &RunConfig) -> Result<u8> {
    let mut acfg = cfg.assess_config()?;
    if cfg.policy.is_none() {
        acfg.budget.policy = Policy::Exhaustive { reverse: false };
    }
    if !matches!(acfg.budget.policy, Policy::Exhaustive { .. }) {
        bail!(cascade_risk::Error::InvalidArgument(format!(
            "validate-gradient needs an exhaustive policy, got {}",
            acfg.budget.policy
        )));
    }
    let step = cfg.step.unwrap_or(DEFAULT_STEP);
    if !(0.1..=0.5).contains(&step) {
        eprintln!("warning: step {step} MW is outside the usual 0.1-0.5 MW range");
    }
    let p = prepare(cfg, &acfg)?;
    let v = assess::validate_gradient(&p.case, &p.scenario, &p.scenario.default_target, &acfg, step)?;
    write(&cfg.out_dir(), "validation.csv", &report::validation_csv(&v))?;
    println!("{:<5} {:>6} {:>16} {:>16} {:>10}  flag", "var", "bus", "gradient", "finite diff", "rel err");
    for c in &v.components {
        println!(
            "{:<5} {:>6} {:>16.6} {:>16.6} {:>10.3e}  {}",
            c.kind,
            c.bus,
            c.gradient,
            c.finite_difference,
            c.relative_error,
            if c.flagged {
                "flagged"
            } else if !c.checked {
                "-"
            } else if c.pass {
                "ok"
            } else {
                "FAIL"
            }
        );
    }
    println!(
        "max relative error {:e}, unflagged {:.0}%: {}",
        v.max_relative_error,
        100.0 * v.unflagged_fraction,
        if v.pass { "PASS" } else { "FAIL" }
    );
    Ok(if v.pass { 0 } else { 1 })
}

pub fn irm(cfg: &RunConfig) -> Result<u8> {
    let icfg = cfg.irm_config()?;
    let p = prepare(cfg, &icfg.assess)?;
    let out = risk::irm(&p.case, &p.scenario, &icfg)?;
    let dir = cfg.out_dir();
    write(&dir, "trajectory.csv", &report::trajectory_csv(&out))?;
    write(&dir, "strategy.json", &report::to_json(&Strategy::new(&p.case, &out, &p.outages)))?;
    let a = &out.assessment;
    println!(
        "C0 = {} $, R' = {} $, total = {} $ after {} rounds (stop: {})",
        a.control_cost,
        a.subsequent_risk(),
        a.total_risk(),
        out.rows.len() - 1,
        out.stop
    );
    Ok(0)
}
