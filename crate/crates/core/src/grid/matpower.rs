//! Import of the `mpc.baseMVA`, `mpc.bus`, `mpc.gen` and `mpc.branch`
//! assignments of a MATPOWER case file. Everything else in the file is
//! skipped. Failure-rate and cost parameters come from [`MatpowerOptions`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::case::{Branch, Bus, CostConfig, FailureRateConfig, Generator, Load, NetworkCase};

#[derive(Debug, Clone)]
pub struct MatpowerOptions {
    /// Limit assigned to branches whose rateA is 0 (MATPOWER's "unlimited").
    pub default_rate_mw: f64,
    /// Ramp rate as a fraction of Pmax per minute when ramp_agc is absent.
    pub default_ramp_fraction: f64,
    /// Keep the units' Pmin instead of importing 0.
    pub keep_pmin: bool,
    pub failure_rate: FailureRateConfig,
    pub costs: CostConfig,
}

impl Default for MatpowerOptions {
    fn default() -> Self {
        MatpowerOptions {
            default_rate_mw: 9999.0,
            default_ramp_fraction: 0.01,
            keep_pmin: false,
            failure_rate: FailureRateConfig::default(),
            costs: CostConfig::default(),
        }
    }
}

struct Matrix {
    rows: Vec<Vec<f64>>,
    line: usize,
}

struct Scanner<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn location(&self, pos: usize) -> (usize, usize) {
        let before = &self.text[..pos.min(self.text.len())];
        let line = before.iter().filter(|&&c| c == b'\n').count() + 1;
        let col = before.iter().rev().take_while(|&&c| c != b'\n').count() + 1;
        (line, col)
    }

    fn error(&self, pos: usize, message: impl Into<String>) -> Error {
        let (line, column) = self.location(pos);
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == b'\n' {
                break;
            }
            self.pos += 1;
        }
    }

    /// Skips whitespace, comments and `...` continuations; newlines are
    /// reported so matrix rows can end at a line break.
    fn skip_blank(&mut self, stop_at_newline: bool) -> bool {
        let mut saw_newline = false;
        while let Some(c) = self.peek() {
            match c {
                b'%' => self.skip_comment(),
                b'\n' => {
                    saw_newline = true;
                    self.pos += 1;
                    if stop_at_newline {
                        return true;
                    }
                }
                b' ' | b'\t' | b'\r' | b',' => self.pos += 1,
                b'.' if self.text[self.pos..].starts_with(b"...") => {
                    self.pos += 3;
                    self.skip_comment();
                    if self.peek() == Some(b'\n') {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
        saw_newline
    }

    fn skip_string(&mut self, quote: u8) -> Result<()> {
        let start = self.pos;
        self.pos += 1;
        while let Some(c) = self.peek() {
            self.pos += 1;
            if c == quote {
                return Ok(());
            }
        }
        Err(self.error(start, "unterminated string"))
    }

    /// Skips a statement that we do not interpret, up to its terminating `;`
    /// at bracket depth 0 or end of line.
    fn skip_statement(&mut self) -> Result<()> {
        let mut depth = 0i32;
        while let Some(c) = self.peek() {
            match c {
                b'%' => self.skip_comment(),
                b'\'' | b'"' => self.skip_string(c)?,
                b'[' | b'{' | b'(' => {
                    depth += 1;
                    self.pos += 1;
                }
                b']' | b'}' | b')' => {
                    depth -= 1;
                    self.pos += 1;
                }
                b';' if depth <= 0 => {
                    self.pos += 1;
                    return Ok(());
                }
                b'\n' if depth <= 0 => {
                    self.pos += 1;
                    return Ok(());
                }
                _ => self.pos += 1,
            }
        }
        Ok(())
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, b'.' | b'-' | b'+') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let tok = std::str::from_utf8(&self.text[start..self.pos]).unwrap_or("");
        let parsed = match tok {
            "Inf" | "inf" | "+Inf" => Some(f64::INFINITY),
            "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
            _ => tok.parse::<f64>().ok(),
        };
        parsed.ok_or_else(|| self.error(start, format!("expected a number, found {tok:?}")))
    }

    fn matrix(&mut self) -> Result<Matrix> {
        let open = self.pos;
        let (line, _) = self.location(open);
        self.pos += 1; // '['
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            let newline = self.skip_blank(true);
            if newline {
                if !row.is_empty() {
                    rows.push(std::mem::take(&mut row));
                }
                continue;
            }
            match self.peek() {
                None => return Err(self.error(open, "unterminated matrix")),
                Some(b';') => {
                    self.pos += 1;
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                }
                Some(b']') => {
                    self.pos += 1;
                    if !row.is_empty() {
                        rows.push(row);
                    }
                    break;
                }
                Some(_) => row.push(self.number()?),
            }
        }
        if let Some(first) = rows.first() {
            let width = first.len();
            if let Some((k, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
                let (l, c) = self.location(open);
                return Err(Error::Syntax {
                    line: l + k,
                    column: c,
                    message: format!("matrix row {} has inconsistent width", k + 1),
                });
            }
        }
        Ok(Matrix { rows, line })
    }
}

struct Assignments {
    base_mva: Option<f64>,
    blocks: BTreeMap<&'static str, Matrix>,
}

fn scan(text: &str) -> Result<Assignments> {
    let mut sc = Scanner {
        text: text.as_bytes(),
        pos: 0,
    };
    let mut out = Assignments {
        base_mva: None,
        blocks: BTreeMap::new(),
    };
    loop {
        sc.skip_blank(false);
        let Some(c) = sc.peek() else { break };
        if c == b'\'' || c == b'"' {
            sc.skip_string(c)?;
            continue;
        }
        if !sc.text[sc.pos..].starts_with(b"mpc.") {
            sc.skip_statement()?;
            continue;
        }
        sc.pos += 4;
        let start = sc.pos;
        while sc.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
            sc.pos += 1;
        }
        let name = std::str::from_utf8(&sc.text[start..sc.pos]).unwrap_or("").to_string();
        sc.skip_blank(false);
        if sc.peek() != Some(b'=') {
            sc.skip_statement()?;
            continue;
        }
        sc.pos += 1;
        sc.skip_blank(false);
        let key = match name.as_str() {
            "bus" => Some("bus"),
            "gen" => Some("gen"),
            "branch" => Some("branch"),
            _ => None,
        };
        match (name.as_str(), key) {
            ("baseMVA", _) => {
                out.base_mva = Some(sc.number()?);
                sc.skip_statement()?;
            }
            (_, Some(key)) => {
                if sc.peek() != Some(b'[') {
                    return Err(sc.error(sc.pos, format!("expected '[' after mpc.{name} =")));
                }
                let m = sc.matrix()?;
                out.blocks.insert(key, m);
                sc.skip_statement()?;
            }
            _ => sc.skip_statement()?,
        }
    }
    Ok(out)
}

fn require_cols(m: &Matrix, name: &str, cols: usize) -> Result<()> {
    if let Some(r) = m.rows.first() {
        if r.len() < cols {
            return Err(Error::Syntax {
                line: m.line,
                column: 1,
                message: format!("mpc.{name} needs at least {cols} columns, found {}", r.len()),
            });
        }
    }
    Ok(())
}

/// Parses MATPOWER text into a validated [`NetworkCase`].
///
/// Units sharing a bus are aggregated into one generator entry; loads with
/// zero demand are omitted; out-of-service units are dropped while
/// out-of-service branches are kept with `in_service = false`.
pub fn parse_matpower(text: &str, opts: &MatpowerOptions) -> Result<NetworkCase> {
    let a = scan(text)?;
    let base_mva = a
        .base_mva
        .ok_or_else(|| Error::semantic("case", "baseMVA", "missing mpc.baseMVA"))?;
    let missing = |n: &str| Error::semantic("case", n, format!("missing mpc.{n}"));
    let bus_m = a.blocks.get("bus").ok_or_else(|| missing("bus"))?;
    let gen_m = a.blocks.get("gen").ok_or_else(|| missing("gen"))?;
    let br_m = a.blocks.get("branch").ok_or_else(|| missing("branch"))?;
    require_cols(bus_m, "bus", 3)?;
    require_cols(gen_m, "gen", 10)?;
    require_cols(br_m, "branch", 11)?;

    let as_id = |v: f64, what: &'static str| -> Result<u32> {
        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as u32)
        } else {
            Err(Error::semantic(what, v, "id must be a nonnegative integer"))
        }
    };

    let mut buses = Vec::with_capacity(bus_m.rows.len());
    let mut loads = Vec::new();
    for r in &bus_m.rows {
        let id = as_id(r[0], "bus")?;
        buses.push(Bus { id, name: None });
        let pd = r[2];
        if pd > 0.0 {
            loads.push(Load {
                bus: id,
                p_mw: pd,
                shed_cost_per_mw: None,
            });
        }
    }

    // bus id -> aggregated unit data
    let mut gens: BTreeMap<u32, Generator> = BTreeMap::new();
    let mut order = Vec::new();
    for r in &gen_m.rows {
        let status = r[7];
        if status <= 0.0 {
            continue;
        }
        let bus = as_id(r[0], "generator")?;
        let pmax = r[8];
        let pmin = if opts.keep_pmin { r[9].max(0.0) } else { 0.0 };
        let ramp = if r.len() > 16 && r[16] > 0.0 {
            r[16]
        } else {
            opts.default_ramp_fraction * pmax.max(0.0)
        };
        let entry = gens.entry(bus).or_insert_with(|| {
            order.push(bus);
            Generator {
                bus,
                p_mw: 0.0,
                p_min: 0.0,
                p_max: 0.0,
                ramp_mw_per_min: 0.0,
                cost_per_mw: None,
            }
        });
        entry.p_mw += r[1];
        entry.p_min += pmin;
        entry.p_max += pmax;
        entry.ramp_mw_per_min += ramp;
    }
    let generators = order
        .into_iter()
        .map(|b| {
            let mut g = gens.remove(&b).expect("aggregated");
            g.p_mw = g.p_mw.clamp(g.p_min, g.p_max.max(g.p_min));
            g
        })
        .collect();

    let mut branches = Vec::with_capacity(br_m.rows.len());
    for (k, r) in br_m.rows.iter().enumerate() {
        let id = (k + 1) as u32;
        let x = r[3];
        if x == 0.0 {
            return Err(Error::semantic("branch", id, "zero reactance"));
        }
        let rate = if r[5] > 0.0 { r[5] } else { opts.default_rate_mw };
        branches.push(Branch {
            id,
            from: as_id(r[0], "branch")?,
            to: as_id(r[1], "branch")?,
            admittance: 1.0 / x.abs(),
            rate_mw: rate,
            in_service: r[10] > 0.0,
            failure: None,
        });
    }

    NetworkCase::new(
        base_mva,
        buses,
        branches,
        generators,
        loads,
        opts.failure_rate,
        opts.costs,
    )
}
