//! JSON scenarios, scheme dispatch and CSV output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arz::{InvariantDomain, PressureLaw, State};
use crate::bus::BusSpec;
use crate::constraint::{self, build_moving, Cap, ConstrainedFan, FixedConstraint};
use crate::error::{Error, Result};
use crate::godunov::{self, PiecewiseConstant, UniformGrid};
use crate::riemann;
use crate::sim::{self, FvScheme, Obstacle, SimSetup};
use crate::wavefront;

const MAX_WFT_EVENTS: usize = 200_000;
const TV_CADENCE: usize = 100;
const L1_SUB: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    RiemannRs1,
    RiemannRs2,
    RiemannRsq2,
    Fv(FvScheme),
    Wft,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "riemann-rs1" => Self::RiemannRs1,
            "riemann-rs2" => Self::RiemannRs2,
            "riemann-rsq2" => Self::RiemannRsq2,
            "godunov" => Self::Fv(FvScheme::Godunov),
            "rs1-reconstruct" => Self::Fv(FvScheme::Rs1Reconstruct),
            "rs2-reconstruct" => Self::Fv(FvScheme::Rs2Reconstruct),
            "rs2-fixed" => Self::Fv(FvScheme::Rs2Fixed),
            "rs2-mesh" => Self::Fv(FvScheme::Rs2Mesh),
            "rs2-mesh-fixed" => Self::Fv(FvScheme::Rs2MeshFixed),
            "wft" => Self::Wft,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::RiemannRs1 => "riemann-rs1",
            Self::RiemannRs2 => "riemann-rs2",
            Self::RiemannRsq2 => "riemann-rsq2",
            Self::Fv(FvScheme::Godunov) => "godunov",
            Self::Fv(FvScheme::Rs1Reconstruct) => "rs1-reconstruct",
            Self::Fv(FvScheme::Rs2Reconstruct) => "rs2-reconstruct",
            Self::Fv(FvScheme::Rs2Fixed) => "rs2-fixed",
            Self::Fv(FvScheme::Rs2Mesh) => "rs2-mesh",
            Self::Fv(FvScheme::Rs2MeshFixed) => "rs2-mesh-fixed",
            Self::Wft => "wft",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSpec {
    None,
    /// Moving cap; a bare `v_bar` becomes a bus without stops.
    Moving { bus: BusSpec, alpha: f64, r_max: f64 },
    Fixed { q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub cells: usize,
    pub cfl_factor: f64,
    pub t_max: f64,
    pub fan_delta: Option<f64>,
    pub snapshot_every: usize,
    /// Sampling range of `ξ = x/t` for the Riemann schemes.
    pub xi_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub law: PressureLaw,
    pub x_min: f64,
    pub x_max: f64,
    pub datum: PiecewiseConstant,
    pub constraint: ConstraintSpec,
    pub scheme: Scheme,
    pub numerics: Numerics,
    /// Invariant band for wave-front tracking; the bounding band of the datum
    /// when absent.
    pub domain: Option<InvariantDomain>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    law: Option<RawLaw>,
    window: Option<RawWindow>,
    segments: Option<Vec<RawSegment>>,
    constraint: Option<RawConstraint>,
    scheme: Option<String>,
    numerics: Option<RawNumerics>,
    domain: Option<RawDomain>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLaw {
    gamma: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    x_min: Option<f64>,
    x_max: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    x_end: Option<f64>,
    rho: Option<f64>,
    v: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    moving: Option<RawMoving>,
    fixed: Option<RawFixed>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMoving {
    v_bar: Option<f64>,
    y0: Option<f64>,
    bus: Option<BusSpec>,
    alpha: Option<f64>,
    #[serde(rename = "R")]
    r_max: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixed {
    q: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    cells: Option<usize>,
    cfl_factor: Option<f64>,
    t_max: Option<f64>,
    fan_delta: Option<f64>,
    snapshot_every: Option<usize>,
    xi_range: Option<(f64, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    v1: f64,
    v2: f64,
    w1: f64,
    w2: f64,
}

fn bad<T>(path: impl Into<String>, msg: impl Into<String>) -> Result<T> {
    Err(Error::Config { path: path.into(), msg: msg.into() })
}

fn need<T>(v: Option<T>, path: &str) -> Result<T> {
    match v {
        Some(v) => Ok(v),
        None => bad(path, "required field is missing"),
    }
}

fn finite(v: f64, path: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        bad(path, format!("{v} is not a finite number"))
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawScenario =
        serde_json::from_str(text).map_err(|e| Error::Config { path: "<json>".into(), msg: e.to_string() })?;
    validate(raw)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    parse_scenario(&text)
}

fn validate(raw: RawScenario) -> Result<Scenario> {
    let gamma = finite(need(need(raw.law, "law")?.gamma, "law.gamma")?, "law.gamma")?;
    let law = PressureLaw::new(gamma).or_else(|e| bad("law.gamma", e.to_string()))?;

    let window = need(raw.window, "window")?;
    let x_min = finite(need(window.x_min, "window.x_min")?, "window.x_min")?;
    let x_max = finite(need(window.x_max, "window.x_max")?, "window.x_max")?;
    if !(x_min < x_max) {
        return bad("window", format!("x_min = {x_min} must be below x_max = {x_max}"));
    }

    let segments = need(raw.segments, "segments")?;
    if segments.is_empty() {
        return bad("segments", "at least one segment is required");
    }
    let mut breaks = Vec::new();
    let mut states = Vec::new();
    let mut prev = x_min;
    for (i, seg) in segments.iter().enumerate() {
        let p = |f: &str| format!("segments[{i}].{f}");
        let x_end = finite(need(seg.x_end, &p("x_end"))?, &p("x_end"))?;
        let rho = finite(need(seg.rho, &p("rho"))?, &p("rho"))?;
        let v = finite(need(seg.v, &p("v"))?, &p("v"))?;
        if !(x_end > prev) {
            return bad(p("x_end"), format!("{x_end} does not exceed the previous end {prev}"));
        }
        if !(rho > 0.0) {
            return bad(p("rho"), format!("density {rho} is vacuum or negative"));
        }
        if v < 0.0 {
            return bad(p("v"), format!("velocity {v} is negative"));
        }
        if i + 1 < segments.len() {
            breaks.push(x_end);
        } else if (x_end - x_max).abs() > 1e-12 * (1.0 + x_max.abs()) {
            return bad(p("x_end"), format!("last segment ends at {x_end}, window ends at {x_max}"));
        }
        prev = x_end;
        states.push(State::new(rho, v));
    }
    let datum = PiecewiseConstant::new(breaks, states).or_else(|e| bad("segments", e.to_string()))?;

    let scheme_name = need(raw.scheme, "scheme")?;
    let scheme = match Scheme::parse(&scheme_name) {
        Some(s) => s,
        None => return bad("scheme", format!("unknown scheme `{scheme_name}`")),
    };

    let constraint = match raw.constraint {
        None => ConstraintSpec::None,
        Some(RawConstraint { moving: Some(_), fixed: Some(_) }) => {
            return bad("constraint", "give either `moving` or `fixed`, not both")
        }
        Some(RawConstraint { moving: Some(m), .. }) => {
            let bus = match (m.v_bar, m.bus) {
                (Some(_), Some(_)) => return bad("constraint.moving", "give either `v_bar` or `bus`, not both"),
                (Some(v), None) => {
                    let y0 = finite(m.y0.unwrap_or(0.0), "constraint.moving.y0")?;
                    BusSpec::new(finite(v, "constraint.moving.v_bar")?, y0)
                }
                (None, Some(b)) => {
                    if m.y0.is_some() {
                        return bad("constraint.moving.y0", "use bus.y0 together with a bus spec");
                    }
                    b
                }
                (None, None) => return bad("constraint.moving.v_bar", "either `v_bar` or `bus` is required"),
            };
            bus.validate().map_err(|e| match e {
                Error::Config { path, msg } => Error::Config { path: format!("constraint.moving.{path}"), msg },
                e => e,
            })?;
            if !(bus.y0 > x_min && bus.y0 < x_max) {
                return bad("constraint.moving.y0", format!("bus position {} outside the window", bus.y0));
            }
            let alpha = need(m.alpha, "constraint.alpha")?;
            let r_max = need(m.r_max, "constraint.R")?;
            build_moving(&law, bus.v_b, alpha, r_max).or_else(|e| bad("constraint.alpha", e.to_string()))?;
            ConstraintSpec::Moving { bus, alpha, r_max }
        }
        Some(RawConstraint { fixed: Some(f), .. }) => {
            let q = finite(need(f.q, "constraint.fixed.q")?, "constraint.fixed.q")?;
            FixedConstraint::new(q).or_else(|e| bad("constraint.fixed.q", e.to_string()))?;
            if !(x_min < 0.0 && x_max > 0.0) {
                return bad("window", "a fixed constraint sits at x = 0, which must lie inside the window");
            }
            ConstraintSpec::Fixed { q }
        }
        Some(_) => return bad("constraint", "expected `moving` or `fixed`"),
    };

    let num = need(raw.numerics, "numerics")?;
    let t_max = finite(need(num.t_max, "numerics.t_max")?, "numerics.t_max")?;
    if !(t_max > 0.0) {
        return bad("numerics.t_max", "final time must be positive");
    }
    let cells = need(num.cells, "numerics.cells")?;
    if cells < 2 {
        return bad("numerics.cells", "need at least two cells");
    }
    let cfl_factor = num.cfl_factor.unwrap_or(0.5);
    if !(cfl_factor > 0.0 && cfl_factor <= 0.5) {
        return bad("numerics.cfl_factor", format!("{cfl_factor} outside (0, 1/2]"));
    }
    if let Some((a, b)) = num.xi_range {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return bad("numerics.xi_range", "need a finite increasing pair");
        }
    }
    let numerics = Numerics {
        cells,
        cfl_factor,
        t_max,
        fan_delta: num.fan_delta,
        snapshot_every: num.snapshot_every.unwrap_or(0),
        xi_range: num.xi_range,
    };

    let domain = match raw.domain {
        None => None,
        Some(d) => Some(InvariantDomain::new(d.v1, d.v2, d.w1, d.w2).or_else(|e| bad("domain", e.to_string()))?),
    };

    let s = Scenario { law, x_min, x_max, datum, constraint, scheme, numerics, domain };
    check_scheme_fields(&s)?;
    Ok(s)
}

fn check_scheme_fields(s: &Scenario) -> Result<()> {
    let riemann = matches!(s.scheme, Scheme::RiemannRs1 | Scheme::RiemannRs2 | Scheme::RiemannRsq2);
    if riemann && s.datum.breaks.len() != 1 {
        return bad("segments", "Riemann schemes need exactly two segments");
    }
    match (s.scheme, &s.constraint) {
        (Scheme::RiemannRs1 | Scheme::RiemannRs2, ConstraintSpec::Moving { bus, .. }) => {
            if !bus.stops.is_empty() {
                return bad("constraint.moving.bus.stops", "Riemann schemes take a bus without stops");
            }
        }
        (Scheme::RiemannRs1 | Scheme::RiemannRs2, _) => {
            return bad("constraint.moving", "this scheme needs a moving constraint")
        }
        (Scheme::RiemannRsq2, ConstraintSpec::Fixed { .. }) => {
            if s.datum.breaks[0] != 0.0 {
                return bad("segments[0].x_end", "the fixed-constraint Riemann problem is posed at x = 0");
            }
        }
        (Scheme::Wft, ConstraintSpec::Fixed { .. }) => {}
        (Scheme::RiemannRsq2 | Scheme::Wft, _) => return bad("constraint.fixed", "this scheme needs a fixed constraint"),
        (Scheme::Fv(FvScheme::Godunov), _) => {}
        (Scheme::Fv(_), ConstraintSpec::None) => {
            return bad("constraint", "constrained schemes need a moving or fixed constraint")
        }
        _ => {}
    }
    if s.scheme == Scheme::Wft {
        let delta = need(s.numerics.fan_delta, "numerics.fan_delta")?;
        if !(delta > 0.0 && delta < 1.0) {
            return bad("numerics.fan_delta", format!("{delta} outside (0, 1)"));
        }
    }
    Ok(())
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scheme: &'static str,
    pub meta: Vec<(String, MetaValue)>,
    /// L1 density distance to the exact Riemann solution, when one exists.
    pub l1_vs_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MetaValue {
    Num(f64),
    Int(i64),
    Text(String),
}

impl MetaValue {
    fn render(&self) -> String {
        match self {
            MetaValue::Num(x) => fmt(*x),
            MetaValue::Int(i) => i.to_string(),
            MetaValue::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MetaValue::Num(x) => Some(*x),
            MetaValue::Int(i) => Some(*i as f64),
            MetaValue::Text(_) => None,
        }
    }
}

impl RunReport {
    pub fn get(&self, key: &str) -> Option<&MetaValue> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// One-line header printed by the CLI.
    pub fn header(&self) -> String {
        let mut parts = vec![format!("scheme={}", self.scheme)];
        for key in ["w_alpha", "rho_alpha", "F_alpha", "q"] {
            if let Some(v) = self.get(key) {
                parts.push(format!("{key}={}", v.render()));
            }
        }
        if let Some(e) = self.l1_vs_exact {
            parts.push(format!("l1_vs_exact={}", fmt(e)));
        }
        parts.join(" ")
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

struct Meta(Vec<(String, MetaValue)>);

impl Meta {
    fn num(&mut self, k: &str, v: f64) {
        self.0.push((k.into(), MetaValue::Num(v)));
    }
    fn int(&mut self, k: &str, v: i64) {
        self.0.push((k.into(), MetaValue::Int(v)));
    }
    fn text(&mut self, k: &str, v: &str) {
        self.0.push((k.into(), MetaValue::Text(v.into())));
    }
    fn state(&mut self, k: &str, s: State) {
        self.num(&format!("{k}_rho"), s.rho);
        self.num(&format!("{k}_v"), s.v);
    }
}

fn write_csv<const N: usize>(path: &Path, header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn profile_rows(t: f64, x: &[f64], states: &[State]) -> Vec<[String; 4]> {
    x.iter().zip(states).map(|(x, s)| [fmt(t), fmt(*x), fmt(s.rho), fmt(s.v)]).collect()
}

/// Cap at the constraint position and the time-zero bus speed.
fn initial_cap(s: &Scenario) -> Result<Option<(f64, Cap)>> {
    match &s.constraint {
        ConstraintSpec::None => Ok(None),
        ConstraintSpec::Moving { bus, alpha, r_max } => {
            let v = s.datum.eval(bus.y0).v;
            let v_bar = bus.v_b.min(v);
            let c = build_moving(&s.law, v_bar, *alpha, *r_max)?;
            Ok(Some((bus.y0, c.cap())))
        }
        ConstraintSpec::Fixed { q } => Ok(Some((0.0, FixedConstraint::new(*q)?.cap()))),
    }
}

fn constraint_meta(s: &Scenario, meta: &mut Meta) -> Result<()> {
    match &s.constraint {
        ConstraintSpec::None => {}
        ConstraintSpec::Moving { bus, alpha, r_max } => {
            let c = build_moving(&s.law, bus.v_b, *alpha, *r_max)?;
            meta.num("v_bar", c.v_bar);
            meta.num("alpha", c.alpha);
            meta.num("R", c.r_max);
            meta.num("w_alpha", c.w_alpha);
            meta.num("rho_alpha", c.rho_alpha);
            meta.num("F_alpha", c.f_alpha);
            meta.num("y0", bus.y0);
        }
        ConstraintSpec::Fixed { q } => meta.num("q", *q),
    }
    if let Some((y, cap)) = initial_cap(s)? {
        let left = s.datum.eval(y);
        let right = s.datum.eval(next_up(y));
        if let Some((hat, check1)) = constraint::hat_check1(&s.law, left, cap) {
            meta.state("hat", hat);
            meta.state("check1", check1);
        }
        if right.v > cap.v_bar {
            meta.state("check2", constraint::check2(right, cap)?);
        }
    }
    Ok(())
}

fn next_up(x: f64) -> f64 {
    x + 1e-12 * (1.0 + x.abs())
}

/// Exact constrained Riemann solution matching the scheme, if the datum is a
/// single jump sitting on the constraint.
fn exact_reference(s: &Scenario) -> Result<Option<(f64, ConstrainedFan)>> {
    if s.datum.breaks.len() != 1 {
        return Ok(None);
    }
    let x0 = s.datum.breaks[0];
    let (l, r) = (s.datum.states[0], s.datum.states[1]);
    let law = &s.law;
    let two = |sc: Scheme| !matches!(sc, Scheme::RiemannRs1 | Scheme::Fv(FvScheme::Rs1Reconstruct));
    let fan = match (&s.constraint, s.scheme) {
        (_, Scheme::Fv(FvScheme::Godunov)) | (ConstraintSpec::None, _) => {
            let c = riemann::solve(law, l, r)?;
            ConstrainedFan {
                case: constraint::ConstraintCase::FreeBus,
                v_bar: 0.0,
                bus_speed: 0.0,
                classical: c,
                parts: None,
            }
        }
        (ConstraintSpec::Moving { bus, alpha, r_max }, sc) => {
            if bus.y0 != x0 || !bus.stops.is_empty() {
                return Ok(None);
            }
            let cap = build_moving(law, bus.v_b, *alpha, *r_max)?.cap();
            if two(sc) {
                constraint::solve_rs2(law, l, r, cap)?
            } else {
                constraint::solve_rs1(law, l, r, cap)?
            }
        }
        (ConstraintSpec::Fixed { q }, sc) => {
            if x0 != 0.0 {
                return Ok(None);
            }
            let fixed = FixedConstraint::new(*q)?;
            if two(sc) {
                constraint::solve_rsq2(law, l, r, fixed)?
            } else {
                constraint::solve_rs1(law, l, r, fixed.cap())?
            }
        }
    };
    Ok(Some((x0, fan)))
}

fn fan_meta(fan: &ConstrainedFan, meta: &mut Meta) {
    meta.text("case", &format!("{:?}", fan.case));
    meta.num("bus_speed", fan.bus_speed);
    if let (Some(h), Some(c)) = (fan.hat(), fan.check()) {
        meta.state("shock_hat", h);
        meta.state("shock_check", c);
    }
    meta.int("n_waves", fan.waves().len() as i64);
}

fn write_meta(out: &Path, meta: &Meta) -> Result<()> {
    write_csv(out.join("meta.csv").as_path(), ["key", "value"], meta.0.iter().map(|(k, v)| [k.clone(), v.render()]))
}

/// Runs the scenario and writes its CSV files into `out`.
pub fn run_scenario(s: &Scenario, out: &Path) -> Result<RunReport> {
    fs::create_dir_all(out)?;
    let mut meta = Meta(Vec::new());
    meta.text("scheme", s.scheme.name());
    meta.num("gamma", s.law.gamma);
    constraint_meta(s, &mut meta)?;
    let mut l1 = None;
    match s.scheme {
        Scheme::RiemannRs1 | Scheme::RiemannRs2 | Scheme::RiemannRsq2 => {
            let (x0, fan) = exact_reference(s)?
                .ok_or_else(|| Error::Degenerate("the bus must start on the jump".into()))?;
            fan_meta(&fan, &mut meta);
            let t = s.numerics.t_max;
            let n = s.numerics.cells;
            let (a, b) = s.numerics.xi_range.unwrap_or(((s.x_min - x0) / t, (s.x_max - x0) / t));
            let xi: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
            let x: Vec<f64> = xi.iter().map(|z| x0 + z * t).collect();
            let states: Vec<State> = xi.iter().map(|&z| fan.sample(&s.law, z)).collect();
            write_csv(&out.join("profiles.csv"), ["t", "x", "rho", "v"], profile_rows(t, &x, &states))?;
            if let ConstraintSpec::Moving { bus, .. } = &s.constraint {
                let rows = [0.0, t].map(|tt| [fmt(tt), fmt(bus.y0 + fan.bus_speed * tt), fmt(fan.bus_speed)]);
                write_csv(&out.join("bus.csv"), ["t", "y", "speed"], rows)?;
            }
        }
        Scheme::Fv(fv) => {
            let grid = UniformGrid::new(s.x_min, s.x_max, s.numerics.cells)?;
            let obstacle = match &s.constraint {
                ConstraintSpec::None => Obstacle::None,
                ConstraintSpec::Moving { bus, alpha, r_max } => Obstacle::Bus {
                    spec: bus.clone(),
                    constraint: build_moving(&s.law, bus.v_b, *alpha, *r_max)?,
                },
                ConstraintSpec::Fixed { q } => Obstacle::Fixed { x: 0.0, constraint: FixedConstraint::new(*q)? },
            };
            let setup = SimSetup {
                law: s.law,
                grid,
                scheme: fv,
                obstacle,
                cfl_factor: s.numerics.cfl_factor,
                t_max: s.numerics.t_max,
                snapshot_every: s.numerics.snapshot_every,
            };
            let initial = godunov::project(&s.law, &s.datum, &grid)?;
            let res = sim::simulate(&setup, &initial)?;
            let rows = res.snapshots.iter().flat_map(|sn| profile_rows(sn.t, &sn.x, &sn.states));
            write_csv(&out.join("profiles.csv"), ["t", "x", "rho", "v"], rows)?;
            if !res.bus.is_empty() {
                let rows = res.bus.iter().map(|b| [fmt(b.t), fmt(b.y), fmt(b.speed)]);
                write_csv(&out.join("bus.csv"), ["t", "y", "speed"], rows)?;
            }
            let m0 = sim::budget(&initial, &grid);
            let m1 = sim::budget(&res.cells, &grid);
            meta.int("steps", res.steps.len() as i64);
            meta.int("violated_steps", res.steps.iter().filter(|l| l.violated).count() as i64);
            meta.int("fallback_steps", res.steps.iter().filter(|l| l.fallback).count() as i64);
            meta.num("min_width", res.min_width);
            meta.num("mass_rho_initial", m0.rho);
            meta.num("mass_rho_final", m1.rho);
            meta.num("mass_z_initial", m0.z);
            meta.num("mass_z_final", m1.z);
            if let Some((x0, fan)) = exact_reference(s)? {
                let t = res.cells.t;
                let e = godunov::l1_density_error(&s.law, &res.cells, &grid, |x| fan.sample(&s.law, (x - x0) / t), L1_SUB)?;
                meta.num("l1_vs_exact", e);
                l1 = Some(e);
            }
        }
        Scheme::Wft => run_wft(s, out, &mut meta)?,
    }
    write_meta(out, &meta)?;
    Ok(RunReport { scheme: s.scheme.name(), meta: meta.0, l1_vs_exact: l1 })
}

/// Smallest band `[v1, v2] × [w1, w2]` holding every state of the datum,
/// widened slightly so the band is not degenerate.
pub fn bounding_domain(law: &PressureLaw, datum: &PiecewiseConstant) -> Result<InvariantDomain> {
    let vs = datum.states.iter().map(|s| s.v);
    let ws = datum.states.iter().map(|s| law.w(*s));
    let (v1, v2) = vs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (w1, w2) = ws.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), w| (a.min(w), b.max(w)));
    let pad = 1e-9 * (1.0 + w2.abs());
    InvariantDomain::new((v1 - pad).max(f64::MIN_POSITIVE), v2 + pad, w1 - pad, w2 + pad)
}

fn run_wft(s: &Scenario, out: &Path, meta: &mut Meta) -> Result<()> {
    let law = &s.law;
    let ConstraintSpec::Fixed { q } = s.constraint else {
        return Err(Error::Degenerate("wave-front tracking needs a fixed constraint".into()));
    };
    let fixed = FixedConstraint::new(q)?;
    let delta = s.numerics.fan_delta.unwrap_or(0.1);
    let domain = match s.domain {
        Some(d) => d,
        None => bounding_domain(law, &s.datum)?,
    };
    let n = wavefront::fan_count(delta)?;
    let initial = wavefront::initialize(law, &s.datum, fixed, delta, &domain)?;
    let grid = UniformGrid::new(s.x_min, s.x_max, s.numerics.cells)?;
    let x: Vec<f64> = (0..grid.n_cells).map(|j| grid.center(j)).collect();
    let st0: Vec<State> = x.iter().map(|&x| initial.eval(0.0, x)).collect();
    let n_fans = initial.n_fans;
    let res = wavefront::run(law, initial, fixed, delta, &domain, s.numerics.t_max, TV_CADENCE, MAX_WFT_EVENTS)?;
    let t = s.numerics.t_max;
    let st1: Vec<State> = x.iter().map(|&x| res.state.eval(t, x)).collect();
    let mut rows = profile_rows(0.0, &x, &st0);
    rows.extend(profile_rows(t, &x, &st1));
    write_csv(&out.join("profiles.csv"), ["t", "x", "rho", "v"], rows)?;
    let rows = res
        .tv_series
        .iter()
        .map(|p| [fmt(p.t), fmt(p.tv_rho), fmt(p.tv_v), fmt(p.tv_w), p.n_fronts.to_string()]);
    write_csv(&out.join("tv.csv"), ["t", "tv_rho", "tv_v", "tv_w", "n_fronts"], rows)?;
    let rows = res.state.ledger.iter().map(|e| {
        [fmt(e.t), fmt(e.x), e.row.label().to_string(), e.delta_n.to_string(), fmt(e.delta_tv_v), fmt(e.delta_tv_w)]
    });
    write_csv(&out.join("events.csv"), ["t", "x", "row_kind", "delta_n", "delta_tv_v", "delta_tv_w"], rows)?;
    let report = wavefront::check_estimates(&res.state.ledger, n);
    meta.num("fan_delta", delta);
    meta.int("fan_points", n as i64);
    meta.num("domain_v1", domain.v1);
    meta.num("domain_v2", domain.v2);
    meta.num("domain_w1", domain.w1);
    meta.num("domain_w2", domain.w2);
    meta.int("fans", n_fans as i64);
    meta.int("events", res.state.ledger.len() as i64);
    meta.int("max_fronts", res.max_fronts as i64);
    meta.int("estimate_violations", report.violations.len() as i64);
    Ok(())
}

/// One row of a refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub cells: usize,
    pub h: f64,
    pub l1_error: f64,
    /// `log2(e_{i−1}/e_i)`; undefined on the first row or when an error vanishes.
    pub order: Option<f64>,
}

/// Runs the finite-volume scenario at `cells × 2^i`, `i < refinements`, each
/// in its own subdirectory, and writes `study.csv`.
pub fn convergence_study(s: &Scenario, refinements: usize, out: &Path) -> Result<Vec<StudyRow>> {
    if !matches!(s.scheme, Scheme::Fv(_)) {
        return bad("scheme", "a refinement study needs a finite-volume scheme");
    }
    if refinements == 0 {
        return bad("refinements", "need at least one refinement");
    }
    if exact_reference(s)?.is_none() {
        return bad("segments", "a refinement study needs a single jump on the constraint");
    }
    fs::create_dir_all(out)?;
    let mut rows: Vec<StudyRow> = Vec::new();
    for i in 0..refinements {
        let mut sc = s.clone();
        sc.numerics.cells = s.numerics.cells << i;
        let dir = out.join(format!("cells_{}", sc.numerics.cells));
        let rep = run_scenario(&sc, &dir)?;
        let e = rep.l1_vs_exact.ok_or_else(|| Error::Degenerate("no exact reference".into()))?;
        let order = rows
            .last()
            .filter(|p| p.l1_error > 0.0 && e > 0.0)
            .map(|p| (p.l1_error / e).log2());
        rows.push(StudyRow { cells: sc.numerics.cells, h: (s.x_max - s.x_min) / sc.numerics.cells as f64, l1_error: e, order });
    }
    let csv_rows = rows
        .iter()
        .map(|r| [r.cells.to_string(), fmt(r.h), fmt(r.l1_error), r.order.map(fmt).unwrap_or_default()]);
    write_csv(&out.join("study.csv"), ["cells", "h", "l1_error", "order"], csv_rows)?;
    Ok(rows)
}
