//! Exact front tracking for the fixed constraint `ρv ≤ q` at `x = 0`.
//!
//! Rarefactions born at `t = 0`, or when a rarefaction front reaches `x = 0`,
//! are split into `N = ⌊1/δ⌋` fronts; every other rarefaction is kept as a
//! single front. Every front moves at its Rankine-Hugoniot speed.

use serde::Serialize;

use crate::arz::{InvariantDomain, PressureLaw, State};
use crate::constraint::{self, FixedConstraint};
use crate::error::{Error, Result};
use crate::godunov::PiecewiseConstant;
use crate::riemann::{self, Wave, WaveKind};

/// Tolerance on the ledger and table checks.
pub const TV_TOL: f64 = 1e-10;

/// Relative gap under which fronts are taken to meet at one point.
const MEET_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrontKind {
    Shock,
    /// Single jump standing for (part of) a rarefaction.
    Rarefaction,
    Contact,
    Nonclassical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Front {
    pub x: f64,
    pub birth_t: f64,
    pub speed: f64,
    pub left: State,
    pub right: State,
    pub kind: FrontKind,
    /// Born from a split at `x = 0`; such fronts are not split again.
    pub resplit: bool,
}

impl Front {
    pub fn position(&self, t: f64) -> f64 {
        self.x + self.speed * (t - self.birth_t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    ContactAtZero,
    ShockAtZero,
    RarefactionAtZero,
    TwoPositive,
    TwoNegative,
    Mixed,
}

impl RowKind {
    pub fn at_zero(self) -> bool {
        matches!(self, Self::ContactAtZero | Self::ShockAtZero | Self::RarefactionAtZero)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::ContactAtZero => "contact_at_zero",
            Self::ShockAtZero => "shock_at_zero",
            Self::RarefactionAtZero => "rarefaction_at_zero",
            Self::TwoPositive => "two_positive",
            Self::TwoNegative => "two_negative",
            Self::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub t: f64,
    pub x: f64,
    pub row: RowKind,
    pub delta_n: i64,
    pub delta_tv_rho: f64,
    pub delta_tv_v: f64,
    pub delta_tv_w: f64,
    /// `|w^r − w^l|` and `|v^r − v^l|` of the incoming wave.
    pub jump_w: f64,
    pub jump_v: f64,
    /// A rarefaction was kept whole because of the re-split cap.
    pub capped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Tv {
    pub rho: f64,
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvSample {
    pub t: f64,
    pub tv_rho: f64,
    pub tv_v: f64,
    pub tv_w: f64,
    pub n_fronts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontState {
    pub t: f64,
    /// State left of every front.
    pub far_left: State,
    pub fronts: Vec<Front>,
    pub ledger: Vec<LedgerEntry>,
    /// Initial total variation plus every ledger increment.
    pub tv_ledger: Tv,
    pub n_fans: usize,
}

/// Triangle-inequality constants of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainConstants {
    pub k1: f64,
    pub k2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl DomainConstants {
    pub fn new(law: &PressureLaw, d: &InvariantDomain) -> Result<Self> {
        let (min, max) = d.extremal_densities(law)?;
        let (k1, k2) = (law.lambda1(max), law.lambda1(min));
        if !(k2 < 0.0) {
            return Err(Error::Domain { what: "lambda1 at the minimal density", value: k2 });
        }
        let c1 = d.v2 / -k2;
        let c2 = -k1 / d.v1;
        Ok(Self { k1, k2, c1, c2, c3: c1 * (1.0 + 1.0 / c2) })
    }
}

/// `N = ⌊1/δ⌋`.
pub fn fan_count(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain { what: "fan_delta", value: delta });
    }
    Ok(((1.0 / delta) * (1.0 + 1e-12)).floor() as usize)
}

/// Upper bound on the number of waves for `k1`/`k2` initial jumps left/right of 0.
pub fn wave_bound(n: usize, k1: usize, k2: usize) -> usize {
    n + 2 + (n + 1) * (k1 + k2) + 2 * k1 + n * (n + 1) * k2
}

/// Upper bound on the number of interactions.
pub fn interaction_bound(n: usize, k1: usize, k2: usize) -> usize {
    let (n2, k12) = (n * n, k1 + 1);
    k1 + n * k2
        + n2 * (k12 * k12 + 2 * k2 * k2)
        + n * (k1 * k1 + k2 * k2 + k12 * k2)
        + (k1 + n2 * k2) * (2 * k1 + n2 * k2 + n * k12)
}

pub fn total_variation(law: &PressureLaw, fronts: &[Front]) -> Tv {
    fronts.iter().fold(Tv::default(), |acc, f| Tv {
        rho: acc.rho + (f.right.rho - f.left.rho).abs(),
        v: acc.v + (f.right.v - f.left.v).abs(),
        w: acc.w + (law.w(f.right) - law.w(f.left)).abs(),
    })
}

/// Splits a first-family rarefaction into `n` jumps at densities
/// `ρ_l + (i/n)(ρ_r − ρ_l)` on the curve `w = w_l`.
pub fn fan_split(law: &PressureLaw, left: State, right: State, n: usize) -> Result<Vec<Wave>> {
    if !(left.rho > right.rho) || !riemann::same_curve(law, left, right) {
        return Err(Error::Degenerate("fan split needs a first-family rarefaction".into()));
    }
    let n = n.max(1);
    let w = law.w(left);
    let point = |i: usize| -> State {
        if i == 0 {
            left
        } else if i == n {
            right
        } else {
            law.on_curve(left.rho + (i as f64 / n as f64) * (right.rho - left.rho), w)
        }
    };
    (1..=n)
        .map(|i| {
            let (a, b) = (point(i - 1), point(i));
            let s = riemann::shock_speed(a, b)?;
            Ok(Wave { kind: WaveKind::Rarefaction, left: a, right: b, speed_lo: s, speed_hi: s })
        })
        .collect()
}

/// Monotone staircase with jumps wherever a component drifts more than
/// `1/ν` from the current level, sampled at `samples` points of `[a, b]`.
pub fn pc_approx(f: impl Fn(f64) -> State, a: f64, b: f64, nu: f64, samples: usize) -> Result<PiecewiseConstant> {
    let eps = 1.0 / nu;
    let dx = (b - a) / samples as f64;
    let mut breaks = Vec::new();
    let mut levels = vec![f(a)];
    for j in 1..=samples {
        let x = a + j as f64 * dx;
        let s = f(x);
        let cur = *levels.last().unwrap();
        if (s.rho - cur.rho).abs() > eps || (s.v - cur.v).abs() > eps {
            breaks.push(x - 0.5 * dx);
            levels.push(s);
        }
    }
    PiecewiseConstant::new(breaks, levels)
}

fn front_of(wave: &Wave, x: f64, t: f64, resplit: bool) -> Front {
    let kind = match wave.kind {
        WaveKind::Shock => FrontKind::Shock,
        WaveKind::Rarefaction => FrontKind::Rarefaction,
        WaveKind::Contact => FrontKind::Contact,
        WaveKind::Nonclassical => FrontKind::Nonclassical,
    };
    Front { x, birth_t: t, speed: wave.speed_lo, left: wave.left, right: wave.right, kind, resplit }
}

/// Replaces rarefaction waves by `n` fronts (`split`) or a single RH front.
fn emit(law: &PressureLaw, waves: &[Wave], x: f64, t: f64, n: usize, split: bool, resplit: bool) -> Result<Vec<Front>> {
    let mut out = Vec::new();
    for w in waves {
        match w.kind {
            WaveKind::Rarefaction if split => {
                for part in fan_split(law, w.left, w.right, n)? {
                    out.push(front_of(&part, x, t, resplit));
                }
            }
            WaveKind::Rarefaction => {
                let s = riemann::shock_speed(w.left, w.right)?;
                let single = Wave { speed_lo: s, speed_hi: s, ..*w };
                out.push(front_of(&single, x, t, resplit));
            }
            _ => out.push(front_of(w, x, t, resplit)),
        }
    }
    Ok(out)
}

fn check_domain(law: &PressureLaw, d: &InvariantDomain, fronts: &[Front]) -> Result<()> {
    for f in fronts {
        for s in [f.left, f.right] {
            if !d.contains_with(law, s, 1e-9) {
                return Err(Error::DomainBreach { rho: s.rho, v: s.v });
            }
        }
    }
    Ok(())
}

/// Solves every Riemann problem of the datum; `RS^q_2` at `x = 0`.
pub fn initialize(
    law: &PressureLaw,
    datum: &PiecewiseConstant,
    q: FixedConstraint,
    delta: f64,
    domain: &InvariantDomain,
) -> Result<FrontState> {
    let n = fan_count(delta)?;
    DomainConstants::new(law, domain)?;
    for s in &datum.states {
        if !domain.contains(law, *s) {
            return Err(Error::DomainBreach { rho: s.rho, v: s.v });
        }
    }
    let mut fronts = Vec::new();
    let mut n_fans = 0;
    let has_zero = datum.breaks.iter().any(|&b| b == 0.0);
    let mut zero_done = false;
    for (i, &b) in datum.breaks.iter().enumerate() {
        let (l, r) = (datum.states[i], datum.states[i + 1]);
        if !has_zero && !zero_done && b > 0.0 {
            fronts.extend(zero_fronts(law, l, l, q, n, 0.0, true)?);
            zero_done = true;
        }
        let waves = if b == 0.0 {
            zero_done = true;
            constraint::solve_rsq2(law, l, r, q)?.waves()
        } else {
            riemann::solve(law, l, r)?.waves
        };
        n_fans += waves.iter().filter(|w| w.kind == WaveKind::Rarefaction).count();
        fronts.extend(emit(law, &waves, b, 0.0, n, true, false)?);
    }
    if !zero_done {
        let s = *datum.states.last().unwrap();
        fronts.extend(zero_fronts(law, s, s, q, n, 0.0, true)?);
    }
    check_domain(law, domain, &fronts)?;
    let tv = total_variation(law, &fronts);
    Ok(FrontState { t: 0.0, far_left: datum.states[0], fronts, ledger: Vec::new(), tv_ledger: tv, n_fans })
}

fn zero_fronts(
    law: &PressureLaw,
    l: State,
    r: State,
    q: FixedConstraint,
    n: usize,
    t: f64,
    split: bool,
) -> Result<Vec<Front>> {
    let waves = constraint::solve_rsq2(law, l, r, q)?.waves();
    emit(law, &waves, 0.0, t, n, split, true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Site {
    /// Fronts `i..=j` meet away from 0.
    Collision(usize),
    /// Front `i` reaches `x = 0`.
    Zero(usize),
}

fn meets(a: f64, b: f64) -> bool {
    (a - b).abs() <= MEET_TOL * (1.0 + a.abs().max(b.abs()))
}

fn stationary_at_zero(f: &Front) -> bool {
    f.speed == 0.0 && f.x == 0.0
}

/// Earliest collision or arrival at `x = 0` after `state.t`.
pub fn next_event(state: &FrontState) -> Option<(f64, Site)> {
    let mut best: Option<(f64, Site, f64)> = None;
    let mut consider = |t: f64, site: Site, x: f64| {
        let better = match best {
            None => true,
            Some((bt, bsite, bx)) => {
                if meets(t, bt) {
                    match (site, bsite) {
                        (Site::Zero(_), Site::Collision(_)) => true,
                        (Site::Collision(_), Site::Zero(_)) => false,
                        _ => x < bx,
                    }
                } else {
                    t < bt
                }
            }
        };
        if better {
            best = Some((t, site, x));
        }
    };
    for (i, f) in state.fronts.iter().enumerate() {
        let x = f.position(state.t);
        if (x < 0.0 && f.speed > 0.0) || (x > 0.0 && f.speed < 0.0) {
            consider(f.birth_t - f.x / f.speed, Site::Zero(i), 0.0);
        }
    }
    for (i, w) in state.fronts.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if stationary_at_zero(a) || stationary_at_zero(b) || !(a.speed > b.speed) {
            continue;
        }
        let gap = b.position(state.t) - a.position(state.t);
        let t = state.t + gap.max(0.0) / (a.speed - b.speed);
        consider(t, Site::Collision(i), a.position(t));
    }
    best.map(|(t, site, _)| (t, site))
}

fn classify_away(cluster: &[Front]) -> RowKind {
    let neg = cluster.iter().filter(|f| f.speed < 0.0).count();
    if neg == cluster.len() {
        RowKind::TwoNegative
    } else if neg == 0 {
        RowKind::TwoPositive
    } else {
        RowKind::Mixed
    }
}

/// Applies the event and appends its ledger entry.
pub fn resolve_event(
    law: &PressureLaw,
    state: &mut FrontState,
    t: f64,
    site: Site,
    q: FixedConstraint,
    n: usize,
    domain: &InvariantDomain,
) -> Result<()> {
    let at_zero = matches!(site, Site::Zero(_));
    let anchor = match site {
        Site::Collision(i) | Site::Zero(i) => i,
    };
    let x_event = if at_zero { 0.0 } else { state.fronts[anchor].position(t) };
    // every front sitting at the event point joins the cluster
    let at = |f: &Front| meets(f.position(t), x_event);
    let mut lo = anchor;
    while lo > 0 && at(&state.fronts[lo - 1]) {
        lo -= 1;
    }
    let mut hi = anchor;
    while hi + 1 < state.fronts.len() && at(&state.fronts[hi + 1]) {
        hi += 1;
    }
    let cluster: Vec<Front> = state.fronts[lo..=hi].to_vec();
    let (l, r) = (cluster[0].left, cluster[cluster.len() - 1].right);
    let incoming: Vec<&Front> = cluster.iter().filter(|f| !stationary_at_zero(f)).collect();
    let lead = incoming.first().copied().unwrap_or(&cluster[0]);
    let capped_lineage = incoming.iter().any(|f| f.resplit && f.kind == FrontKind::Rarefaction);

    let (row, new_fronts) = if at_zero {
        let row = match lead.kind {
            FrontKind::Contact => RowKind::ContactAtZero,
            _ if lead.left.rho < lead.right.rho => RowKind::ShockAtZero,
            _ => RowKind::RarefactionAtZero,
        };
        let split = row == RowKind::RarefactionAtZero && !capped_lineage;
        (row, zero_fronts(law, l, r, q, n, t, split)?)
    } else {
        let waves = riemann::solve(law, l, r)?.waves;
        (classify_away(&cluster), emit(law, &waves, x_event, t, n, false, false)?)
    };
    let capped = row == RowKind::RarefactionAtZero
        && capped_lineage
        && new_fronts.iter().any(|f| f.kind == FrontKind::Rarefaction);
    check_domain(law, domain, &new_fronts)?;

    let before = total_variation(law, &cluster);
    let after = total_variation(law, &new_fronts);
    let entry = LedgerEntry {
        t,
        x: x_event,
        row,
        delta_n: new_fronts.len() as i64 - cluster.len() as i64,
        delta_tv_rho: after.rho - before.rho,
        delta_tv_v: after.v - before.v,
        delta_tv_w: after.w - before.w,
        jump_w: (law.w(lead.right) - law.w(lead.left)).abs(),
        jump_v: (lead.right.v - lead.left.v).abs(),
        capped,
    };
    state.tv_ledger.rho += entry.delta_tv_rho;
    state.tv_ledger.v += entry.delta_tv_v;
    state.tv_ledger.w += entry.delta_tv_w;
    state.ledger.push(entry);
    state.fronts.splice(lo..=hi, new_fronts);
    state.t = t;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WftRun {
    pub state: FrontState,
    pub tv_series: Vec<TvSample>,
    pub max_fronts: usize,
}

fn sample(law: &PressureLaw, st: &FrontState, t: f64) -> TvSample {
    let tv = total_variation(law, &st.fronts);
    TvSample { t, tv_rho: tv.rho, tv_v: tv.v, tv_w: tv.w, n_fronts: st.fronts.len() }
}

/// Event loop up to `t_max`, sampling TV after every event and at `cadence`
/// uniform instants.
#[allow(clippy::too_many_arguments)]
pub fn run(
    law: &PressureLaw,
    mut state: FrontState,
    q: FixedConstraint,
    delta: f64,
    domain: &InvariantDomain,
    t_max: f64,
    cadence: usize,
    max_events: usize,
) -> Result<WftRun> {
    let n = fan_count(delta)?;
    let mut series = vec![sample(law, &state, state.t)];
    let mut max_fronts = state.fronts.len();
    let ticks: Vec<f64> = (1..=cadence).map(|i| t_max * i as f64 / cadence as f64).collect();
    let mut tick = 0;
    loop {
        let next = next_event(&state).filter(|&(t, _)| t <= t_max);
        let horizon = next.map_or(t_max, |(t, _)| t);
        while tick < ticks.len() && ticks[tick] < horizon {
            series.push(sample(law, &state, ticks[tick]));
            tick += 1;
        }
        let Some((t, site)) = next else { break };
        if state.ledger.len() >= max_events {
            return Err(Error::Degenerate(format!("more than {max_events} interactions before t = {t}")));
        }
        let t = t.max(state.t);
        resolve_event(law, &mut state, t, site, q, n, domain)?;
        max_fronts = max_fronts.max(state.fronts.len());
        series.push(sample(law, &state, state.t));
    }
    state.t = t_max;
    if series.last().map_or(true, |s| s.t != t_max) {
        series.push(sample(law, &state, t_max));
    }
    Ok(WftRun { state, tv_series: series, max_fronts })
}

impl FrontState {
    /// Solution at `(t, x)` for `t` between the last event and the next one.
    pub fn eval(&self, t: f64, x: f64) -> State {
        let mut s = self.far_left;
        for f in &self.fronts {
            if f.position(t) < x {
                s = f.right;
            } else {
                break;
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub violations: Vec<String>,
    /// `max ΔTV_v/|w^r − w^l|` over contacts hitting 0.
    pub ratio_contact: f64,
    /// `max ΔTV_w/|v^r − v^l|` over rarefactions hitting 0.
    pub ratio_rarefaction: f64,
    pub rows: Vec<(RowKind, usize)>,
}

/// Checks every ledger entry against its table row.
pub fn check_estimates(ledger: &[LedgerEntry], n: usize) -> EstimateReport {
    let mut violations = Vec::new();
    let mut ratio_contact: f64 = 0.0;
    let mut ratio_rarefaction: f64 = 0.0;
    let mut rows: Vec<(RowKind, usize)> = Vec::new();
    for e in ledger {
        match rows.iter_mut().find(|(r, _)| *r == e.row) {
            Some((_, c)) => *c += 1,
            None => rows.push((e.row, 1)),
        }
        let mut fail = |what: &str| violations.push(format!("t = {}: {} {what} ({e:?})", e.t, e.row.label()));
        let (dv, dw) = (e.delta_tv_v, e.delta_tv_w);
        match e.row {
            RowKind::ContactAtZero => {
                if e.delta_n > 2 {
                    fail("ΔN > 2");
                }
                if dw > TV_TOL {
                    fail("ΔTV_w > 0");
                }
                if e.jump_w > 0.0 {
                    ratio_contact = ratio_contact.max(dv / e.jump_w);
                }
            }
            RowKind::ShockAtZero => {
                if e.delta_n > 1 {
                    fail("ΔN > 1");
                }
                if dv > TV_TOL || dw > TV_TOL {
                    fail("ΔTV_v or ΔTV_w > 0");
                }
            }
            RowKind::RarefactionAtZero => {
                if e.delta_n > n as i64 + 1 {
                    fail("ΔN > N + 1");
                }
                if dv > TV_TOL {
                    fail("ΔTV_v > 0");
                }
                if e.jump_v > 0.0 {
                    ratio_rarefaction = ratio_rarefaction.max(dw / e.jump_v);
                }
            }
            RowKind::TwoPositive => fail("two positive waves met"),
            RowKind::TwoNegative => {
                if e.delta_n > 0 {
                    fail("ΔN > 0");
                }
                if dv > TV_TOL || dw > TV_TOL {
                    fail("ΔTV_v or ΔTV_w > 0");
                }
            }
            RowKind::Mixed => {
                if e.delta_n != 0 {
                    fail("ΔN ≠ 0");
                }
                if dv > TV_TOL || dw > TV_TOL {
                    fail("ΔTV_v or ΔTV_w > 0");
                }
            }
        }
    }
    EstimateReport { violations, ratio_contact, ratio_rarefaction, rows }
}

/// Number of initial jumps left and right of `x = 0`.
pub fn jump_counts(datum: &PiecewiseConstant) -> (usize, usize) {
    let k1 = datum.breaks.iter().filter(|&&b| b < 0.0).count();
    let k2 = datum.breaks.iter().filter(|&&b| b > 0.0).count();
    (k1, k2)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIN: PressureLaw = PressureLaw { gamma: 1.0 };

    fn domain() -> InvariantDomain {
        // h(v) = v + 1/v for q = 1
        InvariantDomain::new(0.2, 0.5, 1.5, 3.0).unwrap()
    }

    fn q() -> FixedConstraint {
        FixedConstraint::new(1.0).unwrap()
    }

    fn st(v: f64, w: f64) -> State {
        State::new(w - v, v)
    }

    #[test]
    fn fan_count_floor() {
        assert_eq!(fan_count(0.3).unwrap(), 3);
        assert_eq!(fan_count(0.05).unwrap(), 20);
        assert_eq!(fan_count(0.1).unwrap(), 10);
    }

    #[test]
    fn fan_identities() {
        let (l, r) = (st(0.2, 2.0), st(0.5, 2.0));
        let fan = fan_split(&LIN, l, r, 7).unwrap();
        let tv_rho: f64 = fan.iter().map(|w| (w.left.rho - w.right.rho).abs()).sum();
        let tv_v: f64 = fan.iter().map(|w| (w.right.v - w.left.v).abs()).sum();
        assert!((tv_rho - (l.rho - r.rho)).abs() < 1e-14);
        assert!((tv_v - (r.v - l.v)).abs() < 1e-14);
        assert!(fan.iter().all(|w| (LIN.w(w.right) - 2.0).abs() < 1e-12));
        assert!(fan.windows(2).all(|p| p[0].speed_lo < p[1].speed_lo));
        assert!(fan_split(&LIN, r, l, 3).is_err());
    }

    #[test]
    fn constant_below_cap_has_no_fronts() {
        let s = st(0.3, 2.0);
        let d = PiecewiseConstant::constant(s);
        assert!(s.rho * s.v <= 1.0);
        let fs = initialize(&LIN, &d, q(), 0.1, &domain()).unwrap();
        assert!(fs.fronts.is_empty());
    }

    #[test]
    fn jump_at_zero_violating_cap() {
        let (l, r) = (st(0.45, 2.9), st(0.45, 1.6));
        assert!(l.rho * l.v > 1.0);
        let d = PiecewiseConstant::riemann(0.0, l, r);
        let fs = initialize(&LIN, &d, q(), 0.1, &domain()).unwrap();
        let nc: Vec<_> = fs.fronts.iter().filter(|f| f.kind == FrontKind::Nonclassical).collect();
        assert_eq!(nc.len(), 1);
        assert_eq!(nc[0].speed, 0.0);
        assert!(fs.fronts.first().unwrap().speed < 0.0 && fs.fronts.last().unwrap().speed > 0.0);
    }

    #[test]
    fn shock_reaches_zero_after_unit_time() {
        let f = Front {
            x: 1.0,
            birth_t: 0.0,
            speed: -1.0,
            left: st(0.3, 2.0),
            right: st(0.3, 2.0),
            kind: FrontKind::Shock,
            resplit: false,
        };
        let fs = FrontState { t: 0.0, far_left: f.left, fronts: vec![f], ledger: vec![], tv_ledger: Tv::default(), n_fans: 0 };
        let (t, site) = next_event(&fs).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        assert_eq!(site, Site::Zero(0));
    }

    #[test]
    fn parallel_contacts_never_meet() {
        let a = st(0.3, 2.0);
        let mk = |x: f64, l: State, r: State| Front {
            x,
            birth_t: 0.0,
            speed: 0.3,
            left: l,
            right: r,
            kind: FrontKind::Contact,
            resplit: false,
        };
        let (b, c) = (st(0.3, 2.2), st(0.3, 2.4));
        let fs = FrontState {
            t: 0.0,
            far_left: a,
            fronts: vec![mk(0.5, a, b), mk(0.7, b, c)],
            ledger: vec![],
            tv_ledger: Tv::default(),
            n_fans: 0,
        };
        assert!(next_event(&fs).is_none());
    }

    #[test]
    fn two_shocks_merge() {
        // three states on w = 2.5 with increasing density
        let (a, b, c) = (st(0.5, 2.5), st(0.35, 2.5), st(0.2, 2.5));
        let d = PiecewiseConstant::new(vec![1.0, 1.1], vec![a, b, c]).unwrap();
        let mut fs = initialize(&LIN, &d, q(), 0.1, &domain()).unwrap();
        assert_eq!(fs.fronts.len(), 2);
        let (t, site) = next_event(&fs).unwrap();
        assert!(matches!(site, Site::Collision(0)));
        resolve_event(&LIN, &mut fs, t, site, q(), 10, &domain()).unwrap();
        let e = fs.ledger[0];
        assert_eq!(e.row, RowKind::TwoNegative);
        assert_eq!(e.delta_n, -1);
        assert!(e.delta_tv_v.abs() < 1e-12 && e.delta_tv_w.abs() < 1e-12);
    }

    #[test]
    fn bounds_formulas() {
        assert_eq!(wave_bound(3, 0, 0), 5);
        assert_eq!(wave_bound(2, 1, 1), 2 + 2 + 3 * 2 + 2 + 2 * 3);
        // k1 = k2 = 0: N²
        assert_eq!(interaction_bound(4, 0, 0), 16);
    }

    #[test]
    fn triangle_constants() {
        let c = DomainConstants::new(&LIN, &domain()).unwrap();
        // min state (ρ, v) = (1.0, 0.5), max state (2.8, 0.2)
        assert!((c.k2 - (0.5 - 1.0)).abs() < 1e-15);
        assert!((c.k1 - (0.2 - 2.8)).abs() < 1e-15);
        assert!((c.c1 - 0.5 / 0.5).abs() < 1e-15);
        assert!((c.c2 - 2.6 / 0.2).abs() < 1e-12);
        assert!((c.c3 - c.c1 * (1.0 + 1.0 / c.c2)).abs() < 1e-15);
    }

    #[test]
    fn staircase_tv() {
        let ramp = |x: f64| State::new(2.0 - x, 0.3 + 0.2 * x);
        let pc = pc_approx(ramp, 0.0, 1.0, 20.0, 1000).unwrap();
        let tv: f64 = pc.states.windows(2).map(|w| (w[1].rho - w[0].rho).abs()).sum();
        assert!(tv <= 1.0 + 1e-12);
        for j in 0..=100 {
            let x = j as f64 / 100.0;
            assert!((pc.eval(x).rho - ramp(x).rho).abs() <= 0.05 + 1e-3);
        }
    }
}
