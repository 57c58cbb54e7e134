//! Bus trajectory: free-speed profile with stops, coupling to the traffic
//! ahead and exact interaction with the waves of the two neighbouring
//! interfaces of the bus cell.

use serde::{Deserialize, Serialize};

use crate::arz::{PressureLaw, State};
use crate::error::{Error, Result};
use crate::riemann::{self, WaveFan};

/// Fraction of `v_b` below which the ramp near a stop is clamped, except at
/// the stop itself while it is still to be served.
pub const RAMP_FLOOR: f64 = 0.05;

/// Sub-steps per time step when a stop is within reach.
const STOP_SUBSTEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusSpec {
    pub v_b: f64,
    #[serde(default)]
    pub stops: Vec<f64>,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub tau: f64,
    pub y0: f64,
}

impl BusSpec {
    pub fn new(v_b: f64, y0: f64) -> Self {
        Self { v_b, stops: Vec::new(), delta: 0.0, tau: 0.0, y0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: String| Err(Error::Config { path: path.into(), msg });
        if !(self.v_b > 0.0 && self.v_b.is_finite()) {
            return bad("bus.v_b", format!("maximal bus speed must be positive, got {}", self.v_b));
        }
        if !self.stops.is_empty() {
            if !(self.delta > 0.0) {
                return bad("bus.delta", "braking distance must be positive when stops are given".into());
            }
            if !(self.tau >= 0.0) {
                return bad("bus.tau", "dwell time must be nonnegative".into());
            }
            if self.stops.windows(2).any(|w| !(w[0] < w[1])) {
                return bad("bus.stops", "stops must be strictly increasing".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BusState {
    pub y: f64,
    pub speed: f64,
    pub dwell_until: Option<f64>,
    /// Index of the next stop still to be served.
    pub next_stop: usize,
}

impl BusState {
    pub fn start(spec: &BusSpec) -> Self {
        let next_stop = spec.stops.partition_point(|&s| s < spec.y0);
        Self { y: spec.y0, speed: 0.0, dwell_until: None, next_stop }
    }
}

/// Ramp `v_b · min(1, d/δ)` around the nearest stop, clamped below by
/// `RAMP_FLOOR · v_b` and exactly zero at a stop still to be served.
pub fn profile(spec: &BusSpec, y: f64, next_stop: usize) -> f64 {
    if spec.stops.is_empty() {
        return spec.v_b;
    }
    let (i, d) = spec
        .stops
        .iter()
        .enumerate()
        .map(|(i, &s)| (i, (y - s).abs()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if d >= spec.delta * (1.0 - 1e-12) {
        return spec.v_b;
    }
    if d == 0.0 && i >= next_stop {
        return 0.0;
    }
    spec.v_b * (d / spec.delta).max(RAMP_FLOOR)
}

/// Speed without traffic: zero while dwelling, the ramp otherwise.
pub fn free_speed(spec: &BusSpec, t: f64, state: &BusState) -> f64 {
    match state.dwell_until {
        Some(end) if t < end => 0.0,
        _ => profile(spec, state.y, state.next_stop),
    }
}

pub fn coupled_speed(free: f64, v_front: f64) -> f64 {
    free.min(v_front)
}

/// First meeting with a wave, times relative to the start of the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interaction {
    pub t_star: f64,
    pub x_star: f64,
    pub new_speed: f64,
}

/// Bus at `y` with speed `v_bar` against a shock leaving `x_interface` at
/// speed `lambda`; `None` if they do not meet before `k`.
pub fn shock_interaction_right(
    y: f64,
    v_bar: f64,
    lambda: f64,
    x_interface: f64,
    k: f64,
    speed_after: f64,
) -> Option<Interaction> {
    if !(v_bar > lambda) {
        return None;
    }
    let t_star = (x_interface - y) / (v_bar - lambda);
    (t_star < k).then(|| Interaction { t_star, x_star: y + v_bar * t_star, new_speed: speed_after })
}

/// Bus following the traffic speed inside a first-family rarefaction
/// centred at `(t_center, x_center)`:
/// `y(t) = x_c + w̄(t − t_c) + C*(t − t_c)^{1/(γ+1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RarefactionLeg {
    pub gamma: f64,
    pub w_bar: f64,
    pub x_center: f64,
    pub t_center: f64,
    pub t_star: f64,
    pub x_star: f64,
    pub c_star: f64,
    /// Absolute time at which the speed reaches `v_exit`.
    pub t_exit: f64,
    pub v_exit: f64,
}

impl RarefactionLeg {
    pub fn position(&self, t: f64) -> f64 {
        let s = t - self.t_center;
        self.x_center + self.w_bar * s + self.c_star * s.powf(1.0 / (self.gamma + 1.0))
    }

    pub fn speed(&self, t: f64) -> f64 {
        let s = t - self.t_center;
        self.w_bar + self.c_star / (self.gamma + 1.0) * s.powf(-self.gamma / (self.gamma + 1.0))
    }

    /// Position with the exit leg at constant speed appended.
    pub fn position_with_exit(&self, t: f64) -> f64 {
        if t <= self.t_exit {
            self.position(t)
        } else {
            self.position(self.t_exit) + self.v_exit * (t - self.t_exit)
        }
    }
}

pub fn rarefaction_trajectory(
    law: &PressureLaw,
    w_bar: f64,
    x_center: f64,
    t_center: f64,
    t_star: f64,
    x_star: f64,
    v_exit: f64,
) -> Result<RarefactionLeg> {
    let s = t_star - t_center;
    if !(s > 0.0) {
        return Err(Error::Degenerate("bus meets the rarefaction at its centre".into()));
    }
    let g = law.gamma;
    let c_star = (x_star - x_center - w_bar * s) / s.powf(1.0 / (g + 1.0));
    if !(c_star < 0.0) || !(v_exit < w_bar) {
        return Err(Error::Degenerate("bus does not follow the rarefaction from its left edge".into()));
    }
    let rel = ((g + 1.0) * (v_exit - w_bar) / c_star).powf(-(g + 1.0) / g);
    Ok(RarefactionLeg {
        gamma: g,
        w_bar,
        x_center,
        t_center,
        t_star,
        x_star,
        c_star,
        t_exit: t_center + rel.max(s),
        v_exit,
    })
}

/// The three cells around the bus and the two interfaces of its cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCells {
    pub left: State,
    pub mid: State,
    pub right: State,
    pub x_l: f64,
    pub x_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Leg {
    Constant,
    Shock(Interaction),
    Rarefaction(RarefactionLeg),
    SubStepped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusAdvance {
    pub state: BusState,
    /// Speed at the start of the step.
    pub v_bar: f64,
    pub side: Option<Side>,
    pub leg: Leg,
}

/// Speed of the first-family wave of `RS(l, r)` on the side facing `toward`.
fn first_family_edge(law: &PressureLaw, l: State, m: State, right_edge: bool) -> Option<(f64, bool)> {
    if l.rho < m.rho {
        riemann::shock_speed(l, m).ok().map(|s| (s, true))
    } else if l.rho > m.rho {
        Some((if right_edge { law.lambda1(m) } else { law.lambda1(l) }, false))
    } else {
        None
    }
}

/// Exact traffic velocity just ahead of `x` at time `s` after the step start,
/// from the Riemann fans at the two interfaces of the bus cell.
pub fn local_velocity(law: &PressureLaw, fans: &(WaveFan, WaveFan), cells: &LocalCells, s: f64, x: f64) -> f64 {
    if s <= 0.0 {
        return if x < cells.x_l {
            cells.left.v
        } else if x < cells.x_r {
            cells.mid.v
        } else {
            cells.right.v
        };
    }
    let mid = 0.5 * (cells.x_l + cells.x_r);
    if x < mid {
        fans.0.sample(law, (x - cells.x_l) / s).v
    } else {
        fans.1.sample(law, (x - cells.x_r) / s).v
    }
}

fn stop_within_reach(spec: &BusSpec, state: &BusState, k: f64) -> bool {
    state.dwell_until.is_some()
        || spec.stops.iter().any(|&s| (s - state.y).abs() <= spec.delta + spec.v_b * k)
}

/// Advances the bus over one step of length `k` starting at time `t`.
pub fn advance_bus(
    law: &PressureLaw,
    spec: &BusSpec,
    state: &BusState,
    t: f64,
    k: f64,
    cells: &LocalCells,
) -> Result<BusAdvance> {
    let v_bar = coupled_speed(free_speed(spec, t, state), cells.mid.v);
    if stop_within_reach(spec, state, k) {
        return sub_stepped(law, spec, state, t, k, cells, v_bar);
    }
    let constant = |y: f64, speed: f64, side, leg| BusAdvance {
        state: BusState { y, speed, ..*state },
        v_bar,
        side,
        leg,
    };
    let y = state.y;

    let int_r = riemann::middle_state(law, cells.mid, cells.right)?;
    let right = first_family_edge(law, cells.mid, int_r, false)
        .filter(|&(lambda, _)| v_bar > lambda)
        .map(|(lambda, shock)| ((cells.x_r - y) / (v_bar - lambda), shock));
    let int_l = riemann::middle_state(law, cells.left, cells.mid)?;
    let t_left = first_family_edge(law, cells.left, int_l, true)
        .filter(|&(lambda, _)| lambda > v_bar)
        .map(|(lambda, _)| (y - cells.x_l) / (lambda - v_bar))
        .unwrap_or(f64::INFINITY);

    let Some((t_right, shock)) = right.filter(|&(tr, _)| tr < k && tr <= t_left) else {
        let side = (t_left < k).then_some(Side::Left);
        return Ok(constant(y + v_bar * k, v_bar, side, Leg::Constant));
    };
    let after = coupled_speed(spec.v_b, int_r.v);
    if shock {
        let it = Interaction { t_star: t_right, x_star: y + v_bar * t_right, new_speed: after };
        return Ok(constant(it.x_star + after * (k - t_right), after, Some(Side::Right), Leg::Shock(it)));
    }
    if v_bar >= spec.v_b {
        // free bus: the traffic ahead only gets faster
        return Ok(constant(y + v_bar * k, v_bar, Some(Side::Right), Leg::Constant));
    }
    let leg = rarefaction_trajectory(law, law.w(cells.mid), cells.x_r, t, t + t_right, y + v_bar * t_right, after)?;
    let t1 = t + k;
    let (y1, speed) = if leg.t_exit >= t1 { (leg.position(t1), leg.speed(t1)) } else { (leg.position_with_exit(t1), after) };
    Ok(constant(y1, speed, Some(Side::Right), Leg::Rarefaction(leg)))
}

fn sub_stepped(
    law: &PressureLaw,
    spec: &BusSpec,
    state: &BusState,
    t: f64,
    k: f64,
    cells: &LocalCells,
    v_bar: f64,
) -> Result<BusAdvance> {
    let fans = (
        riemann::solve(law, cells.left, cells.mid)?,
        riemann::solve(law, cells.mid, cells.right)?,
    );
    let mut st = *state;
    let dt = k / STOP_SUBSTEPS as f64;
    let mut s = 0.0;
    let speed_at = |st: &BusState, s: f64, y: f64| {
        let probe = BusState { y, ..*st };
        coupled_speed(free_speed(spec, t + s, &probe), local_velocity(law, &fans, cells, s, y))
    };
    while s < k * (1.0 - 1e-12) {
        let step = dt.min(k - s);
        if let Some(end) = st.dwell_until {
            if t + s < end {
                let wait = (end - t - s).min(step);
                s += wait;
                st.speed = 0.0;
                continue;
            }
            st.dwell_until = None;
        }
        // explicit midpoint
        let v0 = speed_at(&st, s, st.y);
        let v_half = speed_at(&st, s + 0.5 * step, st.y + 0.5 * step * v0);
        let y1 = st.y + step * v_half;
        if let Some(&stop) = spec.stops.get(st.next_stop) {
            if st.y < stop && y1 >= stop && v_half > 0.0 {
                let frac = (stop - st.y) / (y1 - st.y);
                st.y = stop;
                st.next_stop += 1;
                st.dwell_until = Some(t + s + frac * step + spec.tau);
                st.speed = 0.0;
                s += frac * step;
                continue;
            }
        }
        st.y = y1;
        st.speed = v_half;
        s += step;
    }
    if st.dwell_until.is_none() {
        st.speed = speed_at(&st, k, st.y);
    }
    Ok(BusAdvance { state: st, v_bar, side: None, leg: Leg::SubStepped })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIN: PressureLaw = PressureLaw { gamma: 1.0 };

    #[test]
    fn profile_values() {
        let mut spec = BusSpec::new(4.0, 0.0);
        assert_eq!(profile(&spec, 3.0, 0), 4.0);
        spec.stops = vec![1.0];
        spec.delta = 0.2;
        assert_eq!(profile(&spec, 1.0, 0), 0.0);
        assert_eq!(profile(&spec, 1.2, 0), 4.0);
        assert_eq!(profile(&spec, 0.75, 0), 4.0);
        assert!((profile(&spec, 0.9, 0) - 2.0).abs() < 1e-12);
        assert_eq!(profile(&spec, 1.0, 1), 4.0 * RAMP_FLOOR);
    }

    #[test]
    fn coupling_is_min() {
        assert_eq!(coupled_speed(4.0, 5.0), 4.0);
        assert_eq!(coupled_speed(4.0, 1.0), 1.0);
        assert_eq!(coupled_speed(4.0, 4.0), 4.0);
    }

    #[test]
    fn shock_meeting_point_lies_on_both_lines() {
        assert!(shock_interaction_right(0.0, 1.0, 2.0, 0.1, 1.0, 0.5).is_none());
        let it = shock_interaction_right(0.0, 2.0, -1.0, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(it.t_star, 0.0);
        let it = shock_interaction_right(0.013, 1.7, -0.6, 0.02, 1.0, 0.5).unwrap();
        assert!((it.x_star - (0.02 - 0.6 * it.t_star)).abs() < 1e-12);
    }

    #[test]
    fn example_rarefaction_constants() {
        let t_star = 0.1 / 9.0;
        let leg = rarefaction_trajectory(&LIN, 10.0, 0.0, 0.0, t_star, -0.1 + t_star, 4.0).unwrap();
        assert!((leg.c_star + 0.2 / t_star.sqrt()).abs() < 1e-12);
        assert!((leg.c_star + 1.897).abs() < 1e-3);
        assert!((leg.speed(t_star) - 1.0).abs() < 1e-12);
        assert!((leg.speed(leg.t_exit) - 4.0).abs() < 1e-12);
        let (t, dt) = (0.018, 1e-6);
        let fd = (leg.position(t + dt) - leg.position(t - dt)) / (2.0 * dt);
        assert!((fd - leg.speed(t)).abs() < 1e-6);
        let ode = 2.0 * leg.speed(t) - (10.0 + leg.position(t) / t);
        assert!(ode.abs() < 1e-9);
    }

    #[test]
    fn stop_and_dwell() {
        let spec = BusSpec { v_b: 1.0, stops: vec![0.05], delta: 0.02, tau: 0.01, y0: 0.0 };
        let fast = State::new(1.0, 5.0);
        let cells = LocalCells { left: fast, mid: fast, right: fast, x_l: -0.5, x_r: 0.5 };
        let mut st = BusState::start(&spec);
        let mut t = 0.0;
        let mut arrived = None;
        while t < 0.4 {
            let adv = advance_bus(&LIN, &spec, &st, t, 0.002, &cells).unwrap();
            assert!(adv.state.y >= st.y && adv.state.speed <= spec.v_b + 1e-12);
            st = adv.state;
            t += 0.002;
            if arrived.is_none() && st.next_stop == 1 {
                arrived = Some(t);
                assert_eq!(st.y, 0.05);
            }
        }
        assert!(arrived.is_some());
        assert!(st.y > 0.1);
    }
}
