//! Flux constraints and the constrained Riemann solvers.
//!
//! A moving bottleneck at speed `V̄` caps the flux seen in its frame:
//! `ρ(v − V̄) ≤ F_α`. A fixed bottleneck at `x = 0` is the special case
//! `V̄ = 0`, `F_α = q`.

use serde::Serialize;

use crate::arz::{InvariantDomain, PressureLaw, State};
use crate::error::{Error, Result};
use crate::riemann::{self, Wave, WaveFan, WaveKind};

/// Bus data and the derived flux cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MovingConstraint {
    pub v_bar: f64,
    pub alpha: f64,
    pub r_max: f64,
    pub w_alpha: f64,
    pub rho_alpha: f64,
    pub f_alpha: f64,
}

/// Fixed cap `ρv ≤ q` at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedConstraint {
    pub q: f64,
}

/// Cap line `ρv = F + V̄ρ` used by every solver below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cap {
    pub v_bar: f64,
    pub f: f64,
}

impl Cap {
    pub fn new(v_bar: f64, f: f64) -> Self {
        Self { v_bar, f }
    }

    /// Flux excess `ρv − (F + V̄ρ)`; positive means the cap is violated.
    pub fn excess(&self, s: State) -> f64 {
        s.rho * s.v - (self.f + self.v_bar * s.rho)
    }
}

pub fn build_moving(law: &PressureLaw, v_bar: f64, alpha: f64, r_max: f64) -> Result<MovingConstraint> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Infeasible(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !(r_max > 0.0) {
        return Err(Error::Infeasible(format!("maximal density {r_max} must be positive")));
    }
    if !(v_bar >= 0.0) {
        return Err(Error::Infeasible(format!("bus speed {v_bar} must be nonnegative")));
    }
    let w_alpha = law.p(alpha * r_max);
    if w_alpha <= v_bar {
        return Err(Error::Infeasible(format!("w_alpha = {w_alpha} does not exceed the bus speed {v_bar}")));
    }
    let rho_alpha = law.phi_inv(w_alpha - v_bar);
    let f_alpha = rho_alpha * rho_alpha * law.dp(rho_alpha);
    Ok(MovingConstraint { v_bar, alpha, r_max, w_alpha, rho_alpha, f_alpha })
}

impl MovingConstraint {
    pub fn cap(&self) -> Cap {
        Cap::new(self.v_bar, self.f_alpha)
    }

    /// Same bottleneck driven at another speed (the cap depends on `V̄`).
    pub fn at_speed(&self, law: &PressureLaw, v_bar: f64) -> Result<Self> {
        build_moving(law, v_bar, self.alpha, self.r_max)
    }
}

impl FixedConstraint {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::Infeasible(format!("flux cap q = {q} must be positive")));
        }
        Ok(Self { q })
    }

    pub fn cap(&self) -> Cap {
        Cap::new(0.0, self.q)
    }
}

/// Largest and smallest roots of `ρ(L1(ρ; left) − V̄) = F` on the curve through
/// `left`, returned as `(hat, check1)`.
pub fn hat_check1(law: &PressureLaw, left: State, cap: Cap) -> Option<(State, State)> {
    let w = law.w(left);
    let a = w - cap.v_bar;
    if a <= 0.0 {
        return None;
    }
    let (lo, hi) = if law.gamma == 1.0 {
        let disc = a * a - 4.0 * cap.f;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let hi = (a + sq) / 2.0;
        // product of the roots is F; avoids cancellation in the small root
        let lo = if hi > 0.0 { cap.f / hi } else { (a - sq) / 2.0 };
        (lo, hi)
    } else {
        let g = |rho: f64| rho * (a - law.p(rho)) - cap.f;
        let star = law.phi_inv(a);
        if g(star) < 0.0 {
            return None;
        }
        let lo = bisect(&g, 0.0, star);
        let hi = bisect(&g, star, law.p_inv(w));
        (lo, hi)
    };
    Some((law.on_curve(hi, w), law.on_curve(lo, w)))
}

/// Root of a function with `g(a)`, `g(b)` of opposite sign (closed form
/// brackets above guarantee it).
fn bisect(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    if ga == 0.0 {
        return a;
    }
    let sa = ga > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm > 0.0) == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Maximal-density cap point on the second-family curve through `right`.
pub fn check2(right: State, cap: Cap) -> Result<State> {
    let dv = right.v - cap.v_bar;
    if dv <= 0.0 {
        return Err(Error::Degenerate(format!(
            "velocity {} does not exceed the bus speed {}",
            right.v, cap.v_bar
        )));
    }
    Ok(State::new(cap.f / dv, right.v))
}

/// Strict test `f1(RS(l, r)(V̄)) > F + V̄ρ̄`.
pub fn violates(law: &PressureLaw, left: State, right: State, cap: Cap) -> Result<bool> {
    let fan = riemann::solve(law, left, right)?;
    Ok(cap.excess(fan.sample(law, cap.v_bar)) > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintCase {
    /// Cap violated: a nonclassical shock travels with the bus.
    Violated,
    /// Cap satisfied and the bus is slower than the traffic at its position.
    FreeBus,
    /// Cap satisfied and the bus is held back by the traffic.
    BlockedBus,
}

/// Nonclassical solution: `RS(l, hat)` left of the bus, `RS(check, r)` right of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonclassicalParts {
    pub left: WaveFan,
    pub shock: Wave,
    pub right: WaveFan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstrainedFan {
    pub case: ConstraintCase,
    pub v_bar: f64,
    pub bus_speed: f64,
    pub classical: WaveFan,
    pub parts: Option<NonclassicalParts>,
}

impl ConstrainedFan {
    pub fn sample(&self, law: &PressureLaw, xi: f64) -> State {
        match &self.parts {
            None => self.classical.sample(law, xi),
            Some(p) if xi < self.v_bar => p.left.sample(law, xi),
            Some(p) => p.right.sample(law, xi),
        }
    }

    pub fn waves(&self) -> Vec<Wave> {
        match &self.parts {
            None => self.classical.waves.clone(),
            Some(p) => {
                let mut w = p.left.waves.clone();
                w.push(p.shock);
                w.extend(p.right.waves.iter().copied());
                w
            }
        }
    }

    pub fn hat(&self) -> Option<State> {
        self.parts.as_ref().map(|p| p.shock.left)
    }

    pub fn check(&self) -> Option<State> {
        self.parts.as_ref().map(|p| p.shock.right)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variant {
    One,
    Two,
}

fn solve_constrained(law: &PressureLaw, left: State, right: State, cap: Cap, variant: Variant) -> Result<ConstrainedFan> {
    let classical = riemann::solve(law, left, right)?;
    let trace = classical.sample(law, cap.v_bar);
    if cap.excess(trace) > 0.0 {
        let (hat, check1) = hat_check1(law, left, cap)
            .ok_or_else(|| Error::Degenerate("cap violated but no cap point on the left curve".into()))?;
        let check = match variant {
            Variant::One => check1,
            Variant::Two => check2(right, cap)?,
        };
        let parts = NonclassicalParts {
            left: riemann::solve(law, left, hat)?,
            shock: Wave {
                kind: WaveKind::Nonclassical,
                left: hat,
                right: check,
                speed_lo: cap.v_bar,
                speed_hi: cap.v_bar,
            },
            right: riemann::solve(law, check, right)?,
        };
        return Ok(ConstrainedFan {
            case: ConstraintCase::Violated,
            v_bar: cap.v_bar,
            bus_speed: cap.v_bar,
            classical,
            parts: Some(parts),
        });
    }
    let (case, bus_speed) = if cap.v_bar < trace.v {
        (ConstraintCase::FreeBus, cap.v_bar)
    } else {
        (ConstraintCase::BlockedBus, trace.v)
    };
    Ok(ConstrainedFan { case, v_bar: cap.v_bar, bus_speed, classical, parts: None })
}

/// Solver conserving both density and momentum across the nonclassical shock.
pub fn solve_rs1(law: &PressureLaw, left: State, right: State, cap: Cap) -> Result<ConstrainedFan> {
    solve_constrained(law, left, right, cap, Variant::One)
}

/// Solver conserving only the density across the nonclassical shock.
pub fn solve_rs2(law: &PressureLaw, left: State, right: State, cap: Cap) -> Result<ConstrainedFan> {
    solve_constrained(law, left, right, cap, Variant::Two)
}

/// Fixed-constraint solver at `x = 0`.
pub fn solve_rsq2(law: &PressureLaw, left: State, right: State, fixed: FixedConstraint) -> Result<ConstrainedFan> {
    solve_rs2(law, left, right, fixed.cap())
}

/// Riemann invariant of the cap point with velocity `v`:
/// `h(v) = v + p(F/(v − V̄))`, `+∞` at `v = V̄`.
pub fn h_alpha(law: &PressureLaw, v: f64, cap: Cap) -> Result<f64> {
    if v < cap.v_bar {
        return Err(Error::Domain { what: "h_alpha", value: v });
    }
    if v == cap.v_bar {
        return Ok(f64::INFINITY);
    }
    Ok(v + law.p(cap.f / (v - cap.v_bar)))
}

/// Unique minimiser of `h`: `V̄ + (γF^γ)^{1/(γ+1)}`.
pub fn h_argmin(law: &PressureLaw, cap: Cap) -> f64 {
    let g = law.gamma;
    cap.v_bar + (g * cap.f.powf(g)).powf(1.0 / (g + 1.0))
}

/// Minimum of `h` over `[a, b]` with `V̄ ≤ a ≤ b`.
pub fn h_min_on(law: &PressureLaw, cap: Cap, a: f64, b: f64) -> f64 {
    let v = h_argmin(law, cap).clamp(a, b);
    h_alpha(law, v, cap).unwrap_or(f64::INFINITY)
}

fn h(law: &PressureLaw, v: f64, cap: Cap) -> f64 {
    h_alpha(law, v, cap).unwrap_or(f64::INFINITY)
}

fn classical_everywhere(law: &PressureLaw, d: &InvariantDomain, cap: Cap) -> bool {
    h_min_on(law, cap, d.v1.max(cap.v_bar), d.v2) >= d.w2
}

pub fn rs1_domain_invariant(law: &PressureLaw, d: &InvariantDomain, cap: Cap) -> bool {
    if d.v2 <= cap.v_bar || classical_everywhere(law, d, cap) {
        return true;
    }
    if d.v1 >= cap.v_bar {
        h(law, d.v1, cap) >= d.w2 && h(law, d.v2, cap) >= d.w2
    } else {
        h(law, d.v2, cap) >= d.w2
    }
}

pub fn rs2_domain_invariant(law: &PressureLaw, d: &InvariantDomain, cap: Cap) -> bool {
    if d.v2 <= cap.v_bar || classical_everywhere(law, d, cap) {
        return true;
    }
    if d.v1 >= cap.v_bar {
        h(law, d.v1, cap) >= d.w2 && h(law, d.v2, cap) <= d.w2 && h_min_on(law, cap, d.v1, d.v2) >= d.w1
    } else {
        h(law, d.v2, cap) <= d.w2 && h_min_on(law, cap, cap.v_bar, d.v2) >= d.w1
    }
}
