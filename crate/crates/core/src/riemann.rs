//! Exact self-similar solution of the unconstrained Riemann problem.
//!
//! The fan is a first-family wave from the left state to the middle state
//! `(p⁻¹(w_l − v_r), v_r)` followed by a contact moving at `v_r`.

use serde::Serialize;

use crate::arz::{PressureLaw, State};
use crate::error::{Error, Result};

/// Relative tolerance under which two states are treated as lying on the same
/// first-family curve.
pub const SAME_CURVE_TOL: f64 = 1e-9;

const SAME_STATE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WaveKind {
    Shock,
    Rarefaction,
    Contact,
    Nonclassical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Wave {
    pub kind: WaveKind,
    pub left: State,
    pub right: State,
    pub speed_lo: f64,
    pub speed_hi: f64,
}

impl Wave {
    pub fn is_first_family(&self) -> bool {
        matches!(self.kind, WaveKind::Shock | WaveKind::Rarefaction)
    }
}

/// Ordered list of waves joining `left` to `right`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveFan {
    pub left: State,
    pub right: State,
    pub waves: Vec<Wave>,
}

impl WaveFan {
    pub fn constant(s: State) -> Self {
        Self { left: s, right: s, waves: Vec::new() }
    }

    /// Self-similar value at `ξ = x/t`. On a discontinuity moving exactly at
    /// `ξ` the right state is returned.
    pub fn sample(&self, law: &PressureLaw, xi: f64) -> State {
        for wave in &self.waves {
            if xi < wave.speed_lo {
                return wave.left;
            }
            if wave.kind == WaveKind::Rarefaction && xi < wave.speed_hi {
                return rarefaction_state(law, law.w(wave.left), xi);
            }
        }
        self.right
    }
}

fn same_state(a: State, b: State) -> bool {
    let scale = 1.0 + a.rho.abs().max(a.v.abs());
    (a.rho - b.rho).abs() <= SAME_STATE_TOL * scale && (a.v - b.v).abs() <= SAME_STATE_TOL * scale
}

pub fn same_curve(law: &PressureLaw, a: State, b: State) -> bool {
    let (wa, wb) = (law.w(a), law.w(b));
    (wa - wb).abs() <= SAME_CURVE_TOL * wa.abs().max(1.0)
}

/// State inside a first-family rarefaction with invariant `w` at speed `ξ`.
pub fn rarefaction_state(law: &PressureLaw, w: f64, xi: f64) -> State {
    let rho = law.phi_inv(w - xi);
    State::new(rho, w - law.p(rho))
}

pub fn middle_state(law: &PressureLaw, left: State, right: State) -> Result<State> {
    left.require_nonvacuum()?;
    right.require_nonvacuum()?;
    if same_curve(law, left, right) {
        return Ok(right);
    }
    let x = law.w(left) - right.v;
    if x <= 0.0 {
        return Err(Error::Vacuum(format!(
            "middle state between ({}, {}) and ({}, {}) has zero density",
            left.rho, left.v, right.rho, right.v
        )));
    }
    let m = State::new(law.p_inv(x), right.v);
    if same_state(m, left) {
        return Ok(State::new(left.rho, right.v));
    }
    Ok(m)
}

/// Rankine-Hugoniot speed `(ρ_r v_r − ρ_l v_l)/(ρ_r − ρ_l)`.
pub fn shock_speed(left: State, right: State) -> Result<f64> {
    let dr = right.rho - left.rho;
    if dr == 0.0 {
        return Err(Error::Degenerate("shock between equal densities".into()));
    }
    Ok((right.rho * right.v - left.rho * left.v) / dr)
}

/// First-family wave joining two states of one Lax curve, or `None` if equal.
pub fn first_family_wave(law: &PressureLaw, left: State, right: State) -> Option<Wave> {
    if same_state(left, right) || left.rho == right.rho {
        return None;
    }
    if left.rho < right.rho {
        let s = (right.rho * right.v - left.rho * left.v) / (right.rho - left.rho);
        Some(Wave { kind: WaveKind::Shock, left, right, speed_lo: s, speed_hi: s })
    } else {
        Some(Wave {
            kind: WaveKind::Rarefaction,
            left,
            right,
            speed_lo: law.lambda1(left),
            speed_hi: law.lambda1(right),
        })
    }
}

pub fn solve(law: &PressureLaw, left: State, right: State) -> Result<WaveFan> {
    let m = middle_state(law, left, right)?;
    let mut waves = Vec::with_capacity(2);
    if let Some(w) = first_family_wave(law, left, m) {
        waves.push(w);
    }
    if !same_state(m, right) && m != right {
        waves.push(Wave { kind: WaveKind::Contact, left: m, right, speed_lo: right.v, speed_hi: right.v });
    }
    Ok(WaveFan { left, right, waves })
}

pub fn sample(law: &PressureLaw, fan: &WaveFan, xi: f64) -> State {
    fan.sample(law, xi)
}

/// Value at `ξ = 0` of the classical solution, by direct case analysis on the
/// first-family wave and the sign of the contact speed.
pub fn interface_state(law: &PressureLaw, left: State, right: State) -> Result<State> {
    let m = middle_state(law, left, right)?;
    if !(same_state(left, m) || left.rho == m.rho) {
        if left.rho < m.rho {
            let s = (m.rho * m.v - left.rho * left.v) / (m.rho - left.rho);
            if 0.0 < s {
                return Ok(left);
            }
        } else {
            if 0.0 < law.lambda1(left) {
                return Ok(left);
            }
            if 0.0 < law.lambda1(m) {
                // sonic point: λ1 = 0 on the curve through the left state
                return Ok(rarefaction_state(law, law.w(left), 0.0));
            }
        }
    } else if 0.0 < law.lambda1(left) {
        // negligible first-family jump; every wave moves right, so stay upwind
        return Ok(left);
    }
    let has_contact = !same_state(m, right) && m != right;
    if has_contact && 0.0 < right.v {
        Ok(m)
    } else {
        Ok(right)
    }
}

/// Godunov flux `f(RS(l, r)(0))`.
pub fn godunov_flux(law: &PressureLaw, left: State, right: State) -> Result<crate::arz::Conserved> {
    Ok(law.flux(interface_state(law, left, right)?))
}
