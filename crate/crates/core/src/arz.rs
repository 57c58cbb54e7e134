//! Pressure law, primitive and conserved states, eigenstructure, Lax curves
//! and invariant domains of the ARZ system
//!
//! ```text
//! ρ_t + (ρv)_x = 0
//! z_t + (zv)_x = 0,      z = ρ(v + p(ρ))
//! ```
//!
//! with the power pressure `p(ρ) = ρ^γ`, `γ ≥ 1`.

use std::ops::{Add, AddAssign, Div, Mul, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack used by closed band-membership tests.
pub const DOMAIN_SLACK: f64 = 1e-10;

/// Power pressure law `p(ρ) = ρ^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureLaw {
    pub gamma: f64,
}

impl PressureLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(Error::Config {
                path: "law.gamma".into(),
                msg: format!("gamma must be a finite number >= 1, got {gamma}"),
            });
        }
        Ok(Self { gamma })
    }

    fn linear(&self) -> bool {
        self.gamma == 1.0
    }

    pub fn p(&self, rho: f64) -> f64 {
        if self.linear() {
            rho
        } else {
            rho.powf(self.gamma)
        }
    }

    /// `p'(ρ)`; at `ρ = 0` this is 1 for `γ = 1` and 0 otherwise.
    pub fn dp(&self, rho: f64) -> f64 {
        if self.linear() {
            1.0
        } else {
            self.gamma * rho.powf(self.gamma - 1.0)
        }
    }

    pub fn ddp(&self, rho: f64) -> f64 {
        if self.linear() {
            0.0
        } else {
            self.gamma * (self.gamma - 1.0) * rho.powf(self.gamma - 2.0)
        }
    }

    pub fn p_inv(&self, x: f64) -> f64 {
        if self.linear() {
            x
        } else {
            x.powf(1.0 / self.gamma)
        }
    }

    /// `φ(ρ) = d/dρ (ρ p(ρ)) = (γ+1) ρ^γ`.
    pub fn phi(&self, rho: f64) -> f64 {
        (self.gamma + 1.0) * self.p(rho)
    }

    pub fn phi_inv(&self, tau: f64) -> f64 {
        self.p_inv(tau / (self.gamma + 1.0))
    }

    /// Checked `p`, rejecting negative densities.
    pub fn try_p(&self, rho: f64) -> Result<f64> {
        nonneg("p", rho)?;
        Ok(self.p(rho))
    }

    pub fn try_dp(&self, rho: f64) -> Result<f64> {
        nonneg("dp", rho)?;
        Ok(self.dp(rho))
    }

    pub fn try_phi(&self, rho: f64) -> Result<f64> {
        nonneg("phi", rho)?;
        Ok(self.phi(rho))
    }

    pub fn try_phi_inv(&self, tau: f64) -> Result<f64> {
        nonneg("phi_inv", tau)?;
        Ok(self.phi_inv(tau))
    }

    pub fn to_conserved(&self, s: State) -> Conserved {
        Conserved { rho: s.rho, z: s.rho * (s.v + self.p(s.rho)) }
    }

    /// `v = z/ρ − p(ρ)`; fails on vacuum.
    pub fn to_primitive(&self, u: Conserved) -> Result<State> {
        if !(u.rho > 0.0) {
            return Err(Error::Vacuum(format!("conserved state ({}, {})", u.rho, u.z)));
        }
        Ok(self.primitive(u))
    }

    /// Unchecked decoding for callers that already guarantee `ρ > 0`.
    pub fn primitive(&self, u: Conserved) -> State {
        State { rho: u.rho, v: u.z / u.rho - self.p(u.rho) }
    }

    pub fn lambda1(&self, s: State) -> f64 {
        s.v - s.rho * self.dp(s.rho)
    }

    pub fn lambda2(&self, s: State) -> f64 {
        s.v
    }

    /// Riemann invariant of the first family, `w = v + p(ρ)`.
    pub fn w(&self, s: State) -> f64 {
        s.v + self.p(s.rho)
    }

    pub fn riemann_invariants(&self, s: State) -> (f64, f64) {
        (s.v, self.w(s))
    }

    /// First-family Lax curve through `anchor`.
    pub fn lax1(&self, rho: f64, anchor: State) -> f64 {
        anchor.v + self.p(anchor.rho) - self.p(rho)
    }

    /// Second-family Lax curve through `anchor`.
    pub fn lax2(&self, _rho: f64, anchor: State) -> f64 {
        anchor.v
    }

    /// Point of the first-family curve with invariant `w` and density `rho`.
    pub fn on_curve(&self, rho: f64, w: f64) -> State {
        State { rho, v: w - self.p(rho) }
    }

    /// Physical flux `(ρv, zv)`.
    pub fn flux(&self, s: State) -> Conserved {
        let q = s.rho * s.v;
        Conserved { rho: q, z: q * self.w(s) }
    }

    pub fn flux_conserved(&self, u: Conserved) -> Conserved {
        self.flux(self.primitive(u))
    }

    /// Largest characteristic speed magnitude of a state.
    pub fn max_speed(&self, s: State) -> f64 {
        self.lambda1(s).abs().max(s.v.abs())
    }
}

fn nonneg(what: &'static str, value: f64) -> Result<()> {
    if value < 0.0 || value.is_nan() {
        Err(Error::Domain { what, value })
    } else {
        Ok(())
    }
}

/// Primitive traffic state: density and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub rho: f64,
    pub v: f64,
}

impl State {
    pub const fn new(rho: f64, v: f64) -> Self {
        Self { rho, v }
    }

    /// Validated constructor: nonnegative finite density and velocity.
    pub fn checked(rho: f64, v: f64) -> Result<Self> {
        if !rho.is_finite() || !v.is_finite() || rho < 0.0 || v < 0.0 {
            return Err(Error::Domain { what: "state", value: if rho < 0.0 { rho } else { v } });
        }
        Ok(Self { rho, v })
    }

    pub fn require_nonvacuum(self) -> Result<Self> {
        if self.rho > 0.0 && self.rho.is_finite() && self.v.is_finite() {
            Ok(self)
        } else {
            Err(Error::Vacuum(format!("state ({}, {})", self.rho, self.v)))
        }
    }

    pub fn dist(self, other: State) -> f64 {
        (self.rho - other.rho).abs().max((self.v - other.v).abs())
    }
}

/// Conserved variables `(ρ, z)`; also used for two-component fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Conserved {
    pub rho: f64,
    pub z: f64,
}

impl Conserved {
    pub const fn new(rho: f64, z: f64) -> Self {
        Self { rho, z }
    }

    pub fn max_abs(self) -> f64 {
        self.rho.abs().max(self.z.abs())
    }
}

impl Add for Conserved {
    type Output = Conserved;
    fn add(self, o: Conserved) -> Conserved {
        Conserved::new(self.rho + o.rho, self.z + o.z)
    }
}

impl Sub for Conserved {
    type Output = Conserved;
    fn sub(self, o: Conserved) -> Conserved {
        Conserved::new(self.rho - o.rho, self.z - o.z)
    }
}

impl Mul<f64> for Conserved {
    type Output = Conserved;
    fn mul(self, a: f64) -> Conserved {
        Conserved::new(self.rho * a, self.z * a)
    }
}

impl Mul<Conserved> for f64 {
    type Output = Conserved;
    fn mul(self, u: Conserved) -> Conserved {
        u * self
    }
}

impl Div<f64> for Conserved {
    type Output = Conserved;
    fn div(self, a: f64) -> Conserved {
        Conserved::new(self.rho / a, self.z / a)
    }
}

impl AddAssign for Conserved {
    fn add_assign(&mut self, o: Conserved) {
        self.rho += o.rho;
        self.z += o.z;
    }
}

impl SubAssign for Conserved {
    fn sub_assign(&mut self, o: Conserved) {
        self.rho -= o.rho;
        self.z -= o.z;
    }
}

/// Band `v1 ≤ v ≤ v2`, `w1 ≤ v + p(ρ) ≤ w2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantDomain {
    pub v1: f64,
    pub v2: f64,
    pub w1: f64,
    pub w2: f64,
}

impl InvariantDomain {
    pub fn new(v1: f64, v2: f64, w1: f64, w2: f64) -> Result<Self> {
        let ok = 0.0 < v1 && v1 < v2 && 0.0 < w1 && w1 < w2 && v2 < w2;
        if !ok {
            return Err(Error::Degenerate(format!(
                "domain needs 0 < v1 < v2 < w2 and 0 < w1 < w2, got ({v1}, {v2}, {w1}, {w2})"
            )));
        }
        Ok(Self { v1, v2, w1, w2 })
    }

    pub fn contains(&self, law: &PressureLaw, s: State) -> bool {
        self.contains_with(law, s, DOMAIN_SLACK)
    }

    pub fn contains_with(&self, law: &PressureLaw, s: State, slack: f64) -> bool {
        let w = law.w(s);
        s.v >= self.v1 - slack && s.v <= self.v2 + slack && w >= self.w1 - slack && w <= self.w2 + slack
    }

    /// States of minimal and maximal density: `(p_inv(w1 − v2), v2)` and `(p_inv(w2 − v1), v1)`.
    pub fn extremal_densities(&self, law: &PressureLaw) -> Result<(State, State)> {
        if self.w1 <= self.v2 {
            return Err(Error::Vacuum(format!(
                "corner w1 = {} <= v2 = {} touches vacuum",
                self.w1, self.v2
            )));
        }
        let min = State::new(law.p_inv(self.w1 - self.v2), self.v2);
        let max = State::new(law.p_inv(self.w2 - self.v1), self.v1);
        Ok((min, max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIN: PressureLaw = PressureLaw { gamma: 1.0 };

    #[test]
    fn pressure_values() {
        assert_eq!(LIN.p(7.0), 7.0);
        assert_eq!(PressureLaw { gamma: 2.0 }.p(0.0), 0.0);
        let g = PressureLaw { gamma: 1.5 };
        assert!((g.p(4.0) - 8.0).abs() < 1e-12);
        assert!((g.p(4.0) - (1.5 * 4f64.ln()).exp()).abs() < 1e-12);
    }

    #[test]
    fn derivatives() {
        assert_eq!(LIN.dp(2.25), 1.0);
        assert_eq!(PressureLaw { gamma: 2.0 }.dp(0.0), 0.0);
        let g3 = PressureLaw { gamma: 3.0 };
        let fd = (g3.p(2.0 + 1e-6) - g3.p(2.0 - 1e-6)) / 2e-6;
        assert!((g3.dp(2.0) - 12.0).abs() < 1e-12);
        assert!((fd - 12.0).abs() < 1e-5);
        let fd2 = (g3.dp(2.0 + 1e-6) - g3.dp(2.0 - 1e-6)) / 2e-6;
        assert!((g3.ddp(2.0) - fd2).abs() < 1e-5);
    }

    #[test]
    fn phi_round_trip() {
        assert!((LIN.phi_inv(6.0 - 1.5) - 2.25).abs() < 1e-15);
        assert_eq!(PressureLaw { gamma: 2.3 }.phi(0.0), 0.0);
        assert_eq!(LIN.phi(5.0), 10.0);
        assert_eq!(LIN.phi_inv(10.0), 5.0);
    }

    #[test]
    fn checked_functions_reject_negative() {
        assert!(LIN.try_p(-1.0).is_err());
        assert!(LIN.try_phi_inv(-0.5).is_err());
        assert!(LIN.try_dp(0.0).is_ok());
    }

    #[test]
    fn conversions() {
        let u = LIN.to_conserved(State::new(7.0, 3.0));
        assert_eq!(u.z, 70.0);
        assert_eq!(LIN.to_conserved(State::new(1.0, 0.0)).z, 1.0);
        assert!(LIN.to_primitive(Conserved::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn eigenvalues_and_invariants() {
        assert_eq!(LIN.lambda1(State::new(6.0, 4.0)), -2.0);
        assert_eq!(LIN.lambda1(State::new(9.0, 1.0)), -8.0);
        let g = PressureLaw { gamma: 2.0 };
        assert_eq!(g.lambda1(State::new(0.0, 5.0)), 5.0);
        assert_eq!(g.lambda2(State::new(0.0, 5.0)), 5.0);
        assert_eq!(LIN.riemann_invariants(State::new(7.0, 3.0)), (3.0, 10.0));
        assert_eq!(g.riemann_invariants(State::new(0.0, 2.5)), (2.5, 2.5));
        assert_eq!(LIN.lax1(6.0, State::new(7.0, 3.0)), 4.0);
        assert_eq!(LIN.lax1(7.0, State::new(7.0, 3.0)), 3.0);
        assert_eq!(LIN.lax2(1.0, State::new(7.0, 3.0)), 3.0);
    }

    #[test]
    fn domain_membership_and_corners() {
        let d = InvariantDomain::new(1.0, 4.0, 3.0, 10.0).unwrap();
        assert!(d.contains(&LIN, State::new(6.0, 4.0)));
        assert!(d.contains(&LIN, State::new(5.0, 1.0)));
        assert!(!d.contains(&LIN, State::new(0.1, 5.0)));
        let d = InvariantDomain::new(1.0, 4.0, 6.0, 10.0).unwrap();
        let (lo, hi) = d.extremal_densities(&LIN).unwrap();
        assert_eq!((lo.rho, lo.v), (2.0, 4.0));
        assert_eq!((hi.rho, hi.v), (9.0, 1.0));
        let d = InvariantDomain::new(1.0, 4.0, 3.0, 10.0).unwrap();
        assert!(d.extremal_densities(&LIN).is_err());
        assert!(InvariantDomain::new(2.0, 1.0, 3.0, 10.0).is_err());
    }

    #[test]
    fn law_rejects_small_gamma() {
        assert!(PressureLaw::new(0.5).is_err());
        assert!(PressureLaw::new(f64::NAN).is_err());
        assert!(PressureLaw::new(2.0).is_ok());
    }
}
