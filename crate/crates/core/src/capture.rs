//! Godunov variants that keep the nonclassical shock sharp inside the bus cell.
//!
//! The bus cell `m` is split at `x_{m−1/2} + h·d` into a hat part and a check
//! part, `d` being fixed per component by the cell average. The split travels
//! with the bus and the fluxes (RS1) or the averages (RS2) of the three cells
//! `m−1, m, m+1` are rebuilt from it. Everything else is plain Godunov.

use serde::Serialize;

use crate::arz::{Conserved, PressureLaw, State};
use crate::constraint::{self, Cap};
use crate::error::{Error, Result};
use crate::godunov::{self, CellField, UniformGrid};
use crate::riemann;

/// Slack accepted on `d ∈ [0, 1]` before clamping.
const FRACTION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fractions {
    pub d_rho: f64,
    pub d_z: f64,
    pub valid: bool,
}

/// Bus cell index, bus position and the cap at the current bus speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusCell {
    pub m: usize,
    pub y: f64,
    pub v_bar: f64,
    pub cap: Cap,
}

impl BusCell {
    pub fn locate(grid: &UniformGrid, y: f64, cap: Cap) -> Self {
        Self { m: grid.cell_of(y), y, v_bar: cap.v_bar, cap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepKind {
    /// Cap satisfied; plain Godunov.
    Classical,
    Reconstructed,
    /// Cap violated but the split could not be placed; plain Godunov.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureStep {
    pub field: CellField,
    pub kind: StepKind,
}

/// Second detection inequality only: the classical trace at `V̄` between the
/// neighbours of the bus cell exceeds the cap.
pub fn detect(law: &PressureLaw, left_cell: State, right_cell: State, cap: Cap) -> Result<bool> {
    constraint::violates(law, left_cell, right_cell, cap)
}

fn fraction(bar: f64, l: f64, r: f64, what: &str) -> Result<f64> {
    let den = l - r;
    if den == 0.0 {
        return Err(Error::Degenerate(format!("equal {what} on both sides of the reconstruction")));
    }
    Ok((bar - r) / den)
}

fn settle(d: f64) -> Option<f64> {
    (d >= -FRACTION_SLACK && d <= 1.0 + FRACTION_SLACK).then(|| d.clamp(0.0, 1.0))
}

/// `d = (ū − u_r)/(u_l − u_r)` per component, with `(l, r)` the hat and check
/// states in conserved form.
pub fn fractions(u_bar: Conserved, u_hat: Conserved, u_check: Conserved) -> Result<Fractions> {
    let d_rho = fraction(u_bar.rho, u_hat.rho, u_check.rho, "densities")?;
    let d_z = fraction(u_bar.z, u_hat.z, u_check.z, "momenta")?;
    match (settle(d_rho), settle(d_z)) {
        (Some(d_rho), Some(d_z)) => Ok(Fractions { d_rho, d_z, valid: true }),
        _ => Ok(Fractions { d_rho, d_z, valid: false }),
    }
}

/// Time for the split of one component to reach `x_{m+1/2}`.
pub fn crossing_time(h: f64, d: f64, v_bar: f64) -> f64 {
    if v_bar > 0.0 {
        h * (1.0 - d) / v_bar
    } else {
        f64::INFINITY
    }
}

fn time_weighted(first: f64, second: f64, dt: f64, k: f64) -> f64 {
    (dt.min(k) * first + (k - dt).max(0.0) * second) / k
}

/// Fluxes `(F_right, F_left)` at `x_{m+1/2}` and `x_{m−1/2}` for the RS1 split.
#[allow(clippy::too_many_arguments)]
pub fn rs1_bus_fluxes(
    law: &PressureLaw,
    v_bar: f64,
    d: Fractions,
    hat: State,
    check1: State,
    left_cell: State,
    h: f64,
    k: f64,
) -> Result<(Conserved, Conserved)> {
    let (f_hat, f_check) = (law.flux(hat), law.flux(check1));
    let right = Conserved::new(
        time_weighted(f_check.rho, f_hat.rho, crossing_time(h, d.d_rho, v_bar), k),
        time_weighted(f_check.z, f_hat.z, crossing_time(h, d.d_z, v_bar), k),
    );
    let left = riemann::godunov_flux(law, left_cell, hat)?;
    Ok((right, left))
}

fn plain(law: &PressureLaw, field: &CellField, grid: &UniformGrid, k: f64, kind: StepKind) -> Result<CaptureStep> {
    Ok(CaptureStep { field: godunov::step(law, field, grid, k)?, kind })
}

fn interior(bus: &BusCell, n: usize) -> bool {
    bus.m >= 1 && bus.m + 1 < n
}

/// One step of the RS1 reconstruction scheme.
pub fn rs1_step(law: &PressureLaw, field: &CellField, grid: &UniformGrid, bus: &BusCell, k: f64) -> Result<CaptureStep> {
    let states = field.states(law)?;
    let n = states.len();
    if !interior(bus, n) {
        return plain(law, field, grid, k, StepKind::Classical);
    }
    let m = bus.m;
    if !detect(law, states[m - 1], states[m + 1], bus.cap)? {
        return plain(law, field, grid, k, StepKind::Classical);
    }
    let Some((hat, check1)) = constraint::hat_check1(law, states[m - 1], bus.cap) else {
        return plain(law, field, grid, k, StepKind::Fallback);
    };
    let d = match fractions(field.cells[m], law.to_conserved(hat), law.to_conserved(check1)) {
        Ok(d) if d.valid => d,
        _ => return plain(law, field, grid, k, StepKind::Fallback),
    };
    godunov::check_cfl(law, &states, grid.h, k)?;
    let mut fluxes = godunov::interface_fluxes(law, &states)?;
    let (right, left) = rs1_bus_fluxes(law, bus.v_bar, d, hat, check1, states[m - 1], grid.h, k)?;
    fluxes[m] = left;
    fluxes[m + 1] = right;
    let cells = godunov::apply_fluxes(&field.cells, &fluxes, k / grid.h);
    Ok(CaptureStep { field: CellField { t: field.t + k, cells }, kind: StepKind::Reconstructed })
}

/// Which cell holds the split of one component at `t^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lands {
    Same,
    Next,
}

fn lands(h: f64, d: f64, v_bar: f64, k: f64) -> Lands {
    if h * d + v_bar * k < h {
        Lands::Same
    } else {
        Lands::Next
    }
}

/// Scalar pieces of the RS2 reconstruction for one component.
struct Rs2Component {
    lands: Lands,
    /// Case (i): left and right sub-cell averages of cell `m`.
    /// Case (ii): `ũ_m` and `ũ_{m+1}`.
    left: f64,
    right: f64,
    new_m: f64,
    new_m1: f64,
}

#[allow(clippy::too_many_arguments)]
fn rs2_component(
    h: f64,
    k: f64,
    v_bar: f64,
    d: f64,
    hat: f64,
    check: f64,
    f_hat: f64,
    f_check: f64,
    f_left: f64,
    f_right: f64,
    f_far: f64,
    u_m1: f64,
) -> Rs2Component {
    let r = k / h;
    let wl = h * d + k * v_bar;
    let left = if wl > 0.0 { (h * d * hat - k * (f_hat - v_bar * hat - f_left)) / wl } else { hat };
    match lands(h, d, v_bar, k) {
        Lands::Same => {
            let wr = h * (1.0 - d) - k * v_bar;
            let right = (h * (1.0 - d) * check - k * (f_right - f_check + v_bar * check)) / wr;
            Rs2Component {
                lands: Lands::Same,
                left,
                right,
                new_m: (wl * left + wr * right) / h,
                new_m1: u_m1 - r * (f_far - f_right),
            }
        }
        Lands::Next => {
            let wr = h * (2.0 - d) - k * v_bar;
            let right = (h * (1.0 - d) * check + h * u_m1 - k * (f_far - f_check + v_bar * check)) / wr;
            Rs2Component {
                lands: Lands::Next,
                left,
                right,
                new_m: left,
                new_m1: (wr * right + (h * (d - 1.0) + k * v_bar) * left) / h,
            }
        }
    }
}

/// Imposed velocity on the check side of the split.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Rs2Mode {
    Conservative,
    FixedValue,
}

fn rs2_generic(
    law: &PressureLaw,
    field: &CellField,
    grid: &UniformGrid,
    bus: &BusCell,
    k: f64,
    mode: Rs2Mode,
) -> Result<CaptureStep> {
    let states = field.states(law)?;
    let n = states.len();
    if !interior(bus, n) {
        return plain(law, field, grid, k, StepKind::Classical);
    }
    let m = bus.m;
    if !detect(law, states[m - 1], states[m + 1], bus.cap)? {
        return plain(law, field, grid, k, StepKind::Classical);
    }
    let Some((hat, _)) = constraint::hat_check1(law, states[m - 1], bus.cap) else {
        return plain(law, field, grid, k, StepKind::Fallback);
    };
    let Ok(check) = constraint::check2(states[m + 1], bus.cap) else {
        return plain(law, field, grid, k, StepKind::Fallback);
    };
    let (u_hat, u_check) = (law.to_conserved(hat), law.to_conserved(check));
    let d = match fractions(field.cells[m], u_hat, u_check) {
        Ok(d) if d.valid => d,
        _ => return plain(law, field, grid, k, StepKind::Fallback),
    };
    godunov::check_cfl(law, &states, grid.h, k)?;
    let fluxes = godunov::interface_fluxes(law, &states)?;
    let f_left = riemann::godunov_flux(law, states[m - 1], hat)?;
    let f_right = riemann::godunov_flux(law, check, states[m + 1])?;
    let (f_hat, f_check) = (law.flux(hat), law.flux(check));
    let h = grid.h;
    let v_bar = bus.v_bar;
    let u_m1 = field.cells[m + 1];

    let rho = rs2_component(
        h, k, v_bar, d.d_rho, u_hat.rho, u_check.rho, f_hat.rho, f_check.rho, f_left.rho, f_right.rho,
        fluxes[m + 2].rho, u_m1.rho,
    );
    let z = rs2_component(
        h, k, v_bar, d.d_z, u_hat.z, u_check.z, f_hat.z, f_check.z, f_left.z, f_right.z, fluxes[m + 2].z,
        u_m1.z,
    );

    let (mut z_m, mut z_m1) = (z.new_m, z.new_m1);
    if mode == Rs2Mode::FixedValue {
        let v_fix = states[m + 1].v;
        let momentum = |r: f64| r * (v_fix + law.p(r));
        match z.lands {
            Lands::Same => {
                let r = match rho.lands {
                    Lands::Same => rho.right,
                    Lands::Next => rho.left,
                };
                let wl = h * d.d_z + k * v_bar;
                let wr = h * (1.0 - d.d_z) - k * v_bar;
                z_m = (wl * z.left + wr * momentum(r)) / h;
            }
            Lands::Next => {
                let r = match rho.lands {
                    Lands::Same => rho.new_m1,
                    Lands::Next => rho.right,
                };
                let wr = h * (2.0 - d.d_z) - k * v_bar;
                z_m1 = (wr * momentum(r) + (h * (d.d_z - 1.0) + k * v_bar) * z.left) / h;
            }
        }
    }

    let mut cells = godunov::apply_fluxes(&field.cells, &fluxes, k / h);
    cells[m - 1] = field.cells[m - 1] - (f_left - fluxes[m - 1]) * (k / h);
    cells[m] = Conserved::new(rho.new_m, z_m);
    cells[m + 1] = Conserved::new(rho.new_m1, z_m1);
    Ok(CaptureStep { field: CellField { t: field.t + k, cells }, kind: StepKind::Reconstructed })
}

/// One step of the RS2 reconstruction, conservative in both components
/// inside the split cells but not across the nonclassical shock.
pub fn rs2_reconstruct_step(
    law: &PressureLaw,
    field: &CellField,
    grid: &UniformGrid,
    bus: &BusCell,
    k: f64,
) -> Result<CaptureStep> {
    rs2_generic(law, field, grid, bus, k, Rs2Mode::Conservative)
}

/// RS2 reconstruction with the velocity right of the split pinned to `v̄ⁿ_{m+1}`.
pub fn rs2_fixed_value_step(
    law: &PressureLaw,
    field: &CellField,
    grid: &UniformGrid,
    bus: &BusCell,
    k: f64,
) -> Result<CaptureStep> {
    rs2_generic(law, field, grid, bus, k, Rs2Mode::FixedValue)
}
