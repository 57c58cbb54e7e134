//! Locally shifted mesh that keeps the bus on a cell interface.
//!
//! Away from the bus every interface sits on the base grid `x_left + i·h`.
//! The interface nearest to the bus is pulled onto it, so the two cells it
//! separates have widths in `[h/2, 3h/2]` and sum to `2h`. When the cap is
//! violated that interface travels with the bus and the two flanking cells are
//! updated with the traces `û` and `ǔ₂` of the nonclassical shock.

use serde::Serialize;

use crate::arz::{Conserved, PressureLaw, State};
use crate::constraint::{self, Cap};
use crate::error::{Error, Result};
use crate::godunov::{self, UniformGrid};
use crate::riemann;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveMesh {
    /// Interfaces `x[0] < … < x[n]`; cell `j` is `[x[j], x[j+1])`.
    pub x: Vec<f64>,
    pub x_left: f64,
    pub h0: f64,
    /// Interface currently holding the bus, if any.
    pub tracked: Option<usize>,
}

impl AdaptiveMesh {
    pub fn uniform(grid: &UniformGrid) -> Self {
        Self {
            x: (0..=grid.n_cells).map(|i| grid.interface(i)).collect(),
            x_left: grid.x_left,
            h0: grid.h,
            tracked: None,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.x.len() - 1
    }

    pub fn base(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.h0
    }

    pub fn width(&self, j: usize) -> f64 {
        self.x[j + 1] - self.x[j]
    }

    pub fn widths(&self) -> Vec<f64> {
        self.x.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn min_width(&self) -> f64 {
        self.widths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_of(&self, y: f64) -> usize {
        let j = self.x.partition_point(|&xi| xi <= y);
        j.clamp(1, self.n_cells()) - 1
    }

    /// Base interface nearest to `y`, ties going right.
    pub fn nearest_base(&self, y: f64) -> usize {
        let i = ((y - self.x_left) / self.h0 + 0.5).floor();
        (i.max(0.0) as usize).min(self.n_cells())
    }

    pub fn is_ordered(&self) -> bool {
        self.x.windows(2).all(|w| w[0] < w[1])
    }
}

/// Cell averages on an adaptive mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshField {
    pub t: f64,
    pub mesh: AdaptiveMesh,
    pub cells: Vec<Conserved>,
}

impl MeshField {
    pub fn from_uniform(grid: &UniformGrid, field: &godunov::CellField) -> Self {
        Self { t: field.t, mesh: AdaptiveMesh::uniform(grid), cells: field.cells.clone() }
    }

    pub fn states(&self, law: &PressureLaw) -> Result<Vec<State>> {
        self.cells.iter().map(|&u| law.to_primitive(u)).collect()
    }

    pub fn total(&self) -> Conserved {
        self.cells
            .iter()
            .enumerate()
            .fold(Conserved::default(), |acc, (j, &u)| acc + u * self.mesh.width(j))
    }

    /// Length-weighted averages on the base grid.
    pub fn resample(&self, grid: &UniformGrid) -> Vec<Conserved> {
        let base: Vec<f64> = (0..=grid.n_cells).map(|i| grid.interface(i)).collect();
        remap(&self.mesh.x, &self.cells, &base)
    }
}

/// Exact conservative transfer of a piecewise-constant field between two
/// meshes covering the same span.
pub fn remap(old_x: &[f64], old: &[Conserved], new_x: &[f64]) -> Vec<Conserved> {
    let mut out = Vec::with_capacity(new_x.len() - 1);
    let mut l = 0usize;
    for j in 0..new_x.len() - 1 {
        let (a, b) = (new_x[j], new_x[j + 1]);
        if l < old.len() && old_x[l] == a && old_x[l + 1] == b {
            out.push(old[l]);
            l += 1;
            continue;
        }
        while l + 1 < old.len() && old_x[l + 1] <= a {
            l += 1;
        }
        let mut acc = Conserved::default();
        let mut i = l;
        while i < old.len() && old_x[i] < b {
            let len = old_x[i + 1].min(b) - old_x[i].max(a);
            if len > 0.0 {
                acc += old[i] * len;
            }
            i += 1;
        }
        out.push(acc / (b - a));
    }
    out
}

/// Moves the nearest base interface onto `y`, restores every other interface
/// to the base grid and re-averages the affected cells.
pub fn adapt(field: &MeshField, y: f64) -> Result<MeshField> {
    let mesh = &field.mesh;
    let n = mesh.n_cells();
    let i = mesh.nearest_base(y);
    let mut x: Vec<f64> = (0..=n).map(|j| mesh.base(j)).collect();
    // the outer boundary never moves
    x[0] = mesh.x[0];
    x[n] = mesh.x[n];
    let tracked = if i > 0 && i < n {
        x[i] = y;
        Some(i)
    } else {
        None
    };
    if let Some(w) = x.windows(2).map(|w| w[1] - w[0]).find(|&w| !(w > 0.0)) {
        return Err(Error::MeshCollapse(w));
    }
    let cells = if x == mesh.x { field.cells.clone() } else { remap(&mesh.x, &field.cells, &x) };
    Ok(MeshField { t: field.t, mesh: AdaptiveMesh { x, tracked, ..mesh.clone() }, cells })
}

/// `k = min_j h_j / (2λ)`.
pub fn cfl_nonuniform(law: &PressureLaw, field: &MeshField) -> Result<f64> {
    let lambda = godunov::max_speed(law, &field.states(law)?);
    if lambda == 0.0 {
        return Err(Error::Degenerate("all wave speeds vanish; time step unbounded".into()));
    }
    Ok(field.mesh.min_width() / (2.0 * lambda))
}

/// Cell update over a trapezoid whose sides move at `λ_l`, `λ_r`:
/// `h' ū' = h ū − k [f(u_r) − λ_r u_r − f(u_l) + λ_l u_l]`.
#[allow(clippy::too_many_arguments)]
pub fn green_update(
    law: &PressureLaw,
    u_bar: Conserved,
    h_old: f64,
    h_new: f64,
    k: f64,
    lambda_l: f64,
    lambda_r: f64,
    u_l: State,
    u_r: State,
) -> Result<Conserved> {
    if !(h_new > 0.0) {
        return Err(Error::MeshCollapse(h_new));
    }
    let flow = |s: State, lambda: f64| law.flux(s) - law.to_conserved(s) * lambda;
    Ok((u_bar * h_old - (flow(u_r, lambda_r) - flow(u_l, lambda_l)) * k) / h_new)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeshStepKind {
    Classical,
    Tracked,
    /// Cap violated but the bus interface is too close to the boundary or
    /// the cap points do not exist.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshStep {
    pub field: MeshField,
    pub kind: MeshStepKind,
}

fn plain_step(law: &PressureLaw, field: &MeshField, states: &[State], k: f64) -> Result<Vec<Conserved>> {
    let fluxes = godunov::interface_fluxes(law, states)?;
    Ok(field
        .cells
        .iter()
        .enumerate()
        .map(|(j, &u)| u - (fluxes[j + 1] - fluxes[j]) * (k / field.mesh.width(j)))
        .collect())
}

fn step_inner(
    law: &PressureLaw,
    field: &MeshField,
    v_bar: f64,
    cap: Cap,
    k: f64,
    imposed: Option<f64>,
) -> Result<MeshStep> {
    let states = field.states(law)?;
    godunov::check_cfl(law, &states, field.mesh.min_width(), k)?;
    let n = states.len();
    let classical = |kind| -> Result<MeshStep> {
        let cells = plain_step(law, field, &states, k)?;
        Ok(MeshStep { field: MeshField { t: field.t + k, mesh: field.mesh.clone(), cells }, kind })
    };
    let Some(i) = field.mesh.tracked else {
        return classical(MeshStepKind::Classical);
    };
    let (l, r) = (states[i - 1], states[i]);
    if !constraint::violates(law, l, r, cap)? {
        return classical(MeshStepKind::Classical);
    }
    if i < 2 || i + 1 >= n {
        return classical(MeshStepKind::Fallback);
    }
    let Some((hat, _)) = constraint::hat_check1(law, l, cap) else {
        return classical(MeshStepKind::Fallback);
    };
    let Ok(check) = constraint::check2(r, cap) else {
        return classical(MeshStepKind::Fallback);
    };

    let mut cells = plain_step(law, field, &states, k)?;
    let mut mesh = field.mesh.clone();
    mesh.x[i] += v_bar * k;
    let (hl, hr) = (field.mesh.width(i - 1), field.mesh.width(i));
    let left_trace = riemann::interface_state(law, states[i - 2], l)?;
    let right_trace = riemann::interface_state(law, r, states[i + 1])?;
    cells[i - 1] = green_update(law, field.cells[i - 1], hl, mesh.width(i - 1), k, 0.0, v_bar, left_trace, hat)?;
    cells[i] = green_update(law, field.cells[i], hr, mesh.width(i), k, v_bar, 0.0, check, right_trace)?;
    if let Some(v_check) = imposed {
        let rho = cells[i].rho;
        cells[i].z = rho * (v_check + law.p(rho));
    }
    Ok(MeshStep { field: MeshField { t: field.t + k, mesh, cells }, kind: MeshStepKind::Tracked })
}

/// One step on an adapted mesh (bus on `mesh.tracked`).
pub fn step_nonuniform(law: &PressureLaw, field: &MeshField, v_bar: f64, cap: Cap, k: f64) -> Result<MeshStep> {
    step_inner(law, field, v_bar, cap, k, None)
}

/// As [`step_nonuniform`], then the first cell after the bus gets velocity
/// `v_check` at unchanged density.
pub fn step_nonuniform_imposed(
    law: &PressureLaw,
    field: &MeshField,
    v_bar: f64,
    cap: Cap,
    k: f64,
    v_check: f64,
) -> Result<MeshStep> {
    step_inner(law, field, v_bar, cap, k, Some(v_check))
}

/// Velocity to impose, read from the cell right of the bus before `adapt`.
pub fn frozen_check_velocity(law: &PressureLaw, field: &MeshField, y: f64) -> Result<f64> {
    let j = field.mesh.cell_of(y);
    Ok(law.to_primitive(field.cells[j])?.v)
}
