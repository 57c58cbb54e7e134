//! Time loop coupling a finite-volume scheme with the bus.

use serde::Serialize;

use crate::arz::{Conserved, PressureLaw, State};
use crate::bus::{self, BusSpec, BusState, LocalCells};
use crate::capture::{self, BusCell, StepKind};
use crate::constraint::{Cap, FixedConstraint, MovingConstraint};
use crate::error::{Error, Result};
use crate::godunov::{self, CellField, UniformGrid};
use crate::mesh::{self, MeshField, MeshStepKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FvScheme {
    Godunov,
    Rs1Reconstruct,
    Rs2Reconstruct,
    Rs2Fixed,
    Rs2Mesh,
    Rs2MeshFixed,
}

impl FvScheme {
    pub fn uses_mesh(self) -> bool {
        matches!(self, Self::Rs2Mesh | Self::Rs2MeshFixed)
    }
}

/// What sits on the road.
#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    None,
    /// Bus driving the moving cap; the cap is rebuilt at every step speed.
    Bus { spec: BusSpec, constraint: MovingConstraint },
    /// Cap `ρv ≤ q` at a fixed position.
    Fixed { x: f64, constraint: FixedConstraint },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSetup {
    pub law: PressureLaw,
    pub grid: UniformGrid,
    pub scheme: FvScheme,
    pub obstacle: Obstacle,
    pub cfl_factor: f64,
    pub t_max: f64,
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub states: Vec<State>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BusSample {
    pub t: f64,
    pub y: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLog {
    pub t: f64,
    pub k: f64,
    pub v_bar: f64,
    pub violated: bool,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub snapshots: Vec<Snapshot>,
    pub bus: Vec<BusSample>,
    pub steps: Vec<StepLog>,
    /// Final averages on the base grid.
    pub cells: CellField,
    pub min_width: f64,
}

enum Field {
    Uniform(CellField),
    Mesh(MeshField),
}

impl Field {
    fn t(&self) -> f64 {
        match self {
            Field::Uniform(f) => f.t,
            Field::Mesh(f) => f.t,
        }
    }

    fn snapshot(&self, law: &PressureLaw, grid: &UniformGrid) -> Result<Snapshot> {
        match self {
            Field::Uniform(f) => Ok(Snapshot {
                t: f.t,
                x: (0..grid.n_cells).map(|j| grid.center(j)).collect(),
                states: f.states(law)?,
            }),
            Field::Mesh(f) => Ok(Snapshot {
                t: f.t,
                x: f.mesh.x.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
                states: f.states(law)?,
            }),
        }
    }

    fn uniform(&self, grid: &UniformGrid) -> CellField {
        match self {
            Field::Uniform(f) => f.clone(),
            Field::Mesh(f) => CellField { t: f.t, cells: f.resample(grid) },
        }
    }
}

/// Bus position and speed driving the cap in the current step.
struct Driver {
    y: f64,
    v_bar: f64,
    cap: Option<Cap>,
}

fn driver(law: &PressureLaw, setup: &SimSetup, bus_state: Option<&BusState>, t: f64, v_front: impl Fn(f64) -> f64) -> Result<Driver> {
    match (&setup.obstacle, bus_state) {
        (Obstacle::Bus { spec, constraint }, Some(st)) => {
            let v_bar = bus::coupled_speed(bus::free_speed(spec, t, st), v_front(st.y));
            let cap = constraint.at_speed(law, v_bar)?.cap();
            Ok(Driver { y: st.y, v_bar, cap: Some(cap) })
        }
        (Obstacle::Fixed { x, constraint }, _) => Ok(Driver { y: *x, v_bar: 0.0, cap: Some(constraint.cap()) }),
        _ => Ok(Driver { y: f64::NAN, v_bar: 0.0, cap: None }),
    }
}

fn local_cells(states: &[State], m: usize, x_l: f64, x_r: f64) -> LocalCells {
    let n = states.len();
    LocalCells {
        left: states[m.saturating_sub(1)],
        mid: states[m],
        right: states[(m + 1).min(n - 1)],
        x_l,
        x_r,
    }
}

/// Runs the scheme from `initial` to `t_max`.
pub fn simulate(setup: &SimSetup, initial: &CellField) -> Result<SimResult> {
    let law = &setup.law;
    let grid = &setup.grid;
    if !(setup.cfl_factor > 0.0 && setup.cfl_factor <= 0.5) {
        return Err(Error::Degenerate(format!("CFL factor {} outside (0, 1/2]", setup.cfl_factor)));
    }
    let mut field = if setup.scheme.uses_mesh() {
        Field::Mesh(MeshField::from_uniform(grid, initial))
    } else {
        Field::Uniform(initial.clone())
    };
    let mut bus_state = match &setup.obstacle {
        Obstacle::Bus { spec, .. } => Some(BusState::start(spec)),
        _ => None,
    };
    let mut out = SimResult {
        snapshots: vec![field.snapshot(law, grid)?],
        bus: Vec::new(),
        steps: Vec::new(),
        cells: initial.clone(),
        min_width: grid.h,
    };
    let mut n = 0usize;
    while field.t() < setup.t_max {
        let t = field.t();
        let (next, log, m, x_lr, states) = match &field {
            Field::Uniform(f) => {
                let states = f.states(law)?;
                let dr = driver(law, setup, bus_state.as_ref(), t, |y| states[grid.cell_of(y)].v)?;
                let k = (godunov::cfl_dt(law, f, grid, setup.cfl_factor)?).min(setup.t_max - t);
                let step = match (setup.scheme, dr.cap) {
                    (FvScheme::Godunov, _) | (_, None) => capture::CaptureStep {
                        field: godunov::step(law, f, grid, k)?,
                        kind: StepKind::Classical,
                    },
                    (scheme, Some(cap)) => {
                        let bc = BusCell { m: grid.cell_of(dr.y), y: dr.y, v_bar: dr.v_bar, cap };
                        match scheme {
                            FvScheme::Rs1Reconstruct => capture::rs1_step(law, f, grid, &bc, k)?,
                            FvScheme::Rs2Reconstruct => capture::rs2_reconstruct_step(law, f, grid, &bc, k)?,
                            _ => capture::rs2_fixed_value_step(law, f, grid, &bc, k)?,
                        }
                    }
                };
                let m = if dr.y.is_finite() { grid.cell_of(dr.y) } else { 0 };
                let log = StepLog {
                    t,
                    k,
                    v_bar: dr.v_bar,
                    violated: step.kind != StepKind::Classical,
                    fallback: step.kind == StepKind::Fallback,
                };
                (Field::Uniform(step.field), log, m, (grid.interface(m), grid.interface(m + 1)), states)
            }
            Field::Mesh(f) => {
                let st0 = f.states(law)?;
                let dr0 = driver(law, setup, bus_state.as_ref(), t, |y| st0[f.mesh.cell_of(y)].v)?;
                let (adapted, v_check) = if dr0.y.is_finite() {
                    let v_check = mesh::frozen_check_velocity(law, f, dr0.y)?;
                    (mesh::adapt(f, dr0.y)?, v_check)
                } else {
                    (f.clone(), 0.0)
                };
                let states = adapted.states(law)?;
                let dr = driver(law, setup, bus_state.as_ref(), t, |y| states[adapted.mesh.cell_of(y)].v)?;
                out.min_width = out.min_width.min(adapted.mesh.min_width());
                let k = (mesh::cfl_nonuniform(law, &adapted)? * 2.0 * setup.cfl_factor).min(setup.t_max - t);
                let cap = dr.cap.unwrap_or(Cap::new(0.0, f64::INFINITY));
                let step = if setup.scheme == FvScheme::Rs2MeshFixed {
                    mesh::step_nonuniform_imposed(law, &adapted, dr.v_bar, cap, k, v_check)?
                } else {
                    mesh::step_nonuniform(law, &adapted, dr.v_bar, cap, k)?
                };
                let m = if dr.y.is_finite() { adapted.mesh.cell_of(dr.y) } else { 0 };
                let log = StepLog {
                    t,
                    k,
                    v_bar: dr.v_bar,
                    violated: step.kind != MeshStepKind::Classical,
                    fallback: step.kind == MeshStepKind::Fallback,
                };
                let x_lr = (adapted.mesh.x[m], adapted.mesh.x[m + 1]);
                (Field::Mesh(step.field), log, m, x_lr, states)
            }
        };

        if let (Obstacle::Bus { spec, .. }, Some(st)) = (&setup.obstacle, bus_state.as_mut()) {
            out.bus.push(BusSample { t, y: st.y, speed: log.v_bar });
            let near_stop = st.dwell_until.is_some()
                || spec.stops.iter().any(|&s| (s - st.y).abs() <= spec.delta + spec.v_b * log.k);
            if log.violated && !log.fallback && !near_stop {
                st.y += log.v_bar * log.k;
                st.speed = log.v_bar;
            } else {
                let cells = local_cells(&states, m, x_lr.0, x_lr.1);
                *st = bus::advance_bus(law, spec, st, t, log.k, &cells)?.state;
            }
        }
        if let Field::Mesh(f) = &next {
            if !f.mesh.is_ordered() {
                return Err(Error::MeshCollapse(f.mesh.min_width()));
            }
            out.min_width = out.min_width.min(f.mesh.min_width());
        }
        field = next;
        out.steps.push(log);
        n += 1;
        if field.t() + log.k * 1e-9 >= setup.t_max {
            match &mut field {
                Field::Uniform(f) => f.t = setup.t_max,
                Field::Mesh(f) => f.t = setup.t_max,
            }
        }
        if setup.snapshot_every > 0 && n % setup.snapshot_every == 0 && field.t() < setup.t_max {
            out.snapshots.push(field.snapshot(law, grid)?);
        }
    }
    if let Some(st) = &bus_state {
        out.bus.push(BusSample { t: field.t(), y: st.y, speed: st.speed });
    }
    if out.snapshots.last().map_or(true, |s| s.t != field.t()) {
        out.snapshots.push(field.snapshot(law, grid)?);
    }
    out.cells = field.uniform(grid);
    Ok(out)
}

/// Total `Σ h ū` of a uniform field.
pub fn budget(field: &CellField, grid: &UniformGrid) -> Conserved {
    field.total(grid.h)
}
