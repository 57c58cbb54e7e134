//! Godunov scheme for the unconstrained system on a uniform grid.

use crate::arz::{Conserved, PressureLaw, State};
use crate::error::{Error, Result};
use crate::riemann;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub x_left: f64,
    pub h: f64,
    pub n_cells: usize,
}

impl UniformGrid {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 || !(x_right > x_left) {
            return Err(Error::Degenerate(format!(
                "grid [{x_left}, {x_right}] with {n_cells} cells"
            )));
        }
        Ok(Self { x_left, h: (x_right - x_left) / n_cells as f64, n_cells })
    }

    /// Position of interface `j`, i.e. `x_{j−1/2}` in cell numbering.
    pub fn interface(&self, j: usize) -> f64 {
        self.x_left + j as f64 * self.h
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.h
    }

    pub fn x_right(&self) -> f64 {
        self.interface(self.n_cells)
    }

    /// Cell `j` with `x_{j−1/2} ≤ x < x_{j+1/2}`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let j = ((x - self.x_left) / self.h).floor();
        let mut j = if j < 0.0 { 0 } else { (j as usize).min(self.n_cells - 1) };
        // floor can be off by one when x sits on an interface
        while j + 1 < self.n_cells && self.interface(j + 1) <= x {
            j += 1;
        }
        while j > 0 && self.interface(j) > x {
            j -= 1;
        }
        j
    }
}

/// Cell averages of the conserved variables at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub t: f64,
    pub cells: Vec<Conserved>,
}

impl CellField {
    pub fn states(&self, law: &PressureLaw) -> Result<Vec<State>> {
        self.cells.iter().map(|&u| law.to_primitive(u)).collect()
    }

    /// `Σ h_j ū_j` for uniform widths.
    pub fn total(&self, h: f64) -> Conserved {
        self.cells.iter().fold(Conserved::default(), |acc, &u| acc + u * h)
    }
}

/// Piecewise-constant datum: `states[i]` holds on `(breaks[i−1], breaks[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    pub breaks: Vec<f64>,
    pub states: Vec<State>,
}

impl PiecewiseConstant {
    pub fn new(breaks: Vec<f64>, states: Vec<State>) -> Result<Self> {
        if states.len() != breaks.len() + 1 {
            return Err(Error::Degenerate("need one more state than breakpoints".into()));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Degenerate("breakpoints must be strictly increasing".into()));
        }
        for s in &states {
            s.require_nonvacuum()?;
        }
        Ok(Self { breaks, states })
    }

    pub fn constant(s: State) -> Self {
        Self { breaks: Vec::new(), states: vec![s] }
    }

    pub fn riemann(x0: f64, left: State, right: State) -> Self {
        Self { breaks: vec![x0], states: vec![left, right] }
    }

    pub fn eval(&self, x: f64) -> State {
        let i = self.breaks.partition_point(|&b| b < x);
        self.states[i]
    }

    /// Exact average of the conserved variables over `[a, b]`.
    pub fn average(&self, law: &PressureLaw, a: f64, b: f64) -> Conserved {
        let mut acc = Conserved::default();
        let mut lo = a;
        for (i, s) in self.states.iter().enumerate() {
            let hi = self.breaks.get(i).copied().unwrap_or(f64::INFINITY).min(b);
            if hi > lo {
                acc += law.to_conserved(*s) * (hi - lo);
                lo = hi;
            }
            if lo >= b {
                break;
            }
        }
        acc / (b - a)
    }
}

pub fn project(law: &PressureLaw, datum: &PiecewiseConstant, grid: &UniformGrid) -> Result<CellField> {
    let cells = (0..grid.n_cells)
        .map(|j| {
            let u = datum.average(law, grid.interface(j), grid.interface(j + 1));
            law.to_primitive(u).map(|_| u)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellField { t: 0.0, cells })
}

/// Largest characteristic speed over the field.
pub fn max_speed(law: &PressureLaw, states: &[State]) -> f64 {
    states.iter().map(|&s| law.max_speed(s)).fold(0.0, f64::max)
}

/// `k = factor · h / λⁿ`.
pub fn cfl_dt(law: &PressureLaw, field: &CellField, grid: &UniformGrid, factor: f64) -> Result<f64> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::Degenerate(format!("CFL factor {factor} outside (0, 1]")));
    }
    let lambda = max_speed(law, &field.states(law)?);
    if lambda == 0.0 {
        return Err(Error::Degenerate("all wave speeds vanish; time step unbounded".into()));
    }
    Ok(factor * grid.h / lambda)
}

/// Godunov fluxes at all `n + 1` interfaces, outflow ghosts at both ends.
pub fn interface_fluxes(law: &PressureLaw, states: &[State]) -> Result<Vec<Conserved>> {
    let n = states.len();
    let mut f = Vec::with_capacity(n + 1);
    f.push(law.flux(states[0]));
    for j in 1..n {
        f.push(riemann::godunov_flux(law, states[j - 1], states[j])?);
    }
    f.push(law.flux(states[n - 1]));
    Ok(f)
}

pub(crate) fn check_cfl(law: &PressureLaw, states: &[State], h_min: f64, k: f64) -> Result<()> {
    let lambda = max_speed(law, states);
    if k * lambda > h_min * (1.0 + 1e-12) {
        return Err(Error::Cfl { k, bound: h_min / lambda });
    }
    Ok(())
}

/// Conservative update `ū_j − r (F_{j+1/2} − F_{j−1/2})`.
pub fn apply_fluxes(cells: &[Conserved], fluxes: &[Conserved], ratio: f64) -> Vec<Conserved> {
    cells
        .iter()
        .enumerate()
        .map(|(j, &u)| u - (fluxes[j + 1] - fluxes[j]) * ratio)
        .collect()
}

pub fn step(law: &PressureLaw, field: &CellField, grid: &UniformGrid, k: f64) -> Result<CellField> {
    let states = field.states(law)?;
    check_cfl(law, &states, grid.h, k)?;
    let fluxes = interface_fluxes(law, &states)?;
    Ok(CellField { t: field.t + k, cells: apply_fluxes(&field.cells, &fluxes, k / grid.h) })
}

/// Time loop up to `t_max`; returns the final field and the snapshots taken
/// every `snapshot_every` steps (the initial and final fields always included).
pub fn run(
    law: &PressureLaw,
    field: &CellField,
    grid: &UniformGrid,
    t_max: f64,
    factor: f64,
    snapshot_every: usize,
) -> Result<(CellField, Vec<CellField>)> {
    let mut cur = field.clone();
    let mut snaps = vec![cur.clone()];
    let mut n = 0usize;
    while cur.t < t_max {
        let mut k = cfl_dt(law, &cur, grid, factor)?;
        if cur.t + k >= t_max {
            k = t_max - cur.t;
        }
        cur = step(law, &cur, grid, k)?;
        if cur.t + k * 1e-9 >= t_max {
            cur.t = t_max;
        }
        n += 1;
        if snapshot_every > 0 && n % snapshot_every == 0 && cur.t < t_max {
            snaps.push(cur.clone());
        }
    }
    if snaps.last().map_or(true, |s| s.t != cur.t) {
        snaps.push(cur.clone());
    }
    Ok((cur, snaps))
}

/// L1 distance in density between the field and an exact profile, with a
/// `sub`-point midpoint rule per cell.
pub fn l1_density_error(
    law: &PressureLaw,
    field: &CellField,
    grid: &UniformGrid,
    exact: impl Fn(f64) -> State,
    sub: usize,
) -> Result<f64> {
    let states = field.states(law)?;
    let dx = grid.h / sub as f64;
    let mut err = 0.0;
    for (j, s) in states.iter().enumerate() {
        for i in 0..sub {
            let x = grid.interface(j) + (i as f64 + 0.5) * dx;
            err += (s.rho - exact(x).rho).abs() * dx;
        }
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIN: PressureLaw = PressureLaw { gamma: 1.0 };

    #[test]
    fn cfl_of_the_worked_example() {
        let grid = UniformGrid::new(-0.5, 0.5, 500).unwrap();
        let datum = PiecewiseConstant::riemann(0.0, State::new(7.0, 3.0), State::new(6.0, 4.0));
        let field = project(&LIN, &datum, &grid).unwrap();
        let k = cfl_dt(&LIN, &field, &grid, 0.5).unwrap();
        assert!((k - 2.5e-4).abs() < 1e-15);
        let coarse = UniformGrid::new(-0.5, 0.5, 250).unwrap();
        let kc = cfl_dt(&LIN, &project(&LIN, &datum, &coarse).unwrap(), &coarse, 0.5).unwrap();
        assert!((kc - 2.0 * k).abs() < 1e-15);
    }

    #[test]
    fn projection_weights() {
        let grid = UniformGrid::new(0.0, 1.0, 4).unwrap();
        let (l, r) = (State::new(2.0, 1.0), State::new(1.0, 3.0));
        let field = project(&LIN, &PiecewiseConstant::riemann(0.5, l, r), &grid).unwrap();
        assert_eq!(field.cells[1], LIN.to_conserved(l));
        assert_eq!(field.cells[2], LIN.to_conserved(r));
        let field = project(&LIN, &PiecewiseConstant::riemann(0.3, l, r), &grid).unwrap();
        let expect = LIN.to_conserved(l) * 0.2 + LIN.to_conserved(r) * 0.8;
        assert!((field.cells[1] - expect).max_abs() < 1e-14);
    }

    #[test]
    fn constant_field_is_stationary() {
        let grid = UniformGrid::new(0.0, 1.0, 10).unwrap();
        let field = project(&LIN, &PiecewiseConstant::constant(State::new(2.0, 1.5)), &grid).unwrap();
        let k = cfl_dt(&LIN, &field, &grid, 0.5).unwrap();
        let next = step(&LIN, &field, &grid, k).unwrap();
        for (a, b) in next.cells.iter().zip(&field.cells) {
            assert!((*a - *b).max_abs() < 1e-14);
        }
    }

    #[test]
    fn step_refuses_cfl_violation() {
        let grid = UniformGrid::new(0.0, 1.0, 10).unwrap();
        let field = project(&LIN, &PiecewiseConstant::constant(State::new(2.0, 1.5)), &grid).unwrap();
        assert!(matches!(step(&LIN, &field, &grid, 1.0), Err(Error::Cfl { .. })));
    }

    #[test]
    fn cell_lookup_on_interfaces() {
        let grid = UniformGrid::new(-0.5, 0.5, 500).unwrap();
        assert_eq!(grid.cell_of(0.0), 250);
        assert_eq!(grid.cell_of(-0.5), 0);
        assert_eq!(grid.cell_of(0.7), 499);
    }

    #[test]
    fn run_lands_on_t_max() {
        let grid = UniformGrid::new(0.0, 1.0, 20).unwrap();
        let datum = PiecewiseConstant::riemann(0.5, State::new(2.0, 1.0), State::new(3.0, 1.0));
        let field = project(&LIN, &datum, &grid).unwrap();
        let (same, _) = run(&LIN, &field, &grid, 0.0, 0.5, 1).unwrap();
        assert_eq!(same, field);
        let (end, snaps) = run(&LIN, &field, &grid, 0.1, 0.5, 2).unwrap();
        assert_eq!(end.t, 0.1);
        assert!(snaps.windows(2).all(|w| w[0].t < w[1].t));
    }
}
