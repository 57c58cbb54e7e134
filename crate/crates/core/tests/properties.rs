use arzsim::bus::{self, BusSpec, BusState, LocalCells};
use arzsim::capture;
use arzsim::constraint::{self, Cap, FixedConstraint};
use arzsim::godunov::{self, project, PiecewiseConstant, UniformGrid};
use arzsim::mesh::{self, MeshField};
use arzsim::riemann::{self, WaveKind};
use arzsim::scenario::fmt;
use arzsim::wavefront::{self, FrontKind};
use arzsim::{InvariantDomain, PressureLaw, State};
use proptest::prelude::*;

const LIN: PressureLaw = PressureLaw { gamma: 1.0 };

fn law() -> impl Strategy<Value = PressureLaw> {
    (1.0..3.0f64).prop_map(|gamma| PressureLaw { gamma })
}

fn state() -> impl Strategy<Value = State> {
    (0.2..6.0f64, 0.1..8.0f64).prop_map(|(rho, v)| State::new(rho, v))
}

/// Pair with a nonvacuum middle state.
fn riemann_pair() -> impl Strategy<Value = (PressureLaw, State, State)> {
    (law(), state(), state()).prop_filter("middle state must be nonvacuum", |(law, l, r)| law.w(*l) - r.v > 1e-3)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pressure_and_phi_are_increasing(law in law(), a in 0.01..10.0f64, d in 1e-6..5.0f64) {
        let b = a + d;
        prop_assert!(law.p(b) > law.p(a));
        prop_assert!(law.phi(b) > law.phi(a));
    }

    #[test]
    fn flux_along_first_curve_is_concave(law in law(), anchor in state(), rho in 0.05..5.0f64, frac in 1e-3..0.1f64) {
        let h = rho * frac;
        let g = |r: f64| r * law.lax1(r, anchor);
        prop_assert!(g(rho + h) - 2.0 * g(rho) + g(rho - h) < 0.0);
    }

    #[test]
    fn pressure_is_bi_lipschitz(law in law(), r1 in 0.1..3.0f64, span in 0.1..3.0f64, s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let r2 = r1 + span;
        let (a, b) = (r1 + s * span, r1 + t * span);
        let gap = (law.p(a) - law.p(b)).abs();
        let d = (a - b).abs();
        prop_assert!(law.dp(r1) * d <= gap * (1.0 + 1e-12) + 1e-15);
        prop_assert!(gap <= law.dp(r2) * d * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn lambda1_negative_on_decreasing_domains(
        law in law(), v1 in 0.1..1.0f64, dv in 0.1..2.0f64, dw in 0.1..4.0f64, extra in 0.1..3.0f64,
        s in 0.0..1.0f64, t in 0.0..1.0f64,
    ) {
        let v2 = v1 + dv;
        let w1 = v2 + extra;
        let d = InvariantDomain::new(v1, v2, w1, w1 + dw).unwrap();
        let (min_state, _) = d.extremal_densities(&law).unwrap();
        let v = d.v1 + s * (d.v2 - d.v1);
        let w = d.w1 + t * (d.w2 - d.w1);
        let st = State::new(law.p_inv(w - v), v);
        if law.lambda1(min_state) < 0.0 {
            prop_assert!(law.lambda1(st) < 0.0);
        }
    }

    #[test]
    fn fans_are_ordered_and_admissible((law, l, r) in riemann_pair()) {
        let fan = riemann::solve(&law, l, r).unwrap();
        for pair in fan.waves.windows(2) {
            prop_assert!(pair[0].speed_hi <= pair[1].speed_lo + 1e-12);
        }
        let m = riemann::middle_state(&law, l, r).unwrap();
        for w in &fan.waves {
            match w.kind {
                WaveKind::Shock | WaveKind::Rarefaction => {
                    prop_assert!(close(law.w(w.left), law.w(w.right), 1e-10));
                    if w.kind == WaveKind::Shock {
                        prop_assert!(l.rho < m.rho);
                        prop_assert!(law.lambda1(w.right) <= w.speed_lo + 1e-9);
                        prop_assert!(w.speed_lo <= law.lambda1(w.left) + 1e-9);
                    } else {
                        prop_assert!(l.rho >= m.rho);
                    }
                }
                WaveKind::Contact => prop_assert!(close(w.left.v, w.right.v, 1e-10)),
                WaveKind::Nonclassical => prop_assert!(false, "classical fan with a nonclassical wave"),
            }
        }
    }

    #[test]
    fn interface_state_matches_sampling((law, l, r) in riemann_pair()) {
        let fan = riemann::solve(&law, l, r).unwrap();
        // skip ties where a discontinuity sits on ξ = 0
        prop_assume!(fan.waves.iter().all(|w| w.speed_lo.abs() > 1e-9 && w.speed_hi.abs() > 1e-9));
        let a = riemann::interface_state(&law, l, r).unwrap();
        let b = fan.sample(&law, 0.0);
        prop_assert!(a.dist(b) <= 1e-9 * (1.0 + b.rho.max(b.v)));
    }

    #[test]
    fn cap_points_lie_on_cap_and_curve(
        law in law(), left in state(), v_bar in 0.0..2.0f64, f in 0.1..3.0f64,
    ) {
        let cap = Cap::new(v_bar, f);
        if let Some((hat, chk)) = constraint::hat_check1(&law, left, cap) {
            prop_assert!(cap.excess(hat).abs() <= 1e-10 * (1.0 + f));
            prop_assert!(cap.excess(chk).abs() <= 1e-10 * (1.0 + f));
            prop_assert!(close(law.w(hat), law.w(left), 1e-10));
            prop_assert!(close(law.w(chk), law.w(left), 1e-10));
            prop_assert!(chk.rho <= hat.rho);
        }
    }

    #[test]
    fn nonclassical_shocks_balance_and_violate_lax(
        l in state(), r in state(), v_bar in 0.0..2.0f64, f in 0.1..3.0f64,
    ) {
        prop_assume!(LIN.w(l) - r.v > 1e-3);
        let cap = Cap::new(v_bar, f);
        let frame = |s: State| (s.rho * (s.v - v_bar), s.rho * LIN.w(s) * (s.v - v_bar));
        if let Ok(fan) = constraint::solve_rs1(&LIN, l, r, cap) {
            if let (Some(hat), Some(chk)) = (fan.hat(), fan.check()) {
                let (a, b) = (frame(hat), frame(chk));
                prop_assert!((a.0 - b.0).abs() <= 1e-10 * (1.0 + a.0.abs()));
                prop_assert!((a.1 - b.1).abs() <= 1e-10 * (1.0 + a.1.abs()));
                prop_assert!(LIN.lambda1(chk) > LIN.lambda1(hat));
            }
        }
        if let Ok(fan) = constraint::solve_rs2(&LIN, l, r, cap) {
            if let (Some(hat), Some(chk)) = (fan.hat(), fan.check()) {
                let (a, b) = (frame(hat), frame(chk));
                prop_assert!((a.0 - b.0).abs() <= 1e-10 * (1.0 + a.0.abs()));
            }
        }
    }

    #[test]
    fn fixed_solver_is_rs2_at_rest(l in state(), r in state(), q in 0.2..4.0f64) {
        prop_assume!(LIN.w(l) - r.v > 1e-3);
        let a = constraint::solve_rsq2(&LIN, l, r, FixedConstraint::new(q).unwrap());
        let b = constraint::solve_rs2(&LIN, l, r, Cap::new(0.0, q));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                for i in 0..=40 {
                    let xi = -10.0 + 0.5 * i as f64;
                    prop_assert_eq!(a.sample(&LIN, xi), b.sample(&LIN, xi));
                }
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn godunov_budget_and_domain(
        v1 in 0.5..2.0f64, dv in 0.2..2.0f64, gap in 0.5..2.0f64, dw in 0.2..3.0f64,
        picks in proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64), 3),
    ) {
        let d = InvariantDomain::new(v1, v1 + dv, v1 + dv + gap, v1 + dv + gap + dw).unwrap();
        let states: Vec<State> = picks
            .iter()
            .map(|(s, t)| {
                let v = d.v1 + s * (d.v2 - d.v1);
                State::new(d.w1 + t * (d.w2 - d.w1) - v, v)
            })
            .collect();
        let datum = PiecewiseConstant::new(vec![-0.2, 0.2], states).unwrap();
        let grid = UniformGrid::new(-1.0, 1.0, 80).unwrap();
        for pair in datum.states.windows(2) {
            let fan = riemann::solve(&LIN, pair[0], pair[1]).unwrap();
            for i in 0..=200 {
                let s = fan.sample(&LIN, -8.0 + 0.08 * i as f64);
                let w = LIN.w(s);
                prop_assert!(s.v >= d.v1 - 1e-10 && s.v <= d.v2 + 1e-10);
                prop_assert!(w >= d.w1 - 1e-10 && w <= d.w2 + 1e-10);
            }
        }
        let mut field = project(&LIN, &datum, &grid).unwrap();
        for _ in 0..20 {
            let k = godunov::cfl_dt(&LIN, &field, &grid, 0.5).unwrap();
            let st = field.states(&LIN).unwrap();
            let boundary = LIN.flux(st[0]) - LIN.flux(*st.last().unwrap());
            let next = godunov::step(&LIN, &field, &grid, k).unwrap();
            let r = next.total(grid.h) - field.total(grid.h) - boundary * k;
            prop_assert!(r.max_abs() <= 1e-10);
            field = next;
            for s in field.states(&LIN).unwrap() {
                let w = LIN.w(s);
                // cell averages keep only the convex part of the box
                prop_assert!(s.v >= d.v1 - 1e-10);
                prop_assert!(w >= d.w1 - 1e-10 && w <= d.w2 + 1e-10);
            }
        }
    }

    #[test]
    fn fractions_of_convex_combinations(g in 0.0..1.0f64, a in state(), b in state()) {
        let (ua, ub) = (LIN.to_conserved(a), LIN.to_conserved(b));
        prop_assume!((ua - ub).max_abs() > 1e-3);
        prop_assume!((ua.rho - ub.rho).abs() > 1e-3 && (ua.z - ub.z).abs() > 1e-3);
        let d = capture::fractions(ua * g + ub * (1.0 - g), ua, ub).unwrap();
        prop_assert!((d.d_rho - g).abs() <= 1e-9 && (d.d_z - g).abs() <= 1e-9);
    }

    #[test]
    fn adapt_keeps_order_width_and_budget(y in -0.45..0.45f64, l in state(), r in state()) {
        let grid = UniformGrid::new(-0.5, 0.5, 50).unwrap();
        let field = MeshField::from_uniform(&grid, &project(&LIN, &PiecewiseConstant::riemann(0.1, l, r), &grid).unwrap());
        let a = mesh::adapt(&field, y).unwrap();
        prop_assert!(a.mesh.is_ordered());
        prop_assert!(a.mesh.min_width() >= grid.h / 2.0 - 1e-14);
        prop_assert!((a.total() - field.total()).max_abs() <= 1e-12 * (1.0 + field.total().max_abs()));
        let b = mesh::adapt(&a, y + 0.3 * grid.h).unwrap();
        prop_assert!(b.mesh.is_ordered() && b.mesh.min_width() >= grid.h / 2.0 - 1e-14);
    }

    #[test]
    fn bus_speed_is_bounded_by_traffic(v_b in 0.5..5.0f64, a in state(), b in state(), c in state(), k in 1e-4..1e-2f64) {
        prop_assume!(LIN.w(a) - b.v > 1e-3 && LIN.w(b) - c.v > 1e-3);
        let spec = BusSpec::new(v_b, 0.0);
        let st = BusState::start(&spec);
        let cells = LocalCells { left: a, mid: b, right: c, x_l: -0.05, x_r: 0.05 };
        prop_assert_eq!(bus::coupled_speed(v_b, b.v), v_b.min(b.v));
        if let Ok(adv) = bus::advance_bus(&LIN, &spec, &st, 0.0, k, &cells) {
            prop_assert!(adv.state.y >= st.y - 1e-15);
            prop_assert!(adv.state.y - st.y <= v_b * k * (1.0 + 1e-12));
            prop_assert!(adv.state.speed >= 0.0 && adv.state.speed <= v_b + 1e-12);
        }
    }

    #[test]
    fn rarefaction_leg_accelerates(w_bar in 6.0..12.0f64, y0 in -0.3..-0.01f64, v0 in 0.2..1.0f64, v_exit_frac in 0.3..0.9f64) {
        // left edge speed v0 − ρ0 on the curve w = w_bar
        let rho0 = w_bar - v0;
        let edge = v0 - rho0;
        let t_star = -y0 / (v0 - edge);
        let x_star = y0 + v0 * t_star;
        let v_exit = v0 + v_exit_frac * (w_bar - v0);
        let leg = bus::rarefaction_trajectory(&LIN, w_bar, 0.0, 0.0, t_star, x_star, v_exit).unwrap();
        prop_assert!((leg.position(t_star) - x_star).abs() <= 1e-12);
        prop_assert!((leg.speed(t_star) - v0).abs() <= 1e-9 * (1.0 + v0));
        let mut prev = leg.speed(t_star);
        for i in 1..=20 {
            let t = t_star + (leg.t_exit - t_star) * i as f64 / 20.0;
            let s = leg.speed(t);
            prop_assert!(s >= prev - 1e-12);
            prev = s;
        }
        prop_assert!((leg.speed(leg.t_exit) - v_exit).abs() <= 1e-9 * (1.0 + v_exit));
    }

    #[test]
    fn floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn front_tracking_invariants(
        v1 in 0.1..0.3f64, v2 in 0.45..0.7f64, a in 0.0..1.0f64, b in 0.0..1.0f64,
        breaks in proptest::collection::vec(-1.0..1.0f64, 1..5),
        picks in proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64), 5),
    ) {
        let h = |v: f64| v + 1.0 / v;
        let w1 = 2.0 * v2 + 1e-3 + a * (h(v2) - 2.0 * v2 - 1e-3);
        let w2 = h(v2) + b * (h(v1) - h(v2));
        let d = InvariantDomain::new(v1, v2, w1, w2).unwrap();
        let q = FixedConstraint::new(1.0).unwrap();
        let mut breaks = breaks;
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
        let states: Vec<State> = picks[..=breaks.len()]
            .iter()
            .map(|(s, t)| {
                let v = v1 + s * (v2 - v1);
                State::new(w1 + t * (w2 - w1) - v, v)
            })
            .collect();
        let datum = PiecewiseConstant::new(breaks, states).unwrap();
        let init = wavefront::initialize(&LIN, &datum, q, 0.25, &d).unwrap();
        let run = wavefront::run(&LIN, init, q, 0.25, &d, 10.0, 5, 100_000).unwrap();
        let n = wavefront::fan_count(0.25).unwrap();
        let (k1, k2) = wavefront::jump_counts(&datum);
        prop_assert!(run.state.ledger.len() <= wavefront::interaction_bound(n, k1, k2));
        for e in &run.state.ledger {
            if !e.row.at_zero() {
                prop_assert!(e.delta_tv_w <= 1e-10 && e.delta_tv_v <= 1e-10);
            }
        }
        let t = run.state.t;
        for pair in run.state.fronts.windows(2) {
            prop_assert!(pair[0].position(t) <= pair[1].position(t) + 1e-9);
        }
        for f in &run.state.fronts {
            prop_assert!(d.contains(&LIN, f.left) && d.contains(&LIN, f.right));
            if f.speed > 1e-12 {
                prop_assert_eq!(f.kind, FrontKind::Contact);
            } else if f.speed < -1e-12 {
                prop_assert!(matches!(f.kind, FrontKind::Shock | FrontKind::Rarefaction));
            }
        }
    }
}
