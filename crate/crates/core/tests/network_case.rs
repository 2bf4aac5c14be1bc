use reserve_insure::network::{
    balance_residual, dispatch_with_wind, multi_period_dispatch, placement_entry,
    storage_schedule_feasible, NetworkCase,
};

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

#[test]
fn shipped_case_dispatch_is_consistent() {
    let case = NetworkCase::ieee14_modified();
    let r = multi_period_dispatch(&case).unwrap();
    assert!(balance_residual(&case, &r).unwrap() < 1e-6);
    for (t, flows) in r.flows.iter().enumerate() {
        for (i, f) in flows.iter().enumerate() {
            assert!(f.abs() <= case.lines[i].capacity_mw + 1e-6, "slot {t} line {i}: {f}");
        }
    }
    let gap = (r.objective - r.dual_objective).abs();
    assert!(gap <= 1e-6 * r.objective.abs().max(1.0), "duality gap {gap}");
    assert!(storage_schedule_feasible(&case, &r));
    let p = r.storage.as_ref().unwrap();
    for t in 0..case.slots() {
        assert!(p.u_plus[t] * p.u_minus[t] < 1e-6, "slot {t} charges and discharges");
    }
}

#[test]
fn relaxed_lines_give_uniform_prices() {
    let case = NetworkCase::ieee14_modified().with_line_scale(10.0);
    let r = multi_period_dispatch(&case).unwrap();
    for (t, lmp) in r.lmp.iter().enumerate() {
        assert!(spread(lmp) < 1e-6, "slot {t}: {lmp:?}");
    }
}

#[test]
fn shipped_case_is_congested() {
    let r = multi_period_dispatch(&NetworkCase::ieee14_modified()).unwrap();
    assert!(r.lmp.iter().any(|l| spread(l) > 1.0));
}

#[test]
fn storage_never_raises_cost() {
    let with = NetworkCase::ieee14_modified();
    let mut without = with.clone();
    without.storage = None;
    let a = multi_period_dispatch(&with).unwrap();
    let b = multi_period_dispatch(&without).unwrap();
    assert!(a.objective <= b.objective + 1e-6);
}

#[test]
fn wind_commitment_changes_imports_at_wind_bus() {
    let case = NetworkCase::ieee14_modified();
    let bus = case.wind.as_ref().unwrap().bus;
    let base = case.wind_commitment().unwrap();
    let more: Vec<f64> = base.iter().map(|w| w + 5.0).collect();
    let a = dispatch_with_wind(&case, &base).unwrap();
    let b = dispatch_with_wind(&case, &more).unwrap();
    let net_out = |r: &reserve_insure::DispatchResult, t: usize| -> f64 {
        case.lines
            .iter()
            .zip(&r.flows[t])
            .map(|(l, f)| {
                if l.from == bus {
                    *f
                } else if l.to == bus {
                    -*f
                } else {
                    0.0
                }
            })
            .sum()
    };
    let moved = (0..case.slots()).any(|t| (net_out(&a, t) - net_out(&b, t)).abs() > 1e-6);
    let cheaper = b.objective < a.objective;
    assert!(moved || cheaper);
}

#[test]
fn placement_at_the_same_bus_is_feasible() {
    let case = NetworkCase::ieee14_modified();
    for bus in [1, 5, 9] {
        let e = placement_entry(&case, 0.4, bus, bus).unwrap();
        assert!(e.feasible, "{e:?}");
    }
}

#[test]
fn overloaded_case_names_a_resource() {
    let mut case = NetworkCase::ieee14_modified();
    for p in &mut case.profile {
        *p *= 4.0;
    }
    let err = multi_period_dispatch(&case).unwrap_err();
    assert_eq!(err.kind(), "infeasible");
    assert!(err.to_string().contains("slot"), "{err}");
}
