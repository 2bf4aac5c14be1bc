use chrono::NaiveDate;
use reserve_insure::scenario::{
    peak_share_delta, report_csv, run_profit_study, simulate_day, synthetic_input, StudyConfig,
};
use reserve_insure::StorageParams;

fn config(n: usize) -> StudyConfig {
    let mut cfg = StudyConfig::new(StorageParams::ideal(10.0, 5.0));
    cfg.n_scenarios = n;
    cfg.seed = 2018;
    cfg
}

#[test]
fn sampled_contract_profit_matches_closed_form() {
    let input = synthetic_input(2018, 3, 40.0).unwrap();
    let mut cfg = config(4000);
    cfg.clip_samples = false;
    for d in [10, 120, 250] {
        let date = NaiveDate::from_yo_opt(2018, d).unwrap();
        let day = simulate_day(&cfg, &input, date).unwrap();
        let gap = (day.contract_mean - day.analytic_contract).abs();
        assert!(gap <= 4.0 * day.contract_stderr + 1e-9, "{date}: {day:?}");
        assert!((day.baseline_mean - day.analytic_baseline).abs() < 1e-9);
    }
}

#[test]
fn whole_year_report_is_deterministic_and_dominant() {
    let input = synthetic_input(2018, 3, 40.0).unwrap();
    let cfg = config(40);
    let a = run_profit_study(&cfg, &input).unwrap();
    assert_eq!(a.months.len(), 12);
    assert!(a.months.iter().all(|m| m.dominance_violations == 0));
    let b = run_profit_study(&cfg, &input).unwrap();
    assert_eq!(report_csv(&a), report_csv(&b));
    let shares = peak_share_delta(&cfg, &input).unwrap();
    assert!(shares.iter().all(|s| s.delta >= 0.0));
    for (s, m) in shares.iter().zip(&a.months) {
        assert!((s.delta - m.peak_share_delta).abs() < 1e-9);
    }
}

#[test]
fn thread_count_does_not_change_the_report() {
    let input = synthetic_input(2018, 8, 40.0).unwrap();
    let mut cfg = config(20);
    cfg.months = Some(vec![4, 5]);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = serial.install(|| run_profit_study(&cfg, &input)).unwrap();
    let b = run_profit_study(&cfg, &input).unwrap();
    assert_eq!(report_csv(&a), report_csv(&b));
}
