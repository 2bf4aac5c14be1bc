use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(&Bound<'_, PyModule>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "reserve_insure_py").unwrap();
        reserve_insure_py::register(&m).unwrap();
        f(&m);
    });
}

fn run<'py>(m: &Bound<'py, PyModule>, code: &str) -> Bound<'py, PyDict> {
    let py = m.py();
    let globals = PyDict::new(py);
    globals.set_item("ri", m).unwrap();
    py.run(&std::ffi::CString::new(code).unwrap(), Some(&globals), None)
        .unwrap_or_else(|e| panic!("{e}"));
    globals
}

#[test]
fn contract_round_trip() {
    with_module(|m| {
        let g = run(
            m,
            r#"
prices = ri.MarketPrices([10.0, 40.0], penalty=100.0)
model = ri.RenewableModel([10.0, 10.0], [2.0, 2.0], 40.0)
storage = ri.StorageParams(12.0, 7.0)
fi = ri.feasibility_interval(prices, model, storage)
ct = ri.standard_contract(prices, model, storage)
with_ct = ri.expected_profits(prices, model, storage, ct)
without = ri.expected_profits(prices, model, storage)
gain = with_ct["storage"] - without["storage"]
"#,
        );
        let floor: f64 = g.get_item("fi").unwrap().unwrap().get_item("floor").unwrap().extract().unwrap();
        let cap: f64 = g.get_item("fi").unwrap().unwrap().get_item("cap").unwrap().extract().unwrap();
        assert!((floor - 39.37192407293363).abs() < 1e-9, "{floor}");
        assert_eq!(cap, 40.0);
        let gain: f64 = g.get_item("gain").unwrap().unwrap().extract().unwrap();
        assert!(gain > 0.0);
    });
}

#[test]
fn invalid_input_raises_value_error() {
    with_module(|m| {
        let g = run(
            m,
            r#"
try:
    ri.StorageParams(-1.0, 7.0)
    raised = False
except ValueError:
    raised = True
"#,
        );
        let raised: bool = g.get_item("raised").unwrap().unwrap().extract().unwrap();
        assert!(raised);
    });
}

#[test]
fn scenarios_are_reproducible() {
    with_module(|m| {
        let g = run(
            m,
            r#"
model = ri.RenewableModel([10.0] * 24, [3.0] * 24, 40.0)
same = model.scenario(7, 3) == model.scenario(7, 3)
different = model.scenario(7, 3) != model.scenario(7, 4)
"#,
        );
        for k in ["same", "different"] {
            let v: bool = g.get_item(k).unwrap().unwrap().extract().unwrap();
            assert!(v, "{k}");
        }
    });
}
