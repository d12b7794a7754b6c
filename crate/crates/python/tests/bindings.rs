use pyo3::ffi::c_str;
use menunet_py::menunet_py as module;
use pyo3::prelude::*;

fn with_module(script: &std::ffi::CStr) {
    pyo3::append_to_inittab!(module);
    Python::initialize();
    Python::attach(|py| {
        py.run(script, None, None).map_err(|e| {
            e.display(py);
            e
        })
    })
    .unwrap();
}

#[test]
fn bindings_round_trip() {
    with_module(c_str!(
        r#"
import json, menunet_py as m
menu, rev = m.optimal_triangle(2.0)
assert abs(rev - 2 / 27 * (6 + 2 ** 0.5)) < 1e-12, rev
tri = m.Distribution.uniform_triangle(2.0)
assert abs(m.exact_revenue(menu, tri) - rev) < 1e-12
cert = json.loads(m.certify(2.0))
assert cert["verdict"] == "pass", cert
again = m.Menu.from_json(menu.to_json())
assert again.items() == menu.items()
assert menu.choose([0.0, 0.0]) == 0

sq = m.Distribution.uniform_rect(1.0, 1.0)
pts, mass = sq.grid(4)
assert len(pts) == 16 and abs(sum(mass) - 1) < 1e-12
lp = m.solve_lp(sq, 4)
assert lp["max_ic_violation"] < 1e-6
assert m.grid_revenue(lp["menu"], sq, 4) <= lp["objective"] + 1e-9

res = m.train('''
[distribution]
kind = "uniform_rect"
c1 = 1.0
c2 = 1.0
[train]
k = 2
iterations = 200
restarts = 1
grid_n = 20
''')
assert len(res.menu) == 2 and len(res.trace) == 200
assert res.revenue > 0.4, res.revenue
try:
    m.Distribution.uniform_rect(1.0, -1.0)
    raise AssertionError("expected ValueError")
except ValueError:
    pass
"#
    ));
}
