"""Smoke test for the dark_diode_py extension.

Build the extension first:

    cargo build --release -p dark-diode-py

then run `python3 python/smoke_test.py`. The script loads the shared
library from target/release (or the path in DARK_DIODE_PY_LIB).
"""

import importlib.util
import math
import os
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    lib = os.environ.get("DARK_DIODE_PY_LIB")
    path = pathlib.Path(lib) if lib else ROOT / "target" / "release" / "libdark_diode_py.so"
    if not path.exists():
        sys.exit(f"extension not found at {path}; run cargo build --release -p dark-diode-py")
    spec = importlib.util.spec_from_file_location("dark_diode_py", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    dd = load()
    p = dd.Params()
    print(p)

    a = dd.analytic_transport(p)
    assert close(a["current_forward"], 0.0380952, 1e-5), a
    assert close(a["current_reverse"], -4.11111e-4, 1e-5), a
    assert close(a["rectification"], 92.664, 1e-4), a

    rev = dd.markov_steady_state(p.with_bias("reverse"))
    assert abs(rev[0] - 0.99736) < 1e-4, rev
    assert dd.m_max(0.5) == 6 and dd.m_max(0.0) == 4
    assert math.isinf(dd.rectification(0.1, 0.0))

    try:
        dd.Params(n_cold=0.6)
    except ValueError as err:
        print("rejected:", err)
    else:
        raise AssertionError("n_cold above n_hot accepted")

    # A small, fast operating point: short evolution with early stopping.
    small = dd.Params(delta_omega=30.0, gamma=3.0)
    fwd = dd.steady_state(small, t_final=200.0, early_stop=True)
    rev = dd.steady_state(small.with_bias("reverse"), t_final=200.0, early_stop=True)
    balance = abs(fwd["current_left"] + fwd["current_right"]) / abs(fwd["current_left"])
    assert balance < 1e-2, fwd
    assert fwd["bias_current"] > 0 > rev["bias_current"]
    assert rev["p_dark"] > fwd["p_dark"]
    print(
        "delta_omega = 30: J_f = %.4e, J_r = %.4e, R = %.2f"
        % (fwd["bias_current"], rev["bias_current"],
           dd.rectification(fwd["bias_current"], rev["bias_current"]))
    )
    print("smoke test passed")


if __name__ == "__main__":
    main()
