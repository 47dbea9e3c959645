"""Smoke test for the zeroledger Python bindings.

Build and install the extension first:

    pip install --no-build-isolation ./crates/py

then run ``python python/smoke_test.py``.
"""

import math
import sys

import zeroledger as zl


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name}" + (f"  ({detail})" if detail else ""))
    return ok


def raises_value_error(fn, *args):
    try:
        fn(*args)
    except ValueError:
        return True
    return False


def main():
    results = []

    results.append(check("g(1) = 11/30", abs(zl.g(1.0) - 11 / 30) < 1e-15))
    results.append(check("G(0) = 8/9", abs(zl.G(0.0) - 8 / 9) < 1e-12))
    results.append(check("g outside [0, 2] is rejected", raises_value_error(zl.g, 2.5)))

    k = zl.Kernel(0.8, 1.0)
    d = k.delta(2.0)
    results.append(check("Delta = psi - xi", abs(d - (k.psi(2.0) - k.xi())) < 1e-14, f"Delta = {d:.6f}"))

    b = zl.b_bound(0.047065, 0.128170, 0.084299, 3.08)
    results.append(check("B at the stated triple <= 49.7", b <= 49.7, f"{b:.4f}"))

    t = zl.t_bound(0.291, 3.08)
    results.append(check("T(3.08) <= 0.675", t.bound <= 0.675 + 5e-4, f"{t.bound:.6f}"))

    st = zl.t_bound_staircase(0.291, 1.58, 1.58)
    results.append(check("staircase T(1.58) <= 0.0380", st.bound <= 0.0380 + 5e-4, f"{st.bound:.6f}"))

    r = zl.r_bound(0.291, 1.273, 1.08, 1.08, 1.08)
    results.append(check("R(1.273) <= 0.2668", r.bound <= 0.2668 + 5e-4, f"{r.bound:.6f} at x = {r.x:.4f}"))

    t_, r_, s_ = zl.split_s([0.1, 0.7, 1.2, 2.5, 4.0], 0.291, 1.3)
    results.append(check("S = T + R", abs(s_ - (t_ + r_)) <= 1e-15 * s_))

    rows = zl.verify_tables()
    results.append(check("31 table rows, all passing", len(rows) == 31 and all(x.passed for x in rows)))

    rep = zl.verify_all(0.291, 0.01)
    results.append(check("cases certify at delta = 0.291", rep.overall_pass, f"c1 = {rep.c1:.5f}"))
    case1 = [c for c in rep.cases if c.case_id == 1][0]
    results.append(check("case (1) audit carries a discrepancy note", case1.discrepancy is not None))
    results.append(check("report JSON is available", '"cases"' in rep.json))

    s = zl.delta_search(0.291, 0.292, 1e-3)
    results.append(check("narrow search is a single probe", s.degenerate and s.outcome == "single_probe"))

    adv = zl.adversary_audit(2, 200)
    results.append(check("adversary stays below the certificate", all(a.sound for a in adv),
                         ", ".join(f"{a.value:.4f} <= {a.certificate:.4f}" for a in adv)))

    results.append(check("finite outputs", all(math.isfinite(x) for x in (b, t.bound, st.bound, r.bound))))

    failed = results.count(False)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
