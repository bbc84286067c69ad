"""Smoke test for the germ_coupling extension module.

Build and run from the repository root:

    cargo build --release -p germ-python
    cp target/release/libgerm_coupling.so python/germ_coupling.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import germ_coupling as g


def check(cond, msg):
    if not cond:
        raise AssertionError(msg)


def main():
    check(abs(g.std_normal_cdf(1.0) - 0.8413447461) < 1e-9, "normal cdf")
    check(abs(g.frag_cdf(2.0, 10.0) - (1 - 0.0016)) < 1e-3, "frag cdf")
    check(g.levy_cdf(1.0, 0.0) == 0.0, "levy cdf at 0")

    # Hand-traced reflection example.
    w = g.Path(1.0, [0.0, -0.5, -0.1])
    check(g.h_theta(w, 2.0).values == [0.0, 1.5, 2.1], "h_theta example")
    branch = g.germ_transform(w, 0.9, 2.0)
    check(branch.values == [0.0, 1.5, 2.1], "germ_transform example")
    check(g.frag_time(branch, w) == 0.5, "frag_time example")
    check(g.frag_time(w, w) == math.inf, "identical paths never split")
    check(g.last_visit(g.Path(2.0, [0.0, 1.0, -1.0]), 0.0) == 1.5, "last_visit example")

    try:
        g.germ_transform(w, 0.5, -1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative drift must raise ValueError")

    stream = g.RngStream(7, 1)
    stem = g.sample_bm(4.0, 2000, stream)
    check(len(stem) == 2001 and stem.values[0] == 0.0, "sample_bm shape")
    branch, tau = g.couple(stem, stream.uniform01(), 2.0)
    check(tau is not None and tau > 0.0, "frag time positive")
    if tau != math.inf:
        k = round(tau / stem.dt)
        check(stem.values[:k] == branch.values[:k], "germ property")

    thetas = [0.5, 1.0, 2.0, 4.0, 8.0]
    primal = g.frag_process(stem, thetas)
    dual = g.frag_process_dual(stem, thetas)
    finite = [t if t is not None else 0.0 for t in primal]
    check(all(a >= b for a, b in zip(finite, finite[1:])), "monotone frag process")
    for a, b in zip(primal, dual):
        if a is not None and b is not None and math.isfinite(a) and math.isfinite(b):
            check(abs(a - b) <= stem.dt * (1 + 1e-9), "dual agrees")

    times, values = g.time_invert(stem, 0.01)
    check(times == sorted(times), "inverted grid ascending")

    draws = [g.sample_stable_half_passage(1.0, stream) for _ in range(1000)]
    check(all(d > 0 for d in draws), "stable draws positive")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "stem.csv")
        g.save_csv(stem, path)
        back = g.load_csv(path)
        check(back.values == stem.values, "csv round trip")
        try:
            g.load_csv(os.path.join(tmp, "missing.csv"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file must raise OSError")

    if "--full" in sys.argv:
        reports = json.loads(g.run_verify(0))
        for r in reports:
            print("PASS" if r["pass"] else "FAIL", r["test"])
        check(all(r["pass"] for r in reports), "verification suite")

    print("germ_coupling", g.__version__, "smoke test OK")


if __name__ == "__main__":
    main()
