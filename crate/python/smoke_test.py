#!/usr/bin/env python3
"""Smoke test for the spinbus Python extension.

Builds the extension with cargo if needed, imports it, and checks a handful
of known values end to end. Run from anywhere:

    python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
BUILD_DIR = REPO / "python" / "build"


def build_extension() -> Path:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "spinbus-py"],
        cwd=REPO,
        check=True,
    )
    produced = REPO / "target" / "release" / "libspinbus_py.so"
    if not produced.exists():  # macOS naming
        produced = REPO / "target" / "release" / "libspinbus_py.dylib"
    BUILD_DIR.mkdir(parents=True, exist_ok=True)
    module = BUILD_DIR / "spinbus.so"
    if not module.exists() or produced.stat().st_mtime > module.stat().st_mtime:
        shutil.copy2(produced, module)
    return BUILD_DIR


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main() -> None:
    sys.path.insert(0, str(build_extension()))
    import spinbus

    # three-site ring spectrum: {-2, -2, 4} in units of J
    ring3 = spinbus.SpinGraph.ring(3, coupling=1.0, flux=0.0)
    p3 = spinbus.Propagator(ring3)
    lo, mid, hi = p3.eigenvalues()
    approx(lo, -2.0)
    approx(mid, -2.0)
    approx(hi, 4.0)

    # two-site chain: f_10(t) = -i sin 2t, perfect transfer at t = pi/4
    chain2 = spinbus.SpinGraph.chain(2)
    p2 = spinbus.Propagator(chain2)
    f10 = p2.amplitude(math.pi / 8, 1, 0)
    approx(f10.real, 0.0)
    approx(f10.imag, -math.sin(math.pi / 4))
    approx(abs(p2.amplitude(math.pi / 4, 1, 0)), 1.0)

    # concurrence of the evolved pair reaches 1 at t = pi/8, and the
    # closed form agrees with the Wootters route
    e = spinbus.Encoding(0)
    c = spinbus.concurrence(p2, e, 0, 1, math.pi / 8)
    approx(c, 1.0)
    a, b = spinbus.pair_amplitudes(p2, e, 0, 1, math.pi / 8)
    approx(spinbus.wootters_concurrence(a, b), c, 1e-10)

    # gauge transforms leave |f| alone
    ring5 = spinbus.SpinGraph.ring(5, flux=0.4)
    gauged = ring5.gauge_transform([0.0, 1.3, -2.1, 0.7, 0.2])
    pa = spinbus.Propagator(ring5)
    pb = spinbus.Propagator(gauged)
    approx(abs(pa.amplitude(3.7, 2, 0)), abs(pb.amplitude(3.7, 2, 0)), 1e-10)

    # the unique mirror of the 5-chain, and its class-I configuration
    chain5 = spinbus.SpinGraph.chain(5)
    invs = spinbus.find_involutions(chain5)
    assert [4, 3, 2, 1, 0] in invs, invs
    assert spinbus.classify(chain5, 2, 1, 3) == "class-i"
    assert spinbus.classify(chain5, 0, 1, 3) == "none"

    # class-I joint optimum: disentangled encoding wins
    p5 = spinbus.Propagator(chain5)
    best = spinbus.optimize_over_time(p5, 2, 1, 1, 3, horizon=40.0, steps=2048)
    assert abs(best.alpha) >= 0.95, best.alpha
    assert best.method == "closed-form"

    # flux-driven transfer on the 5-ring beats the zero-flux 1/sqrt(2) bound
    found = spinbus.flux_transfer_search(5, 0, 2, flux_points=128, time_points=1024)
    assert found.amplitude >= 0.95, found.amplitude

    # two-stage targeting plan from one fixed site
    plan = spinbus.plan_targeting(5, 0, 2, 4, flux_points=128, time_points=1024)
    assert plan.transfer_site == 3
    assert plan.achieved_c >= 0.8, plan.achieved_c
    assert len(plan.stages) == 2

    # disconnected regions factorize exactly
    g = spinbus.SpinGraph.from_json(
        '{"sites":[{"id":0},{"id":1},{"id":2},{"id":3},{"id":4}],'
        '"bonds":[{"i":0,"j":1,"J":1.0},{"i":2,"j":3,"J":1.0},{"i":3,"j":4,"J":1.0}]}'
    )
    assert g.connected_components() == [0, 0, 1, 1, 1]
    me = spinbus.Encoding.me(0, 2)
    times = [0.1 * k for k in range(100)]
    deviation = spinbus.isolated_factorization_check(g, me, 1, 4, times)
    assert deviation <= 1e-10, deviation

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
