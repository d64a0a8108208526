#!/usr/bin/env python3
"""End-to-end smoke test for the realinterp_py extension module.

Builds the cdylib with cargo, loads it from a temporary directory, and
exercises the main surface: grids, weight calculus, J-method norms,
commutators, the K-method bridge, and one verification suite. Exits
nonzero if any check fails.
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent

failures = []


def check(name, ok, detail=""):
    tag = "ok  " if ok else "FAIL"
    line = f"[{tag}] {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    if not ok:
        failures.append(name)


def expect_raises(name, exc_type, fn):
    try:
        fn()
    except exc_type as e:
        check(name, True, f"{exc_type.__name__}: {e}")
    except Exception as e:  # noqa: BLE001 - report the wrong type as a failure
        check(name, False, f"raised {type(e).__name__} instead of {exc_type.__name__}")
    else:
        check(name, False, "no exception raised")


def build_and_import():
    subprocess.run(
        ["cargo", "build", "-p", "realinterp-py"],
        cwd=REPO_ROOT,
        check=True,
    )
    lib = REPO_ROOT / "target" / "debug" / "librealinterp_py.so"
    if not lib.exists():  # macOS fallback
        lib = REPO_ROOT / "target" / "debug" / "librealinterp_py.dylib"
    stage = Path(tempfile.mkdtemp(prefix="realinterp-smoke-"))
    shutil.copy2(lib, stage / "realinterp_py.so")
    sys.path.insert(0, str(stage))
    import realinterp_py  # noqa: PLC0415

    return realinterp_py


def main():
    ri = build_and_import()
    print(f"loaded realinterp_py {ri.__version__}")

    # Grids.
    grid = ri.Grid(1e-6, 1e6, 1201)
    check("grid node count", grid.n_nodes == 1201)
    nodes = grid.nodes()
    check("grid endpoints", abs(nodes[0] - 1e-6) < 1e-18 and abs(nodes[-1] - 1e6) < 1e-8)
    check("grid contains t=1", any(abs(t - 1.0) < 1e-12 for t in nodes))
    check(
        "haar step",
        abs(grid.haar_step - math.log(1e12) / 1200) < 1e-12,
        f"{grid.haar_step:.6f}",
    )
    expect_raises("reversed grid rejected", ValueError, lambda: ri.Grid(10.0, 1.0, 5))

    # Weight calculus.
    w_log = ri.Weight.log()
    wn = w_log.w_norm(grid)
    check("w_norm(log) ~ 1", abs(wn - 1.0) <= 0.02, f"{wn:.5f}")
    wn_sin = ri.Weight.sin_log().w_norm(grid)
    check(
        "w_norm(sin log) ~ sqrt(2)/2",
        abs(wn_sin - math.sqrt(2) / 2) <= 0.02,
        f"{wn_sin:.5f}",
    )
    sharp = w_log.sharp(grid)
    mid = nodes.index(min(nodes, key=lambda t: abs(t - 1.0)))
    check("sharp(log) ~ -1 at t=1", abs(sharp[mid] + 1.0) <= 0.02, f"{sharp[mid]:.5f}")
    wn_const = ri.Weight.constant(3.0).w_norm(grid)
    check("w_norm(constant) ~ 0", wn_const <= 1e-9, f"{wn_const:.2e}")
    small = ri.Grid(1e-3, 1e3, 121)
    resampled = ri.Weight.samples(small, w_log.sample(small))
    drift = abs(resampled.w_norm(small) - w_log.w_norm(small))
    check("sampled log matches analytic norm", drift <= 0.05, f"drift {drift:.4f}")

    # J-method norm: scalar closed form at theta=1/2, q=inf.
    pair1 = ri.Pair("l1", [1.0], "l1", [1.0])
    tq_inf = ri.ThetaQ(0.5, "inf")
    check("theta getter", tq_inf.theta == 0.5)
    value, u = ri.jnorm([1.0], pair1, tq_inf, grid)
    check("jnorm scalar ~ 0.25", abs(value - 0.25) <= 0.005, f"{value:.6f}")
    check(
        "representation shape",
        len(u) == grid.n_nodes and all(len(row) == 1 for row in u),
    )
    recon = sum(row[0] for row in u) * grid.haar_step
    check("representation reconstructs f", abs(recon - 1.0) <= 1e-9, f"{recon:.2e}")
    expect_raises(
        "bad q rejected", ValueError, lambda: ri.ThetaQ(0.5, "bogus")
    )
    expect_raises(
        "bad method rejected",
        ValueError,
        lambda: ri.jnorm([1.0], pair1, tq_inf, grid, method="magic"),
    )

    # Commutators on a small pair.
    cgrid = ri.Grid(1e-4, 1e4, 161)
    pair2 = ri.Pair("l1", [1.0, 1.0], "l1", [10.0, 0.1])
    f = [1.0, -0.5]
    ident = ri.Operator.identity(pair2)
    check("identity pair norm", abs(ident.pair_norm - 1.0) <= 1e-12)
    c_id = ri.commutator(ident, w_log, f, cgrid, tq_inf, order=1, iters=800)
    check("identity commutes exactly", max(abs(v) for v in c_id) == 0.0)
    top = ri.Operator.random(11, pair2, pair2)
    check("random operator normalized", abs(top.pair_norm - 1.0) <= 1e-12)
    c1 = ri.commutator(top, w_log, f, cgrid, tq_inf, order=1, iters=800)
    check("commutator finite", all(math.isfinite(v) for v in c1))
    om = ri.omega(f, w_log, pair2, cgrid, tq_inf, order=1, iters=800)
    check("omega finite", all(math.isfinite(v) for v in om))
    ok = ri.omega_k(f, w_log, pair2, cgrid)
    check("omega_k finite", all(math.isfinite(v) for v in ok))
    expect_raises(
        "order zero rejected",
        ValueError,
        lambda: ri.commutator(top, w_log, f, cgrid, tq_inf, order=0),
    )

    # Verification suite with a reduced campaign.
    cfg = json.dumps(
        {
            "grids": [{"t_min": 1e-5, "t_max": 1e5, "n_nodes": 161}],
            "qs": ["inf"],
            "solver_iters": 2000,
        }
    )
    report = json.loads(ri.run_suite("probe", cfg))
    check("probe suite passes", report["pass"] is True)
    check("probe suite echoes name", report["suite"] == "probe")
    check("probe checks present", len(report["checks"]) > 0)
    expect_raises(
        "unknown suite rejected", ValueError, lambda: ri.run_suite("nonsense")
    )
    expect_raises(
        "config typo rejected",
        ValueError,
        lambda: ri.run_suite("probe", '{"trails": 3}'),
    )

    print()
    if failures:
        print(f"smoke test FAILED: {len(failures)} check(s): {', '.join(failures)}")
        return 1
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
