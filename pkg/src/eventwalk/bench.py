"""Benchmarks: strip bounds, engine scale pair and numba vs plain Python.

Output is long-format CSV with the fixed columns ``suite,case,metric,value``.
The ``jit`` suite times each workload in a child process, once with numba and
once with ``EVENTWALK_NO_JIT=1``; the compiled side is timed after a warm-up
call so compilation is excluded.
"""

from __future__ import annotations

import csv
import io
import json
import os
import subprocess
import sys
import time

import numpy as np

from .bounds import lookup_bound, storage_bound

SUITES = ("strip", "engine-scale", "jit")
CSV_COLUMNS = ("suite", "case", "metric", "value")
WORKLOADS = ("strip", "engine", "walk")


def strip_rows(seed: int = 0, sizes=(8, 16, 32, 64, 128), strips=(1, 2, 3)):
    from .strip import build

    rng = np.random.default_rng(seed)
    for n in sizes:
        y = rng.permutation(n).astype(float)
        for s in strips:
            st = build(y, s)
            ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
            keep = ii != jj
            pairs = np.stack([ii[keep], jj[keep]], axis=1)
            qs = np.concatenate([
                np.column_stack([pairs, np.full(len(pairs), a), np.full(len(pairs), r)])
                for a in (1, 2, 3) for r in (0, 1)
            ])
            t0 = time.perf_counter()
            _, looks = st.query_batch(qs)
            dt = time.perf_counter() - t0
            case = f"n={n},s={s}"
            cells = st.layout.storage_cells()
            yield ("strip", case, "storage_cells", cells)
            yield ("strip", case, "storage_bound", round(storage_bound(n, s), 1))
            yield ("strip", case, "storage_ratio", round(cells / (s * n ** (1 + 1 / s)), 3))
            yield ("strip", case, "max_lookups", int(looks.max()))
            yield ("strip", case, "lookup_bound", lookup_bound(s))
            yield ("strip", case, "mean_lookups", round(float(looks.mean()), 3))
            yield ("strip", case, "build_ops", st.build_ops)
            yield ("strip", case, "query_us", round(1e6 * dt / len(qs), 3))


def engine_scale_rows(seed: int = 0, steps: int = 200_000, sizes=(1_000, 10_000)):
    from .cycle import CycleEngine, run_trace
    from .event_graph import random_cycle_graph

    means = []
    for n in sizes:
        g = random_cycle_graph(np.random.default_rng(seed), n)
        eng = CycleEngine(g, "random", seed=seed)
        t0 = time.perf_counter()
        rep = run_trace(eng, steps=steps, seed=seed)
        dt = time.perf_counter() - t0
        m = rep.metrics
        case = f"n={n}"
        means.append(m["fg_ops_mean"])
        yield ("engine-scale", case, "fg_ops_mean", round(m["fg_ops_mean"], 4))
        yield ("engine-scale", case, "bg_ops_max", m["bg_ops_max"])
        yield ("engine-scale", case, "bg_budget", m["bg_budget"])
        yield ("engine-scale", case, "not_ready_steady", m["not_ready_steady"])
        yield ("engine-scale", case, "oracle_mismatches", rep.oracle_mismatches)
        yield ("engine-scale", case, "us_per_step", round(1e6 * dt / steps, 3))
    if len(means) == 2:
        yield ("engine-scale", f"n={sizes[1]}/n={sizes[0]}", "fg_ops_ratio", round(means[1] / means[0], 4))


# ---------------------------------------------------------------- jit parity


def _workload(name: str) -> None:
    if name == "strip":
        from .strip import build

        y = np.random.default_rng(1).permutation(96).astype(float)
        st = build(y, 2)
        qs = np.array([[i, (i * 7 + 3) % 96, 1 + i % 3, i % 2] for i in range(96) if i != (i * 7 + 3) % 96])
        st.query_batch(np.repeat(qs, 20, axis=0))
    elif name == "engine":
        from .cycle import CycleEngine, adversary_directions, run_trace
        from .event_graph import random_cycle_graph

        g = random_cycle_graph(np.random.default_rng(1), 300)
        run_trace(CycleEngine(g, "random"), adversary_directions("restart", 300, 3000, 1), oracle=False)
    elif name == "walk":
        from .decorated import shortest_certifying_walk
        from .event_graph import gen_lower_bound_path, lower_bound_target

        g, v = gen_lower_bound_path(10)
        shortest_certifying_walk(g, v, lower_bound_target(10))
    else:
        raise ValueError(f"unknown workload {name!r}")


def _worker(name: str, repeats: int) -> None:
    from ._jit import JIT_ENABLED

    if JIT_ENABLED:
        _workload(name)  # compile outside the timed region
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        _workload(name)
        best = min(best, time.perf_counter() - t0)
    print(json.dumps({"workload": name, "jit": JIT_ENABLED, "seconds": best}))


def time_workload(name: str, jit: bool, repeats: int = 3) -> float:
    env = dict(os.environ)
    env["EVENTWALK_NO_JIT"] = "0" if jit else "1"
    out = subprocess.run(
        [sys.executable, "-m", "eventwalk.bench", "--worker", name, str(repeats)],
        env=env, capture_output=True, text=True, check=True,
    )
    return float(json.loads(out.stdout.strip().splitlines()[-1])["seconds"])


def jit_rows(workloads=WORKLOADS, repeats: int = 3):
    for name in workloads:
        fast = time_workload(name, True, repeats)
        slow = time_workload(name, False, 1)
        yield ("jit", name, "numba_s", round(fast, 5))
        yield ("jit", name, "python_s", round(slow, 5))
        yield ("jit", name, "speedup", round(slow / fast, 2) if fast > 0 else float("inf"))


def parse_suites(spec: str) -> list[str]:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    if not names:
        raise ValueError("empty suite list; choose from " + ", ".join(SUITES))
    bad = [s for s in names if s not in SUITES]
    if bad:
        raise ValueError(f"unknown suite(s) {bad}; choose from " + ", ".join(SUITES))
    return names


def run_suites(spec: str, seed: int = 0, steps: int = 200_000) -> list[tuple]:
    rows: list[tuple] = []
    for name in parse_suites(spec):
        if name == "strip":
            rows += strip_rows(seed)
        elif name == "engine-scale":
            rows += engine_scale_rows(seed, steps)
        else:
            rows += jit_rows()
    return rows


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


if __name__ == "__main__":
    if len(sys.argv) >= 3 and sys.argv[1] == "--worker":
        _worker(sys.argv[2], int(sys.argv[3]) if len(sys.argv) > 3 else 3)
    else:
        print(to_csv(run_suites(sys.argv[1] if len(sys.argv) > 1 else "strip,jit")), end="")
