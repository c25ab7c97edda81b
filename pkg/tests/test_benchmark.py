from __future__ import annotations

import numpy as np

from partysolve.benchmark import (kernel_report, run_convergence_experiment,
                                  run_guidance_experiment, run_kernel_benchmark)
from partysolve.evolution import GaConfig
from partysolve.islands import IslandConfig


def test_guidance_outputs(pool500, templates):
    res = run_guidance_experiment(pool500, templates["type1"], attempts=20, seed=1)
    summary = res.summary()
    assert summary["attempts"] == 20 and summary["threshold"] == 0.8
    assert len(res.samples_csv().splitlines()) == 41
    hist = res.histogram_csv(bins=10).splitlines()
    assert len(hist) == 11
    assert sum(int(r.split(",")[2]) for r in hist[1:]) == summary["guided"]["completed"]
    again = run_guidance_experiment(pool500, templates["type1"], attempts=20, seed=1)
    assert np.array_equal(res.guided, again.guided, equal_nan=True)


def test_convergence_outputs(pool500, templates):
    ic = IslandConfig(2, 3, 6, 2)
    res = run_convergence_experiment(pool500, templates["type1"], runs=2, generations=3,
                                     ga_config=GaConfig(), island_config=ic)
    s = res.summary()
    assert s["runs"] == 2 and set(s["median_diversity"]) == {"vanilla", "islands"}
    assert len(res.bands()) == 2 * 4
    assert res.runs_csv("islands").splitlines()[0].startswith("run,generation")
    # the arms start from the same initial population
    for v, m in zip(res.vanilla, res.islands):
        assert v.rows[0] == m.rows[0]


def test_convergence_budget_equalises_arms(pool500, templates):
    ic = IslandConfig(2, 3, 6, 2)
    res = run_convergence_experiment(pool500, templates["type1"], runs=1, generations=30,
                                     ga_config=GaConfig(), island_config=ic, budget=40)
    for logs in (res.vanilla, res.islands):
        assert logs[0].rows[-1].evaluations >= 40 > logs[0].rows[-2].evaluations


def test_kernel_benchmark_reports_agreement(pool500, templates):
    timings = run_kernel_benchmark(pool500, templates["type2"], calls=5)
    assert {t.name for t in timings} >= {"best_candidates", "filter_candidates", "build_path"}
    assert all(t.identical in (True, None) for t in timings)
    assert "build_path" in kernel_report(timings)
