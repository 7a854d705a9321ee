"""Smoke test for the polarcbo_py extension module."""

import json
import math

import polarcbo_py as pc


def main():
    ack = pc.Objective("ackley", 2)
    assert abs(ack([0.0, 0.0])) < 1e-12
    assert ack([1.0, 1.0]) > 0.0

    mm = pc.Objective("multimodal-ackley", 2)
    assert len(mm.minimizers) == 3
    for z in mm.minimizers:
        assert abs(mm(z)) < 1e-9

    gauss = pc.Kernel("gaussian", 1.0)
    assert gauss([0.0, 0.0], [0.0, 0.0]) == 1.0
    assert abs(gauss.log_eval([0.0], [2.0]) + 2.0) < 1e-14
    assert pc.Kernel("bounded-confidence", 1.0)([0.0], [1.0]) == 1.0

    pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [3.0, 3.0]]
    m = pc.standard_mean(pts, ack, 1.0)
    pm = pc.polarized_means(pts, pc.Kernel("constant"), ack, 1.0)
    assert all(row == m for row in pm), "constant kernel must reproduce the standard mean"

    assert pc.detect_minima([[3.2, 2.1]], [[3.0, 2.0]]) == [0]
    assert pc.detect_minima([[3.3, 2.0]], [[3.0, 2.0]]) == []

    mx = pc.stationary_mean([0.0], [[1.0]], 1.0, 1.0, [3.0])
    assert abs(mx[0] - 1.0) < 1e-12

    quad = pc.Objective("rastrigin", 1)
    p = pc.prox(quad, 0.1, [0.05])
    assert abs(p[0]) < 0.05

    config = "\n".join([
        'objective = "multimodal-ackley"',
        "dim = 2",
        'method = "polarized-cbo"',
        "kappa = 0.5",
        "particles = 40",
        "steps = 100",
        "seeds = [0, 1]",
        "record-timing = false",
    ])
    report = json.loads(pc.run(config))[0]
    agg = report["aggregate"]
    assert agg["frac_ge1"] >= agg["frac_ge2"] >= agg["frac_ge3"]
    assert len(report["seeds"]) == 2
    assert not math.isnan(report["seeds"][0]["final_means"]["data"][0])

    assert len(pc.preset_configs("table1")) == 16
    passed, line = pc.check(1)
    assert passed, line
    print(line)
    print("polarcbo_py smoke test ok", pc.__version__)


if __name__ == "__main__":
    main()
