import numpy as np

from qest.probespec import parse_probe_spec
from qest.verify import random_probe_text, run_suite


def test_random_specs_parse():
    rng = np.random.default_rng(3)
    seen_anc = 0
    for _ in range(200):
        spec = parse_probe_spec(random_probe_text(rng))
        if spec.ancillas:
            seen_anc += 1
            n = spec.n_systems
            assert any(min(a.sites) < n <= max(a.sites) for a in spec.aux_schedule)
    assert seen_anc > 50


def test_suites_pass_small():
    for name, cases in (("chain", 20), ("bound", 20), ("seminorm", 100), ("deferred", 5)):
        res = run_suite(name, cases, seed=11)
        assert res.passed, res.failures[:1]


def test_suite_determinism():
    assert run_suite("chain", 8, 4).as_dict() == run_suite("chain", 8, 4).as_dict()
