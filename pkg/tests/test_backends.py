import itertools

import pytest

from otparse import engine
from randsys import inputs_up_to, random_instance

pytestmark = pytest.mark.skipif(engine._kernel is None, reason="compiled kernel not built")


def snapshot(run):
    return (
        [(d.render(), dict(d.marks), d.op, d.start, d.end) for d in run.log],
        run.passes,
        run.base_passes,
        run.combine_count,
    )


def test_same_log_on_example(parser):
    for n in range(7):
        for w in itertools.product("CV", repeat=n):
            assert snapshot(parser.run(w, "compiled")) == snapshot(parser.run(w, "python"))


@pytest.mark.parametrize("seed", range(25))
def test_same_log_on_random_systems(seed):
    g, system, ranking = random_instance(seed)
    p = engine.Parser(g, system, ranking)
    for w in inputs_up_to(3):
        assert snapshot(p.run(w, "compiled")) == snapshot(p.run(w, "python"))


def test_default_backend_respects_environment():
    assert engine.DEFAULT_BACKEND in ("compiled", "python")


def test_pure_environment_selects_python():
    import os
    import subprocess
    import sys

    env = dict(os.environ, OTPARSE_PURE="1")
    code = "from otparse import engine; print(engine.DEFAULT_BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True).stdout.strip()
    assert out == "python"
