import numpy as np
import pytest

from bayesvf.nn import MlpNet


def numeric_grad(f, params, eps=1e-5):
    """Central differences of scalar ``f()`` w.r.t. each array in ``params`` (perturbed in place)."""
    out = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + eps
            hi = f()
            p[idx] = orig - eps
            lo = f()
            p[idx] = orig
            g[idx] = (hi - lo) / (2 * eps)
        out.append(g)
    return out


def rel_error(a, b):
    a = np.concatenate([np.ravel(x) for x in a])
    b = np.concatenate([np.ravel(x) for x in b])
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))


def random_net(rng, sizes, bias_scale=0.5):
    net = MlpNet.init(sizes, rng)
    net.biases = [rng.normal(0, bias_scale, b.shape) for b in net.biases]
    return net


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled by test_acceptance.report; echoed after the run so the gate is visible without -s
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
