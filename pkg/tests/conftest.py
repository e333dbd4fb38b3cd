import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(20260810)))


def fd_partial(f, alpha, x, step=1e-4):
    """Nested central finite differences of f.eval; oracle for analytic partials."""
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) == 0:
        return float(f.eval(x))
    i = next(j for j, a in enumerate(alpha) if a > 0)
    reduced = list(alpha)
    reduced[i] -= 1
    offset = np.zeros(f.dim)
    offset[i] = step
    x = np.asarray(x, dtype=float)
    return (fd_partial(f, reduced, x + offset, step)
            - fd_partial(f, reduced, x - offset, step)) / (2.0 * step)
