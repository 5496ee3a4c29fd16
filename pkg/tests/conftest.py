import numpy as np
import pytest

from cogarch import CogarchParams, JumpDist, LevyDriver, build_model

PI2 = np.pi ** 2
EX7_BETA = (1.2, 0.48 + PI2, 0.064 + 0.4 * PI2)


@pytest.fixture(scope="session")
def ex7():
    m = build_model(CogarchParams(1.0, (1.0,), EX7_BETA))
    d = LevyDriver(2.0, JumpDist.normal(0.74))
    return m, d


def random_stable_model(rng, q, p=1, max_tries=200):
    """A model with all roots of b in the left half-plane and distinct."""
    from cogarch.errors import CogarchError
    for _ in range(max_tries):
        roots = []
        while len(roots) < q:
            if q - len(roots) >= 2 and rng.random() < 0.5:
                re, im = -rng.uniform(0.2, 2.0), rng.uniform(0.3, 3.0)
                roots += [complex(re, im), complex(re, -im)]
            else:
                roots.append(complex(-rng.uniform(0.2, 3.0)))
        beta = np.real(np.poly(roots))[1:]
        alpha = rng.uniform(0.1, 1.0, p)
        try:
            return build_model(CogarchParams(rng.uniform(0.2, 2.0), alpha, beta))
        except CogarchError:
            continue
    raise RuntimeError("no admissible model found")
