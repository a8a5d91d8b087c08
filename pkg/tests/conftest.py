import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.scenario_builder import build_scenario, load_scenario  # noqa: E402
from src.utils import load_json, scenario_path  # noqa: E402

SHIPPED = ['renninger', 'maudlin-open', 'maudlin-perfect', 'maudlin-bigbang', 'maudlin-with-c',
           'a-only-perfect', 'fixed-b-perfect', 'renninger-no-e2', 'renninger-chain']
WELL_POSED = [name for name in SHIPPED if name != 'maudlin-open']

INV_SQRT2 = 1 / math.sqrt(2)


def document(name: str) -> dict:
    return load_json(scenario_path(name))


def setup_of(name: str):
    return load_scenario(scenario_path(name))


def single_channel_document(boundary: str = 'open') -> dict:
    return {
        'label': 'single',
        'source': {'t0': 0.0, 'v': 1000.0, 'position': 0.0},
        'channels': [{'name': 'X', 'direction': 1, 'amplitude': {'re': 1.0, 'im': 0.0}}],
        'absorbers': [{'name': 'D', 'channel': 'X', 'distance': 1.0, 'activation': {'kind': 'always'}}],
        'boundary': boundary,
    }


def random_document(rng: np.random.Generator, n_absorbers: int, boundary: str, max_channels: int = 3) -> dict:
    """
    A random valid scenario document.

    Channel amplitudes are random complex numbers normalized to unit total
    weight; absorber i may only be contingent on absorbers 0..i-1, which keeps
    the predicate graph acyclic.
    """
    k = int(rng.integers(1, max_channels + 1))
    amplitudes = rng.normal(size=k) + 1j * rng.normal(size=k)
    amplitudes /= math.sqrt(math.fsum(abs(a) ** 2 for a in amplitudes))
    channels = [{'name': f'ch{i}', 'direction': float(rng.choice([-1, 1])),
                 'amplitude': {'re': float(a.real), 'im': float(a.imag)}} for i, a in enumerate(amplitudes)]

    t0 = float(rng.uniform(0.0, 10.0))
    v = float(rng.uniform(100.0, 2000.0))
    absorbers = []
    for i in range(n_absorbers):
        distance = i + 1.0 + 0.5 * float(rng.random())
        kind = 'always' if i == 0 else str(rng.choice(['always', 'fired', 'not_fired']))
        activation = {'kind': kind}
        if kind != 'always':
            activation['ref'] = f'X{int(rng.integers(0, i))}'
            if rng.random() < 0.5:
                activation['by'] = t0 + float(rng.uniform(0.0, (n_absorbers + 1.5) / v))
        absorbers.append({'name': f'X{i}', 'channel': f'ch{int(rng.integers(0, k))}', 'distance': distance,
                          'activation': activation})

    return {'label': f'random-{n_absorbers}', 'source': {'t0': t0, 'v': v, 'position': 0.0},
            'channels': channels, 'absorbers': absorbers, 'boundary': boundary}


@pytest.fixture
def maudlin_perfect():
    return setup_of('maudlin-perfect')


@pytest.fixture
def maudlin_open():
    return setup_of('maudlin-open')


@pytest.fixture
def maudlin_with_c():
    return setup_of('maudlin-with-c')


@pytest.fixture
def renninger():
    return setup_of('renninger')


@pytest.fixture
def random_setup():
    def make(rng, n_absorbers, boundary, max_channels=3):
        return build_scenario(random_document(rng, n_absorbers, boundary, max_channels))
    return make
