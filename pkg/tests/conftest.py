"""Shared fixtures: the two worked examples, a family generator with
exponents growing exponentially in the dimension, and a seeded random
VASS generator for property sweeps."""

import random

import pytest

from vassbound import Vass, parse_vass, validate_connected

V_RUN_TEXT = """\
# four states, three counters
vars x y z
s1 -> s1 : -1 1 -1
s2 -> s2 : 1 -1 1
s3 -> s3 : -1 1 1
s4 -> s4 : 1 -1 -1
s2 -> s1 : 0 0 -1
s1 -> s2 : 0 0 -1
s4 -> s3 : 0 0 -1
s3 -> s4 : 0 0 -1
s1 -> s3 : -1 0 0
s4 -> s2 : 0 0 0
"""

DOUBLING_TEXT = """\
vars x y
s1 -> s1 : -1 2
s2 -> s2 : 2 -1
s1 -> s2 : 0 0
s2 -> s1 : 0 0
"""


def v_family(nu: int) -> Vass:
    """Chained pump/drain blocks: variables of block i reach N^(2^(i-1)),
    its self-loops run N^(2^i) times."""
    variables = []
    for i in range(1, nu + 1):
        variables += [f"x{i}1", f"x{i}2"]
    index = {x: j for j, x in enumerate(variables)}

    def upd(**kw):
        u = [0] * len(variables)
        for name, value in kw.items():
            u[index[name]] = value
        return tuple(u)

    triples = []
    for i in range(1, nu + 1):
        triples.append((f"s{i}1", upd(**{f"x{i}1": -1}), f"s{i}2"))
        triples.append((f"s{i}2", upd(), f"s{i}1"))
        loop = {f"x{i}1": -1, f"x{i}2": 1}
        if i < nu:
            loop[f"x{i+1}1"] = 1
            loop[f"x{i+1}2"] = 1
        triples.append((f"s{i}1", upd(**loop), f"s{i}1"))
        triples.append((f"s{i}2", upd(**{f"x{i}1": 1, f"x{i}2": -1}), f"s{i}2"))
        if i < nu:
            triples.append((f"s{i}1", upd(**{f"x{i}1": -1}), f"s{i+1}1"))
            triples.append((f"s{i+1}2", upd(), f"s{i}2"))
    return Vass.from_triples(variables, triples)


def random_connected_vass(rng: random.Random, max_vars=3, max_states=4,
                          max_transitions=6, span=2) -> Vass:
    """A uniformly scruffy connected VASS with small updates."""
    while True:
        nvars = rng.randint(1, max_vars)
        nstates = rng.randint(1, max_states)
        states = [f"s{i}" for i in range(nstates)]
        triples = []
        seen = set()
        for _ in range(rng.randint(1, max_transitions)):
            src = rng.choice(states)
            dst = rng.choice(states)
            update = tuple(rng.randint(-span, span) for _ in range(nvars))
            if (src, update, dst) in seen:
                continue
            seen.add((src, update, dst))
            triples.append((src, update, dst))
        if not triples:
            continue
        v = Vass.from_triples([f"x{i}" for i in range(nvars)], triples)
        if validate_connected(v):
            return v


@pytest.fixture(scope="session")
def v_run() -> Vass:
    return parse_vass(V_RUN_TEXT)


@pytest.fixture(scope="session")
def doubling() -> Vass:
    return parse_vass(DOUBLING_TEXT)


@pytest.fixture(scope="session")
def v2() -> Vass:
    return v_family(2)
