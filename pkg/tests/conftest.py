import random

import pytest

from holant.scalars import Cyc
from holant.signatures import Signature
from holant.grids import SignatureGrid


def rand_sig(rng, k, lo=-3, hi=3):
    return Signature([Cyc(rng.randint(lo, hi)) for _ in range(1 << k)], k)


def rand_closed_grid(rng, max_vertices=5, max_arity=3, lo=-3, hi=3):
    """Random closed exact grid: stubs paired uniformly, odd stub padded."""
    nv = rng.randint(2, max_vertices)
    sigs = {}
    stubs = []
    for v in range(nv):
        k = rng.randint(1, max_arity)
        sigs[v] = rand_sig(rng, k, lo, hi)
        stubs += [(v, p) for p in range(1, k + 1)]
    if len(stubs) % 2:
        sigs[nv] = rand_sig(rng, 1, lo, hi)
        stubs.append((nv, 1))
    rng.shuffle(stubs)
    edges = tuple((stubs[2 * i], stubs[2 * i + 1])
                  for i in range(len(stubs) // 2))
    return SignatureGrid(sigs, edges)


def rand_open_grid(rng, max_vertices=5, max_arity=3, max_legs=6):
    """Random open gadget; returns None-free grids only (>=1 dangling leg)."""
    while True:
        nv = rng.randint(1, max_vertices)
        sigs = {}
        stubs = []
        for v in range(nv):
            k = rng.randint(1, max_arity)
            sigs[v] = rand_sig(rng, k)
            stubs += [(v, p) for p in range(1, k + 1)]
        rng.shuffle(stubs)
        edges = []
        while len(stubs) >= 2 and rng.random() < 0.7:
            edges.append((stubs.pop(), stubs.pop()))
        if 1 <= len(stubs) <= max_legs:
            return SignatureGrid(sigs, tuple(edges), tuple(stubs))


@pytest.fixture
def rng():
    return random.Random(0)
