"""Shared generators: random valid partial actions built by restriction.

Restricting a global permutation action to an arbitrary subset always yields
a valid partial action, so these generators produce axioms-by-construction
inputs for randomized suites.  Cyclic groups act globally through a
permutation whose cycle lengths divide the order; free groups through
arbitrary permutations per generator.
"""

import numpy as np
import pytest

import parfell as pf


def _divisor_cycles(rng: np.random.Generator, m: int, n: int) -> list[int]:
    divs = [d for d in range(1, m + 1) if m % d == 0]
    lengths = []
    left = n
    while left > 0:
        opts = [d for d in divs if d <= left]
        d = int(rng.choice(opts))
        lengths.append(d)
        left -= d
    return lengths


def _perm_with_order_dividing(rng: np.random.Generator, m: int, n: int) -> list[int]:
    pts = list(rng.permutation(n))
    perm = [0] * n
    pos = 0
    for length in _divisor_cycles(rng, m, n):
        cyc = pts[pos : pos + length]
        for i, z in enumerate(cyc):
            perm[z] = cyc[(i + 1) % length]
        pos += length
    return perm


def random_cyclic_action(rng: np.random.Generator, m: int, n_global: int) -> pf.FinitePartialAction:
    group = pf.cyclic_group(m)
    perm = _perm_with_order_dividing(rng, m, n_global)
    power = list(range(n_global))
    global_maps = {}
    for j in range(m):
        global_maps[j] = list(power)
        power = [perm[z] for z in power]
    k = int(rng.integers(1, n_global + 1))
    subset = rng.choice(n_global, size=k, replace=False)
    return pf.restriction_action(group, global_maps, subset)


def random_free_action(rng: np.random.Generator, rank: int, n_global: int) -> pf.FinitePartialAction:
    group = pf.FreeGroup(rank=rank)
    global_maps = {}
    for i in range(1, rank + 1):
        perm = list(rng.permutation(n_global))
        inv = [0] * n_global
        for z, w in enumerate(perm):
            inv[w] = z
        global_maps[(i,)] = perm
        global_maps[(-i,)] = inv
    k = int(rng.integers(1, n_global + 1))
    subset = rng.choice(n_global, size=k, replace=False)
    return pf.restriction_action(group, global_maps, subset)


GROUP_MENU = [("cyclic", 2), ("cyclic", 3), ("cyclic", 4), ("cyclic", 5),
              ("cyclic", 6), ("free", 1), ("free", 2)]


def random_valid_action(rng: np.random.Generator, max_points: int = 8) -> pf.FinitePartialAction:
    kind, par = GROUP_MENU[int(rng.integers(0, len(GROUP_MENU)))]
    n_global = int(rng.integers(2, max_points + 1))
    if kind == "cyclic":
        return random_cyclic_action(rng, par, n_global)
    return random_free_action(rng, par, n_global)


def scan_elements(action: pf.FinitePartialAction, radius: int = 3) -> list:
    if isinstance(action.group, pf.FiniteGroup):
        return action.group.ball(1)
    return action.group.ball(radius)


@pytest.fixture
def swap_action() -> pf.FinitePartialAction:
    return pf.FinitePartialAction(pf.cyclic_group(2), 2, {1: {0: 1, 1: 0}})


@pytest.fixture
def fixed_point_action() -> pf.FinitePartialAction:
    return pf.FinitePartialAction(pf.cyclic_group(2), 2, {1: {0: 0}})
