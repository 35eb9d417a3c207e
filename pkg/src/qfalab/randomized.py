"""Seeded random automata for property and Monte Carlo checks."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .automata import Alphabet, Pfa, Qfa, StatePartition


def random_partition(rng: np.random.Generator, n_states: int) -> StatePartition:
    """State 0 is initial; the rest get at least one accepting and one
    rejecting state, with any extras assigned at random."""
    if n_states < 3:
        raise ValueError("need at least 3 states")
    others = rng.permutation(np.arange(1, n_states))
    acc = {int(others[0])}
    rej = {int(others[1])}
    for q in others[2:]:
        kind = rng.integers(3)
        if kind == 0:
            acc.add(int(q))
        elif kind == 1:
            rej.add(int(q))
    return StatePartition(n_states, 0, frozenset(acc), frozenset(rej))


def random_pfa(rng, n_states: int | None = None, alphabet=("0", "1"), concentration: float = 0.5) -> Pfa:
    rng = np.random.default_rng(rng)
    alpha = Alphabet(tuple(alphabet))
    n = int(rng.integers(3, 8)) if n_states is None else n_states
    mats = {s: rng.dirichlet(np.full(n, concentration), size=n) for s in alpha.working}
    return Pfa(alpha, random_partition(rng, n), mats)


def random_qfa(rng, n_states: int | None = None, alphabet=("0", "1")) -> Qfa:
    rng = np.random.default_rng(rng)
    alpha = Alphabet(tuple(alphabet))
    n = int(rng.integers(3, 8)) if n_states is None else n_states
    mats = {s: unitary_group.rvs(n, random_state=rng) for s in alpha.working}
    return Qfa(alpha, random_partition(rng, n), mats)


def random_word(rng, alphabet=("0", "1"), max_len: int = 10) -> str:
    rng = np.random.default_rng(rng)
    length = int(rng.integers(0, max_len + 1))
    return "".join(rng.choice(list(alphabet), size=length))
