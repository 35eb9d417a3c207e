import itertools

import numpy as np
import pytest

from qfalab.automata import LEFT, RIGHT, Alphabet, Dfa, StatePartition


def path_enumeration_pfa(pfa, word):
    """Acceptance statistics by summing over every state path.

    Independent of the vector propagation in the package; only usable for
    tiny automata and short words.
    """
    symbols = [LEFT, *word, RIGHT]
    dense = {s: (m.toarray() if hasattr(m, "toarray") else np.asarray(m)) for s, m in pfa.matrices.items()}
    part = pfa.partition
    totals = {"acc": 0.0, "rej": 0.0, "non": 0.0}

    def walk(q, pos, prob):
        if prob == 0:
            return
        if pos == len(symbols):
            totals["non"] += prob
            return
        row = dense[symbols[pos]][q]
        for t in range(len(row)):
            kind = part.kind(t)
            if kind == "non":
                walk(t, pos + 1, prob * row[t])
            else:
                totals[kind] += prob * row[t]

    walk(part.initial, 0, 1.0)
    return totals["acc"], totals["rej"], totals["non"]


def normalized_qfa_oracle(qfa, word):
    """Measure-after-each-symbol with explicit projectors and a normalised
    state, tracking the survival probability separately."""
    n = qfa.n_states
    acc = np.diag([1.0 if q in qfa.partition.acc else 0.0 for q in range(n)])
    rej = np.diag([1.0 if q in qfa.partition.rej else 0.0 for q in range(n)])
    non = np.eye(n) - acc - rej
    psi = np.zeros(n, dtype=complex)
    psi[qfa.partition.initial] = 1
    alive = 1.0
    p_acc = p_rej = 0.0
    for s in [LEFT, *word, RIGHT]:
        u = qfa.unitaries[s]
        u = u.toarray() if hasattr(u, "toarray") else u
        phi = u @ psi
        pa = np.vdot(acc @ phi, acc @ phi).real
        pr = np.vdot(rej @ phi, rej @ phi).real
        pn = np.vdot(non @ phi, non @ phi).real
        p_acc += alive * pa
        p_rej += alive * pr
        alive *= pn
        if pn == 0:
            break
        psi = non @ phi / np.sqrt(pn)
    return p_acc, p_rej, alive


def random_dfa(rng, n_states=None, alphabet=("0", "1")):
    rng = np.random.default_rng(rng)
    n = int(rng.integers(3, 9)) if n_states is None else n_states
    alpha = Alphabet(alphabet)
    acc, rej = n - 2, n - 1
    table = {}
    for s in alpha.working:
        row = [int(rng.integers(n)) for _ in range(n)]
        row[acc], row[rej] = acc, rej
        table[s] = tuple(row)
    return Dfa(alpha, StatePartition(n, 0, frozenset({acc}), frozenset({rej})), table)


def all_words(alphabet, max_len, min_len=0):
    for length in range(min_len, max_len + 1):
        for w in itertools.product(alphabet, repeat=length):
            yield "".join(w)


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
