"""Concrete automata: the contains-00 DFA, its length-n variants, the
binary-tree reversible automaton and the prime-counting PFAs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .automata import LEFT, RIGHT, Alphabet, Dfa, Pfa, Qfa, StatePartition

BINARY = Alphabet(("0", "1"))
UNARY = Alphabet(("a",))

TREE_RFA_CAP = 10
# rejection margins must clear 1 - epsilon by at least this much
STRICT_MARGIN = 1e-9


class ConstructionError(RuntimeError):
    """A builder could not meet its own correctness check."""


def _require_even(n: int):
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        raise ValueError(f"n must be an even integer >= 2, got {n!r}")


def build_dfa_contains00() -> Dfa:
    """Five-state DFA for words containing ``00``.

    q0: no progress, q1: just read one 0, q2: seen 00.
    """
    q0, q1, q2, acc, rej = range(5)
    transitions = {
        LEFT: (q0, q1, q2, acc, rej),
        "0": (q1, q2, q2, acc, rej),
        "1": (q0, q0, q2, acc, rej),
        RIGHT: (rej, rej, acc, acc, rej),
    }
    part = StatePartition(5, q0, frozenset({acc}), frozenset({rej}))
    return Dfa(BINARY, part, transitions, labels=("q0", "q1", "q2", "acc", "rej"))


def build_dfa_Ln(n: int) -> Dfa:
    """Product of the contains-00 DFA with a letter counter 0..n.

    State ``3*c + s`` has read ``c`` letters and is in contains-00 state
    ``s``. A letter after the n-th goes straight to the rejecting state.
    """
    _require_even(n)
    size = 3 * (n + 1)
    acc, rej = size, size + 1
    after0 = (1, 2, 2)
    after1 = (0, 0, 2)
    zero, one, left, right = [], [], [], []
    for c in range(n + 1):
        for s in range(3):
            q = 3 * c + s
            zero.append(3 * (c + 1) + after0[s] if c < n else rej)
            one.append(3 * (c + 1) + after1[s] if c < n else rej)
            left.append(q)
            right.append(acc if c == n and s == 2 else rej)
    for table in (zero, one, right):
        table.extend([acc, rej])
    left.extend([acc, rej])
    labels = tuple(f"c{c}s{s}" for c in range(n + 1) for s in range(3)) + ("acc", "rej")
    part = StatePartition(size + 2, 0, frozenset({acc}), frozenset({rej}))
    return Dfa(BINARY, part, {LEFT: tuple(left), "0": tuple(zero), "1": tuple(one), RIGHT: tuple(right)}, labels=labels)


def _permutation(targets: list[int]) -> sp.csr_array:
    """Column-convention permutation: basis state ``src`` goes to ``targets[src]``."""
    n = len(targets)
    if sorted(targets) != list(range(n)):
        raise ConstructionError("state map is not a bijection")
    return sp.csr_array((np.ones(n, dtype=complex), (targets, np.arange(n))), shape=(n, n))


def _complete(partial: dict[int, int], n: int) -> list[int]:
    """Extend an injective map to a permutation, pairing the leftover
    sources and targets in index order."""
    free_sources = [q for q in range(n) if q not in partial]
    used = set(partial.values())
    free_targets = [q for q in range(n) if q not in used]
    targets = [0] * n
    for src, dst in partial.items():
        targets[src] = dst
    for src, dst in zip(free_sources, free_targets):
        targets[src] = dst
    return targets


def tree_index(prefix: str) -> int:
    """Heap-order index of a node of the binary prefix tree."""
    return (1 << len(prefix)) - 1 + (int(prefix, 2) if prefix else 0)


def build_tree_rfa(n: int, cap: int = TREE_RFA_CAP) -> Qfa:
    """Reversible automaton that keeps every letter read so far.

    Non-halting basis states are the nodes of the binary prefix tree of
    depth n. Each leaf has its own halting target under ``$`` (accepting
    iff the leaf word has length n and contains 00) and under a further
    letter (rejecting), so every symbol acts as a permutation. With
    ``T = 2**(n+1) - 1`` tree nodes there are ``T`` halting states, the
    minimum that lets ``$`` act injectively on the tree.
    """
    _require_even(n)
    if n > cap:
        raise ValueError(f"tree RFA for n={n} exceeds the cap n <= {cap}")
    tree = (1 << (n + 1)) - 1
    leaves = [format(i, f"0{n}b") for i in range(1 << n)]
    accepted = [w for w in leaves if "00" in w]
    n_acc = len(accepted)
    total = 2 * tree
    acc_states = list(range(tree, tree + n_acc))
    rej_states = list(range(tree + n_acc, total))

    mats = {LEFT: sp.identity(total, dtype=complex, format="csr")}
    for bit in "01":
        partial = {}
        for depth in range(n):
            for i in range(1 << depth):
                node = format(i, f"0{depth}b") if depth else ""
                partial[tree_index(node)] = tree_index(node + bit)
        for j, leaf in enumerate(leaves):
            partial[tree_index(leaf)] = rej_states[j]
        mats[bit] = _permutation(_complete(partial, total))

    partial = {}
    acc_iter, rej_iter = iter(acc_states), iter(rej_states)
    for depth in range(n + 1):
        for i in range(1 << depth):
            node = format(i, f"0{depth}b") if depth else ""
            good = depth == n and "00" in node
            partial[tree_index(node)] = next(acc_iter) if good else next(rej_iter)
    mats[RIGHT] = _permutation(_complete(partial, total))

    labels = tuple(
        [f"<{format(i, f'0{d}b') if d else ''}>" for d in range(n + 1) for i in range(1 << d)]
        + [f"acc{j}" for j in range(n_acc)]
        + [f"rej{j}" for j in range(len(rej_states))]
    )
    part = StatePartition(total, 0, frozenset(acc_states), frozenset(rej_states))
    return Qfa(BINARY, part, mats, labels=labels)


@dataclass(frozen=True)
class FreivaldsParams:
    n: int
    epsilon: float
    primes: tuple[int, ...]
    reject_const: float
    length_bound: int
    # every length N >= certified_from is rejected by the tail estimate;
    # shorter lengths were checked one by one
    certified_from: int
    accept_margin: float
    reject_margin: float

    @property
    def d(self) -> int:
        return len(self.primes)

    def accept_probability(self, lengths) -> np.ndarray:
        """Closed-form acceptance probability of ``a**N``.

        Block ``p`` is chosen with probability ``1/d``, loses ``c*p/n`` of
        its mass each time a letter is read from residue 0 (``ceil(N/p)``
        times) and accepts at ``$`` iff ``N = n (mod p)``.
        """
        lengths = np.asarray(lengths, dtype=np.int64)
        return _accept_probability(self.n, self.primes, self.reject_const, lengths)

    def collision_fraction(self, length: int) -> float:
        return sum(length % p == self.n % p for p in self.primes) / self.d


def _accept_probability(n, primes, c, lengths) -> np.ndarray:
    total = np.zeros(lengths.shape, dtype=float)
    for p in primes:
        hit = lengths % p == n % p
        visits = -(-lengths // p)
        total += np.where(hit, (1.0 - c * p / n) ** visits, 0.0)
    return total / len(primes)


def primes_above(x: float, count: int) -> tuple[int, ...]:
    from sympy import nextprime

    out = []
    p = int(math.floor(x))
    while len(out) < count:
        p = int(nextprime(p))
        out.append(p)
    return tuple(out)


def _margins(n, primes, c, others):
    accept = float(_accept_probability(n, primes, c, np.array([n]))[0])
    reject = float(1.0 - _accept_probability(n, primes, c, others).max()) if others.size else 1.0
    return accept, reject


def _best_reject_const(n, primes, others):
    """Maximise the smaller of the two margins over c.

    Acceptance of ``a**n`` falls with c and every rejection rises, so the
    worst-case margin is unimodal; a grid of step 0.1 is refined around the
    best point down to step 1e-3.
    """
    c_max = min(4.0, n / max(primes))
    best_c, best = 0.0, -1.0
    lo, hi, step = 0.0, c_max, 0.1
    while True:
        grid = np.arange(lo, hi + 1e-12, step)
        grid = grid[(grid > 0) & (grid <= c_max)]
        if grid.size == 0:
            grid = np.array([c_max])
        for c in grid:
            score = min(_margins(n, primes, c, others))
            if score > best:
                best, best_c = score, float(c)
        if step <= 1e-3 + 1e-15:
            return best_c
        lo, hi, step = max(0.0, best_c - step), min(c_max, best_c + step), step / 10


def _certify_tail(n, primes, c, epsilon, start, limit):
    """Find M >= start such that every N >= M is rejected with margin,
    checking each N in [start, M) exactly. Returns None on failure."""
    floor = 1.0 - epsilon + STRICT_MARGIN
    primes_arr = np.array(primes, dtype=float)
    chunk = max(256, 4 * n)
    lo = start
    while lo < limit:
        lengths = np.arange(lo, lo + chunk, dtype=np.int64)
        # all-blocks upper bound on acceptance at each length
        bound = ((1.0 - c * primes_arr[None, :] / n) ** (-(-lengths[:, None] // primes_arr[None, :]))).sum(axis=1)
        bound /= len(primes)
        exact_reject = 1.0 - _accept_probability(n, primes, c, lengths)
        for k, length in enumerate(lengths):
            if 1.0 - bound[k] >= floor:
                return int(length)
            if length != n and exact_reject[k] < floor:
                return None
        lo += chunk
    return None


def build_freivalds_pfa(n: int, epsilon: float, length_bound: int | None = None, max_primes: int = 200):
    """Unary PFA accepting ``a**n`` with probability at least 1 - epsilon.

    On ``¢`` it picks one of d prime counters uniformly. Counter p cycles
    through residues 0..p-1; a letter read from residue 0 diverts to the
    rejecting state with probability ``c*p/n``. On ``$`` the counter
    accepts iff its residue equals ``n mod p``.

    Primes are the smallest d primes above log2(n); d grows until some c
    gives margin ``1 - epsilon`` on every length up to ``length_bound``
    (default 4n) and a tail estimate extends the guarantee to all lengths.

    Returns ``(pfa, params)``.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
    bound = 4 * n if length_bound is None else int(length_bound)
    if bound < n:
        raise ValueError("length_bound must be at least n")
    others = np.array([N for N in range(bound + 1) if N != n], dtype=np.int64)
    floor = 1.0 - epsilon + STRICT_MARGIN

    for d in range(1, max_primes + 1):
        primes = primes_above(math.log2(n), d)
        if math.prod(primes) <= n:
            continue
        c = _best_reject_const(n, primes, others)
        accept, reject = _margins(n, primes, c, others)
        if min(accept, reject) < floor:
            continue
        tail = _certify_tail(n, primes, c, epsilon, bound + 1, limit=2000 * n)
        if tail is None:
            continue
        params = FreivaldsParams(n, epsilon, primes, c, bound, tail, accept, reject)
        return _freivalds_automaton(params), params
    raise ConstructionError(f"no prime set of size <= {max_primes} meets epsilon={epsilon} for n={n}")


def _freivalds_automaton(params: FreivaldsParams) -> Pfa:
    n, c, primes = params.n, params.reject_const, params.primes
    total = 1 + sum(primes) + 2
    ini, acc, rej = 0, total - 2, total - 1
    letter = sp.lil_array((total, total))
    left = sp.lil_array((total, total))
    right = sp.lil_array((total, total))
    labels = ["ini"]
    offset = 1
    for p in primes:
        for r in range(p):
            q = offset + r
            labels.append(f"p{p}r{r}")
            nxt = offset + (r + 1) % p
            if r == 0:
                letter[q, rej] = c * p / n
                letter[q, nxt] = 1.0 - c * p / n
            else:
                letter[q, nxt] = 1.0
            right[q, acc if r == n % p else rej] = 1.0
            left[q, q] = 1.0
        left[ini, offset] = 1.0 / len(primes)
        offset += p
    labels += ["acc", "rej"]
    letter[ini, ini] = 1.0
    right[ini, ini] = 1.0
    for q in (acc, rej):
        for m in (letter, left, right):
            m[q, q] = 1.0
    part = StatePartition(total, ini, frozenset({acc}), frozenset({rej}))
    mats = {LEFT: left.tocsr(), "a": letter.tocsr(), RIGHT: right.tocsr()}
    return Pfa(UNARY, part, mats, labels=tuple(labels))


def freivalds_block_count(pfa: Pfa) -> int:
    """Non-halting states other than the initial one."""
    return len(pfa.partition.non) - 1


def triple_for_contains00(base: Pfa) -> Pfa:
    """Run a unary length-checking PFA and the contains-00 DFA side by side.

    Every non-initial, non-halting state ``i`` of ``base`` becomes copies
    ``(i, 0), (i, 1), (i, 2)``, the copy index being the contains-00 DFA
    state. A unary move ``i -> j`` with probability p becomes six binary
    moves with the same probability (1 keeps or resets the copy, 0
    advances it, copy 2 is absorbing). Mid-word rejection applies to all
    copies and letters; on ``$`` only copy 2 may accept.
    """
    if base.alphabet.symbols and len(base.alphabet.symbols) != 1:
        raise ValueError("base automaton must be unary")
    (letter_sym,) = base.alphabet.symbols
    part = base.partition
    ini = part.initial
    blocks = sorted(part.non - {ini})
    pos = {q: k for k, q in enumerate(blocks)}
    total = 3 * len(blocks) + 3
    new_ini, new_acc, new_rej = 0, total - 2, total - 1

    def copy(i, k):
        return 1 + 3 * pos[i] + k

    zero = sp.lil_array((total, total))
    one = sp.lil_array((total, total))
    left = sp.lil_array((total, total))
    right = sp.lil_array((total, total))
    after0 = (1, 2, 2)
    after1 = (0, 0, 2)

    base_letter = sp.coo_array(base.matrices[letter_sym])
    for i, j, p in zip(base_letter.row, base_letter.col, base_letter.data):
        if i not in pos or p == 0:
            continue
        if j in pos:
            for k in range(3):
                zero[copy(i, k), copy(j, after0[k])] += p
                one[copy(i, k), copy(j, after1[k])] += p
        elif j in part.rej:
            for k in range(3):
                zero[copy(i, k), new_rej] += p
                one[copy(i, k), new_rej] += p
        else:
            raise ValueError(f"unsupported letter move {i} -> {j} for tripling")

    base_right = sp.coo_array(base.matrices[RIGHT])
    for i, j, p in zip(base_right.row, base_right.col, base_right.data):
        if i not in pos or p == 0:
            continue
        if j in part.rej:
            for k in range(3):
                right[copy(i, k), new_rej] += p
        elif j in part.acc:
            right[copy(i, 2), new_acc] += p
            right[copy(i, 0), new_rej] += p
            right[copy(i, 1), new_rej] += p
        else:
            raise ValueError(f"unsupported end-marker move {i} -> {j} for tripling")

    base_left = sp.coo_array(base.matrices[LEFT])
    for i, j, p in zip(base_left.row, base_left.col, base_left.data):
        if i != ini or p == 0:
            continue
        if j in pos:
            left[new_ini, copy(j, 0)] += p
        elif j in part.acc:
            left[new_ini, new_acc] += p
        elif j in part.rej:
            left[new_ini, new_rej] += p
        else:
            raise ValueError("left marker may not keep the initial state")

    for q in range(total):
        if q == new_ini or q in (new_acc, new_rej):
            for m in (zero, one, right):
                m[q, q] = 1.0
        if q != new_ini:
            left[q, q] = 1.0

    base_labels = base.labels or tuple(str(q) for q in range(base.n_states))
    labels = ["ini"] + [f"{base_labels[i]}/{k}" for i in blocks for k in range(3)] + ["acc", "rej"]
    partition = StatePartition(total, new_ini, frozenset({new_acc}), frozenset({new_rej}))
    mats = {LEFT: left.tocsr(), "0": zero.tocsr(), "1": one.tocsr(), RIGHT: right.tocsr()}
    return Pfa(BINARY, partition, mats, labels=tuple(labels))


def build_pfa_Ln(n: int, epsilon: float, length_bound: int | None = None) -> Pfa:
    """PFA for the length-n words containing 00: the prime-counting PFA for
    ``a**n`` tripled against the contains-00 DFA."""
    _require_even(n)
    base, _ = build_freivalds_pfa(n, epsilon, length_bound)
    return triple_for_contains00(base)
