"""Exhaustive checks over bounded word sets, DFA minimisation, Nerode
class counting, the serial-encoding experiment and the size table."""

from __future__ import annotations

import csv
import io
import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import constructions as cons
from .automata import (
    HALT_EPS,
    LEFT,
    RIGHT,
    Automaton,
    Dfa,
    Pfa,
    Qfa,
    RunOutcome,
    StatePartition,
    advance,
    initial_vector,
    remaining_mass,
    run,
    trajectory,
    validate,
)
from .languages import Language, length_n_contains00

DEFAULT_WORD_CAP = 2**20


class DomainTooLargeError(ValueError):
    pass


class NotRestrictedError(ValueError):
    """The automaton halted early on an encoding word."""

    def __init__(self, word, position, mass):
        super().__init__(f"mass {mass:.3e} halted at position {position} on {''.join(word)!r}")
        self.word = word
        self.position = position
        self.mass = mass


@dataclass(frozen=True)
class WordDomain:
    """All words over ``alphabet`` with length in ``[min_len, max_len]``."""

    alphabet: tuple[str, ...]
    min_len: int
    max_len: int

    @classmethod
    def exact(cls, alphabet, n):
        return cls(tuple(alphabet), n, n)

    @classmethod
    def up_to(cls, alphabet, max_len):
        return cls(tuple(alphabet), 0, max_len)

    def size(self) -> int:
        k = len(self.alphabet)
        return sum(k**length for length in range(self.min_len, self.max_len + 1))

    def describe(self) -> str:
        if self.min_len == self.max_len:
            return f"length {self.max_len} over {{{','.join(self.alphabet)}}}"
        return f"lengths {self.min_len}..{self.max_len} over {{{','.join(self.alphabet)}}}"

    def words(self) -> Iterator[tuple[str, ...]]:
        for length in range(self.min_len, self.max_len + 1):
            yield from itertools.product(self.alphabet, repeat=length)


def outcomes(automaton: Automaton, domain: WordDomain) -> Iterator[tuple[tuple[str, ...], RunOutcome]]:
    """Exact outcome for every word of ``domain``, sharing prefix work."""
    if isinstance(automaton, Dfa):
        automaton = automaton.to_pfa()
    first = advance(automaton, initial_vector(automaton), LEFT, 0)
    halted = 0 if first.acc_mass + first.rej_mass > HALT_EPS else None
    stack = [((), first.remaining, first.acc_mass, first.rej_mass, halted)]
    while stack:
        prefix, v, p_acc, p_rej, halted = stack.pop()
        depth = len(prefix)
        if depth >= domain.min_len:
            end = advance(automaton, v, RIGHT, depth + 1)
            stop = halted
            if stop is None and end.acc_mass + end.rej_mass > HALT_EPS:
                stop = depth + 1
            yield prefix, RunOutcome(
                p_acc + end.acc_mass, p_rej + end.rej_mass, remaining_mass(automaton, end.remaining), stop
            )
        if depth < domain.max_len:
            for s in reversed(domain.alphabet):
                step = advance(automaton, v, s, depth + 1)
                stop = halted
                if stop is None and step.acc_mass + step.rej_mass > HALT_EPS:
                    stop = depth + 1
                stack.append((prefix + (s,), step.remaining, p_acc + step.acc_mass, p_rej + step.rej_mass, stop))


@dataclass
class RecognitionReport:
    automaton_id: str
    predicate_id: str
    p: float
    domain: str
    words_checked: int
    min_acc_margin: tuple[tuple[str, ...], float] | None
    min_rej_margin: tuple[tuple[str, ...], float] | None
    tolerance: float = 1e-12

    @property
    def recognized(self) -> bool:
        return all(m is None or m[1] >= self.p - self.tolerance for m in (self.min_acc_margin, self.min_rej_margin))

    @property
    def verdict(self) -> str:
        return "recognized" if self.recognized else "failed"

    def format(self) -> str:
        def show(m, label):
            if m is None:
                return f"{label}: (no words)"
            return f"{label}: {m[1]:.12e} at {''.join(m[0]) or 'ε'!r}"

        return "\n".join(
            [
                f"automaton: {self.automaton_id}",
                f"language: {self.predicate_id}",
                f"domain: {self.domain} ({self.words_checked} words)",
                f"threshold p: {self.p}",
                show(self.min_acc_margin, "min p_acc over members"),
                show(self.min_rej_margin, "min p_rej over non-members"),
                f"verdict: {self.verdict}",
            ]
        )


def verify_recognition(
    automaton: Automaton,
    language: Language,
    domain: WordDomain,
    p: float,
    cap: int = DEFAULT_WORD_CAP,
    automaton_id: str | None = None,
) -> RecognitionReport:
    """Exact minima of the acceptance margin over members and the rejection
    margin over non-members of ``domain``."""
    size = domain.size()
    if size > cap:
        raise DomainTooLargeError(f"{domain.describe()} has {size} words, cap is {cap}")
    worst_acc = worst_rej = None
    for word, out in outcomes(automaton, domain):
        if language(word):
            if worst_acc is None or out.p_acc < worst_acc[1]:
                worst_acc = (word, out.p_acc)
        elif worst_rej is None or out.p_rej < worst_rej[1]:
            worst_rej = (word, out.p_rej)
    name = automaton_id or f"{automaton.model}[{automaton.n_states} states]"
    return RecognitionReport(name, language.name, p, domain.describe(), size, worst_acc, worst_rej)


def _classic_view(dfa: Dfa):
    """Recast a halting DFA as a Moore machine over the input letters.

    Halting states collapse into one absorbing sink per kind; a non-halting
    state is labelled by the kind of state its right marker leads to.
    """
    part = dfa.partition
    n = dfa.n_states
    sink = {"acc": n, "rej": n + 1}

    def node(q):
        kind = part.kind(q)
        return q if kind == "non" else sink[kind]

    label = {sink["acc"]: "acc", sink["rej"]: "rej"}
    delta = {}
    for s in dfa.alphabet.symbols:
        delta[s] = {sink["acc"]: sink["acc"], sink["rej"]: sink["rej"]}
    for q in part.non:
        label[q] = part.kind(dfa.step(q, RIGHT))
        for s in dfa.alphabet.symbols:
            delta[s][q] = node(dfa.step(q, s))
    start = node(dfa.step(part.initial, LEFT))
    return start, label, delta


def _hopcroft(states: set[int], label: dict[int, str], delta: dict[str, dict[int, int]]) -> list[set[int]]:
    groups: dict[str, set[int]] = {}
    for q in states:
        groups.setdefault(label[q], set()).add(q)
    blocks = list(groups.values())
    inverse = {s: {} for s in delta}
    for s, table in delta.items():
        for q in states:
            inverse[s].setdefault(table[q], set()).add(q)
    work = sorted(blocks, key=len)[:-1]
    work = [frozenset(b) for b in work]
    while work:
        splitter = work.pop()
        for s in delta:
            pre = set()
            for q in splitter:
                pre |= inverse[s].get(q, set())
            if not pre:
                continue
            refined = []
            for block in blocks:
                inside = block & pre
                outside = block - pre
                if inside and outside:
                    refined += [inside, outside]
                    frozen = frozenset(block)
                    if frozen in work:
                        work.remove(frozen)
                        work += [frozenset(inside), frozenset(outside)]
                    else:
                        work.append(frozenset(min(inside, outside, key=len)))
                else:
                    refined.append(block)
            blocks = refined
    return blocks


def minimize_dfa(dfa: Dfa) -> Dfa:
    """Smallest DFA with the same outcome on every word.

    Halting states are never merged with non-halting ones. Halting in the
    middle of a word is replaced by an absorbing non-halting state, so the
    result depends only on the accepted language and has
    ``#Nerode classes + #halting kinds used`` states. The left marker of the
    result acts as the identity.
    """
    start, label, delta = _classic_view(dfa)
    reachable = {start}
    queue = deque([start])
    while queue:
        q = queue.popleft()
        for s in dfa.alphabet.symbols:
            t = delta[s][q]
            if t not in reachable:
                reachable.add(t)
                queue.append(t)
    blocks = _hopcroft(reachable, label, delta)
    block_of = {q: i for i, b in enumerate(blocks) for q in b}

    # canonical numbering: breadth-first from the start block
    order = [block_of[start]]
    seen = {order[0]}
    for b in order:
        rep = next(iter(blocks[b]))
        for s in dfa.alphabet.symbols:
            t = block_of[delta[s][rep]]
            if t not in seen:
                seen.add(t)
                order.append(t)
    index = {b: i for i, b in enumerate(order)}
    kinds = {label[next(iter(blocks[b]))] for b in order}
    halting = [k for k in ("acc", "rej") if k in kinds]
    n_new = len(order) + len(halting)
    halt_index = {k: len(order) + j for j, k in enumerate(halting)}

    table = {s: list(range(n_new)) for s in dfa.alphabet.working}
    for b in order:
        i = index[b]
        rep = next(iter(blocks[b]))
        for s in dfa.alphabet.symbols:
            table[s][i] = index[block_of[delta[s][rep]]]
        lab = label[rep]
        table[RIGHT][i] = halt_index[lab] if lab in halt_index else i
    part = StatePartition(n_new, 0, frozenset({halt_index["acc"]} if "acc" in halt_index else ()),
                          frozenset({halt_index["rej"]} if "rej" in halt_index else ()))
    labels = tuple(f"m{i}" for i in range(len(order))) + tuple(halting)
    return Dfa(dfa.alphabet, part, {s: tuple(t) for s, t in table.items()}, labels=labels)


def nerode_class_count(
    language: Language,
    max_len: int,
    horizon: int | None = None,
    include_sinks: bool = True,
    cap: int = 2**23,
) -> int:
    """Count prefix classes of ``language`` by brute force.

    Two prefixes are equivalent when they agree on every suffix of length
    at most ``horizon`` (default ``max_len``). Classes are discovered
    breadth-first from the empty prefix, extending one representative per
    class, up to prefixes of length ``max_len``. With ``include_sinks`` the
    count adds one halting state per membership value that occurs, which
    makes it comparable with ``minimize_dfa`` sizes.

    Exact whenever the horizon is long enough to separate all classes,
    e.g. 2 for contains-00 and n for the length-n language.
    """
    horizon = max_len if horizon is None else horizon
    k = len(language.alphabet)
    cost = sum(k**length for length in range(horizon + 1))
    if cost > cap:
        raise ValueError(f"signature of {cost} suffixes exceeds cap {cap}")

    def signature(prefix):
        bits = np.concatenate([language.extensions(prefix, length) for length in range(horizon + 1)])
        return np.packbits(bits).tobytes(), bool(bits[0])

    sig, member = signature(())
    classes = {sig: member}
    queue = deque([()])
    while queue:
        prefix = queue.popleft()
        if len(prefix) >= max_len:
            continue
        for s in language.alphabet:
            nxt = prefix + (s,)
            sig, member = signature(nxt)
            if sig not in classes:
                classes[sig] = member
                queue.append(nxt)
    count = len(classes)
    if include_sinks:
        count += len(set(classes.values()))
    return count


@dataclass
class EncodingExperimentResult:
    k: int
    encodings: list[tuple[int, ...]]
    # success[x_index, i - 1] = Prob(measured bit i equals a_i)
    success: np.ndarray
    # max |V_i f(x) - (state before the final measurement of the rebuilt word)|
    vi_deviation: float

    @property
    def min_success(self) -> float:
        return float(self.success.min())

    def probability(self, x: Sequence[int], i: int) -> float:
        return float(self.success[self.encodings.index(tuple(x)), i - 1])


def serial_encoding_experiment(qfa: Qfa, n: int) -> EncodingExperimentResult:
    """Decode each bit of ``a_1 1 a_2 1 ... a_k 1`` from the automaton state.

    ``f(x)`` is the state after reading the encoding word. Bit i is read by
    undoing the suffix ``1 a_{i+1} 1 ... a_k 1`` with inverse unitaries,
    then reading ``0 1^(n-2i) $`` and measuring: accepting means a_i = 0,
    rejecting means a_i = 1. No projection happens between these unitaries.
    """
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and >= 2, got {n}")
    if set(qfa.alphabet.symbols) != {"0", "1"}:
        raise ValueError("encoding experiment needs the binary alphabet")
    k = n // 2
    U = qfa.unitaries
    acc, rej = qfa.partition.masks()
    encodings = list(itertools.product((0, 1), repeat=k))
    success = np.zeros((len(encodings), k))
    deviation = 0.0

    for row, x in enumerate(encodings):
        word = "".join(f"{a}1" for a in x)
        state = None
        for step in trajectory(qfa, word):
            if step.symbol == RIGHT:
                break
            if step.position < n and step.acc_mass + step.rej_mass > HALT_EPS:
                raise NotRestrictedError(tuple(word[: step.position]), step.position, step.acc_mass + step.rej_mass)
            state = step.remaining

        for i in range(1, k + 1):
            suffix = "1" + "".join(f"{a}1" for a in x[i:])
            v = state
            for s in reversed(suffix):
                v = U[s].conj().T @ v
            v = U["0"] @ v
            for _ in range(n - 2 * i):
                v = U["1"] @ v
            v = U[RIGHT] @ v
            p_acc = float((np.abs(v[acc]) ** 2).sum())
            p_rej = float((np.abs(v[rej]) ** 2).sum())
            success[row, i - 1] = p_acc if x[i - 1] == 0 else p_rej

            rebuilt = word[: 2 * (i - 1)] + f"{x[i - 1]}0" + "1" * (n - 2 * i)
            final = list(trajectory(qfa, rebuilt))[-1].applied
            deviation = max(deviation, float(np.abs(v - final).max()))

    return EncodingExperimentResult(k, encodings, success, deviation)


def reachable_after_encodings(qfa: Qfa, n: int) -> set[int]:
    """Basis states carrying amplitude after any ``a_1 1 ... a_k 1``."""
    support = set()
    for x in itertools.product("01", repeat=n // 2):
        word = "".join(f"{a}1" for a in x)
        steps = list(trajectory(qfa, word))
        v = steps[-2].remaining
        support |= set(np.flatnonzero(np.abs(v) > HALT_EPS).tolist())
    return support


CSV_HEADER = ("n", "dfa_min", "dfa_built", "pfa_built", "rfa_tree", "nerode", "epsilon")


@dataclass
class SeparationRow:
    n: int
    dfa_min: int
    dfa_built: int
    pfa_built: int
    rfa_tree: int | None
    nerode: int
    epsilon: float
    checks: dict[str, str] = field(default_factory=dict)


@dataclass
class SeparationTable:
    rows: list[SeparationRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in sorted(self.rows, key=lambda r: r.n):
            writer.writerow(
                [r.n, r.dfa_min, r.dfa_built, r.pfa_built, "" if r.rfa_tree is None else r.rfa_tree, r.nerode, r.epsilon]
            )
        return buf.getvalue()


def _check_construction(automaton, language, n, p, max_len, samples, rng) -> str:
    report = validate(automaton)
    if not report.ok:
        raise cons.ConstructionError(f"invalid automaton: {report.summary()}")
    limit = min(n + 2, max_len)
    rec = verify_recognition(automaton, language, WordDomain.up_to(language.alphabet, limit), p)
    if not rec.recognized:
        raise cons.ConstructionError(f"recognition failed:\n{rec.format()}")
    note = f"exhaustive to length {limit}"
    if n > limit:
        # length-n words are outside the exhaustive range; spot-check them
        for _ in range(samples):
            word = "".join(rng.choice(["0", "1"], size=n))
            out = run(automaton, word)
            score = out.p_acc if language(word) else out.p_rej
            if score < p - 1e-12:
                raise cons.ConstructionError(f"word {word!r} scored {score} < {p}")
        note += f" + {samples} sampled words of length {n}"
    return note


def separation_table(
    n_values: Sequence[int],
    epsilon: float,
    rfa_cap: int = cons.TREE_RFA_CAP,
    verify_max_len: int = 12,
    samples: int = 256,
    seed: int = 0,
) -> SeparationTable:
    """Build, validate and check every construction for each n; record sizes."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in sorted(n_values):
        if n < 4 or n % 2:
            raise ValueError(f"table rows need even n >= 4, got {n}")
        lang = length_n_contains00(n)
        checks = {}
        dfa = cons.build_dfa_Ln(n)
        checks["dfa"] = _check_construction(dfa, lang, n, 1.0, verify_max_len, samples, rng)
        small = minimize_dfa(dfa)
        pfa = cons.build_pfa_Ln(n, epsilon)
        checks["pfa"] = _check_construction(pfa, lang, n, 1.0 - epsilon, verify_max_len, samples, rng)
        rfa_size = None
        if n <= rfa_cap:
            rfa = cons.build_tree_rfa(n, cap=rfa_cap)
            checks["rfa"] = _check_construction(rfa, lang, n, 1.0, verify_max_len, samples, rng)
            rfa_size = rfa.n_states
        nerode = nerode_class_count(lang, max_len=n, horizon=n)
        rows.append(SeparationRow(n, small.n_states, dfa.n_states, pfa.n_states, rfa_size, nerode, epsilon, checks))
    return SeparationTable(rows)


def fit_through_origin(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``y = c * x``; returns ``(c, max relative residual)``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    c = float(xs @ ys / (xs @ xs))
    return c, float(np.max(np.abs(ys - c * xs) / ys))


def exact_affine_fit(xs: Sequence[int], ys: Sequence[int]) -> tuple[Fraction, Fraction, Fraction]:
    """Line through the first two points and the largest absolute deviation
    of the others, in exact arithmetic."""
    slope = Fraction(ys[1] - ys[0], xs[1] - xs[0])
    intercept = Fraction(ys[0]) - slope * xs[0]
    residual = max(abs(Fraction(y) - (slope * x + intercept)) for x, y in zip(xs, ys))
    return slope, intercept, residual


def pfa_dfa_crossover(epsilon: float, n_values: Sequence[int]) -> tuple[int, int] | None:
    """First n (in the given order) where the prime-counting PFA for
    ``a**n`` has fewer states than the n-state DFA lower bound."""
    for n in n_values:
        pfa, _ = cons.build_freivalds_pfa(n, epsilon)
        if pfa.n_states < n:
            return n, pfa.n_states
    return None
