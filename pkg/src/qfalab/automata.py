"""Finite automata with end markers and halting after every symbol.

All three models (DFA, PFA, QFA) share one state layout and one reading
convention: the left marker is read first, then the word, then the right
marker. Every symbol is processed in two steps, the transition matrix is
applied and then the halting part of the state is split off into the
accepting and rejecting totals.

Matrix conventions:

* ``Qfa.unitaries[s]`` acts on column vectors, ``psi' = U @ psi``.
* ``Pfa.matrices[s]`` is row stochastic, ``M[i, j] = Pr(i -> j)``.
* ``Dfa.transitions[s][q]`` is the successor index of state ``q``.

Matrices may be dense ``numpy`` arrays or ``scipy.sparse`` arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, Union

import numpy as np
import scipy.sparse as sp

LEFT = "LEFT"
RIGHT = "RIGHT"
GLYPHS = {LEFT: "¢", RIGHT: "$"}

# halting mass at or below this is treated as "nothing halted"
HALT_EPS = 1e-12

Matrix = Union[np.ndarray, sp.csr_array]
Word = Union[str, Sequence[str]]


class UnknownSymbolError(ValueError):
    pass


class MalformedAutomatonError(ValueError):
    pass


class Verdict(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    NO_HALT = "no-halt"


@dataclass(frozen=True)
class Alphabet:
    """Input symbols. The two markers are implicit and reserved."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"duplicate symbols in {symbols!r}")
        reserved = {LEFT, RIGHT, *GLYPHS.values()} & set(symbols)
        if reserved:
            raise ValueError(f"reserved marker names used as input symbols: {sorted(reserved)}")
        if any(not isinstance(s, str) or not s for s in symbols):
            raise ValueError("symbols must be non-empty strings")

    @property
    def working(self) -> tuple[str, ...]:
        return (LEFT, *self.symbols, RIGHT)

    def parse(self, word: Word) -> tuple[str, ...]:
        """Turn a word into a tuple of input symbols.

        A plain string is split into characters when every symbol is one
        character long, otherwise on commas.
        """
        if isinstance(word, str):
            if all(len(s) == 1 for s in self.symbols):
                letters = tuple(word)
            else:
                letters = tuple(word.split(",")) if word else ()
        else:
            letters = tuple(word)
        known = set(self.symbols)
        for pos, letter in enumerate(letters, start=1):
            if letter not in known:
                raise UnknownSymbolError(f"symbol {letter!r} at position {pos} is not in {self.symbols!r}")
        return letters


@dataclass(frozen=True)
class StatePartition:
    n_states: int
    initial: int
    acc: frozenset[int]
    rej: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "acc", frozenset(int(q) for q in self.acc))
        object.__setattr__(self, "rej", frozenset(int(q) for q in self.rej))

    @property
    def non(self) -> frozenset[int]:
        return frozenset(range(self.n_states)) - self.acc - self.rej

    def kind(self, q: int) -> str:
        if q in self.acc:
            return "acc"
        if q in self.rej:
            return "rej"
        return "non"

    def masks(self) -> tuple[np.ndarray, np.ndarray]:
        acc = np.zeros(self.n_states, dtype=bool)
        rej = np.zeros(self.n_states, dtype=bool)
        acc[list(self.acc)] = True
        rej[list(self.rej)] = True
        return acc, rej

    def problems(self) -> list[str]:
        out = []
        everything = set(range(self.n_states))
        if self.n_states < 1:
            out.append("automaton has no states")
        if not (self.acc | self.rej) <= everything:
            out.append(f"halting states outside 0..{self.n_states - 1}")
        if self.acc & self.rej:
            out.append(f"states both accepting and rejecting: {sorted(self.acc & self.rej)}")
        if self.initial not in everything:
            out.append(f"initial state {self.initial} out of range")
        elif self.initial not in self.non:
            out.append(f"initial state {self.initial} is halting")
        return out


def _as_matrix(m, dtype) -> Matrix:
    if sp.issparse(m):
        return sp.csr_array(m, dtype=dtype)
    return np.asarray(m, dtype=dtype)


def _check_square(matrices: Mapping[str, Matrix], alphabet: Alphabet, n: int):
    if set(matrices) != set(alphabet.working):
        missing = set(alphabet.working) - set(matrices)
        extra = set(matrices) - set(alphabet.working)
        raise MalformedAutomatonError(f"matrix keys mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
    for s, m in matrices.items():
        if m.shape != (n, n):
            raise MalformedAutomatonError(f"matrix for {s!r} has shape {m.shape}, expected {(n, n)}")


@dataclass(frozen=True, eq=False)
class Qfa:
    """Measure-many 1-way quantum automaton."""

    alphabet: Alphabet
    partition: StatePartition
    unitaries: Mapping[str, Matrix]
    tolerance: float = 1e-9
    labels: tuple[str, ...] | None = None

    model = "qfa"

    def __post_init__(self):
        mats = {s: _as_matrix(m, complex) for s, m in self.unitaries.items()}
        _check_square(mats, self.alphabet, self.partition.n_states)
        object.__setattr__(self, "unitaries", mats)

    @property
    def n_states(self) -> int:
        return self.partition.n_states

    @property
    def matrices(self) -> Mapping[str, Matrix]:
        return self.unitaries


@dataclass(frozen=True, eq=False)
class Pfa:
    """Probabilistic automaton with the same halting structure as ``Qfa``."""

    alphabet: Alphabet
    partition: StatePartition
    matrices: Mapping[str, Matrix]
    tolerance: float = 1e-9
    labels: tuple[str, ...] | None = None

    model = "pfa"

    def __post_init__(self):
        mats = {s: _as_matrix(m, float) for s, m in self.matrices.items()}
        _check_square(mats, self.alphabet, self.partition.n_states)
        object.__setattr__(self, "matrices", mats)
        # distributions are propagated as column vectors
        object.__setattr__(self, "_forward", {s: m.T.tocsr() if sp.issparse(m) else m.T for s, m in mats.items()})

    @property
    def n_states(self) -> int:
        return self.partition.n_states


@dataclass(frozen=True, eq=False)
class Dfa:
    alphabet: Alphabet
    partition: StatePartition
    transitions: Mapping[str, tuple[int | None, ...]]
    labels: tuple[str, ...] | None = None

    model = "dfa"

    def __post_init__(self):
        table = {s: tuple(None if t is None else int(t) for t in row) for s, row in self.transitions.items()}
        if set(table) != set(self.alphabet.working):
            raise MalformedAutomatonError(f"transition keys {sorted(table)} do not match {self.alphabet.working}")
        for s, row in table.items():
            if len(row) != self.partition.n_states:
                raise MalformedAutomatonError(f"transition row for {s!r} has {len(row)} entries")
        object.__setattr__(self, "transitions", table)

    @property
    def n_states(self) -> int:
        return self.partition.n_states

    def step(self, q: int, symbol: str) -> int:
        target = self.transitions[symbol][q]
        if target is None or not 0 <= target < self.n_states:
            raise MalformedAutomatonError(f"no transition from state {q} on {symbol!r}")
        return target

    def to_pfa(self) -> Pfa:
        """Embed as a 0/1 stochastic automaton. Halting rows become identity."""
        cached = self.__dict__.get("_pfa")
        if cached is not None:
            return cached
        n = self.n_states
        non = self.partition.non
        mats = {}
        for s, row in self.transitions.items():
            targets = [row[q] if q in non and row[q] is not None else q for q in range(n)]
            mats[s] = sp.csr_array((np.ones(n), (np.arange(n), targets)), shape=(n, n))
        pfa = Pfa(self.alphabet, self.partition, mats, labels=self.labels)
        object.__setattr__(self, "_pfa", pfa)
        return pfa


Automaton = Union[Dfa, Pfa, Qfa]


@dataclass(frozen=True)
class Violation:
    symbol: str | None
    row: int | None
    defect: float
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(v.message for v in self.violations)


def _dense(m: Matrix) -> np.ndarray:
    return m.toarray() if sp.issparse(m) else m


def validate(automaton: Automaton) -> ValidationReport:
    """Check every model invariant at the automaton's stored tolerance."""
    report = ValidationReport()
    for msg in automaton.partition.problems():
        report.violations.append(Violation(None, None, float("nan"), msg))

    if isinstance(automaton, Dfa):
        for s, row in automaton.transitions.items():
            for q in sorted(automaton.partition.non):
                t = row[q]
                if t is None or not 0 <= t < automaton.n_states:
                    report.violations.append(
                        Violation(s, q, float("nan"), f"{s}: no valid transition from non-halting state {q}")
                    )
        return report

    tol = automaton.tolerance
    n = automaton.n_states
    for s in automaton.alphabet.working:
        m = automaton.matrices[s]
        if isinstance(automaton, Qfa):
            diff = m.conj().T @ m - (sp.identity(n, format="csr") if sp.issparse(m) else np.eye(n))
            diff = sp.coo_array(abs(diff))
            defect = float(diff.data.max()) if diff.nnz else 0.0
            if defect > tol:
                row = int(diff.row[np.argmax(diff.data)])
                report.violations.append(Violation(s, row, defect, f"{s}: |U^H U - I|_max = {defect:.3e} (row {row})"))
        else:
            dense = _dense(m)
            low = dense.min(axis=1)
            high = dense.max(axis=1)
            for q in np.flatnonzero((low < -tol) | (high > 1 + tol)):
                defect = float(max(-low[q], high[q] - 1))
                report.violations.append(Violation(s, int(q), defect, f"{s}: row {q} has entry outside [0, 1]"))
            sums = dense.sum(axis=1)
            for q in np.flatnonzero(abs(sums - 1) > tol):
                defect = float(abs(sums[q] - 1))
                report.violations.append(
                    Violation(s, int(q), defect, f"{s}: row {q} sums to {sums[q]:.12g} (defect {defect:.3e})")
                )
    return report


def is_rfa(qfa: Qfa) -> bool:
    """True iff every matrix entry is exactly 0 or 1."""
    for m in qfa.unitaries.values():
        values = m.data if sp.issparse(m) else m.ravel()
        if np.any(values.imag != 0) or np.any((values.real != 0) & (values.real != 1)):
            return False
    return True


@dataclass(frozen=True)
class RunOutcome:
    p_acc: float
    p_rej: float
    p_non: float
    halted_at: int | None = None

    @property
    def verdict(self) -> Verdict:
        """Most likely outcome; ties go to ``NO_HALT``."""
        best = max(self.p_acc, self.p_rej, self.p_non)
        if best == self.p_acc and self.p_acc > self.p_rej and self.p_acc > self.p_non:
            return Verdict.ACCEPT
        if best == self.p_rej and self.p_rej > self.p_acc and self.p_rej > self.p_non:
            return Verdict.REJECT
        return Verdict.NO_HALT


@dataclass
class Step:
    """One symbol of a run. Positions: 0 for the left marker, t for the
    t-th letter, len(word) + 1 for the right marker."""

    position: int
    symbol: str
    applied: np.ndarray
    remaining: np.ndarray
    acc_mass: float
    rej_mass: float


def _kernel(automaton: Pfa | Qfa):
    if isinstance(automaton, Qfa):
        return automaton.unitaries, (lambda v: np.abs(v) ** 2), complex
    return automaton._forward, (lambda v: v), float


def initial_vector(automaton: Pfa | Qfa) -> np.ndarray:
    _, _, dtype = _kernel(automaton)
    v = np.zeros(automaton.n_states, dtype=dtype)
    v[automaton.partition.initial] = 1
    return v


def advance(automaton: Pfa | Qfa, vector: np.ndarray, symbol: str, position: int = 0) -> Step:
    """Apply one symbol to the non-halting vector and measure."""
    mats, mass, _ = _kernel(automaton)
    acc, rej = automaton.partition.masks()
    applied = mats[symbol] @ vector
    weights = mass(applied)
    remaining = applied.copy()
    remaining[acc | rej] = 0
    return Step(position, symbol, applied, remaining, float(weights[acc].sum()), float(weights[rej].sum()))


def trajectory(automaton: Automaton, word: Word) -> Iterator[Step]:
    """Yield the exact state after each of ``¢ word $``."""
    if isinstance(automaton, Dfa):
        automaton = automaton.to_pfa()
    letters = automaton.alphabet.parse(word)
    symbols = (LEFT, *letters, RIGHT)
    v = initial_vector(automaton)
    for pos, s in enumerate(symbols):
        step = advance(automaton, v, s, pos)
        yield step
        v = step.remaining


def remaining_mass(automaton: Pfa | Qfa, vector: np.ndarray) -> float:
    _, mass, _ = _kernel(automaton)
    return float(mass(vector).sum())


def _run(automaton: Pfa | Qfa, word: Word) -> RunOutcome:
    p_acc = p_rej = 0.0
    halted_at = None
    last = None
    for step in trajectory(automaton, word):
        p_acc += step.acc_mass
        p_rej += step.rej_mass
        if halted_at is None and step.acc_mass + step.rej_mass > HALT_EPS:
            halted_at = step.position
        last = step
    return RunOutcome(p_acc, p_rej, remaining_mass(automaton, last.remaining), halted_at)


def run_qfa(qfa: Qfa, word: Word) -> RunOutcome:
    return _run(qfa, word)


def run_pfa(pfa: Pfa, word: Word) -> RunOutcome:
    return _run(pfa, word)


def run_dfa(dfa: Dfa, word: Word) -> Verdict:
    letters = dfa.alphabet.parse(word)
    q = dfa.partition.initial
    for s in (LEFT, *letters, RIGHT):
        q = dfa.step(q, s)
        kind = dfa.partition.kind(q)
        if kind == "acc":
            return Verdict.ACCEPT
        if kind == "rej":
            return Verdict.REJECT
    return Verdict.NO_HALT


def run(automaton: Automaton, word: Word) -> RunOutcome:
    """Exact outcome for any model; a DFA is run through its 0/1 embedding."""
    if isinstance(automaton, Dfa):
        return _run(automaton.to_pfa(), word)
    return _run(automaton, word)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_run(automaton: Automaton, word: Word, rng=None) -> Verdict:
    """Sample a single trajectory with the model's measurement rule."""
    rng = _rng(rng)
    if isinstance(automaton, Dfa):
        return run_dfa(automaton, word)
    letters = automaton.alphabet.parse(word)
    part = automaton.partition
    symbols = (LEFT, *letters, RIGHT)

    if isinstance(automaton, Pfa):
        q = part.initial
        for s in symbols:
            m = automaton.matrices[s]
            row = m[[q], :].toarray().ravel() if sp.issparse(m) else m[q]
            cum = np.cumsum(row)
            q = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), len(row) - 1)
            kind = part.kind(q)
            if kind != "non":
                return Verdict.ACCEPT if kind == "acc" else Verdict.REJECT
        return Verdict.NO_HALT

    psi = initial_vector(automaton)
    for s in symbols:
        step = advance(automaton, psi, s)
        p_non = remaining_mass(automaton, step.remaining)
        u = rng.random() * (step.acc_mass + step.rej_mass + p_non)
        if u < step.acc_mass:
            return Verdict.ACCEPT
        if u < step.acc_mass + step.rej_mass:
            return Verdict.REJECT
        psi = step.remaining / np.sqrt(p_non)
    return Verdict.NO_HALT


def sample_counts(automaton: Automaton, word: Word, n_samples: int, rng=None) -> dict[Verdict, int]:
    """Outcome counts of ``n_samples`` independent trajectories.

    Trajectories are exchangeable, so they are advanced as a population:
    a PFA moves the per-state counts with one multinomial draw per occupied
    state, a QFA splits the surviving count three ways at every measurement.
    """
    rng = _rng(rng)
    counts = {Verdict.ACCEPT: 0, Verdict.REJECT: 0, Verdict.NO_HALT: 0}
    if isinstance(automaton, Dfa):
        counts[run_dfa(automaton, word)] = n_samples
        return counts
    letters = automaton.alphabet.parse(word)
    symbols = (LEFT, *letters, RIGHT)
    acc, rej = automaton.partition.masks()

    if isinstance(automaton, Pfa):
        pop = np.zeros(automaton.n_states, dtype=np.int64)
        pop[automaton.partition.initial] = n_samples
        for s in symbols:
            m = automaton.matrices[s]
            nxt = np.zeros_like(pop)
            for q in np.flatnonzero(pop):
                row = m[[q], :].toarray().ravel() if sp.issparse(m) else np.array(m[q])
                row = np.clip(row, 0, None)
                nxt += rng.multinomial(pop[q], row / row.sum())
            counts[Verdict.ACCEPT] += int(nxt[acc].sum())
            counts[Verdict.REJECT] += int(nxt[rej].sum())
            nxt[acc | rej] = 0
            pop = nxt
        counts[Verdict.NO_HALT] = int(pop.sum())
        return counts

    alive = n_samples
    psi = initial_vector(automaton)
    for s in symbols:
        step = advance(automaton, psi, s)
        p_non = remaining_mass(automaton, step.remaining)
        probs = np.clip([step.acc_mass, step.rej_mass, p_non], 0, None)
        a, r, alive = rng.multinomial(alive, probs / probs.sum())
        counts[Verdict.ACCEPT] += int(a)
        counts[Verdict.REJECT] += int(r)
        if p_non <= 0:
            break
        psi = step.remaining / np.sqrt(p_non)
    counts[Verdict.NO_HALT] = int(alive)
    return counts


@dataclass(frozen=True)
class RestrictionCheck:
    ok: bool
    word: tuple[str, ...] | None = None
    position: int | None = None
    mass: float = 0.0

    def __bool__(self):
        return self.ok


def check_r_restricted(automaton: Pfa | Qfa, r: int, max_len: int) -> RestrictionCheck:
    """Search words up to ``max_len`` for halting before ``r`` letters are read.

    Halting on the right marker is always allowed. A violation is reported
    as the shortest offending word and the number of letters read when the
    mass halted (0 for the left marker).
    """
    if isinstance(automaton, Dfa):
        automaton = automaton.to_pfa()
    first = advance(automaton, initial_vector(automaton), LEFT, 0)
    if r > 0 and first.acc_mass + first.rej_mass > HALT_EPS:
        return RestrictionCheck(False, (), 0, first.acc_mass + first.rej_mass)
    depth = min(max_len, r - 1)
    frontier = [((), first.remaining)]
    for pos in range(1, depth + 1):
        nxt = []
        for prefix, v in frontier:
            for s in automaton.alphabet.symbols:
                step = advance(automaton, v, s, pos)
                if step.acc_mass + step.rej_mass > HALT_EPS:
                    return RestrictionCheck(False, prefix + (s,), pos, step.acc_mass + step.rej_mass)
                nxt.append((prefix + (s,), step.remaining))
        frontier = nxt
    return RestrictionCheck(True)
