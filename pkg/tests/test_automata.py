import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_words, normalized_qfa_oracle, path_enumeration_pfa, random_dfa
from qfalab.automata import (
    LEFT,
    RIGHT,
    Alphabet,
    Dfa,
    MalformedAutomatonError,
    Pfa,
    Qfa,
    StatePartition,
    UnknownSymbolError,
    Verdict,
    check_r_restricted,
    is_rfa,
    remaining_mass,
    run,
    run_dfa,
    run_pfa,
    run_qfa,
    sample_counts,
    sample_run,
    trajectory,
    validate,
)
from qfalab.constructions import build_dfa_contains00, build_dfa_Ln, build_tree_rfa
from qfalab.randomized import random_pfa, random_qfa, random_word

seeds = st.integers(0, 2**32 - 1)
binary_words = st.text(alphabet="01", max_size=8)


def hadamard_qfa():
    """Two-state toy: ¢ is a Hadamard, letters swap, $ sends everything to
    halting states in a fixed way."""
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    big = np.eye(4, dtype=complex)
    big[:2, :2] = h
    swap = np.eye(4)[[1, 0, 2, 3]]
    end = np.eye(4)[[2, 3, 0, 1]]
    part = StatePartition(4, 0, frozenset({2}), frozenset({3}))
    return Qfa(Alphabet(("a",)), part, {LEFT: big, "a": swap, RIGHT: end})


# ---- alphabet and partition ------------------------------------------------


def test_parse_single_char_and_comma_forms():
    assert Alphabet(("0", "1")).parse("0110") == ("0", "1", "1", "0")
    assert Alphabet(("x1", "x2")).parse("x1,x2,x2") == ("x1", "x2", "x2")
    assert Alphabet(("0", "1")).parse(["1", "0"]) == ("1", "0")


def test_unknown_symbol_rejected():
    with pytest.raises(UnknownSymbolError):
        Alphabet(("0", "1")).parse("012")


def test_markers_cannot_be_letters():
    with pytest.raises(ValueError):
        Alphabet((LEFT, "0"))


def test_partition_problems_reported():
    part = StatePartition(4, 1, frozenset({1}), frozenset({1, 2}))
    problems = part.problems()
    assert problems
    report = validate(Pfa(Alphabet(("a",)), part, {s: np.eye(4) for s in (LEFT, "a", RIGHT)}))
    assert not report.ok


def test_partition_kinds():
    part = StatePartition(5, 0, frozenset({3}), frozenset({4}))
    assert part.non == {0, 1, 2}
    assert [part.kind(q) for q in range(5)] == ["non", "non", "non", "acc", "rej"]


# ---- validation --------------------------------------------------------------


def test_validate_flags_nonunitary_matrix_and_symbol():
    qfa = hadamard_qfa()
    bad = dict(qfa.unitaries)
    bad["a"] = np.eye(4) * 1.01
    report = validate(Qfa(qfa.alphabet, qfa.partition, bad))
    assert not report.ok
    assert report.violations[0].symbol == "a"
    assert report.violations[0].defect == pytest.approx(1.01**2 - 1)


def test_validate_respects_tolerance():
    qfa = hadamard_qfa()
    nudged = dict(qfa.unitaries)
    nudged["a"] = nudged["a"] * (1 + 1e-12)
    assert validate(Qfa(qfa.alphabet, qfa.partition, nudged)).ok
    assert not validate(Qfa(qfa.alphabet, qfa.partition, nudged, tolerance=1e-14)).ok


def test_validate_flags_bad_stochastic_row():
    pfa = random_pfa(3, n_states=4)
    mats = dict(pfa.matrices)
    m = mats["0"].copy()
    m[2, 0] += 0.01
    mats["0"] = m
    report = validate(Pfa(pfa.alphabet, pfa.partition, mats))
    assert [(v.symbol, v.row) for v in report.violations] == [("0", 2)]


def test_validate_sparse_matrices():
    qfa = build_tree_rfa(4)
    assert sp.issparse(qfa.unitaries["0"])
    assert validate(qfa).ok


def test_malformed_shapes_rejected():
    part = StatePartition(3, 0, frozenset({1}), frozenset({2}))
    with pytest.raises(MalformedAutomatonError):
        Pfa(Alphabet(("a",)), part, {LEFT: np.eye(3), "a": np.eye(2), RIGHT: np.eye(3)})
    with pytest.raises(MalformedAutomatonError):
        Pfa(Alphabet(("a",)), part, {LEFT: np.eye(3), "a": np.eye(3)})


def test_dfa_missing_transition_is_invalid():
    part = StatePartition(3, 0, frozenset({1}), frozenset({2}))
    dfa = Dfa(Alphabet(("a",)), part, {LEFT: (0, 1, 2), "a": (None, 1, 2), RIGHT: (1, 1, 2)})
    assert not validate(dfa).ok
    with pytest.raises(ValueError):
        run_dfa(dfa, "a")


def test_is_rfa():
    assert is_rfa(build_tree_rfa(2))
    assert not is_rfa(hadamard_qfa())


# ---- exact runs ----------------------------------------------------------------


def test_hadamard_toy_by_hand():
    qfa = hadamard_qfa()
    out = run_qfa(qfa, "")
    assert out.p_acc == pytest.approx(0.5)
    assert out.p_rej == pytest.approx(0.5)
    assert out.halted_at == 1
    # swapping the two amplitudes swaps the outcomes, but both are 1/2 here
    assert run_qfa(qfa, "aaa").p_acc == pytest.approx(0.5)


def test_contains00_dfa_simple_words():
    dfa = build_dfa_contains00()
    assert run_dfa(dfa, "100") is Verdict.ACCEPT
    assert run_dfa(dfa, "0101") is Verdict.REJECT
    assert run_dfa(dfa, "") is Verdict.REJECT


def test_run_dfa_no_halt_when_right_marker_stays_non_halting():
    part = StatePartition(3, 0, frozenset({1}), frozenset({2}))
    dfa = Dfa(Alphabet(("a",)), part, {LEFT: (0, 1, 2), "a": (0, 1, 2), RIGHT: (0, 1, 2)})
    assert run_dfa(dfa, "aa") is Verdict.NO_HALT
    assert run(dfa, "aa").p_non == 1.0


def test_trajectory_positions():
    steps = list(trajectory(build_dfa_contains00(), "01"))
    assert [s.position for s in steps] == [0, 1, 2, 3]
    assert [s.symbol for s in steps] == [LEFT, "0", "1", RIGHT]


def test_dfa_embedding_matches_symbolic_run_exhaustively():
    dfa = build_dfa_contains00()
    expected = {Verdict.ACCEPT: (1.0, 0.0), Verdict.REJECT: (0.0, 1.0), Verdict.NO_HALT: (0.0, 0.0)}
    for w in all_words("01", 12):
        out = run(dfa, w)
        assert (out.p_acc, out.p_rej) == expected[run_dfa(dfa, w)]


@settings(max_examples=40, deadline=None)
@given(seed=seeds, word=binary_words)
def test_random_dfa_embedding_agrees(seed, word):
    dfa = random_dfa(seed)
    out = run(dfa, word)
    verdict = run_dfa(dfa, word)
    assert out.verdict is verdict or (verdict is Verdict.NO_HALT and out.p_non == 1.0)
    assert {out.p_acc, out.p_rej, out.p_non} <= {0.0, 1.0}


@settings(max_examples=60, deadline=None)
@given(seed=seeds, word=binary_words)
def test_probabilities_sum_to_one(seed, word):
    for automaton in (random_pfa(seed), random_qfa(seed)):
        out = run(automaton, word)
        assert abs(out.p_acc + out.p_rej + out.p_non - 1) <= 1e-9
        assert min(out.p_acc, out.p_rej, out.p_non) >= -1e-12


@settings(max_examples=40, deadline=None)
@given(seed=seeds, word=st.text(alphabet="01", max_size=3))
def test_pfa_matches_path_enumeration(seed, word):
    pfa = random_pfa(seed, n_states=int(np.random.default_rng(seed).integers(3, 6)))
    out = run_pfa(pfa, word)
    assert np.allclose((out.p_acc, out.p_rej, out.p_non), path_enumeration_pfa(pfa, word), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, word=binary_words)
def test_qfa_matches_normalized_state_oracle(seed, word):
    qfa = random_qfa(seed)
    out = run_qfa(qfa, word)
    assert np.allclose((out.p_acc, out.p_rej, out.p_non), normalized_qfa_oracle(qfa, word), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, word=binary_words)
def test_unitary_preserves_norm_and_halting_mass_is_monotone(seed, word):
    qfa = random_qfa(seed)
    before = 1.0
    halted = 0.0
    for step in trajectory(qfa, word):
        assert np.linalg.norm(step.applied) ** 2 == pytest.approx(before, abs=1e-10)
        halted_next = halted + step.acc_mass + step.rej_mass
        assert halted_next >= halted - 1e-15
        halted = halted_next
        before = remaining_mass(qfa, step.remaining)
    assert halted + before == pytest.approx(1, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, word=binary_words)
def test_pfa_halting_mass_is_monotone(seed, word):
    pfa = random_pfa(seed)
    halted = 0.0
    for step in trajectory(pfa, word):
        assert step.acc_mass >= 0 and step.rej_mass >= 0
        halted += step.acc_mass + step.rej_mass
        assert halted <= 1 + 1e-12


def random_rfa(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 8))
    base = random_qfa(rng, n_states=n)
    mats = {s: np.eye(n)[rng.permutation(n)] for s in base.alphabet.working}
    return Qfa(base.alphabet, base.partition, mats)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, word=binary_words)
def test_rfa_outcomes_are_exactly_zero_or_one(seed, word):
    rfa = random_rfa(seed)
    assert is_rfa(rfa)
    out = run_qfa(rfa, word)
    assert sorted((out.p_acc, out.p_rej, out.p_non)) == [0.0, 0.0, 1.0]


def test_halted_at_reports_first_halting_position():
    # the contains-00 table only halts on the right marker
    assert run(build_dfa_contains00(), "1001").halted_at == 5
    # the length-2 table rejects as soon as a third letter arrives
    assert run(build_dfa_Ln(2), "10110").halted_at == 3


# ---- sampling ----------------------------------------------------------------


def test_sampling_is_reproducible():
    pfa = random_pfa(5)
    assert sample_counts(pfa, "0101", 1000, 7) == sample_counts(pfa, "0101", 1000, 7)
    assert sample_run(pfa, "01", 3) == sample_run(pfa, "01", 3)


def test_sample_counts_total():
    for automaton in (random_pfa(1), random_qfa(1), build_dfa_contains00()):
        counts = sample_counts(automaton, "0110", 500, 0)
        assert sum(counts.values()) == 500


def test_dfa_sampling_is_deterministic():
    assert sample_counts(build_dfa_contains00(), "00", 10, 0)[Verdict.ACCEPT] == 10


@pytest.mark.parametrize("make", [random_pfa, random_qfa])
def test_single_trajectory_sampler_agrees_with_exact(make):
    rng = np.random.default_rng(11)
    automaton = make(4)
    word = "0110"
    n = 4000
    hits = sum(sample_run(automaton, word, rng) is Verdict.ACCEPT for _ in range(n))
    p = run(automaton, word).p_acc
    sigma = np.sqrt(p * (1 - p) / n)
    assert abs(hits / n - p) <= 4 * sigma + 1e-12


@settings(max_examples=15, deadline=None)
@given(seed=seeds)
def test_population_sampler_within_three_sigma(seed):
    rng = np.random.default_rng(seed)
    automaton = (random_pfa if seed % 2 else random_qfa)(rng)
    word = random_word(rng, max_len=6)
    n = 20000
    counts = sample_counts(automaton, word, n, rng)
    out = run(automaton, word)
    for verdict, p in ((Verdict.ACCEPT, out.p_acc), (Verdict.REJECT, out.p_rej)):
        sigma = np.sqrt(p * (1 - p) / n)
        # 4 sigma per check keeps the false-alarm rate negligible across examples
        assert abs(counts[verdict] / n - p) <= 4 * sigma + 1e-9


# ---- restriction ---------------------------------------------------------------


def test_tree_rfa_is_n_restricted():
    for n in (2, 4, 6):
        assert check_r_restricted(build_tree_rfa(n), n, n + 2).ok


def test_tree_rfa_is_not_more_restricted():
    # leaves halt on the next letter, so r = n + 2 fails at n + 1 letters
    check = check_r_restricted(build_tree_rfa(4), 6, 8)
    assert not check.ok
    assert check.position == 5
    assert len(check.word) == 5


def test_restriction_witness_for_left_marker():
    dfa = build_dfa_contains00()
    rej = min(dfa.partition.rej)
    halting = Dfa(dfa.alphabet, dfa.partition, {**dfa.transitions, LEFT: (rej,) * dfa.n_states})
    check = check_r_restricted(halting, 1, 3)
    assert not check.ok
    assert (check.word, check.position) == ((), 0)


def test_contains00_dfa_is_restricted_for_any_r():
    assert check_r_restricted(build_dfa_contains00(), 8, 8).ok


def test_length_dfa_violates_restriction_past_n():
    check = check_r_restricted(build_dfa_Ln(2), 4, 4)
    assert not check.ok
    assert check.word == ("0", "0", "0")
    assert check.position == 3
