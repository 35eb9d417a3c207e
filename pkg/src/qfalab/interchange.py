"""JSON interchange format for automata.

Layout::

    {"model": "dfa" | "pfa" | "qfa",
     "alphabet": ["0", "1"],
     "states": 5, "initial": 0, "acc": [3], "rej": [4],
     "matrices": {"LEFT": [[...], ...], "0": ..., "1": ..., "RIGHT": ...}}

Matrices are row-major nested lists. Complex entries are ``[re, im]``
pairs. Sparse matrices are written as ``{"shape": [r, c], "entries":
[[i, j, value], ...]}`` so large permutation automata stay small on disk;
the reader accepts both forms. DFA matrices use the row-stochastic 0/1
convention of the PFA embedding.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .automata import Alphabet, Automaton, Dfa, MalformedAutomatonError, Pfa, Qfa, StatePartition


def _encode_value(x, complex_entries: bool):
    if complex_entries:
        return [float(x.real), float(x.imag)]
    return float(x)


def _encode_matrix(m, complex_entries: bool):
    if sp.issparse(m):
        coo = sp.coo_array(m)
        entries = [
            [int(i), int(j), _encode_value(v, complex_entries)] for i, j, v in zip(coo.row, coo.col, coo.data)
        ]
        return {"shape": list(m.shape), "entries": entries}
    return [[_encode_value(v, complex_entries) for v in row] for row in np.asarray(m)]


def _decode_value(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise MalformedAutomatonError(f"complex entry must be [re, im], got {v!r}")
        return complex(v[0], v[1])
    return v


def _decode_matrix(raw, n: int, dtype):
    if isinstance(raw, dict):
        shape = tuple(raw["shape"])
        rows, cols, vals = [], [], []
        for i, j, v in raw["entries"]:
            rows.append(i)
            cols.append(j)
            vals.append(_decode_value(v))
        return sp.csr_array((np.array(vals, dtype=dtype), (rows, cols)), shape=shape)
    if len(raw) == n and all(isinstance(r, (list, tuple)) and len(r) == n for r in raw):
        entries = [v for r in raw for v in r]
    else:
        entries = list(raw)
    flat = np.array([_decode_value(v) for v in entries], dtype=dtype)
    if flat.size != n * n:
        raise MalformedAutomatonError(f"matrix has {flat.size} entries, expected {n * n}")
    return flat.reshape(n, n)


def to_dict(automaton: Automaton) -> dict:
    part = automaton.partition
    doc = {
        "model": automaton.model,
        "alphabet": list(automaton.alphabet.symbols),
        "states": part.n_states,
        "initial": part.initial,
        "acc": sorted(part.acc),
        "rej": sorted(part.rej),
    }
    if isinstance(automaton, Dfa):
        mats = automaton.to_pfa().matrices
        complex_entries = False
    else:
        mats = automaton.matrices
        complex_entries = isinstance(automaton, Qfa)
    doc["matrices"] = {s: _encode_matrix(mats[s], complex_entries) for s in automaton.alphabet.working}
    if automaton.labels is not None:
        doc["labels"] = list(automaton.labels)
    return doc


def from_dict(doc: dict) -> Automaton:
    try:
        model = doc["model"]
        alphabet = Alphabet(tuple(doc["alphabet"]))
        n = int(doc["states"])
        partition = StatePartition(n, int(doc["initial"]), frozenset(doc["acc"]), frozenset(doc["rej"]))
        raw = doc["matrices"]
    except KeyError as exc:
        raise MalformedAutomatonError(f"missing field {exc.args[0]!r}") from None
    labels = tuple(doc["labels"]) if "labels" in doc else None
    if model == "qfa":
        mats = {s: _decode_matrix(raw[s], n, complex) for s in raw}
        return Qfa(alphabet, partition, mats, labels=labels)
    if model == "pfa":
        mats = {s: _decode_matrix(raw[s], n, float) for s in raw}
        return Pfa(alphabet, partition, mats, labels=labels)
    if model == "dfa":
        transitions = {}
        for s in raw:
            m = _decode_matrix(raw[s], n, float)
            dense = m.toarray() if sp.issparse(m) else m
            row_targets = []
            for q, row in enumerate(dense):
                ones = np.flatnonzero(row)
                if len(ones) != 1 or row[ones[0]] != 1:
                    raise MalformedAutomatonError(f"dfa row {q} of {s!r} is not a 0/1 unit row")
                row_targets.append(int(ones[0]))
            transitions[s] = tuple(row_targets)
        return Dfa(alphabet, partition, transitions, labels=labels)
    raise MalformedAutomatonError(f"unknown model {model!r}")


def dumps(automaton: Automaton) -> str:
    return json.dumps(to_dict(automaton))


def loads(text: str) -> Automaton:
    return from_dict(json.loads(text))


def save(automaton: Automaton, path) -> None:
    Path(path).write_text(dumps(automaton))


def load(path) -> Automaton:
    return loads(Path(path).read_text())
