import itertools

import numpy as np
import pytest

from qfalab.languages import always_false, complement, contains00, length_n_contains00, unary_length


def brute_extensions(lang, prefix, length):
    return np.array([lang.member(tuple(prefix) + w) for w in itertools.product(lang.alphabet, repeat=length)])


@pytest.mark.parametrize("lang", [contains00(), length_n_contains00(5), complement(contains00()), always_false()])
def test_bulk_matches_member(lang):
    for prefix_len in range(4):
        for prefix in itertools.product(lang.alphabet, repeat=prefix_len):
            for length in range(6):
                assert np.array_equal(lang.extensions(prefix, length), brute_extensions(lang, prefix, length))


def test_contains00_examples():
    lang = contains00()
    assert lang("100")
    assert lang("00")
    assert not lang("0101")
    assert not lang("")
    assert not lang("0")


def test_length_n_language():
    lang = length_n_contains00(4)
    assert lang("0011")
    assert not lang("00111")
    assert not lang("0101")
    assert sum(lang(w) for w in itertools.product("01", repeat=4)) == 16 - 8


def test_unary_length():
    lang = unary_length(3)
    assert lang("aaa")
    assert not lang("aa")
    assert np.array_equal(lang.extensions("a", 2), [True])
    assert np.array_equal(lang.extensions("a", 1), [False])


def test_bulk_length_limit():
    with pytest.raises(ValueError):
        contains00().extensions("0" * 40, 30)
