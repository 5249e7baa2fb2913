import numpy as np
import pytest

from xmark import ParameterError, TokenStream
from xmark.attacks import AttackKind, AttackSpec, apply_attack, copy_paste, copy_paste_slots, substitute

WM = TokenStream(tuple(range(1, 301)))
CLEAN = TokenStream(tuple(range(1001, 1301)))


def cp(delta, L=10, seed=0):
    return AttackSpec(AttackKind.COPY_PASTE, delta, L, seed)


def sub(delta, seed=0):
    return AttackSpec(AttackKind.SUBSTITUTE, delta, 10, seed)


def test_copy_paste_zero_is_identity():
    assert copy_paste(WM, CLEAN, cp(0.0)) == WM


def test_copy_paste_full_replacement():
    out = copy_paste(WM, CLEAN, cp(1.0))
    assert out.tokens == CLEAN.tokens


def test_copy_paste_segment_count():
    out = copy_paste(WM, CLEAN, cp(0.2, 10, seed=5))
    changed = np.flatnonzero(np.array(out.tokens) != np.array(WM.tokens))
    assert len(changed) == 60
    slots = copy_paste_slots(300, cp(0.2, 10, seed=5))
    assert len(slots) == 6
    # replaced positions are exactly the aligned segments, filled from the start of the clean text
    assert sorted(set(changed // 10)) == slots
    assert [out.tokens[i] for i in changed] == list(CLEAN.tokens[:60])


def test_copy_paste_partial_tail_segment():
    wm = TokenStream(tuple(range(25)))
    clean = TokenStream(tuple(range(100, 125)))
    out = copy_paste(wm, clean, cp(1.0, 10))
    assert out.tokens == clean.tokens and len(out) == 25


def test_copy_paste_seeded():
    assert copy_paste(WM, CLEAN, cp(0.3, seed=1)) == copy_paste(WM, CLEAN, cp(0.3, seed=1))
    assert copy_paste(WM, CLEAN, cp(0.3, seed=1)) != copy_paste(WM, CLEAN, cp(0.3, seed=2))


def test_copy_paste_insufficient_clean():
    with pytest.raises(ParameterError):
        copy_paste(WM, TokenStream(tuple(range(50))), cp(0.2))


def test_kind_mismatch():
    with pytest.raises(ParameterError):
        copy_paste(WM, CLEAN, sub(0.1))
    with pytest.raises(ParameterError):
        substitute(WM, cp(0.1), 1024)
    with pytest.raises(ParameterError):
        apply_attack(WM, cp(0.1), 1024)


def test_spec_validation():
    with pytest.raises(ParameterError):
        AttackSpec(AttackKind.COPY_PASTE, 1.5)
    with pytest.raises(ParameterError):
        AttackSpec(AttackKind.COPY_PASTE, 0.5, 0)
    spec = cp(0.25, 7, 3)
    assert AttackSpec.from_dict(spec.to_dict()) == spec


def test_substitute_zero_is_identity():
    assert substitute(WM, sub(0.0), 1024) == WM


def test_substitute_full():
    V = 50
    wm = TokenStream(tuple(i % V for i in range(20_000)))
    out = substitute(wm, sub(1.0, seed=3), V)
    same = np.mean(np.array(out.tokens) == np.array(wm.tokens))
    assert abs(same - 1 / V) <= 3 * np.sqrt((1 / V) * (1 - 1 / V) / len(wm))


def test_substitute_binomial():
    V = 1024
    wm = TokenStream(tuple(range(1000)))
    q = 0.1 * (1 - 1 / V)
    for seed in range(5):
        changed = np.sum(np.array(substitute(wm, sub(0.1, seed), V).tokens) != np.arange(1000))
        assert abs(changed - 1000 * q) <= 3 * np.sqrt(1000 * q * (1 - q))


@pytest.mark.parametrize("delta", [0.0, 0.1, 0.37, 1.0])
def test_length_preserved(delta):
    assert len(copy_paste(WM, CLEAN, cp(delta, 7))) == len(WM)
    assert len(substitute(WM, sub(delta), 1024)) == len(WM)
