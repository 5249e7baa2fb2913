import numpy as np
import pytest

from xmark import ParameterError, ToyLm, ToyLmParams, toy_logits
from xmark.toylm import gaussian_block


def softmax(x):
    e = np.exp(x - x.max())
    return e / e.sum()


def entropy(p):
    return float(-(p * np.log(p)).sum())


def test_shape_and_finite():
    out = toy_logits((3, 4), ToyLmParams(1, 1.0, 1024))
    assert out.shape == (1024,) and np.all(np.isfinite(out))
    assert toy_logits((3, 4), ToyLmParams(1, 1.0, 1023)).shape == (1023,)


def test_deterministic():
    p = ToyLmParams(5, 0.7, 256)
    assert np.array_equal(toy_logits((10, 20), p), toy_logits((10, 20), p))
    assert not np.array_equal(toy_logits((10, 20), p), toy_logits((20, 10), p))
    assert not np.array_equal(toy_logits((10, 20), p), toy_logits((10, 20), ToyLmParams(6, 0.7, 256)))


def test_large_temperature_is_uniform():
    probs = softmax(toy_logits((1, 2), ToyLmParams(0, 1e6, 1024)))
    assert np.max(np.abs(probs - 1 / 1024)) < 1e-8


def test_small_vocab_normalises():
    probs = softmax(toy_logits((0, 1), ToyLmParams(42, 1.0, 4)))
    assert abs(probs.sum() - 1.0) < 1e-12


def test_gaussian_moments():
    z = gaussian_block(2024, 200_000)
    assert abs(z.mean()) < 3 / np.sqrt(len(z))
    assert abs(z.var() - 1) < 0.02


def test_entropy_monotone_in_temperature():
    temps = [0.1, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0]
    means = []
    for tau in temps:
        p = ToyLmParams(3, tau, 1024)
        means.append(np.mean([entropy(softmax(toy_logits((c, c + 1), p))) for c in range(100)]))
    assert all(a <= b for a, b in zip(means, means[1:]))
    assert means[-1] < np.log(1024)


def test_distinct_contexts_uncorrelated():
    p = ToyLmParams(11, 1.0, 1024)
    rhos = np.array([
        np.corrcoef(toy_logits((c, 2 * c), p), toy_logits((c + 1, 7 * c + 3), p))[0, 1]
        for c in range(1000)
    ])
    # per-pair standard error is 1/sqrt(1024) ~ 0.031
    assert abs(rhos.mean()) < 0.1
    assert np.mean(np.abs(rhos) >= 0.1) <= 0.01


def test_rejects_bad_temperature():
    with pytest.raises(ParameterError):
        ToyLmParams(0, 0.0, 10)


def test_toylm_source_contract():
    lm = ToyLm(ToyLmParams(1, 2.0, 64))
    assert lm.vocab_size == 64
    assert np.array_equal(lm.next_logits((1, 2)), toy_logits((1, 2), lm.params))
