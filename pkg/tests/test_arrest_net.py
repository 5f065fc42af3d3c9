import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from bradyquant import arrest_net as an
from bradyquant.exceptions import DegenerateDataset, InvalidConfig, ModelFileError, ShapeMismatch
from bradyquant.signal import CycleSeries

SMALL = an.NetConfig(lstm_hidden=3, conv_channels=(4, 5, 3), conv_kernels=(3, 3, 2), length=6, seed=11)


def random_batch(rng, n, cfg=an.NetConfig(), min_valid=1):
    X = rng.normal(size=(n, cfg.in_channels, cfg.length))
    valid = rng.integers(min_valid, cfg.length + 1, size=n)
    M = np.arange(cfg.length)[None, :] < valid[:, None]
    return np.where(M[:, None, :], X, 0.0), M


def sample(rng, n_valid, label=None, cfg=an.NetConfig()):
    X, M = random_batch(rng, 1, cfg)
    M[0] = np.arange(cfg.length) < n_valid
    return an.SeriesSample(np.where(M[0], X[0], 0.0), M[0], label)


def test_init_determinism_and_seeds():
    a, b = an.init_params(an.NetConfig(seed=4)), an.init_params(an.NetConfig(seed=4))
    assert all(np.array_equal(a.weights[k], b.weights[k]) for k in a.weights)
    c = an.init_params(an.NetConfig(seed=5))
    assert any(not np.array_equal(a.weights[k], c.weights[k]) for k in a.weights)
    for k, shape in an.param_shapes(a.config).items():
        assert a.weights[k].shape == shape
    assert all(np.all(a.weights[k] == 1) for k in a.weights if k.endswith("_gamma"))


def test_kernel_bounds():
    an.init_params(an.NetConfig(conv_kernels=(8, 5, 3), length=10))
    with pytest.raises(InvalidConfig):
        an.init_params(an.NetConfig(conv_kernels=(12, 5, 3), length=10))
    with pytest.raises(InvalidConfig):
        an.init_params(an.NetConfig(lstm_hidden=0))


def _zeroed(cfg=an.NetConfig()):
    p = an.init_params(cfg)
    for k in p.weights:
        p.weights[k] = np.zeros_like(p.weights[k])
    return p


def test_zero_weights_uniform():
    p = _zeroed()
    X, M = random_batch(np.random.default_rng(0), 7)
    assert np.allclose(an.forward_batch(p, X, M), 0.25, atol=1e-15)


def test_eval_deterministic():
    p = an.init_params(an.NetConfig(seed=2))
    x = sample(np.random.default_rng(1), 7)
    assert np.array_equal(an.forward(p, x), an.forward(p, x))


def test_untrained_monte_carlo_near_uniform():
    rng = np.random.default_rng(123)
    X, M = random_batch(rng, 1000)
    for seed in range(3):
        probs = an.forward_batch(an.init_params(an.NetConfig(seed=seed)), X, M)
        assert np.all(np.abs(probs.mean(axis=0) - 0.25) < 0.15)


@given(st.integers(0, 2**20), st.integers(1, 10), st.sampled_from(["eval", "train"]))
def test_simplex(seed, n_valid, mode):
    rng = np.random.default_rng(seed)
    p = an.init_params(an.NetConfig(seed=seed % 7))
    X, M = random_batch(rng, 5)
    X *= rng.uniform(0.1, 50)
    probs = an.forward_batch(p, X, M, mode, rng=rng)
    assert np.all(probs >= 0)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


@given(st.integers(0, 2**20), st.integers(1, 9))
def test_padding_values_ignored(seed, n_valid):
    rng = np.random.default_rng(seed)
    p = an.init_params(an.NetConfig(seed=3))
    x = sample(rng, n_valid)
    noisy = x.channels.copy()
    noisy[:, n_valid:] = rng.normal(scale=10, size=noisy[:, n_valid:].shape)
    a = an.forward(p, x)
    b = an.forward(p, an.SeriesSample(noisy, x.mask))
    assert np.array_equal(a, b)


def test_bad_mask_rejected():
    p = an.init_params(an.NetConfig())
    X = np.zeros((1, 2, 10))
    M = np.zeros((1, 10), bool)
    M[0, 3] = True
    with pytest.raises(ShapeMismatch):
        an.forward_batch(p, X, M)


def _numeric_grad(p, X, M, y, mode, drop, name, h=1e-4):
    w = p.weights[name]
    g = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        old = w[idx]
        w[idx] = old + h
        up = an.loss_and_grads(p, X, M, y, mode, drop)[0]
        w[idx] = old - h
        down = an.loss_and_grads(p, X, M, y, mode, drop)[0]
        w[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def _relu_margin(p, X, M, mode, drop):
    _, cache, _ = an._forward(p, X, M, mode == "train", drop)
    return min(np.abs(out[np.broadcast_to(M[:, None, :], out.shape)]).min()
               for _, _, _, out in cache["blocks"])


def gradient_problem(cfg=SMALL, mode="train", h=1e-4):
    """First seeded problem whose ReLU inputs stay clear of the kink by 10 h."""
    for seed in range(100):
        rng = np.random.default_rng(seed)
        p = an.init_params(cfg)
        for k in p.weights:
            if k.endswith(("_beta", "_b")):
                p.weights[k] = rng.normal(scale=0.3, size=p.weights[k].shape)
        X, M = random_batch(rng, 6, cfg, min_valid=3)
        y = rng.integers(0, 4, size=6)
        drop = an._dropout_mask(cfg, 6, rng)
        if _relu_margin(p, X, M, mode, drop) > 10 * h:
            return p, X, M, y, drop
    raise AssertionError("no kink-free problem found")


def gradient_errors(cfg=SMALL, mode="train"):
    p, X, M, y, drop = gradient_problem(cfg, mode)
    _, grads, _ = an.loss_and_grads(p, X, M, y, mode, drop)
    out = {}
    for name in p.weights:
        num = _numeric_grad(p, X, M, y, mode, drop, name)
        ana = grads[name]
        assert ana.shape == num.shape
        den = np.maximum(np.maximum(np.abs(ana), np.abs(num)), 1e-6)
        out[name] = float(np.max(np.abs(ana - num) / den))
    return out


@pytest.mark.parametrize("mode", ["train", "eval"])
def test_gradient_check(mode):
    errs = gradient_errors(mode=mode)
    assert set(errs) == set(an.param_shapes(SMALL))
    assert max(errs.values()) < 1e-3, errs


def test_logit_gradient_identity():
    rng = np.random.default_rng(5)
    p = an.init_params(an.NetConfig(seed=1))
    X, M = random_batch(rng, 8)
    y = rng.integers(0, 4, size=8)
    _, grads, _ = an.loss_and_grads(p, X, M, y, "eval")
    probs = an.forward_batch(p, X, M, "eval")
    assert np.array_equal(grads["_logits"] * 8, probs - np.eye(4)[y])


def test_backward_single_sample_shapes():
    p = an.init_params(an.NetConfig())
    g = an.backward(p, sample(np.random.default_rng(0), 6), 2)
    for k, v in p.weights.items():
        assert g[k].shape == v.shape and np.isfinite(g[k]).all()


def _dataset(n_per_class=10, seed=0):
    """Cycle series whose class is the number of lengthened intervals (0, 1, 3, 6)."""
    rng = np.random.default_rng(seed)
    out = []
    for c in range(4):
        for _ in range(n_per_class):
            n = int(rng.integers(8, 12))
            ints = 0.4 + 0.02 * rng.normal(size=n - 1)
            ints[rng.choice(n - 1, size=(0, 1, 3, 6)[c], replace=False)] += 0.4
            amps = 1 + 0.05 * rng.normal(size=n)
            out.append(an.make_sample(CycleSeries(amps, ints, np.arange(n)), label=c))
    return out


def test_zero_learning_rate_keeps_loss():
    data = _dataset()
    net = an.NetConfig(seed=2)
    res = an.train(data, an.TrainConfig(epochs=2, learning_rate=0.0, seed=2), net)
    init = an.init_params(net)
    assert all(np.array_equal(res.params.weights[k], init.weights[k]) for k in init.weights)
    X, M = an.stack_samples(data)
    y = [s.label for s in data]
    drop = np.ones((len(y), net.lstm_hidden))
    before = an.loss_and_grads(init, X, M, y, "train", drop)[0]
    after = an.loss_and_grads(res.params, X, M, y, "train", drop)[0]
    assert before == after


def test_overfit_forty_samples():
    data = _dataset()
    res = an.train(data, an.TrainConfig(epochs=200, seed=0), an.NetConfig(seed=0))
    pred = [an.predict_arrest(res.params, s) for s in data]
    assert pred == [s.label for s in data]
    assert res.loss_history[-1] < res.loss_history[0]


def test_training_deterministic_and_single_class():
    data = _dataset(4, seed=3)
    cfg, net = an.TrainConfig(epochs=5, seed=9), an.NetConfig(seed=9)
    assert an.train(data, cfg, net).loss_history == an.train(data, cfg, net).loss_history
    for s in data:
        s.label = 1
    with pytest.raises(DegenerateDataset):
        an.train(data, cfg, net)


def test_cosine_schedule():
    cfg = an.TrainConfig(epochs=10, learning_rate=0.01, lr_schedule="cosine")
    assert cfg.rate(0) == 0.01 and cfg.rate(5) == pytest.approx(0.005)
    assert an.TrainConfig(learning_rate=0.01).rate(7) == 0.01
    with pytest.raises(InvalidConfig):
        an.TrainConfig(lr_schedule="step").validate()


def test_early_stopping_returns_best_epoch():
    res = an.train(_dataset(8), an.TrainConfig(epochs=40, val_fraction=0.25, patience=3, seed=1))
    assert res.best_epoch is not None
    assert res.val_history[res.best_epoch] == min(res.val_history)


@pytest.mark.parametrize("probs,expected", [((0.1, 0.6, 0.2, 0.1), 1), ((0.4, 0.4, 0.1, 0.1), 0)])
def test_predict_tie_rule(probs, expected):
    p = _zeroed()
    p.weights["dense_b"] = np.log(np.array(probs))
    x = sample(np.random.default_rng(0), 5)
    out = an.forward(p, x)
    assert np.allclose(out, probs)
    assert an.predict_arrest(p, x) == expected


def test_serialization_round_trip():
    p = an.init_params(an.NetConfig(seed=8))
    p.buffers["bn1_mean"] += 0.3
    raw = an.dumps_params(p)
    q = an.loads_params(raw)
    X, M = random_batch(np.random.default_rng(2), 20)
    assert np.array_equal(an.forward_batch(p, X, M), an.forward_batch(q, X, M))
    assert q.config == p.config
    corrupt = bytearray(raw)
    corrupt[-5] ^= 1
    with pytest.raises(ModelFileError, match="checksum"):
        an.loads_params(bytes(corrupt))
    with pytest.raises(ModelFileError, match="version"):
        an.loads_params(raw.replace(b'"version": 1', b'"version": 9'))
    with pytest.raises(ModelFileError):
        an.loads_params(b"garbage")


@given(st.lists(st.floats(0.05, 3), min_size=2, max_size=14), st.floats(0.2, 1.0))
def test_sample_znorm(amps, base):
    ints = base + 0.05 * np.sin(np.arange(len(amps) - 1) * 1.7)
    s = an.make_sample(CycleSeries(np.array(amps), ints, np.arange(len(amps))))
    n = int(s.mask.sum())
    assert n == min(len(amps) - 1, 10)
    assert np.all(s.mask[:n]) and not np.any(s.mask[n:])
    for ch in s.channels[:, :n]:
        assert abs(ch.mean()) < 1e-9
        assert ch.std() == 0 or abs(ch.std() - 1) < 1e-9
    assert np.all(s.channels[:, n:] == 0)


def test_signal_mode_sample():
    s = an.make_signal_sample(np.sin(np.linspace(0, 20, 300)), 64)
    assert s.channels.shape == (1, 64) and s.mask.all()
    cfg = an.NetConfig.for_mode("resampled_signal")
    assert an.forward(an.init_params(cfg), s).shape == (4,)


def test_sklearn_wrapper():
    data = _dataset(5)
    X = an.samples_to_array(data)
    y = np.array([s.label for s in data])
    clf = an.ArrestNetClassifier(epochs=3, seed=1)
    assert clone(clf).get_params() == clf.get_params()
    clf.fit(X, y)
    assert clf.predict(X).shape == (20,)
    assert np.allclose(clf.predict_proba(X).sum(axis=1), 1)
