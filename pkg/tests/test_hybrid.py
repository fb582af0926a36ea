"""Classifier heads: forward math, analytic gradients, Adam, bookkeeping."""
import math

import numpy as np
import pytest

from qtlsim.hybrid import (
    AdamState,
    DenseLayer,
    HybridModel,
    adam_step,
    count_parameters,
    cross_entropy,
    dense_forward,
    grads_to_vector,
    init_model,
    model_backward,
    model_forward,
    model_with_vector,
    params_to_vector,
    softmax,
)
from qtlsim.seeding import substream
from qtlsim.vqc import VqcTemplate

from oracle import finite_diff


def small_dqc(seed=0, embedding="angle", n_qubits=4, depth=1, n_classes=2, in_dim=16):
    rng = substream(seed, "init")
    return init_model("dqc", embedding, n_qubits, depth, n_classes, rng, in_dim=in_dim)


def small_purevqc(seed=0, n_qubits=4, depth=1, n_classes=2, in_dim=16):
    rng = substream(seed, "init")
    return init_model("purevqc", "amplitude", n_qubits, depth, n_classes, rng, in_dim=in_dim)


# --- dense / softmax / cross-entropy ------------------------------------

def test_dense_forward_identity():
    layer = DenseLayer(np.eye(3), np.zeros(3))
    x = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(dense_forward(layer, x), x)


def test_dense_forward_zero_weights():
    layer = DenseLayer(np.zeros((2, 3)), np.array([4.0, -1.0]))
    np.testing.assert_array_equal(dense_forward(layer, np.ones(3)), [4.0, -1.0])


def test_dense_forward_hand_case():
    layer = DenseLayer(np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0]]), np.array([1.0, -1.0]))
    np.testing.assert_array_equal(dense_forward(layer, [1.0, 2.0, 3.0]), [8.0, 1.0])


def test_dense_forward_dimension_mismatch():
    layer = DenseLayer(np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(ValueError, match="length 3"):
        dense_forward(layer, np.zeros(4))


def test_dense_layer_rejects_nonfinite():
    with pytest.raises(ValueError, match="finite"):
        DenseLayer(np.array([[np.nan]]), np.zeros(1))


def test_softmax_uniform():
    np.testing.assert_allclose(softmax([0.0, 0.0]), [0.5, 0.5], atol=1e-15)


def test_softmax_log_two():
    np.testing.assert_allclose(softmax([math.log(2), 0.0]), [2 / 3, 1 / 3], atol=1e-12)


def test_softmax_no_overflow():
    p = softmax([1000.0, 0.0])
    assert np.all(np.isfinite(p))
    assert abs(p[0] - 1.0) < 1e-12 and p[1] >= 0.0
    assert abs(p.sum() - 1.0) < 1e-12


def test_cross_entropy_values():
    assert cross_entropy([1.0, 0.0], 0) < 1e-9
    assert abs(cross_entropy([0.5, 0.5], 1) - math.log(2)) < 1e-12
    with pytest.raises(ValueError, match="label"):
        cross_entropy([0.5, 0.5], 2)


def test_softmax_cross_entropy_gradient_is_probs_minus_onehot():
    rng = np.random.default_rng(0)
    logits = rng.standard_normal(4)
    label = 2
    analytic = softmax(logits).copy()
    analytic[label] -= 1.0
    numeric = finite_diff(lambda z: cross_entropy(softmax(z), label), logits)
    assert np.max(np.abs(analytic - numeric)) < 1e-7


# --- model construction / invariants -------------------------------------

def test_dqc_layer_shapes():
    m = small_dqc()
    assert m.pre.in_dim == 16 and m.pre.out_dim == 4
    assert m.post.in_dim == 4 and m.post.out_dim == 2
    m2 = small_dqc(embedding="dense_angle")
    assert m2.pre.out_dim == 8  # two features per qubit


def test_purevqc_rejects_classical_layers():
    layer = DenseLayer(np.zeros((2, 4)), np.zeros(2))
    with pytest.raises(ValueError, match="classical"):
        HybridModel("purevqc", VqcTemplate(4, 1), np.zeros(4), 2, "amplitude",
                    pre=layer, in_dim=16)


def test_purevqc_qubit_count_must_fit_features():
    with pytest.raises(ValueError, match="qubits"):
        HybridModel("purevqc", VqcTemplate(5, 1), np.zeros(5), 2, "amplitude", in_dim=16)


def test_purevqc_one_qubit_per_class():
    with pytest.raises(ValueError, match="per class"):
        HybridModel("purevqc", VqcTemplate(4, 1), np.zeros(4), 5, "amplitude", in_dim=16)


def test_dqc_requires_angle_embedding():
    with pytest.raises(ValueError, match="dqc"):
        small_dqc(embedding="amplitude")


def test_parameter_counts_dqc_8q_3c():
    """512*8+8 pre + 8*3+3 post = 4131 classical, n_qubits*depth quantum."""
    for depth in (1, 2, 4):
        m = init_model("dqc", "angle", 8, depth, 3, substream(0, "init"), in_dim=512)
        classical, quantum = count_parameters(m)
        assert classical == 512 * 8 + 8 + 8 * 3 + 3 == 4131
        assert quantum == 8 * depth
        assert classical > quantum


def test_parameter_vector_round_trip():
    m = small_dqc(seed=3)
    vec = params_to_vector(m)
    assert vec.shape[0] == sum(count_parameters(m))
    m2 = model_with_vector(m, vec)
    np.testing.assert_array_equal(params_to_vector(m2), vec)
    rng = np.random.default_rng(4)
    fresh = rng.standard_normal(vec.shape[0])
    m3 = model_with_vector(m, fresh)
    np.testing.assert_allclose(params_to_vector(m3), fresh)


# --- forward -------------------------------------------------------------

def test_purevqc_uniform_features_give_uniform_prediction():
    m = small_purevqc()
    m = model_with_vector(m, np.zeros(params_to_vector(m).shape[0]))
    probs = model_forward(m, np.ones(16))
    np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-12)


def test_dqc_zero_parameters_hand_check():
    m = small_dqc()
    vec = np.zeros(params_to_vector(m).shape[0])
    m = model_with_vector(m, vec)
    # pre output 0 -> angles 0 -> identity embedding -> all <Z> = 1;
    # post is zero too, so logits are 0 and the prediction is uniform.
    probs = model_forward(m, np.ones(16))
    np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-12)


def test_dqc_zero_quantum_path_feeds_post_layer():
    m = small_dqc()
    post = DenseLayer(np.array([[1.0, 2.0, 3.0, 4.0], [0.0, 0.0, 0.0, 0.0]]),
                      np.array([0.5, 0.0]))
    pre = DenseLayer(np.zeros((4, 16)), np.zeros(4))
    from dataclasses import replace

    m = replace(m, pre=pre, post=post, qparams=np.zeros(4))
    probs = model_forward(m, np.ones(16))
    # all <Z> = 1, so logits = (1+2+3+4+0.5, 0) = (10.5, 0)
    np.testing.assert_allclose(probs, softmax([10.5, 0.0]), atol=1e-12)


def test_forward_returns_distribution():
    rng = np.random.default_rng(5)
    for seed in range(3):
        for m in (small_dqc(seed=seed), small_purevqc(seed=seed),
                  small_dqc(seed=seed, embedding="dense_angle")):
            probs = model_forward(m, rng.standard_normal(16))
            assert np.all(probs > 0)
            assert abs(probs.sum() - 1.0) < 1e-10


def test_forward_checks_feature_width():
    with pytest.raises(ValueError, match="features"):
        model_forward(small_dqc(), np.zeros(17))


# --- backward ------------------------------------------------------------

def end_to_end_check(model, features, label):
    analytic = grads_to_vector(model, model_backward(model, features, label))

    def loss(vec):
        return cross_entropy(model_forward(model_with_vector(model, vec), features), label)

    numeric = finite_diff(loss, params_to_vector(model))
    bound = 1e-5 * np.maximum(np.abs(analytic), np.abs(numeric)) + 1e-7
    assert np.all(np.abs(analytic - numeric) <= bound), (
        f"worst {np.max(np.abs(analytic - numeric) - bound)}"
    )


def test_dqc_gradients_match_finite_differences():
    rng = np.random.default_rng(6)
    end_to_end_check(small_dqc(seed=7), rng.standard_normal(16), 1)


def test_dense_angle_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    end_to_end_check(small_dqc(seed=8, embedding="dense_angle"), rng.standard_normal(16), 0)


def test_purevqc_gradients_match_finite_differences():
    rng = np.random.default_rng(8)
    end_to_end_check(small_purevqc(seed=9, depth=2), rng.standard_normal(16), 1)


def test_randomized_small_models_gradient_sweep():
    rng = np.random.default_rng(9)
    for seed in range(4):
        n_qubits = int(rng.integers(2, 5))
        depth = int(rng.integers(1, 3))
        m = small_dqc(seed=seed, n_qubits=n_qubits, depth=depth, in_dim=8)
        end_to_end_check(m, rng.standard_normal(8), int(rng.integers(2)))


def test_saturated_prediction_has_zero_gradient():
    """When softmax underflows to an exact one-hot, every gradient vanishes."""
    m = small_dqc()
    from dataclasses import replace

    post = DenseLayer(np.zeros((2, 4)), np.array([1000.0, 0.0]))
    m = replace(m, post=post)
    probs = model_forward(m, np.ones(16))
    assert probs[0] == 1.0 and probs[1] == 0.0
    grads = grads_to_vector(m, model_backward(m, np.ones(16), 0))
    assert np.max(np.abs(grads)) == 0.0


def test_purevqc_gradient_only_quantum():
    g = model_backward(small_purevqc(), np.ones(16), 0)
    assert g.pre_weights is None and g.post_weights is None
    assert g.qparams.shape == (4,)


def test_backward_label_out_of_range():
    with pytest.raises(ValueError, match="label"):
        model_backward(small_dqc(), np.ones(16), 2)


# --- Adam ----------------------------------------------------------------

def test_adam_zero_grads_no_decay_is_identity():
    state = AdamState.init(3, lr=0.1)
    params = np.array([1.0, -2.0, 0.5])
    new_params, new_state = adam_step(state, params, np.zeros(3))
    np.testing.assert_array_equal(new_params, params)
    assert new_state.step == 1


def test_adam_first_step_moves_by_lr():
    state = AdamState.init(4, lr=1e-3)
    params = np.zeros(4)
    new_params, _ = adam_step(state, params, np.ones(4))
    np.testing.assert_allclose(new_params, -1e-3 * np.ones(4), atol=1e-6 * 1e-3)


def test_adam_three_step_scalar_trace():
    """Match an independently hand-rolled scalar Adam recurrence."""
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    state = AdamState.init(1, lr=lr)
    p = np.array([0.3])
    m = v = 0.0
    ref = 0.3
    for t in (1, 2, 3):
        g = 1.0
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        ref -= lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)
        p, state = adam_step(state, p, np.array([g]))
        assert abs(p[0] - ref) < 1e-12


def test_adam_weight_decay_couples_into_gradient():
    state = AdamState.init(1, lr=0.1, weight_decay=0.5)
    p, _ = adam_step(state, np.array([2.0]), np.zeros(1))
    # effective gradient 0.5*2.0 = 1.0, first-step update is -lr
    assert abs(p[0] - (2.0 - 0.1)) < 1e-6


def test_adam_rejects_nonfinite_gradients():
    state = AdamState.init(1, lr=0.1)
    with pytest.raises(ValueError, match="non-finite"):
        adam_step(state, np.zeros(1), np.array([np.nan]))


def test_adam_shape_mismatch():
    state = AdamState.init(2, lr=0.1)
    with pytest.raises(ValueError, match="shape"):
        adam_step(state, np.zeros(3), np.zeros(3))
