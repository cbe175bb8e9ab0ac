import numpy as np
import pytest

from codeseer.neural.model import backward, forward_logits, new_model
from codeseer.neural.ops import NumericError, log_softmax

EPSILON = 1e-5
MAX_REL_ERR = 1e-4


def loss_of(model, contexts, targets) -> float:
    logits, _ = forward_logits(model, contexts)
    logp = log_softmax(logits, axis=-1)
    return float(-logp[np.arange(len(targets)), targets].mean())


def finite_difference_grads(model, contexts, targets) -> dict[str, np.ndarray]:
    """Oracle: central differences on every parameter component."""
    grads = {}
    for name, param in model.named_params():
        grad = np.zeros_like(param)
        flat_param = param.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat_param.size):
            original = flat_param[i]
            flat_param[i] = original + EPSILON
            up = loss_of(model, contexts, targets)
            flat_param[i] = original - EPSILON
            down = loss_of(model, contexts, targets)
            flat_param[i] = original
            flat_grad[i] = (up - down) / (2 * EPSILON)
        grads[name] = grad
    return grads


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
    return float((np.abs(a - b) / denom).max())


def scrambled_model(kind: str, seed: int, vocab: int, n: int, embed: int, hidden: int):
    model = new_model(kind, vocab, n, embed, hidden, seed=seed).astype(np.float64)
    rng = np.random.default_rng(seed + 500)
    for _, param in model.named_params():
        param += rng.normal(scale=0.3, size=param.shape)
    return model


CONFIGS = [
    # (seed, vocab, n, embed, hidden, batch)
    (0, 7, 4, 5, 6, 6),
    (1, 10, 5, 3, 8, 4),
    (2, 5, 2, 4, 3, 8),
    (3, 9, 3, 6, 5, 1),
]


@pytest.mark.parametrize("kind", ["rnn", "bigru"])
@pytest.mark.parametrize("config", CONFIGS, ids=[f"cfg{i}" for i in range(len(CONFIGS))])
def test_analytic_gradients_match_central_differences(kind, config):
    seed, vocab, n, embed, hidden, batch = config
    model = scrambled_model(kind, seed, vocab, n, embed, hidden)
    rng = np.random.default_rng(seed + 99)
    contexts = rng.integers(0, vocab, size=(batch, n))
    targets = rng.integers(0, vocab, size=batch)

    loss, _, analytic = backward(model, contexts, targets)
    assert loss == pytest.approx(loss_of(model, contexts, targets), rel=1e-12)

    numeric = finite_difference_grads(model, contexts, targets)
    worst = {name: relative_error(analytic[name], numeric[name]) for name in numeric}
    offender = max(worst, key=worst.get)
    assert worst[offender] < MAX_REL_ERR, f"{kind} {offender}: rel err {worst[offender]:.2e}"


def test_untouched_embedding_rows_have_zero_gradient():
    model = scrambled_model("bigru", seed=4, vocab=12, n=3, embed=4, hidden=5)
    contexts = np.array([[0, 1, 2], [1, 2, 3]])
    targets = np.array([4, 5])
    _, _, grads = backward(model, contexts, targets)
    touched = {0, 1, 2, 3}
    for row in range(12):
        if row not in touched:
            np.testing.assert_array_equal(grads["embedding"][row], 0.0)


def test_matched_output_distribution_gives_zero_bias_gradient():
    # a fresh model is uniform; targets covering the vocabulary once each
    # cancel exactly, so the projection-bias gradient is identically zero
    model = new_model("bigru", vocab_size=4, context_len=3, embed_dim=3,
                      hidden_dim=4, seed=0)
    contexts = np.array([[0, 1, 2], [1, 2, 3], [2, 3, 0], [3, 0, 1]])
    targets = np.array([0, 1, 2, 3])
    _, _, grads = backward(model, contexts, targets)
    np.testing.assert_array_equal(grads["out.b"], 0.0)


def test_duplicating_the_batch_preserves_mean_gradients():
    model = scrambled_model("rnn", seed=5, vocab=8, n=4, embed=3, hidden=5)
    rng = np.random.default_rng(42)
    contexts = rng.integers(0, 8, size=(5, 4))
    targets = rng.integers(0, 8, size=5)
    _, _, once = backward(model, contexts, targets)
    _, _, twice = backward(model, np.tile(contexts, (2, 1)), np.tile(targets, 2))
    for name in once:
        np.testing.assert_allclose(twice[name], once[name], atol=1e-12)


def test_non_finite_gradient_names_the_parameter():
    model = scrambled_model("rnn", seed=6, vocab=5, n=2, embed=3, hidden=4)
    model.W_out[0, 0] = np.inf
    with np.errstate(invalid="ignore"), pytest.raises(NumericError, match="gradient of"):
        backward(model, np.array([[0, 1]]), np.array([2]))
