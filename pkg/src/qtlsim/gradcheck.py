"""Full-model gradient self-check against central finite differences."""
from __future__ import annotations

import numpy as np

from .hybrid import (
    HybridModel,
    cross_entropy,
    grads_to_vector,
    model_backward,
    model_forward,
    model_with_vector,
    params_to_vector,
)


def finite_difference_grads(model: HybridModel, features, label: int,
                            h: float = 1e-5) -> np.ndarray:
    """Central differences of the cross-entropy loss over every parameter."""
    base = params_to_vector(model)
    grads = np.empty_like(base)
    for i in range(base.shape[0]):
        probe = base.copy()
        probe[i] = base[i] + h
        up = cross_entropy(model_forward(model_with_vector(model, probe), features), label)
        probe[i] = base[i] - h
        down = cross_entropy(model_forward(model_with_vector(model, probe), features), label)
        grads[i] = (up - down) / (2.0 * h)
    return grads


def max_discrepancy(analytic, numeric, floor: float = 1e-3) -> float:
    """Largest per-parameter relative difference, floored for tiny gradients."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / scale))


def run_grad_check(model: HybridModel, features, label: int, h: float = 1e-5) -> float:
    """Max relative discrepancy between analytic and numeric gradients."""
    analytic = grads_to_vector(model, model_backward(model, features, label))
    numeric = finite_difference_grads(model, features, label, h=h)
    return max_discrepancy(analytic, numeric)
