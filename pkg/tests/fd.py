"""Central finite-difference gradient checking shared by the test modules."""

import numpy as np

EPS = 1e-5
REL_TOL = 1e-4


def rel_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1e-5)


def check_param_grads(loss_fn, params, rng, samples_per_tensor=6, eps=EPS,
                      rel_tol=REL_TOL):
    """Compare accumulated analytic grads against central differences.

    ``loss_fn`` recomputes the scalar loss from current parameter values;
    the analytic gradients must already sit in ``p.grad``. A random subset
    of coordinates is probed per tensor. Returns the worst relative error.
    """
    worst = 0.0
    for p in params:
        n = p.values.size
        idxs = rng.choice(n, size=min(samples_per_tensor, n), replace=False)
        flat = p.values.reshape(-1)
        gflat = p.grad.reshape(-1)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = loss_fn()
            flat[i] = orig - eps
            f_minus = loss_fn()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            err = rel_error(gflat[i], numeric)
            assert err < rel_tol, (
                f"{p.name}[{i}]: analytic {gflat[i]:.10g} vs numeric "
                f"{numeric:.10g} (rel {err:.3g})")
            worst = max(worst, err)
    return worst


def check_input_grad(loss_fn, x, dx, rng, samples=10, eps=EPS, rel_tol=REL_TOL):
    """Same check for the gradient with respect to an input array."""
    flat = x.reshape(-1)
    dflat = dx.reshape(-1)
    idxs = rng.choice(flat.size, size=min(samples, flat.size), replace=False)
    for i in idxs:
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = loss_fn()
        flat[i] = orig - eps
        f_minus = loss_fn()
        flat[i] = orig
        numeric = (f_plus - f_minus) / (2.0 * eps)
        err = rel_error(dflat[i], numeric)
        assert err < rel_tol, (
            f"input[{i}]: analytic {dflat[i]:.10g} vs numeric {numeric:.10g}")
