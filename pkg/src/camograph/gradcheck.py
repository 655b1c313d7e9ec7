"""Finite-difference gradient verification helpers.

Used by the test suite to compare autograd against central differences
on float64 instances of the graph and loss components.
"""

import torch


def analytic_gradients(fn, tensors):
    """Backprop fn() and return each tensor's gradient (zeros if unused)."""
    for t in tensors:
        t.grad = None
    fn().backward()
    return [t.grad.detach().clone() if t.grad is not None
            else torch.zeros_like(t) for t in tensors]


def numeric_gradients(fn, tensors, h=1e-6):
    """Central differences of scalar fn() under elementwise perturbation."""
    grads = []
    with torch.no_grad():
        for t in tensors:
            grad = torch.zeros_like(t)
            flat = t.view(-1)
            gflat = grad.view(-1)
            for i in range(flat.numel()):
                kept = flat[i].item()
                flat[i] = kept + h
                up = float(fn())
                flat[i] = kept - h
                down = float(fn())
                flat[i] = kept
                gflat[i] = (up - down) / (2.0 * h)
            grads.append(grad)
    return grads


def max_relative_error(analytic, numeric):
    """max |a - n| scaled by the larger of the two magnitudes (floored)."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = max(1e-8, float(a.abs().max()), float(n.abs().max()))
        worst = max(worst, float((a - n).abs().max()) / scale)
    return worst


def check_gradients(fn, tensors, h=1e-6):
    """Convenience wrapper returning the worst relative error."""
    return max_relative_error(analytic_gradients(fn, tensors),
                              numeric_gradients(fn, tensors, h=h))
