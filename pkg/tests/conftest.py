"""Shared fixtures.  Expensive input states are built once per session."""

import pytest

from bosonic_qpe import LossChannel, apply_loss, cat_plus


@pytest.fixture(scope="session")
def lossy_cat():
    """Factory for cat states pushed through a loss channel, cached by
    (order, alpha, dim, chi)."""
    cache = {}

    def make(order, alpha=2.0, dim=40, chi=0.15):
        key = (order, complex(alpha), dim, chi)
        if key not in cache:
            state = cat_plus(order, alpha, dim)
            cache[key] = apply_loss(state, LossChannel.from_chi(chi))
        return cache[key]

    return make
