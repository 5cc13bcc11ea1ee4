"""Shared fixtures and builders for the test suite."""

import numpy as np
import pytest

from phtaxis.core import (
    Domain1D,
    GrowthSpec,
    InitialCondition,
    ModelParams,
    SourceSpec,
    build_grid,
)
from phtaxis.kernels import KernelSpec


def make_params(
    alpha=2.0,
    beta=1.0,
    d=1.0,
    D_H=1.0,
    mu0=1.0,
    growth_form="rational",
    source_form="logistic_acid",
    kernel=None,
    **kwargs,
):
    return ModelParams(
        alpha=alpha,
        beta=beta,
        d=d,
        D_H=D_H,
        growth=GrowthSpec(form=growth_form, mu0=mu0),
        source=SourceSpec(form=source_form),
        kernel=kernel if kernel is not None else KernelSpec("logistic"),
        **kwargs,
    )


@pytest.fixture
def grid400():
    return build_grid(Domain1D(20.0), 400)


@pytest.fixture
def grid_small():
    return build_grid(Domain1D(5.0), 64)


@pytest.fixture
def paper_ic():
    return InitialCondition()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
