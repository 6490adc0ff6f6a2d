import os
import sys

import numpy as np
import pytest
from hypothesis import settings

# project modules are imported top-level, as main.py does
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

settings.register_profile("default", max_examples=200, deadline=None)
settings.register_profile("ci", max_examples=1000, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

from autodiff.engine import set_default_dtype  # noqa: E402
from calculus.universe import TypeCalculus  # noqa: E402
from utils.config import TrainConfig, load_config  # noqa: E402


@pytest.fixture(autouse=True)
def float64():
    set_default_dtype("float64")
    yield
    set_default_dtype("float64")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def calculus():
    return TypeCalculus()


@pytest.fixture
def tiny_config() -> TrainConfig:
    """small widths and few steps so whole stages run in seconds"""
    return load_config(None, [
        "dims.m_lex=6",
        "dims.m_node=6",
        "dims.m_interp=6",
        "dims.m_type=6",
        "decoder_depth=3",
        "parser.epochs=2",
        "parser.batch_size=4",
        "types.epochs=1",
        "types.samples=16",
        "types.batch_size=8",
        "types.max_depth=2",
        "interpreter.epochs=1",
        "interpreter.batch_size=4",
        "eval.k=2",
        "eval.bootstrap=50",
    ])
