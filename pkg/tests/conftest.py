"""Shared fixtures: the stock scenario used across the test suite."""

from __future__ import annotations

import pytest

from beamlab.cli import ExperimentConfig


@pytest.fixture(scope="session")
def cfg() -> ExperimentConfig:
    return ExperimentConfig()


@pytest.fixture(scope="session")
def timing(cfg):
    return cfg.timing()


@pytest.fixture(scope="session")
def equal_links(cfg):
    """Both users demand 1 bps/Hz over identical radio constants."""
    return cfg.link(1, 1.0), cfg.link(2, 1.0)


@pytest.fixture(scope="session")
def split_links(cfg):
    """Sum rate 2 bps/Hz split 2:1 between the users."""
    return cfg.links(2.0)
