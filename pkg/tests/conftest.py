import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mmsp_offload import ChannelParams, OffloadPolicy, SystemParams, average_rate

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion lines collected by test_acceptance, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


PED = ChannelParams(f_C=0.007, f_F=0.016)
VEH = ChannelParams(f_C=0.035, f_F=0.079)


def make(channel=PED, tau=100.0, mu1=0.564, mu2=0.564, lam=0.1):
    return SystemParams(channel, OffloadPolicy(tau), mu1, mu2, lam)


def random_stable(rng, load=(0.05, 0.9)):
    """Valid stable parameter point, log-uniform rates."""
    ch = ChannelParams(10 ** rng.uniform(-3, 0), 10 ** rng.uniform(-3, 0))
    tau = 10 ** rng.uniform(-2, 4)
    mu1 = 10 ** rng.uniform(-1, 1)
    mu2 = 10 ** rng.uniform(-1, 1)
    probe = SystemParams(ch, OffloadPolicy(tau), mu1, mu2, 1.0)
    lam = rng.uniform(*load) * average_rate(probe)
    return SystemParams(ch, OffloadPolicy(tau), mu1, mu2, lam)


@pytest.fixture
def ped100():
    return make()
