from __future__ import annotations

import numpy as np
import pytest

from rheoflow.relations import bundled_relations, relation_from_text


@pytest.fixture(scope="session")
def catalog():
    return bundled_relations()


def rel(text: str, target: str | None = None):
    """Relation from inline ``key = value`` lines."""
    return relation_from_text(text, target)


def random_mandel(rng, n, radius=1.0, m=3):
    x = rng.standard_normal((n, m))
    return radius * x / np.linalg.norm(x, axis=1, keepdims=True)


def channel_text(bulk="file = navier_stokes.rel", boundary="file = navier_slip.rel", nx=4, ny=16,
                 lx=0.5, ly=2.0, dt=0.05, t_end=0.5, bx="0", u0="0", extra="", oracle="none"):
    return (
        f"[scenario]\nname = t\noracle = {oracle}\n"
        f"[grid]\nnx = {nx}\nny = {ny}\nlx = {lx}\nly = {ly}\n"
        f"[bulk]\n{bulk}\n[boundary]\n{boundary}\n"
        f"[scheme]\ndt = {dt}\nt_end = {t_end}\n{extra}\n"
        f"[forcing]\nbx = {bx}\n[initial]\nu = {u0}\n"
    )


def make_config(**kw):
    from rheoflow.config import scenario_from_text

    return scenario_from_text(channel_text(**kw)).config


ACCEPTANCE: dict[int, str] = {}


def record(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
