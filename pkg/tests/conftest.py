import json

import pytest

from gpurental import (
    Amdahl,
    Exponential,
    JobType,
    PowerLaw,
    WorkloadSpec,
)


@pytest.fixture(scope="session")
def two_type_spec() -> WorkloadSpec:
    """Two-type reference workload: Amdahl(0.8) and sqrt speedups, both with
    arrival rate 0.4 and mean job size 1, budget 2.

    The optimum is known in closed form: k = (6, 9), multiplier 1/9,
    mean response time 1/3, budget fully used.
    """
    return WorkloadSpec(
        types=(
            JobType("amdahl", Amdahl(0.8), arrival_rate=0.4, size_dist=Exponential(1.0)),
            JobType("sqrt", PowerLaw(0.5), arrival_rate=0.4, size_dist=Exponential(1.0)),
        ),
        budget=2.0,
    )


@pytest.fixture(scope="session")
def single_power_spec() -> WorkloadSpec:
    """One sqrt-speedup type with load 0.5 and budget 1: k*=4, E[T]=0.5, B=1."""
    return WorkloadSpec(
        types=(
            JobType("sqrt", PowerLaw(0.5), arrival_rate=0.5, size_dist=Exponential(1.0)),
        ),
        budget=1.0,
    )


TWO_TYPE_CONFIG = {
    "types": [
        {
            "name": "amdahl",
            "speedup": {"kind": "amdahl", "p": 0.8},
            "arrival_rate": 0.4,
            "size_dist": {"kind": "exponential", "mean": 1.0},
        },
        {
            "name": "sqrt",
            "speedup": {"kind": "power", "alpha": 0.5},
            "arrival_rate": 0.4,
            "size_dist": {"kind": "exponential", "mean": 1.0},
        },
    ],
    "budget": 2.0,
}


@pytest.fixture()
def two_type_config_path(tmp_path):
    path = tmp_path / "two_type.json"
    path.write_text(json.dumps(TWO_TYPE_CONFIG), encoding="utf-8")
    return str(path)
