from typing import List

import numpy as np
import pytest

from torsionlab.gstruct import GStructureFrame, build_frame
from torsionlab.manifolds import (
    ManifoldSpec,
    build_conformal_euclidean,
    build_flat,
    build_hopf_cover,
    build_hyperbolic_kenmotsu,
    product_with_line,
    sample_points,
)


def frames(spec: ManifoldSpec, count: int, seed: int = 7) -> List[GStructureFrame]:
    return [build_frame(spec, p) for p in sample_points(spec, count, seed)]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def flat() -> ManifoldSpec:
    return build_flat(4)


@pytest.fixture(scope="session")
def hopf() -> ManifoldSpec:
    return build_hopf_cover(4)


@pytest.fixture(scope="session")
def conformal() -> ManifoldSpec:
    return build_conformal_euclidean(4, "x1^2 + x2")


@pytest.fixture(scope="session")
def hyperbolic() -> ManifoldSpec:
    return build_hyperbolic_kenmotsu(5, 1.0)


@pytest.fixture(scope="session")
def hopf_product(hopf) -> ManifoldSpec:
    return product_with_line(hopf)


@pytest.fixture(scope="session")
def hopf_frames(hopf) -> List[GStructureFrame]:
    return frames(hopf, 16)


@pytest.fixture(scope="session")
def conformal_frames(conformal) -> List[GStructureFrame]:
    return frames(conformal, 20)


@pytest.fixture(scope="session")
def hyperbolic_frames(hyperbolic) -> List[GStructureFrame]:
    return frames(hyperbolic, 16)
