import hashlib
from pathlib import Path

import numpy as np
import pytest

import rcqldpc
from rcqldpc.dde import DegreeDistribution, RcqParameters, design_for_awgn
from rcqldpc.ldpc import TannerGraph, degree_distributions, ieee80211n_1296, random_regular_graph

DESIGN_EBNO = 0.90
DESIGN_ITERS = 50

_SRC = Path(rcqldpc.__file__).parent
_DESIGN_SOURCES = ("channel.py", "pmf.py", "quantizer.py", "dde.py", "ldpc.py", "data/ieee80211n_1296_r12.qc")


def _source_key() -> str:
    h = hashlib.sha256()
    for name in _DESIGN_SOURCES:
        h.update((_SRC / name).read_bytes())
    return h.hexdigest()[:16]


def cached_design(cache_dir: Path, tag: str, make) -> RcqParameters:
    """Design once per source revision; later sessions reuse the JSON file."""
    path = cache_dir / f"{tag}-{_source_key()}.json"
    if path.exists():
        return RcqParameters.load(path)
    params = make()
    params.save(path)
    # Reload so cached and fresh runs see exactly the same (serialized) tables.
    return RcqParameters.load(path)


@pytest.fixture(scope="session")
def design_cache(request) -> Path:
    return Path(request.config.cache.mkdir("rcq-designs"))


@pytest.fixture(scope="session")
def wifi_code() -> TannerGraph:
    return ieee80211n_1296()


@pytest.fixture(scope="session")
def wifi_bp_params(design_cache, wifi_code) -> RcqParameters:
    deg = degree_distributions(wifi_code)
    return cached_design(design_cache, "wifi-bp-m4", lambda: design_for_awgn(deg, DESIGN_EBNO, "bp", 4, DESIGN_ITERS))


@pytest.fixture(scope="session")
def wifi_ms_params(design_cache, wifi_code) -> RcqParameters:
    deg = degree_distributions(wifi_code)
    return cached_design(design_cache, "wifi-ms-m4", lambda: design_for_awgn(deg, DESIGN_EBNO, "ms", 4, DESIGN_ITERS))


@pytest.fixture(scope="session")
def code36() -> TannerGraph:
    return random_regular_graph(600, 3, 6, seed=11)


@pytest.fixture(scope="session")
def small36() -> TannerGraph:
    return random_regular_graph(96, 3, 6, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CODE36_EBNO = 1.5


@pytest.fixture(scope="session")
def bp36_params(design_cache) -> RcqParameters:
    deg = DegreeDistribution.regular(3, 6)
    return cached_design(design_cache, "r36-bp-m4", lambda: design_for_awgn(deg, CODE36_EBNO, "bp", 4, DESIGN_ITERS))


@pytest.fixture(scope="session")
def ms36_params(design_cache) -> RcqParameters:
    deg = DegreeDistribution.regular(3, 6)
    return cached_design(design_cache, "r36-ms-m4", lambda: design_for_awgn(deg, CODE36_EBNO, "ms", 4, DESIGN_ITERS))


@pytest.fixture(scope="session")
def bp36_m10_params(design_cache) -> RcqParameters:
    # Alphabets grow with both m and the spread of LLRs; eight iterations at
    # 3 dB keep the design near 2.5 GB of memory.
    deg = DegreeDistribution.regular(3, 6)
    return cached_design(design_cache, "r36-bp-m10", lambda: design_for_awgn(deg, 3.0, "bp", 10, 8))
