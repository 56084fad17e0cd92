import pytest

from reviewgraph import _kernels_py
from reviewgraph.bench import default_manifest, load_manifest

try:
    from reviewgraph import _kernels as _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None

BACKENDS = [_kernels_py] + ([_kernels_cy] if _kernels_cy is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def kernels(request):
    return request.param


@pytest.fixture(scope="session")
def corpus():
    return load_manifest(default_manifest())


@pytest.fixture(scope="session")
def store(corpus):
    return corpus.store()
