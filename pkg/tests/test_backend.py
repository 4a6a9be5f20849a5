import numpy as np
import pytest

from spinglass import _backend, _pykernels
from spinglass.bruteforce import SearchConfig, spectrum_search
from spinglass.model import as_qubo, energies, random_qubo

compiled = _backend.compiled_kernels
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def test_backend_name():
    assert _backend.BACKEND in ("compiled", "python")


def _arrays(n, seed):
    q = random_qubo(n, seed=seed)
    return q, np.ascontiguousarray(q.linear_vector), np.ascontiguousarray(q.quadratic_matrix)


class TestPythonKernels:
    def test_word_energies(self):
        q, b, A = _arrays(10, 1)
        words = np.arange(1 << 10, dtype=np.uint64)
        out = np.empty(len(words))
        _pykernels.word_energies(b, A, q.offset, words, out)
        assert np.array_equal(out, energies(q, words))

    def test_chunk_energies_strided(self):
        q, b, A = _arrays(9, 2)
        out = np.full(64, np.nan)
        for w in range(3):
            _pykernels.chunk_energies(b, A, q.offset, 128, 64, w, 3, out)
        assert np.array_equal(out, energies(q, np.arange(128, 192, dtype=np.uint64)))


@needs_ext
class TestCompiledAgreesWithFallback:
    @pytest.mark.parametrize("seed", range(5))
    def test_word_energies(self, seed):
        q, b, A = _arrays(16, seed)
        words = np.random.default_rng(seed).integers(0, 1 << 16, 4096).astype(np.uint64)
        a, c = np.empty(4096), np.empty(4096)
        compiled.word_energies(b, A, q.offset, words, a)
        _pykernels.word_energies(b, A, q.offset, words, c)
        assert np.array_equal(a, c)

    @pytest.mark.parametrize("seed", range(5))
    def test_chunk_energies(self, seed):
        q, b, A = _arrays(14, seed)
        a, c = np.empty(1024), np.empty(1024)
        compiled.chunk_energies(b, A, q.offset, 2048, 1024, 0, 1, a)
        _pykernels.chunk_energies(b, A, q.offset, 2048, 1024, 0, 1, c)
        assert np.array_equal(a, c)

    def test_search_identical_under_both(self, monkeypatch):
        inst = random_qubo(14, seed=3)
        cfg = SearchConfig(M=6, k=20)
        fast = spectrum_search(inst, cfg)
        monkeypatch.setattr(_backend, "kernels", _pykernels)
        assert spectrum_search(inst, cfg) == fast


def test_offset_in_kernels():
    q = as_qubo(random_qubo(4, seed=0))
    out = np.empty(1)
    _pykernels.word_energies(q.linear_vector, q.quadratic_matrix, 2.5, np.zeros(1, dtype=np.uint64), out)
    assert out[0] == 2.5
