"""Compiled and fallback kernels must agree."""
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import flood_fill_components
from tilescape import kernels

BACKENDS = kernels.available_backends()
needs_cython = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")


def test_dispatch_reports_backend():
    assert kernels.BACKEND in BACKENDS


@needs_cython
@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(1, 20), m=st.integers(1, 64))
def test_ssim_backends_agree(seed, n, m):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 256, size=(n, m)).astype(float)
    b = rng.integers(0, 256, size=(n, m)).astype(float)
    got_c = BACKENDS["cython"].ssim_batch(a, b, 6.5025, 58.5225)
    got_py = BACKENDS["python"].ssim_batch(a, b, 6.5025, 58.5225)
    np.testing.assert_allclose(got_c, got_py, rtol=0, atol=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_grid_components_match_flood_fill(name, seed):
    rng = np.random.default_rng(seed)
    rows, cols = (int(x) for x in rng.integers(1, 12, size=2))
    active = rng.random((rows, cols)) < 0.6
    full_h = np.zeros((rows, cols), np.uint8)
    full_h[:, : cols - 1] = 1
    full_v = np.zeros((rows, cols), np.uint8)
    full_v[: rows - 1] = 1
    labels = BACKENDS[name].grid_components(active.astype(np.uint8), full_h, full_v)
    got = {frozenset(zip(*np.nonzero(labels == k))) for k in range(labels.max() + 1)}
    got = {frozenset((int(r), int(c)) for r, c in comp) for comp in got}
    assert got == flood_fill_components(active.tolist())
    assert np.all((labels >= 0) == active)


@needs_cython
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_grid_components_backends_identical(seed):
    rng = np.random.default_rng(seed)
    rows, cols = (int(x) for x in rng.integers(1, 12, size=2))
    active = (rng.random((rows, cols)) < 0.7).astype(np.uint8)
    h = (rng.random((rows, cols)) < 0.7).astype(np.uint8)
    v = (rng.random((rows, cols)) < 0.7).astype(np.uint8)
    h[:, -1] = 0
    v[-1] = 0
    assert np.array_equal(BACKENDS["cython"].grid_components(active, h, v),
                          BACKENDS["python"].grid_components(active, h, v))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_ca_step_from_empty_blocks_only_corners(name):
    out = BACKENDS[name].ca_step(np.zeros((10, 12), np.uint8), 5, 4)
    expected = np.zeros((10, 12), np.uint8)
    expected[[0, 0, -1, -1], [0, -1, 0, -1]] = 1
    assert np.array_equal(out, expected)


@needs_cython
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), birth=st.integers(0, 9), survive=st.integers(0, 9))
def test_ca_step_backends_identical(seed, birth, survive):
    grid = (np.random.default_rng(seed).random((9, 13)) < 0.45).astype(np.uint8)
    assert np.array_equal(BACKENDS["cython"].ca_step(grid, birth, survive),
                          BACKENDS["python"].ca_step(grid, birth, survive))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_large_single_component_no_recursion_limit(name):
    ones = np.ones((256, 256), np.uint8)
    labels = BACKENDS[name].grid_components(ones, ones, ones)
    assert labels.max() == 0 and labels.min() == 0


def test_benchmark_script_runs(tmp_path):
    import runpy
    bench = runpy.run_path(str(Path(__file__).parent.parent / "benchmarks" / "bench_kernels.py"))
    assert bench["main"](["--repeat", "1", "--json", str(tmp_path / "b.json")]) == 0
    rows = json.loads((tmp_path / "b.json").read_text())
    assert [r["kernel"].split()[0] for r in rows] == ["ssim_batch", "grid_components", "ca_step"]
