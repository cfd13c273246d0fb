import numpy as np
import pytest

from inkjetid.config import load_config
from inkjetid.dataset import crop_at, load_manifest
from inkjetid.featurize import extract_features
from inkjetid.pipeline import extract_dataset
from inkjetid.synthgen import (PrinterProfile, indistinguishable_profiles, make_synthetic_dataset,
                               render_document, separable_profiles)


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs on rendered datasets")
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request, capsys):
    """Print and record one PASS/FAIL/SKIP line per acceptance criterion, then assert."""

    def record(number, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"criterion {number} {status}: {detail}"
        request.config.stash[ACCEPTANCE_LINES].append(line)
        with capsys.disabled():
            print(f"\n{line}")
        if ok is None:
            pytest.skip(detail)
        assert ok, line

    return record


@pytest.fixture(scope="session")
def small_doc():
    return render_document(PrinterProfile("p"), size=320)


@pytest.fixture(scope="session")
def synthetic_crops():
    """100 crops cut from a few rendered pages of different profiles."""
    crops = []
    for i, prof in enumerate(separable_profiles(4)):
        doc = render_document(prof, size=512, doc_index=i)
        rng = np.random.default_rng(i)
        for _ in range(25):
            x, y = rng.integers(0, 512 - 256 + 1, 2)
            crops.append(crop_at(doc, int(x), int(y)))
    return crops


@pytest.fixture(scope="session")
def synthetic_features(synthetic_crops):
    return np.array([extract_features(c).values for c in synthetic_crops])


def _render_and_extract(tmp_path_factory, name, profiles):
    out = tmp_path_factory.mktemp(name)
    make_synthetic_dataset(profiles, 2, out)
    manifest = load_manifest(out / "manifest.jsonl")
    return extract_dataset(manifest, load_config())


@pytest.fixture(scope="session")
def separable_table(tmp_path_factory):
    """8 separable profiles x 2 pages, default pipeline, 96 crops per page."""
    return _render_and_extract(tmp_path_factory, "separable", separable_profiles(8))


@pytest.fixture(scope="session")
def clone_table(tmp_path_factory):
    """8 profiles that differ only in their random seed."""
    return _render_and_extract(tmp_path_factory, "clones", indistinguishable_profiles(8))
