import glob
import os

import pytest

from cyanine.corpus import run_case

CORPUS_DIR = os.path.join(os.path.dirname(__file__), "..", "corpus")
FILES = sorted(glob.glob(os.path.join(CORPUS_DIR, "*.cyan")))


def test_corpus_is_large_enough():
    assert len(FILES) >= 40


@pytest.mark.parametrize("path", FILES, ids=[os.path.basename(p) for p in FILES])
def test_corpus_case(path):
    result = run_case(path)
    assert result.ok, result.detail


def test_empty_corpus_dir_gives_empty_passing_report(tmp_path):
    from cyanine.corpus import corpus_runner
    report = corpus_runner(str(tmp_path))
    assert report.ok
    assert report.results == []
