import io

import numpy as np
import pytest

from conftest import as_batches, make_stream
from renewglm.exceptions import BatchParseError, CheckpointCorruptError, UnsupportedVersionError
from renewglm.glm import Batch, Family
from renewglm.penalty import PenaltyConfig, PenaltyKind
from renewglm.persistence import (dumps_checkpoint, load_checkpoint, loads_checkpoint, read_batch,
                                  save_checkpoint, write_batch)
from renewglm.solver import init_first_batch, process_batch
from renewglm.state import SolverConfig


def fitted_state(family=Family.GAUSSIAN, kind=PenaltyKind.SCAD, B=4, seed=0):
    batches = as_batches(make_stream(family, B=B, seed=seed))
    config = SolverConfig(penalty=PenaltyConfig(kind))
    state = init_first_batch(batches[0], config, family)
    for b in batches[1:]:
        state, _ = process_batch(state, b)
    return state


def assert_states_equal(a, b):
    assert (a.p, a.family, a.config, a.b, a.N) == (b.p, b.family, b.config, b.b, b.N)
    for name in ("beta", "cum_w", "tracked", "cum_h", "active"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert a.lambda_history == b.lambda_history


# --- batches -------------------------------------------------------------------

def test_read_batch_example():
    b = read_batch(io.StringIO("y,x1,x2\n2,1,0\n"))
    np.testing.assert_array_equal(b.y, [2])
    np.testing.assert_array_equal(b.X, [[1, 0]])


def test_ragged_row_names_row():
    with pytest.raises(BatchParseError, match="row 2"):
        read_batch(io.StringIO("y,x1,x2\n2,1\n"))
    with pytest.raises(BatchParseError, match="row 3"):
        read_batch(io.StringIO("y,x1\n2,1\n1,abc\n"))


def test_empty_and_header_only():
    with pytest.raises(BatchParseError):
        read_batch(io.StringIO(""))
    with pytest.raises(BatchParseError):
        read_batch(io.StringIO("y,x1\n"))


def test_schema_check():
    with pytest.raises(BatchParseError, match="covariates"):
        read_batch(io.StringIO("y,x1\n1,2\n"), schema=2)


def test_large_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    b = Batch(rng.normal(size=100_000), rng.normal(size=(100_000, 3)) * 10.0 ** rng.integers(-8, 8, (100_000, 3)))
    path = tmp_path / "big.csv"
    write_batch(b, path)
    back = read_batch(path)
    np.testing.assert_array_equal(back.y, b.y)
    np.testing.assert_array_equal(back.X, b.X)


# --- checkpoints ---------------------------------------------------------------

@pytest.mark.parametrize("family", list(Family))
@pytest.mark.parametrize("kind", list(PenaltyKind))
def test_round_trip_and_canonical_bytes(family, kind, tmp_path):
    state = fitted_state(family, kind)
    path = tmp_path / "ck.txt"
    save_checkpoint(state, path)
    back = load_checkpoint(path)
    assert_states_equal(state, back)
    save_checkpoint(back, tmp_path / "ck2.txt")
    assert path.read_bytes() == (tmp_path / "ck2.txt").read_bytes()


@pytest.mark.parametrize("family", list(Family))
@pytest.mark.parametrize("kind", list(PenaltyKind))
def test_resume_equivalence(family, kind):
    batches = as_batches(make_stream(family, B=10, seed=3))
    config = SolverConfig(penalty=PenaltyConfig(kind))
    state = init_first_batch(batches[0], config, family)
    for b in batches[1:5]:
        state, _ = process_batch(state, b)
    resumed = loads_checkpoint(dumps_checkpoint(state))
    for b in batches[5:]:
        state, _ = process_batch(state, b)
        resumed, _ = process_batch(resumed, b)
    assert dumps_checkpoint(state) == dumps_checkpoint(resumed)


def test_truncated_checkpoint():
    text = dumps_checkpoint(fitted_state())
    for cut in (len(text) - 1, len(text) // 2, 30):
        with pytest.raises(CheckpointCorruptError):
            loads_checkpoint(text[:cut])


def test_tampered_checkpoint():
    text = dumps_checkpoint(fitted_state())
    bad = text.replace("\nN ", "\nN 9", 1)
    with pytest.raises(CheckpointCorruptError, match="checksum"):
        loads_checkpoint(bad)


def test_unknown_version():
    text = dumps_checkpoint(fitted_state()).replace("version 1", "version 2", 1)
    with pytest.raises(UnsupportedVersionError):
        loads_checkpoint(text)


def test_not_a_checkpoint():
    with pytest.raises(CheckpointCorruptError):
        loads_checkpoint("hello\n")


def test_checkpoint_size_independent_of_n():
    short = len(dumps_checkpoint(fitted_state(B=3)))
    long_ = fitted_state(B=30)
    # only the lambda history grows with the number of batches
    per_batch = max(len(repr(x)) + 1 for x in long_.lambda_history)
    assert len(dumps_checkpoint(long_)) <= short + 27 * per_batch + 64 * long_.p


def test_atomic_save_leaves_no_temp(tmp_path):
    save_checkpoint(fitted_state(), tmp_path / "ck.txt")
    assert [p.name for p in tmp_path.iterdir()] == ["ck.txt"]
