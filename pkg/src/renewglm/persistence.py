"""
Batch CSV I/O and solver checkpoints.

Checkpoint format (UTF-8 text, ``\\n`` line endings, one ``key value...`` record per line)::

    renewglm-checkpoint
    version 1
    family <gaussian_identity|binomial_logit>
    penalty <lasso|scad|mcp> <r>
    lambda_grid_size <int>
    lambda_min_ratio <float>
    cd_tol <float>
    cd_max_passes <int>
    refit_max_steps <int>
    penalize_intercept <0|1>
    p <int>
    b <int>
    N <int>
    beta <p floats>
    cum_w <p floats>
    tracked <k ints>
    cum_h <k(k+1)/2 floats: lower triangle, row-major>
    active <ints>
    lambda_history <b floats>
    sha256 <hex digest of every preceding byte>

Floats are written as the shortest decimal string that round-trips
(Python ``repr``), so loading reproduces every value bit-for-bit.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
from pathlib import Path

import numpy as np

from .exceptions import BatchParseError, CheckpointCorruptError, UnsupportedVersionError
from .glm import Batch, Family
from .penalty import PenaltyConfig, PenaltyKind
from .state import SolverConfig, SolverState

MAGIC = "renewglm-checkpoint"
FORMAT_VERSION = 1

_FIELDS = ("family", "penalty", "lambda_grid_size", "lambda_min_ratio", "cd_tol", "cd_max_passes",
           "refit_max_steps", "penalize_intercept", "p", "b", "N", "beta", "cum_w", "tracked",
           "cum_h", "active", "lambda_history")


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------

def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8")), True
    return source, False


def read_batch(source, schema=None, batch_index: int = 1) -> Batch:
    """
    Parse a CSV batch: a header row, then the response followed by p covariates.

    ``schema`` optionally fixes the expected header (a sequence of column names)
    or just the number of covariates (an int). Errors report the 1-based file
    line, so the header is row 1.
    """
    fh, close = _open_text(source)
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise BatchParseError("empty file", row=1)
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise BatchParseError("need a response column and at least one covariate", row=1)
        if isinstance(schema, int) and len(header) - 1 != schema:
            raise BatchParseError(f"expected {schema} covariates, header has {len(header) - 1}", row=1)
        if schema is not None and not isinstance(schema, int) and list(schema) != header:
            raise BatchParseError(f"header {header} does not match {list(schema)}", row=1)
        width = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                raise BatchParseError(f"expected {width} fields, found {len(row)}", row=lineno)
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise BatchParseError(f"non-numeric field in {row}", row=lineno) from None
            if not all(np.isfinite(values)):
                raise BatchParseError("non-finite value", row=lineno)
            rows.append(values)
    finally:
        if close:
            fh.close()
    if not rows:
        raise BatchParseError("no data rows", row=2)
    data = np.array(rows)
    return Batch(y=data[:, 0], X=data[:, 1:], batch_index=batch_index)


def write_batch(batch: Batch, sink, names=None):
    names = names or ["y"] + [f"x{j + 1}" for j in range(batch.p)]
    lines = [",".join(names)]
    for yi, xi in zip(batch.y, batch.X):
        lines.append(",".join(repr(float(v)) for v in (yi, *xi)))
    text = "\n".join(lines) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def _floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def _ints(values) -> str:
    return " ".join(str(int(v)) for v in values)


def dumps_checkpoint(state: SolverState) -> str:
    cfg = state.config
    k = len(state.tracked)
    lower = state.cum_h[np.tril_indices(k)] if k else []
    body = [
        MAGIC,
        f"version {FORMAT_VERSION}",
        f"family {state.family.value}",
        f"penalty {cfg.penalty.kind.value} {cfg.penalty.r!r}",
        f"lambda_grid_size {cfg.lambda_grid_size}",
        f"lambda_min_ratio {cfg.lambda_min_ratio!r}",
        f"cd_tol {cfg.cd_tol!r}",
        f"cd_max_passes {cfg.cd_max_passes}",
        f"refit_max_steps {cfg.refit_max_steps}",
        f"penalize_intercept {int(cfg.penalize_intercept)}",
        f"p {state.p}",
        f"b {state.b}",
        f"N {state.N}",
        f"beta {_floats(state.beta)}",
        f"cum_w {_floats(state.cum_w)}",
        f"tracked {_ints(state.tracked)}",
        f"cum_h {_floats(lower)}",
        f"active {_ints(state.active)}",
        f"lambda_history {_floats(state.lambda_history)}",
    ]
    text = "".join(line.rstrip() + "\n" for line in body)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return text + f"sha256 {digest}\n"


def loads_checkpoint(text: str) -> SolverState:
    lines = text.split("\n")
    if not lines or lines[0] != MAGIC:
        raise CheckpointCorruptError("not a renewglm checkpoint")
    if len(lines) < 2 or not lines[1].startswith("version "):
        raise CheckpointCorruptError("missing version line")
    try:
        version = int(lines[1].split()[1])
    except (IndexError, ValueError):
        raise CheckpointCorruptError("unreadable version line") from None
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"checkpoint version {version} is not supported "
                                      f"(expected {FORMAT_VERSION})")
    if not text.endswith("\n") or len(lines) < 3 or not lines[-2].startswith("sha256 "):
        raise CheckpointCorruptError("checkpoint is truncated (no checksum line)")
    payload = text[: text.rindex("sha256 ")]
    if hashlib.sha256(payload.encode("utf-8")).hexdigest() != lines[-2].split(" ", 1)[1]:
        raise CheckpointCorruptError("checksum mismatch")

    fields = {}
    for line in lines[2:-2]:
        key, _, rest = line.partition(" ")
        fields[key] = rest.split()
    missing = [f for f in _FIELDS if f not in fields]
    if missing:
        raise CheckpointCorruptError(f"missing fields {missing}")
    try:
        return _build_state(fields)
    except (ValueError, IndexError) as err:
        raise CheckpointCorruptError(f"malformed checkpoint: {err}") from None


def _build_state(f) -> SolverState:
    def one(key, cast=int):
        return cast(f[key][0])

    penalty = PenaltyConfig(PenaltyKind(f["penalty"][0]), float(f["penalty"][1]))
    config = SolverConfig(
        penalty=penalty,
        lambda_grid_size=one("lambda_grid_size"),
        lambda_min_ratio=one("lambda_min_ratio", float),
        cd_tol=one("cd_tol", float),
        cd_max_passes=one("cd_max_passes"),
        refit_max_steps=one("refit_max_steps"),
        penalize_intercept=bool(one("penalize_intercept")),
    )
    p = one("p")
    tracked = np.array([int(v) for v in f["tracked"]], dtype=np.intp)
    k = len(tracked)
    lower = np.array([float(v) for v in f["cum_h"]])
    if lower.size != k * (k + 1) // 2:
        raise ValueError("cum_h size does not match tracked set")
    cum_h = np.zeros((k, k))
    if k:
        rows, cols = np.tril_indices(k)
        cum_h[rows, cols] = lower
        cum_h[cols, rows] = lower
    beta = np.array([float(v) for v in f["beta"]])
    cum_w = np.array([float(v) for v in f["cum_w"]])
    if beta.size != p or cum_w.size != p:
        raise ValueError("vector length does not match p")
    return SolverState(
        p=p, family=Family(f["family"][0]), config=config, b=one("b"), N=one("N"),
        beta=beta, cum_w=cum_w, tracked=tracked, cum_h=cum_h,
        active=np.array([int(v) for v in f["active"]], dtype=np.intp),
        lambda_history=[float(v) for v in f["lambda_history"]],
    )


def save_checkpoint(state: SolverState, sink):
    """Write ``state`` to a path or text stream. The caller must not mutate it meanwhile."""
    text = dumps_checkpoint(state)
    if isinstance(sink, (str, os.PathLike)):
        tmp = Path(str(sink) + ".tmp")
        tmp.write_text(text, encoding="utf-8", newline="\n")
        os.replace(tmp, sink)
    else:
        sink.write(text)


def load_checkpoint(source) -> SolverState:
    if isinstance(source, (str, os.PathLike)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8")
    else:
        text = source.read()
    return loads_checkpoint(text)
