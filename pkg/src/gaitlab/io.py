"""On-disk file formats: datasets, transforms, reports.  All text, bit-stable."""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .dataset import LabeledDataset
from .evaluation import EvalReport
from .exceptions import FormatError
from .mmc import FeatureTransform, ROUTE_DIRECT, ROUTE_MMC_SVD

REPORT_HEADER = "experiment,setup,c_learn,c_eval,repeat,seed,d_hat,dbi,ccr"


def _fmt(v) -> str:
    """Shortest decimal that round-trips to the exact double."""
    return repr(float(v))


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gaitlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_to_text(data: LabeledDataset) -> str:
    header = {"version": 1, "J": int(data.n_joints), "T": int(data.n_frames),
              "D": int(data.n_features), "identities": int(data.n_classes)}
    lines = [json.dumps(header)]
    for label, row in zip(data.labels, data.samples):
        if not isinstance(label, str):
            label = str(label)
        if not label or "," in label or "\n" in label:
            raise ValueError(f"invalid dataset label {label!r}")
        lines.append(label + "," + ",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_dataset(path, data: LabeledDataset) -> None:
    atomic_write_text(path, dataset_to_text(data))


def dataset_from_text(text: str, raw: bool = False) -> LabeledDataset:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty dataset file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid dataset header: {exc}") from None
    if not isinstance(header, dict) or header.get("version") != 1:
        raise FormatError("dataset header must declare version 1")
    try:
        n_joints = int(header["J"])
        n_frames = int(header["T"])
        dim = int(header["D"])
        identities = int(header["identities"])
    except (KeyError, TypeError, ValueError):
        raise FormatError("dataset header missing J/T/D/identities") from None
    structured = n_joints > 0 and n_frames > 0
    if structured and dim != 3 * n_joints * n_frames and not raw:
        raise FormatError(
            f"header D={dim} inconsistent with 3*J*T={3 * n_joints * n_frames}")
    labels = []
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != dim + 1:
            raise FormatError(
                f"line {lineno}: expected {dim} values, got {len(parts) - 1}")
        if not parts[0]:
            raise FormatError(f"line {lineno}: empty label")
        labels.append(parts[0])
        try:
            rows.append([float(p) for p in parts[1:]])
        except ValueError:
            raise FormatError(f"line {lineno}: invalid number") from None
    samples = np.array(rows, dtype=np.float64) if rows else np.zeros((0, dim))
    if not np.all(np.isfinite(samples)):
        raise FormatError("dataset contains non-finite values")
    if labels and len(set(labels)) != identities:
        raise FormatError(
            f"header declares {identities} identities, rows contain "
            f"{len(set(labels))}")
    try:
        return LabeledDataset(samples=samples, labels=tuple(labels),
                              n_joints=n_joints if structured else 0,
                              n_frames=n_frames if structured else 0)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def read_dataset(path, raw: bool = False) -> LabeledDataset:
    with open(path, encoding="utf-8") as handle:
        return dataset_from_text(handle.read(), raw=raw)


def transform_to_text(transform: FeatureTransform) -> str:
    doc = {
        "version": 1,
        "route": transform.route,
        "J": int(transform.n_joints),
        "T": int(transform.n_frames),
        "D": int(transform.n_features),
        "D_hat": int(transform.n_components),
        "eigenvalues": [float(v) for v in transform.eigenvalues],
        "phi": [[float(v) for v in row] for row in transform.matrix],
        "C_L": int(transform.n_classes),
        "N_L": int(transform.n_samples),
        "seed": int(transform.seed),
    }
    return json.dumps(doc) + "\n"


def write_transform(path, transform: FeatureTransform) -> None:
    atomic_write_text(path, transform_to_text(transform))


def transform_from_text(text: str) -> FeatureTransform:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid transform file: {exc}") from None
    try:
        route = doc["route"]
        dim = int(doc["D"])
        d_hat = int(doc["D_hat"])
        eigenvalues = np.array(doc["eigenvalues"], dtype=np.float64)
        matrix = np.array(doc["phi"], dtype=np.float64)
        meta = (int(doc["J"]), int(doc["T"]), int(doc["C_L"]), int(doc["N_L"]),
                int(doc["seed"]))
    except (KeyError, TypeError, ValueError):
        raise FormatError("transform file missing required fields") from None
    if route not in (ROUTE_DIRECT, ROUTE_MMC_SVD):
        raise FormatError(f"unknown transform route {route!r}")
    if matrix.shape != (dim, d_hat) or eigenvalues.shape != (d_hat,):
        raise FormatError("transform file arrays inconsistent with D/D_hat")
    n_joints, n_frames, n_classes, n_samples, seed = meta
    return FeatureTransform(matrix=matrix, eigenvalues=eigenvalues, route=route,
                            n_classes=n_classes, n_samples=n_samples,
                            n_joints=n_joints, n_frames=n_frames, seed=seed)


def read_transform(path) -> FeatureTransform:
    with open(path, encoding="utf-8") as handle:
        return transform_from_text(handle.read())


def _report_row(row) -> str:
    d_hat = str(int(row.d_hat)) if row.repeat != "mean" else _fmt(row.d_hat)
    return ",".join([row.experiment, row.setup, str(row.c_learn),
                     str(row.c_eval), str(row.repeat), str(row.seed), d_hat,
                     _fmt(row.dbi), _fmt(row.ccr)])


def report_to_text(report: EvalReport) -> str:
    """CSV with each configuration's repeat rows followed by its mean row."""
    lines = [REPORT_HEADER]
    by_config = {}
    for row in report.rows:
        by_config.setdefault((row.c_learn, row.c_eval), []).append(row)
    for mean in report.means:
        for row in by_config.get((mean.c_learn, mean.c_eval), []):
            lines.append(_report_row(row))
        lines.append(_report_row(mean))
    return "\n".join(lines) + "\n"


def write_report(path, report: EvalReport) -> None:
    atomic_write_text(path, report_to_text(report))
