"""Plain-text model files: one ``key = value`` per line."""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .roc import CombinationModel

_RESERVED = {"method", "markers", "theta", "delta", "converged", "iterations"}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_model(model: CombinationModel, marker_names=None) -> str:
    theta = np.asarray(model.theta, dtype=float)
    names = tuple(marker_names) if marker_names is not None else tuple(
        f"X{k + 1}" for k in range(theta.size)
    )
    if len(names) != theta.size:
        raise ValueError("marker_names length does not match theta")
    lines = [
        f"method = {model.method_tag}",
        f"markers = {','.join(names)}",
        f"theta = {','.join(repr(float(v)) for v in theta)}",
        f"delta = {float(model.delta)!r}",
        f"converged = {_fmt(model.converged)}",
        f"iterations = {int(model.iterations)}",
    ]
    for k, v in sorted(model.notes.items()):
        if k in _RESERVED or isinstance(v, (list, tuple, np.ndarray, dict)):
            continue
        lines.append(f"{k} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def save_model(model: CombinationModel, path, marker_names=None) -> Path:
    path = Path(path)
    path.write_text(format_model(model, marker_names))
    return path


def _parse_scalar(s: str):
    low = s.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s.strip()


def load_model(path) -> tuple[CombinationModel, tuple[str, ...]]:
    """Inverse of :func:`save_model`; returns the model and its marker names."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string("[model]\n" + Path(path).read_text())
    kv = dict(cp["model"])
    missing = {"method", "theta", "delta"} - set(kv)
    if missing:
        raise ValueError(f"model file lacks {sorted(missing)}")
    theta = np.array([float(v) for v in kv.pop("theta").split(",")])
    names = tuple(kv.pop("markers").split(",")) if "markers" in kv else tuple(
        f"X{k + 1}" for k in range(theta.size)
    )
    model = CombinationModel(
        theta,
        float(kv.pop("delta")),
        kv.pop("method"),
        _parse_scalar(kv.pop("converged", "true")) is True,
        int(kv.pop("iterations", "0")),
        {k: _parse_scalar(v) for k, v in kv.items()},
    )
    return model, names
