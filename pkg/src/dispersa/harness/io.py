"""On-disk formats.

Snapshot file (``.dsp``): b"DSP1", u64 n, f64 L, f64 time, then n f64 values,
all little-endian.

Run directory layout::

    <output_dir>/
        manifest.json        config echo, config hash, version, platform, wall time, status
        config.txt           canonical config text
        snapshots/u_00000.dsp ...   nonlinear (or linear) trajectory
        linearized/z_00000.dsp ...  linearized flow, when computed
        report.csv, report.jsonl    decay report
        rho_k.csv            localized derivative ratios
        energy.csv           corrected-energy series, when computed
        ABORTED              present only for aborted runs; holds the reason
"""

from __future__ import annotations

import json
import platform
import struct
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import ValidationError
from ..spectral import Grid1D, RealField

_HEADER = struct.Struct("<4sQdd")


def save_snapshot(u: RealField, path) -> None:
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(b"DSP1", u.grid.n, u.grid.length, u.time))
            fh.write(np.asarray(u.values, dtype="<f8").tobytes())
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc.strerror}") from exc


def load_snapshot(path) -> RealField:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise ValidationError(f"{path}: too short for a snapshot header")
    magic, n, length, time = _HEADER.unpack_from(data)
    if magic != b"DSP1":
        raise ValidationError(f"{path}: not a snapshot file (bad magic)")
    vals = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if vals.size != n:
        raise ValidationError(f"{path}: expected {n} values, found {vals.size}")
    return RealField(Grid1D(n, length), vals, time)


def save_series(fields, directory, prefix: str) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(fields):
        save_snapshot(f, d / f"{prefix}_{i:05d}.dsp")


def load_series(directory, prefix: str) -> list[RealField]:
    files = sorted(Path(directory).glob(f"{prefix}_*.dsp"))
    return [load_snapshot(f) for f in files]


def write_manifest(out_dir, cfg, status: str, wall_time: float, extra: dict | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text())
    manifest = {
        "tool": "dispersa",
        "version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "config_hash": cfg.config_hash,
        "config": cfg.to_text(),
        "status": status,
        "wall_time_s": round(wall_time, 3),
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def mark_aborted(out_dir, reason: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ABORTED").write_text(reason + "\n")
