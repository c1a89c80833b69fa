"""Decay reports: per-snapshot constants, CSV/JSONL emission and parsing.

Columns of ``report.csv`` (frozen order)::

    t, k, C_k, C_k_elliptic, besov, lnl_sobolev, rho_L_R0 .. rho_L_R{M-1}, tail_mass, status

``rho_L_Rj`` is the localized ratio on the dyadic band ``R = 2^j t^(1/5)``.
Bands without grid points are left empty, as is ``C_k_elliptic`` when no
elliptic point is admissible.  Every row belongs to an accepted snapshot;
snapshots over the tail threshold are left out and listed in
``excluded_times``.  Localized derivative ratios go to a separate long-format
table, ``rho_k.csv``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..norms import (
    Region,
    RegionThresholds,
    besov_norm,
    dyadic_masks,
    elliptic_log_sup,
    localized_l2,
    region_masks,
    sobolev_norm,
    tail_mass,
    weighted_sup,
)
from ..spectral import RealField, derivative
from ..vector_fields import OperatorParams, apply_L, apply_LNL

FIXED_HEAD = ["t", "k", "C_k", "C_k_elliptic", "besov", "lnl_sobolev"]
FIXED_TAIL = ["tail_mass", "status"]
RHO_K_COLUMNS = ["t", "k", "band", "R", "rho_k"]
KS = (0, 1, 2, 3)


def decay_exponents(k: int) -> tuple[float, float]:
    """``(alpha, beta) = (1/8 + k/4, 3/8 - k/4)``."""
    return 1 / 8 + k / 4, 3 / 8 - k / 4


@dataclass
class DecayRow:
    t: float
    k: int
    C_k: float
    C_k_elliptic: float | None
    besov: float
    lnl_sobolev: float
    rho_L: list
    tail_mass: float
    status: str = "ok"


@dataclass
class RhoKRow:
    t: float
    k: int
    band: int
    R: float
    rho_k: float


@dataclass
class DecayReport:
    rows: list = field(default_factory=list)
    rho_k: list = field(default_factory=list)
    excluded_times: list = field(default_factory=list)
    n_bands: int = 0

    @property
    def flagged(self) -> bool:
        return bool(self.excluded_times)

    @property
    def times(self) -> np.ndarray:
        return np.array(sorted({r.t for r in self.rows}))

    def column(self, name: str, k: int = 0) -> np.ndarray:
        """Values of ``name`` over time for derivative order ``k`` (None -> NaN)."""
        vals = [getattr(r, name) for r in self.rows if r.k == k]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    def rho_L_matrix(self) -> np.ndarray:
        """Times x bands array of rho_L (NaN where a band is empty)."""
        rows = [r for r in self.rows if r.k == 0]
        out = np.full((len(rows), self.n_bands), np.nan)
        for i, r in enumerate(rows):
            for j, v in enumerate(r.rho_L):
                if v is not None:
                    out[i, j] = v
        return out

    def header(self) -> list[str]:
        return FIXED_HEAD + [f"rho_L_R{j}" for j in range(self.n_bands)] + FIXED_TAIL


def snapshot_rows(u: RealField, m: int = 1, sign: int = 1, nonlinear: bool = True,
                  thresholds: RegionThresholds = RegionThresholds()):
    """Rows (one per k) and rho_k entries for one snapshot with ``t > 0``.

    ``rho_L`` uses ``L^NL u`` for nonlinear runs and ``L(t) u`` for linear ones.
    """
    t = u.time
    params = OperatorParams(t, m, sign)
    Lu = apply_LNL(u, params) if nonlinear else apply_L(u, t)
    besov = besov_norm(u)
    lnl = sobolev_norm(apply_LNL(u, params) if nonlinear else Lu, 0.5)
    tm = tail_mass(u)
    bands = dyadic_masks(region_masks(u.grid, t, thresholds), Region.DYADIC)
    rho_L = [localized_l2(Lu, b) / math.sqrt(b.R) if b.count else None for b in bands]
    rows, rho_k = [], []
    for k in KS:
        dk = derivative(u, k)
        a, b = decay_exponents(k)
        rows.append(DecayRow(t, k, weighted_sup(dk, t, a, b),
                             elliptic_log_sup(u, t, k, thresholds), besov, lnl,
                             list(rho_L), tm))
        for j, band in enumerate(bands):
            if band.count:
                rho_k.append(RhoKRow(t, k, j, band.R,
                                     localized_l2(dk, band) / band.R ** (1 / 8 + k / 4)))
    return rows, rho_k


def build_report(snapshots, m: int = 1, sign: int = 1, nonlinear: bool = True,
                 thresholds: RegionThresholds = RegionThresholds(),
                 tail_threshold: float = 1e-6) -> DecayReport:
    rep = DecayReport()
    for u in snapshots:
        if u.time <= 0:
            continue
        if tail_mass(u) > tail_threshold:
            rep.excluded_times.append(u.time)
            continue
        rows, rk = snapshot_rows(u, m, sign, nonlinear, thresholds)
        rep.rows.extend(rows)
        rep.rho_k.extend(rk)
    rep.n_bands = max((len(r.rho_L) for r in rep.rows), default=0)
    for r in rep.rows:
        r.rho_L = r.rho_L + [None] * (rep.n_bands - len(r.rho_L))
    return rep


# -- emission and parsing -----------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def _row_dict(rep: DecayReport, r: DecayRow) -> dict:
    d = {"t": r.t, "k": r.k, "C_k": r.C_k, "C_k_elliptic": r.C_k_elliptic,
         "besov": r.besov, "lnl_sobolev": r.lnl_sobolev}
    for j in range(rep.n_bands):
        d[f"rho_L_R{j}"] = r.rho_L[j]
    d["tail_mass"] = r.tail_mass
    d["status"] = r.status
    return d


def emit_report(rep: DecayReport, out_dir, formats=("CSV", "JSONL")) -> list[Path]:
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "CSV" in formats:
            p = out / "report.csv"
            with open(p, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(rep.header())
                for r in rep.rows:
                    wr.writerow([_cell(v) for v in _row_dict(rep, r).values()])
            written.append(p)
            p = out / "rho_k.csv"
            with open(p, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(RHO_K_COLUMNS)
                for r in rep.rho_k:
                    wr.writerow([_cell(v) for v in asdict(r).values()])
            written.append(p)
        if "JSONL" in formats:
            p = out / "report.jsonl"
            with open(p, "w") as fh:
                for r in rep.rows:
                    fh.write(json.dumps(_row_dict(rep, r)) + "\n")
            written.append(p)
    except OSError as exc:
        raise OSError(f"cannot write report under {out}: {exc.strerror}") from exc
    return written


def _num(s: str):
    return None if s == "" else float(s)


def parse_report(out_dir) -> DecayReport:
    out = Path(out_dir)
    rep = DecayReport()
    with open(out / "report.csv", newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rep.n_bands = len(header) - len(FIXED_HEAD) - len(FIXED_TAIL)
        for cells in rd:
            d = dict(zip(header, cells))
            rep.rows.append(DecayRow(
                float(d["t"]), int(d["k"]), float(d["C_k"]), _num(d["C_k_elliptic"]),
                float(d["besov"]), float(d["lnl_sobolev"]),
                [_num(d[f"rho_L_R{j}"]) for j in range(rep.n_bands)],
                float(d["tail_mass"]), d["status"]))
    rk = out / "rho_k.csv"
    if rk.exists():
        with open(rk, newline="") as fh:
            rd = csv.reader(fh)
            next(rd)
            for t, k, band, R, v in rd:
                rep.rho_k.append(RhoKRow(float(t), int(k), int(band), float(R), float(v)))
    return rep
