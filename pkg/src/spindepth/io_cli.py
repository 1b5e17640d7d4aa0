"""Shot-record ingestion, analysis configuration, and report emission.

The shot CSV schema is ``shot_id,basis,n_plus,n_minus`` with basis in
{z, alpha}; each shot's particle number is n_plus + n_minus.  Reports are
JSON with enough provenance (config hash, seed, version) to regenerate
themselves; all numbers round-trip exactly.  File writes are whole-file
atomic (temp file then rename).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError
from .estimation import (
    EllipsePoint,
    MomentEstimate,
    depth_with_confidence,
    estimate_jeff_sq,
    estimate_jz_variance,
)
from .metrics import SqueezingReport, squeezing_report
from .producibility import CRITERIA, DepthVerdict, boundary_curve, depth_bound
from .simulation import ShotRecord
from .spin_algebra import CollectiveMoments

__all__ = [
    "AnalysisConfig",
    "Report",
    "parse_shots",
    "write_shots",
    "run_analysis",
    "emit_boundary_csv",
    "emit_report",
    "load_report",
    "atomic_write_text",
]

SHOT_HEADER = ["shot_id", "basis", "n_plus", "n_minus"]


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write a file atomically: temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


@dataclass(frozen=True)
class AnalysisConfig:
    """Validated knobs of the depth-analysis pipeline.

    n_particles may be an integer or the string "per-shot" (use the
    rounded median of the per-shot totals).  sigma_det is the baseline
    detection noise subtracted from the z variance; the trend coefficient
    is carried for provenance and simulation defaults but never
    subtracted.
    """

    n_particles: int | str = "per-shot"
    sigma_det: float = 0.0
    trend_coeff: float = 0.0
    n_sigma: float = 2.0
    criterion: str = "closed_form"
    seed: int = 0
    correlation: float = 0.0
    bin_width: int | None = None
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.n_particles, str):
            if self.n_particles != "per-shot":
                raise ConfigError(
                    f'n_particles must be an integer or "per-shot", got {self.n_particles!r}'
                )
        elif self.n_particles < 2:
            raise ConfigError("n_particles must be >= 2")
        if self.sigma_det < 0 or self.trend_coeff < 0:
            raise ConfigError("noise parameters must be >= 0")
        if self.n_sigma < 0:
            raise ConfigError("n_sigma must be >= 0")
        if self.criterion not in CRITERIA:
            raise ConfigError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if not -1.0 <= self.correlation <= 1.0:
            raise ConfigError("correlation must lie in [-1, 1]")
        if self.bin_width is not None and self.bin_width < 1:
            raise ConfigError("bin_width must be >= 1 when given")

    @classmethod
    def from_dict(cls, raw: dict) -> "AnalysisConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, path: str | Path) -> "AnalysisConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def parse_shots(path: str | Path) -> list[ShotRecord]:
    """Read and strictly validate a shot CSV; bad rows abort with line numbers."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"shot file not found: {path}")
    records: list[ShotRecord] = []
    problems: list[str] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file")
        if [h.strip() for h in header] != SHOT_HEADER:
            raise DataError(
                f"{path}: bad header {header!r}, expected {','.join(SHOT_HEADER)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                problems.append(f"line {line_no}: expected 4 fields, got {len(row)}")
                continue
            sid, basis, plus, minus = (cell.strip() for cell in row)
            try:
                shot_id = int(sid)
                n_plus = int(plus)
                n_minus = int(minus)
            except ValueError:
                problems.append(f"line {line_no}: non-integer id or counts {row!r}")
                continue
            if basis not in ("z", "alpha"):
                problems.append(f"line {line_no}: unknown basis {basis!r}")
                continue
            if n_plus < 0 or n_minus < 0:
                problems.append(f"line {line_no}: negative counts")
                continue
            records.append(ShotRecord(shot_id, basis, n_plus, n_minus))
    if problems:
        shown = "; ".join(problems[:10])
        more = f" (+{len(problems) - 10} more)" if len(problems) > 10 else ""
        raise DataError(f"{path}: {shown}{more}")
    return records


def write_shots(records: list[ShotRecord], path: str | Path) -> Path:
    lines = [",".join(SHOT_HEADER)]
    lines += [f"{r.shot_id},{r.basis},{r.n_plus},{r.n_minus}" for r in records]
    return atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class Report:
    """Full analysis output with provenance; round-trips through JSON."""

    n_particles: int
    n_shots_z: int
    n_shots_alpha: int
    total_min: int
    total_mean: float
    total_max: int
    jz_variance: MomentEstimate
    jeff_sq: MomentEstimate
    j_eff: float
    squeezing: SqueezingReport
    depth_center: DepthVerdict
    depth_worst_case: DepthVerdict
    n_sigma: float
    flags: tuple[str, ...]
    config_hash: str
    seed: int
    version: str

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("jz_variance", "jeff_sq", "squeezing", "depth_center", "depth_worst_case"):
            sub = out[key]
            for k, v in list(sub.items()):
                if isinstance(v, tuple):
                    sub[k] = list(v)
        out["flags"] = list(self.flags)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "Report":
        def tup(d, key):
            d[key] = tuple(d.get(key, ()))

        jz = dict(raw["jz_variance"])
        tup(jz, "notes")
        je = dict(raw["jeff_sq"])
        tup(je, "notes")
        sq = dict(raw["squeezing"])
        tup(sq, "flags")
        dc = dict(raw["depth_center"])
        tup(dc, "notes")
        dw = dict(raw["depth_worst_case"])
        tup(dw, "notes")
        return cls(
            n_particles=raw["n_particles"],
            n_shots_z=raw["n_shots_z"],
            n_shots_alpha=raw["n_shots_alpha"],
            total_min=raw["total_min"],
            total_mean=raw["total_mean"],
            total_max=raw["total_max"],
            jz_variance=MomentEstimate(**jz),
            jeff_sq=MomentEstimate(**je),
            j_eff=raw["j_eff"],
            squeezing=SqueezingReport(**sq),
            depth_center=DepthVerdict(**dc),
            depth_worst_case=DepthVerdict(**dw),
            n_sigma=raw["n_sigma"],
            flags=tuple(raw["flags"]),
            config_hash=raw["config_hash"],
            seed=raw["seed"],
            version=raw["version"],
        )


def _resolve_n(config: AnalysisConfig, totals: np.ndarray) -> int:
    if isinstance(config.n_particles, int):
        return config.n_particles
    return int(round(float(np.median(totals))))


def run_analysis(config: AnalysisConfig, shots: list[ShotRecord]) -> Report:
    """Depth certification pipeline on a set of shot records.

    Splits shots by basis, estimates the detection-corrected Jz variance
    and the effective squared spin length, derives squeezing metrics, and
    certifies the depth at the center and over the n_sigma ellipse.
    """
    if not shots:
        raise DataError("no shots provided")
    totals = np.array([r.total for r in shots])
    n = _resolve_n(config, totals)
    if config.bin_width is not None:
        keep = np.abs(totals - n) <= config.bin_width / 2.0
        shots = [r for r, k in zip(shots, keep) if k]
        if not shots:
            raise DataError(f"no shots within bin of width {config.bin_width} around N={n}")
        totals = totals[keep]
    z_vals = np.array([r.value for r in shots if r.basis == "z"])
    a_vals = np.array([r.value for r in shots if r.basis == "alpha"])
    if z_vals.size < 4:
        raise DataError(f"need at least 4 z-basis shots, got {z_vals.size}")
    if a_vals.size < 4:
        raise DataError(f"need at least 4 alpha-basis shots, got {a_vals.size}")

    jz_est = estimate_jz_variance(z_vals, config.sigma_det)
    jeff_est, j_eff = estimate_jeff_sq(a_vals)

    flags: list[str] = []
    j_max = n / 2.0
    cap = j_max * (j_max + 1.0)
    x_val = jeff_est.value
    if x_val > cap:
        x_val = cap
        j_eff = j_max
        flags.append("second_perp_clamped_to_sector_cap")
    mean_z = float(z_vals.mean())
    moments = CollectiveMoments(
        n,
        0.0,
        0.0,
        mean_z,
        x_val,
        jz_est.value + mean_z**2,
    )
    point = EllipsePoint(
        x_norm=x_val / j_max**2,
        x_std=math.sqrt(jeff_est.variance_of_estimate) / j_max**2,
        var_z=jz_est.value,
        var_std=math.sqrt(jz_est.variance_of_estimate),
        correlation=config.correlation,
    )
    depth_center = depth_bound(n, moments, config.criterion)
    depth_worst = depth_with_confidence(point, config.n_sigma, n, config.criterion)
    flags.extend(jz_est.notes)
    flags.extend(jeff_est.notes)
    return Report(
        n_particles=n,
        n_shots_z=int(z_vals.size),
        n_shots_alpha=int(a_vals.size),
        total_min=int(totals.min()),
        total_mean=float(totals.mean()),
        total_max=int(totals.max()),
        jz_variance=jz_est,
        jeff_sq=jeff_est,
        j_eff=j_eff,
        squeezing=squeezing_report(moments),
        depth_center=depth_center,
        depth_worst_case=depth_worst,
        n_sigma=config.n_sigma,
        flags=tuple(flags),
        config_hash=config.hash(),
        seed=config.seed,
        version=__version__,
    )


def emit_report(report: Report, path: str | Path) -> Path:
    """Serialize a report as JSON (floats round-trip exactly)."""
    return atomic_write_text(path, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def load_report(path: str | Path) -> Report:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return Report.from_dict(raw)


def emit_boundary_csv(
    n_particles: int,
    ks: list[int],
    path: str | Path,
    lambda_grid=None,
) -> list[Path]:
    """Boundary CSVs (columns lambda,x_norm,var_z); one file per k.

    A single k writes exactly `path`; multiple k values get a _k{k}
    suffix before the extension.
    """
    path = Path(path)
    written = []
    for k in ks:
        curve = boundary_curve(n_particles, k, lambda_grid)
        target = path if len(ks) == 1 else path.with_name(f"{path.stem}_k{k}{path.suffix}")
        lines = ["lambda,x_norm,var_z"]
        lines += [
            f"{float(lam)!r},{float(x)!r},{float(v)!r}"
            for lam, x, v in zip(curve.lam, curve.x_norm, curve.var_z)
        ]
        written.append(atomic_write_text(target, "\n".join(lines) + "\n"))
    return written
