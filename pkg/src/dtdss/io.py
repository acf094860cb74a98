"""File formats: telemetry CSV, estimates CSV, and the flat params file.

CSV is the sole telemetry interchange format; floats are serialized with 6
significant digits. The params file is hand-editable key=value text with
``#`` comments, mapping one-to-one onto the reconstruction, convection and
filter configuration fields.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .convection import ConvectionModel
from .errors import DtdssError, InvalidInputError
from .flux import FluxEstimate, ReconstructionParams, Site
from .inr import InrConfig

TELEMETRY_HEADER = [
    "timestamp_s", "t_ref_c", "rh_ref_pct", "p_ref_hpa",
    "t_flux_c", "wind_ms", "g_ref_wm2",
]
TRUTH_COLUMN = "g_true_wm2"

ESTIMATES_HEADER = [
    "timestamp_s", "ghi_wm2", "ghi_raw_wm2", "t_sol_k",
    "baseline_wm2", "gcs_wm2", "flags",
]

# Abort threshold for malformed telemetry rows.
MAX_MALFORMED_FRACTION = 0.05

PARAM_KEYS = [
    "absorptivity", "tau_s", "t_rise_k", "gain",
    "hc_ref", "rho_ref", "wind_ref", "wind_floor",
    "k_cloud", "alpha_min", "alpha_max", "jerk_gain",
    "derivative_mode", "sg_window", "sg_degree",
    "lat_deg", "lon_deg", "utc_offset_h",
    "density_scaling",
]


@dataclass(frozen=True)
class TelemetryRecord:
    timestamp_s: float
    t_ref_c: float
    rh_ref_pct: float
    p_ref_hpa: float
    t_flux_c: float
    wind_ms: Optional[float] = None
    g_ref_wm2: Optional[float] = None
    g_true_wm2: Optional[float] = None


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return format(value, ".6g")


def write_telemetry(path, records: Iterable[TelemetryRecord],
                    include_truth: bool = False) -> None:
    header = TELEMETRY_HEADER + ([TRUTH_COLUMN] if include_truth else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in records:
            row = [
                _fmt(r.timestamp_s), _fmt(r.t_ref_c), _fmt(r.rh_ref_pct),
                _fmt(r.p_ref_hpa), _fmt(r.t_flux_c), _fmt(r.wind_ms),
                _fmt(r.g_ref_wm2),
            ]
            if include_truth:
                row.append(_fmt(r.g_true_wm2))
            writer.writerow(row)


def read_telemetry(path) -> Tuple[List[TelemetryRecord], int]:
    """Parse a telemetry CSV; returns (records, malformed row count).

    Rows that fail to parse are skipped and counted; more than 5% malformed
    aborts the read.
    """
    records: List[TelemetryRecord] = []
    malformed = 0
    total = 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "timestamp_s" not in reader.fieldnames:
            raise InvalidInputError(f"{path}: missing telemetry header")
        for row in reader:
            total += 1
            try:
                records.append(TelemetryRecord(
                    timestamp_s=float(row["timestamp_s"]),
                    t_ref_c=float(row["t_ref_c"]),
                    rh_ref_pct=float(row["rh_ref_pct"]),
                    p_ref_hpa=float(row["p_ref_hpa"]),
                    t_flux_c=float(row["t_flux_c"]),
                    wind_ms=_opt_float(row.get("wind_ms")),
                    g_ref_wm2=_opt_float(row.get("g_ref_wm2")),
                    g_true_wm2=_opt_float(row.get(TRUTH_COLUMN)),
                ))
            except (KeyError, TypeError, ValueError):
                malformed += 1
    if total and malformed / total > MAX_MALFORMED_FRACTION:
        raise DtdssError(
            f"{path}: {malformed}/{total} malformed rows exceeds "
            f"{MAX_MALFORMED_FRACTION:.0%}"
        )
    return records, malformed


def _opt_float(text: Optional[str]) -> Optional[float]:
    if text is None or text == "":
        return None
    value = float(text)
    if math.isnan(value):
        return None
    return value


def write_estimates(path, rows: Iterable[Tuple[float, FluxEstimate]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ESTIMATES_HEADER)
        for timestamp, est in rows:
            writer.writerow([
                _fmt(timestamp), _fmt(est.ghi), _fmt(est.ghi_raw),
                _fmt(est.sol_air_excess), _fmt(est.baseline_ghi),
                _fmt(est.clear_sky_ghi), "|".join(sorted(est.flags)),
            ])


def read_estimates(path) -> Tuple[List[float], List[float], List[str]]:
    """Returns (timestamps, ghi values, flag strings)."""
    timestamps, ghi, flags = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "ghi_wm2" not in reader.fieldnames:
            raise InvalidInputError(f"{path}: missing estimates header")
        for row in reader:
            timestamps.append(float(row["timestamp_s"]))
            ghi.append(float(row["ghi_wm2"]))
            flags.append(row.get("flags", "") or "")
    return timestamps, ghi, flags


DEFAULT_PARAMS: Dict[str, str] = {
    "absorptivity": "0.9",
    "tau_s": "30.0",
    "t_rise_k": "1.0",
    "gain": "1.0",
    "hc_ref": "666.667",
    "rho_ref": "1.225",
    "wind_ref": "1.0",
    "wind_floor": "0.5",
    "k_cloud": "1.5",
    "alpha_min": "0.05",
    "alpha_max": "0.5",
    "jerk_gain": "0.4",
    "derivative_mode": "central_difference",
    "sg_window": "7",
    "sg_degree": "2",
    "lat_deg": "0.0",
    "lon_deg": "0.0",
    "utc_offset_h": "0.0",
    "density_scaling": "true",
}


def load_params(path) -> Dict[str, str]:
    """Read a key=value params file; later duplicates win."""
    values = dict(DEFAULT_PARAMS)
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
    return values


def save_params(path, values: Dict[str, str],
                provenance: Optional[List[str]] = None) -> None:
    with open(path, "w") as fh:
        fh.write("# dtdss reconstruction parameters\n")
        for key in PARAM_KEYS:
            if key in values:
                fh.write(f"{key} = {values[key]}\n")
        for key in sorted(set(values) - set(PARAM_KEYS)):
            fh.write(f"{key} = {values[key]}\n")
        for line in provenance or []:
            fh.write(f"# {line}\n")


def update_params_file(path, updates: Dict[str, str],
                       provenance: Optional[List[str]] = None) -> None:
    """Rewrite a params file with new values, preserving prior comments."""
    values = load_params(path)
    comments: List[str] = []
    with open(path) as fh:
        for line in fh:
            stripped = line.strip()
            if stripped.startswith("#") and not stripped.startswith("# dtdss"):
                comments.append(stripped.lstrip("# "))
    values.update(updates)
    save_params(path, values, comments + (provenance or []))


def _as_bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def build_config(values: Dict[str, str]) -> Tuple[ReconstructionParams, InrConfig]:
    """Materialize parameter objects from a params dictionary."""
    convection = ConvectionModel(
        h_c_reference=float(values["hc_ref"]),
        rho_reference=float(values["rho_ref"]),
        wind_reference=float(values["wind_ref"]),
        wind_floor=float(values["wind_floor"]),
    )
    site = Site(
        latitude_deg=float(values["lat_deg"]),
        longitude_deg=float(values["lon_deg"]),
        utc_offset_h=float(values["utc_offset_h"]),
    )
    params = ReconstructionParams(
        convection=convection,
        site=site,
        absorptivity=float(values["absorptivity"]),
        tau=float(values["tau_s"]),
        t_rise=float(values["t_rise_k"]),
        gain=float(values["gain"]),
        cloud_exponent=float(values["k_cloud"]),
        density_scaling=_as_bool(values["density_scaling"]),
    )
    inr = InrConfig(
        alpha_min=float(values["alpha_min"]),
        alpha_max=float(values["alpha_max"]),
        jerk_gain=float(values["jerk_gain"]),
        tau=float(values["tau_s"]),
        derivative_mode=values["derivative_mode"],
        sg_window=int(values["sg_window"]),
        sg_degree=int(values["sg_degree"]),
    )
    return params, inr
