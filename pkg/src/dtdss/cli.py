"""Command-line harness: simulate, replay, calibrate, evaluate.

Exit codes: 0 success, 1 runtime/fit failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from datetime import datetime, timezone
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import calib, io, plantsim
from .errors import AlignmentError, DtdssError
from .fixedpoint import QFormat, FixedPipeline, to_fixed
from .flux import DifferentialSample, FluxEstimate, Pipeline, baseline_ghi, clear_sky_ghi
from .psychro import PsychroSample, moist_air_density_at

USAGE_ERROR = 2
RUNTIME_ERROR = 1

# Emission intervals suited to each library scenario (seconds).
SCENARIO_INTERVALS = {
    "diurnal_clear": 10.0,
    "cloud_transients": 10.0,
    "altitude_sweep": 10.0,
    "dark_room": 1.0,
    "step_response": 1.0,
    "gusty": 1.0,
}

JOIN_TOLERANCE_S = 0.5

BENCHMARK_FOOTER = (
    "reference deployment benchmark: MAPE 7.2 %, RMSE 45 W/m2, R^2 0.94"
)


def _sample_to_record(sample: DifferentialSample, g_true: float) -> io.TelemetryRecord:
    ref = sample.reference
    return io.TelemetryRecord(
        timestamp_s=sample.timestamp,
        t_ref_c=ref.temperature - 273.15,
        rh_ref_pct=ref.relative_humidity,
        p_ref_hpa=ref.pressure,
        t_flux_c=sample.flux_temp - 273.15,
        wind_ms=sample.wind,
        g_true_wm2=g_true,
    )


def _record_to_sample(record: io.TelemetryRecord) -> DifferentialSample:
    reference = PsychroSample(
        timestamp=record.timestamp_s,
        temperature=record.t_ref_c + 273.15,
        relative_humidity=record.rh_ref_pct,
        pressure=record.p_ref_hpa,
    )
    return DifferentialSample(
        reference=reference,
        flux_temp=record.t_flux_c + 273.15,
        wind=record.wind_ms,
        timestamp=record.timestamp_s,
    )


def cmd_simulate(args) -> int:
    scenarios = plantsim.scenario_library(seed=args.seed)
    if args.scenario not in scenarios:
        print(f"unknown scenario {args.scenario!r}; available: "
              f"{', '.join(sorted(scenarios))}", file=sys.stderr)
        return USAGE_ERROR
    scenario = scenarios[args.scenario]

    interval = args.interval or SCENARIO_INTERVALS.get(args.scenario, 10.0)
    plant = plantsim.default_plant(sample_interval=interval)
    if args.plant_config:
        plant = _apply_plant_config(plant, args.plant_config)
        plant = replace(plant, sample_interval=interval)
    if args.noise is not None:
        plant = replace(plant, noise_sigma=args.noise)
    if args.quantization is not None:
        plant = replace(plant, quantization=args.quantization)

    pairs = plantsim.simulate(plant, scenario, seed=args.seed)
    io.write_telemetry(
        args.out, (_sample_to_record(s, g) for s, g in pairs), include_truth=True,
    )
    truth = np.array([g for _, g in pairs])
    print(f"scenario {args.scenario}: {len(pairs)} samples over "
          f"{scenario.duration:.0f} s at {interval:g} s")
    print(f"true GHI  min {truth.min():.1f}  mean {truth.mean():.1f}  "
          f"max {truth.max():.1f} W/m2")
    print(f"wrote {args.out}")
    return 0


def _apply_plant_config(plant: plantsim.PlantConfig, path) -> plantsim.PlantConfig:
    values = io.load_params(path)
    convection = plant.convection
    conv_updates = {}
    for key, attr in (("hc_ref", "h_c_reference"), ("rho_ref", "rho_reference"),
                      ("wind_ref", "wind_reference"), ("wind_floor", "wind_floor")):
        if key in values:
            conv_updates[attr] = float(values[key])
    if conv_updates:
        convection = replace(convection, **conv_updates)
    updates = {"convection": convection}
    for key, attr in (
        ("absorptivity", "absorptivity"),
        ("surface_area_m2", "surface_area"),
        ("heat_capacity_jk", "heat_capacity"),
        ("electrical_power_w", "electrical_power"),
        ("quantization_k", "quantization"),
        ("noise_sigma_k", "noise_sigma"),
    ):
        if key in values:
            updates[attr] = float(values[key])
    return replace(plant, **updates)


def cmd_replay(args) -> int:
    records, malformed = io.read_telemetry(args.telemetry)
    if malformed:
        print(f"warning: skipped {malformed} malformed rows", file=sys.stderr)
    if not records:
        print("no usable telemetry rows", file=sys.stderr)
        return RUNTIME_ERROR
    values = io.load_params(args.params)
    params, inr_config = io.build_config(values)

    if args.fixed_point:
        rows = _replay_fixed(records, params, inr_config, values)
    else:
        pipeline = Pipeline(params, inr_config)
        rows = [(r.timestamp_s, pipeline.step(_record_to_sample(r)))
                for r in records]
    io.write_estimates(args.out, rows)
    print(f"replayed {len(rows)} samples -> {args.out}")
    return 0


def _replay_fixed(records, params, inr_config,
                  values) -> List[Tuple[float, FluxEstimate]]:
    if len(records) < 2:
        raise DtdssError("fixed-point replay needs at least two samples")
    interval = records[1].timestamp_s - records[0].timestamp_s
    temp_fmt = QFormat(21, 10)
    pipeline = FixedPipeline.from_params(params, inr_config, interval)

    rows: List[Tuple[float, FluxEstimate]] = []
    for record in records:
        rho = moist_air_density_at(
            record.p_ref_hpa, record.t_ref_c + 273.15, record.rh_ref_pct,
        )
        if params.density_scaling:
            pipeline.update_density(rho)
        ghi, ghi_raw = pipeline.step(
            to_fixed(record.t_flux_c + 273.15, temp_fmt),
            to_fixed(record.t_ref_c + 273.15, temp_fmt),
        )
        g_cs = clear_sky_ghi(params.site, record.timestamp_s)
        baseline = baseline_ghi(g_cs, record.rh_ref_pct, params.cloud_exponent)
        out_coeff = pipeline.state.out_mult_q / (1 << 14) * (1 << 10)
        t_sol = ghi_raw / out_coeff if out_coeff else 0.0
        flags = set()
        if ghi != ghi_raw:
            flags.add("clamped")
        if pipeline.state.saturated:
            flags.add("out_of_envelope")
        rows.append((record.timestamp_s, FluxEstimate(
            ghi=float(ghi), ghi_raw=float(ghi_raw), sol_air_excess=t_sol,
            baseline_ghi=baseline, clear_sky_ghi=g_cs, flags=frozenset(flags),
        )))
    return rows


def cmd_calibrate(args) -> int:
    values = io.load_params(args.params)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")

    if args.mode == "tau":
        records, _ = io.read_telemetry(args.input)
        t = [r.timestamp_s for r in records]
        temp = [r.t_flux_c + 273.15 for r in records]
        tau = calib.estimate_tau(t, temp)
        io.update_params_file(args.params, {"tau_s": format(tau, ".6g")},
                              [f"tau_s from {args.input} at {stamp}"])
        print(f"tau_s = {tau:.3f}")
    elif args.mode == "trise":
        records, _ = io.read_telemetry(args.input)
        t = np.array([r.timestamp_s for r in records])
        rate = 1.0 / float(np.median(np.diff(t)))
        table = calib.estimate_trise(
            {rate: (t,
                    [r.t_flux_c for r in records],
                    [r.t_ref_c for r in records])},
            tau=float(values["tau_s"]),
        )
        t_rise = table.entries[rate]
        io.update_params_file(args.params, {"t_rise_k": format(t_rise, ".6g")},
                              [f"t_rise_k from {args.input} at {stamp}"])
        print(f"t_rise_k = {t_rise:.4f} (at {rate:.3g} Hz)")
    else:  # gain
        est_ts, est_ghi, _ = io.read_estimates(args.input)
        ref_ts, ref_ghi = _reference_series(args.reference, args.ref_column)
        est, ref = _align(est_ts, est_ghi, ref_ts, ref_ghi)
        gain = calib.fit_gain(est, ref)
        residual = calib.rmse(ref, np.asarray(est) * gain)
        io.update_params_file(
            args.params, {"gain": format(gain, ".6g")},
            [f"gain from {args.input} vs {args.reference} at {stamp}, "
             f"residual RMSE {residual:.2f} W/m2"],
        )
        print(f"gain = {gain:.5f} (residual RMSE {residual:.2f} W/m2)")
    return 0


def _reference_series(path, column: Optional[str]) -> Tuple[List[float], List[float]]:
    """Reference GHI series from a telemetry or estimates file."""
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
    if "ghi_wm2" in header and "t_flux_c" not in header:
        ts, ghi, _ = io.read_estimates(path)
        return ts, ghi
    records, _ = io.read_telemetry(path)
    for col in ([column] if column else ["g_true_wm2", "g_ref_wm2"]):
        values = [getattr(r, col) for r in records]
        if any(v is not None for v in values):
            ts = [r.timestamp_s for r, v in zip(records, values) if v is not None]
            ghi = [v for v in values if v is not None]
            return ts, ghi
    raise DtdssError(f"{path}: no usable reference column")


def _align(ts_a, vals_a, ts_b, vals_b) -> Tuple[List[float], List[float]]:
    """Inner join on timestamp within the tolerance; returns (a, b) values."""
    tb = np.asarray(ts_b)
    order = np.argsort(tb)
    tb_sorted = tb[order]
    vb = np.asarray(vals_b)[order]
    out_a, out_b = [], []
    for t, va in zip(ts_a, vals_a):
        i = int(np.searchsorted(tb_sorted, t))
        for j in (i - 1, i):
            if 0 <= j < tb_sorted.size and abs(tb_sorted[j] - t) <= JOIN_TOLERANCE_S:
                out_a.append(va)
                out_b.append(float(vb[j]))
                break
    if not out_a:
        raise AlignmentError("no overlapping timestamps within 0.5 s")
    return out_a, out_b


def cmd_evaluate(args) -> int:
    est_ts, est_ghi, est_flags = io.read_estimates(args.estimates)
    ref_ts, ref_ghi = _reference_series(args.reference, args.ref_column)
    est, ref = _align(est_ts, est_ghi, ref_ts, ref_ghi)

    mape_result = calib.mape(ref, est)
    rmse_value = calib.rmse(ref, est)
    r2 = calib.r_squared(ref, est)

    histogram: Dict[str, int] = {}
    for joined in est_flags:
        for flag in joined.split("|"):
            if flag:
                histogram[flag] = histogram.get(flag, 0) + 1

    lines = [
        f"N aligned samples: {len(est)}",
        f"MAPE: {mape_result.value:.3f} % over {mape_result.n_used} samples "
        f"({mape_result.n_excluded} below floor excluded)",
        f"RMSE: {rmse_value:.3f} W/m2",
        f"R^2:  {r2:.5f}",
        "flags: " + (", ".join(f"{k}={v}" for k, v in sorted(histogram.items()))
                     or "none"),
        BENCHMARK_FOOTER,
    ]
    report = "\n".join(lines)
    print(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report + "\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtdss",
        description="Differential dual-node irradiance soft-sensing harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic telemetry")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--interval", type=float, default=None,
                   help="sample interval in seconds")
    p.add_argument("--plant-config", default=None,
                   help="key=value file overriding plant parameters")
    p.add_argument("--noise", type=float, default=None, help="sigma in K")
    p.add_argument("--quantization", type=float, default=None, help="K")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="run the reconstruction over telemetry")
    p.add_argument("telemetry")
    p.add_argument("--params", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fixed-point", action="store_true")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("calibrate", help="fit tau, t_rise or gain into params")
    p.add_argument("mode", choices=["tau", "trise", "gain"])
    p.add_argument("input")
    p.add_argument("--params", required=True)
    p.add_argument("--reference", default=None,
                   help="reference file for gain fitting")
    p.add_argument("--ref-column", default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="score estimates against a reference")
    p.add_argument("estimates")
    p.add_argument("reference")
    p.add_argument("--ref-column", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "calibrate" and args.mode == "gain" and not args.reference:
        parser.error("calibrate gain requires --reference")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (DtdssError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
