"""Experiment files, figure presets and CSV output.

An experiment file is YAML with explicit units in the key names::

    system:
      K: 1
      M: 5
      omega0: 1.0
      omegaM: 1.0
      r0_th_bpcu: 0.2
      rs_th_bpcu: 1.0
      snr_db: 20.0
      sigma_e_sq: 0.0
    strategies: [csi_baseline, min_gain_qos, alg1, alg2]
    sweep:
      variable: snr_db
      values: [0, 5, 10]        # or {start: 0, stop: 40, step: 5}
    series:                     # optional second dimension, one curve per value
      variable: M
      values: [1, 5]
    trials: 100000
    seed: 1
    output: fig2.csv
    flags:
      common_random_numbers: false
      include_analytic: true
      include_oracle: false
      include_published: false

Unknown keys are rejected.
"""
from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import analytic
from .model import InvalidParameterError, SystemConfig
from .montecarlo import SWEEP_VARIABLES, SweepResult, config_at, sweep
from .selection import Strategy

CSV_HEADER = ("variable", "value", "strategy", "p_outage_mc", "std_err",
              "p_outage_analytic", "trials", "seed")

_SYSTEM_KEYS = {
    "K": "K", "M": "M", "omega0": "omega0", "omegaM": "omegaM",
    "r0_th_bpcu": "r0_th", "rs_th_bpcu": "rs_th", "snr_db": "snr_db", "sigma_e_sq": "sigma_e_sq",
}
_TOP_KEYS = {"system", "strategies", "sweep", "series", "trials", "seed", "output", "flags", "note"}
_FLAG_KEYS = ("common_random_numbers", "include_analytic", "include_oracle", "include_published")


class SpecError(InvalidParameterError):
    def __init__(self, message: str, path: str = "", line: Optional[int] = None):
        where = path + (f" (line {line})" if line else "")
        super().__init__(f"{where}: {message}" if where else message)
        self.path, self.line = path, line


@dataclass(frozen=True)
class ExperimentSpec:
    system: SystemConfig
    strategies: tuple
    variable: str
    grid: tuple
    trials: int = 100_000
    seed: int = 1
    output: Optional[str] = None
    series_variable: Optional[str] = None
    series_values: tuple = ()
    common_random_numbers: bool = False
    include_analytic: bool = True
    include_oracle: bool = False
    include_published: bool = False
    note: str = ""

    @property
    def run_strategies(self) -> tuple:
        names = list(self.strategies)
        if self.include_oracle and Strategy.EXHAUSTIVE.value not in names:
            names.append(Strategy.EXHAUSTIVE.value)
        return tuple(names)

    def series(self) -> list[tuple[Optional[str], SystemConfig]]:
        """(suffix, config) per curve family."""
        if not self.series_variable:
            return [(None, self.system)]
        return [(f"{self.series_variable}={_fmt(v)}", config_at(self.system, self.series_variable, v))
                for v in self.series_values]

    def to_dict(self) -> dict:
        s = self.system
        d = {
            "system": {"K": s.K, "M": s.M, "omega0": s.omega0, "omegaM": s.omegaM,
                       "r0_th_bpcu": s.r0_th, "rs_th_bpcu": s.rs_th, "snr_db": s.snr_db,
                       "sigma_e_sq": s.sigma_e_sq},
            "strategies": list(self.strategies),
            "sweep": {"variable": self.variable, "values": list(self.grid)},
            "trials": self.trials,
            "seed": self.seed,
            "flags": {k: getattr(self, k) for k in _FLAG_KEYS},
        }
        if self.series_variable:
            d["series"] = {"variable": self.series_variable, "values": list(self.series_values)}
        if self.output:
            d["output"] = self.output
        if self.note:
            d["note"] = self.note
        return d

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


# --- loading with line-aware diagnostics ----------------------------------

def _line_index(node, prefix="", out=None) -> dict:
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[path] = k.start_mark.line + 1
            _line_index(v, path, out)
    return out


def loads(text: str, source: str = "<spec>") -> ExperimentSpec:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SpecError(f"malformed YAML: {getattr(exc, 'problem', exc)}", source,
                        mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise SpecError("top level must be a mapping", source)
    lines = _line_index(node)

    def fail(msg, path):
        raise SpecError(msg, f"{source}:{path}", lines.get(path))

    def section(name, required=True):
        val = data.get(name)
        if val is None:
            if required:
                fail("missing required section", name)
            return {}
        if not isinstance(val, dict):
            fail("must be a mapping", name)
        return val

    for key in data:
        if key not in _TOP_KEYS:
            fail(f"unknown key (allowed: {sorted(_TOP_KEYS)})", key)

    sys_raw = section("system")
    for key in sys_raw:
        if key not in _SYSTEM_KEYS:
            fail(f"unknown key (allowed: {sorted(_SYSTEM_KEYS)})", f"system.{key}")
    for key in ("K", "M"):
        if key not in sys_raw:
            fail("missing required field", f"system.{key}")
    try:
        system = SystemConfig(**{_SYSTEM_KEYS[k]: v for k, v in sys_raw.items()})
    except (InvalidParameterError, TypeError) as exc:
        fail(str(exc), "system")

    strategies = data.get("strategies")
    if not isinstance(strategies, list) or not strategies:
        fail("must be a non-empty list", "strategies")
    for i, name in enumerate(strategies):
        try:
            Strategy(name)
        except ValueError:
            fail(f"unknown strategy {name!r} (allowed: {[s.value for s in Strategy]})", "strategies")

    def axis(name, required):
        raw = section(name, required)
        if not raw:
            return None, ()
        for key in raw:
            if key not in ("variable", "values"):
                fail("unknown key (allowed: ['values', 'variable'])", f"{name}.{key}")
        var = raw.get("variable")
        if var not in SWEEP_VARIABLES:
            fail(f"must be one of {SWEEP_VARIABLES}", f"{name}.variable")
        vals = raw.get("values")
        if isinstance(vals, dict):
            if set(vals) != {"start", "stop", "step"}:
                fail("range form needs exactly start, stop, step", f"{name}.values")
            start, stop, step = vals["start"], vals["stop"], vals["step"]
            if not step > 0:
                fail("step must be positive", f"{name}.values")
            count = int(round((stop - start) / step)) + 1
            vals = [start + i * step for i in range(count)]
            if all(isinstance(x, int) for x in (start, stop, step)):
                vals = [int(v) for v in vals]
            else:
                vals = [round(float(v), 12) for v in vals]
        if not isinstance(vals, list) or not vals:
            fail("must be a non-empty list", f"{name}.values")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
            fail("values must be numbers", f"{name}.values")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            fail("values must be strictly increasing", f"{name}.values")
        try:
            for v in vals:
                config_at(system, var, v)
        except InvalidParameterError as exc:
            fail(str(exc), f"{name}.values")
        return var, tuple(vals)

    variable, grid = axis("sweep", True)
    series_var, series_vals = axis("series", False)
    if series_var == variable:
        fail("series variable must differ from the sweep variable", "series.variable")

    trials = data.get("trials", 100_000)
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        fail("must be a positive integer", "trials")
    seed = data.get("seed", 1)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        fail("must be an integer in [0, 2**64)", "seed")
    output = data.get("output")
    if output is not None and not isinstance(output, str):
        fail("must be a path string", "output")

    flags_raw = section("flags", required=False)
    flags = {}
    for key, val in flags_raw.items():
        if key not in _FLAG_KEYS:
            fail(f"unknown key (allowed: {list(_FLAG_KEYS)})", f"flags.{key}")
        if not isinstance(val, bool):
            fail("must be true or false", f"flags.{key}")
        flags[key] = val

    note = data.get("note", "")
    if not isinstance(note, str):
        fail("must be a string", "note")

    spec = ExperimentSpec(system=system, strategies=tuple(strategies), variable=variable, grid=grid,
                          trials=trials, seed=seed, output=output, series_variable=series_var,
                          series_values=series_vals, note=note, **flags)
    for suffix, cfg in spec.series():
        for name in spec.run_strategies:
            for v in grid:
                c = config_at(cfg, variable, v)
                if name == Strategy.MIN_GAIN_QOS.value and c.K != 1:
                    fail("min_gain_qos needs K = 1 across the whole sweep", "strategies")
    return spec


def load(path) -> ExperimentSpec:
    path = Path(path)
    return loads(path.read_text(), str(path))


# --- presets --------------------------------------------------------------

_SNR_GRID = tuple(range(0, 45, 5))
_FIG_RATES = dict(r0_th=0.2, rs_th=1.0, omega0=1.0, omegaM=1.0)

PRESETS = {
    "fig2": ExperimentSpec(
        system=SystemConfig(K=1, M=5, **_FIG_RATES),
        strategies=("csi_baseline", "min_gain_qos", "alg1", "alg2"),
        variable="snr_db", grid=_SNR_GRID, series_variable="M", series_values=(1, 5),
        include_oracle=True, include_published=True,
        note="Outage vs SNR, K=1, M in {1,5}, R0=0.2 BPCU, Rs=1 BPCU, omega0=omegaM=1."),
    "fig3": ExperimentSpec(
        system=SystemConfig(K=2, M=6, **_FIG_RATES),
        strategies=("alg1", "alg2"),
        variable="snr_db", grid=_SNR_GRID, series_variable="K", series_values=(2, 4, 7),
        include_oracle=True, include_published=True,
        note="Outage vs SNR, M=6, K in {2,4,7}."),
    "fig4": ExperimentSpec(
        system=SystemConfig(K=6, M=1, **_FIG_RATES),
        strategies=("alg1", "alg2"),
        variable="snr_db", grid=_SNR_GRID, series_variable="M", series_values=(1, 4, 6),
        include_oracle=True, include_published=True,
        note="Outage vs SNR, K=6, M in {1,4,6}."),
    "fig5": ExperimentSpec(
        system=SystemConfig(K=4, M=4, **_FIG_RATES),
        strategies=("alg1", "alg2"),
        variable="snr_db", grid=_SNR_GRID, series_variable="sigma_e_sq", series_values=(0.0, 0.01, 0.1),
        note="Imperfect CSI, K=M=4 as in the figure caption (the surrounding text says 5); "
             "closed forms are reported for the perfect-CSI curve only."),
    "fig6": ExperimentSpec(
        system=SystemConfig(K=3, M=5, snr_db=10.0, **_FIG_RATES),
        strategies=("csi_baseline", "alg1", "alg2"),
        variable="omega0", grid=tuple(round(0.1 * i, 1) for i in range(1, 11)),
        series_variable="K", series_values=(3, 5), include_oracle=True,
        note="Outage vs omega0 at 10 dB, omegaM=1, M=5, K in {3,5}."),
}


def preset(name: str, *, trials: Optional[int] = None, seed: Optional[int] = None,
           output: Optional[str] = None) -> ExperimentSpec:
    try:
        spec = PRESETS[name]
    except KeyError:
        raise InvalidParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    changes = {k: v for k, v in (("trials", trials), ("seed", seed), ("output", output)) if v is not None}
    return replace(spec, **changes)


# --- running and CSV ------------------------------------------------------

@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    sweeps: list = field(default_factory=list)      # (suffix, cfg, SweepResult)
    rows: list = field(default_factory=list)


def _label(name: str, suffix: Optional[str]) -> str:
    return f"{name}[{suffix}]" if suffix else name


def _published(name: str, cfg: SystemConfig) -> Optional[float]:
    if not cfg.perfect_csi or cfg.K * cfg.M > analytic.MAX_KM:
        return None
    if name == Strategy.ALG1.value:
        return analytic.outage_alg1_published(cfg)
    if name == Strategy.MIN_GAIN_QOS.value and cfg.K == 1:
        return analytic.outage_single_antenna_printed(cfg)
    return None


def _analytic_rows(spec: ExperimentSpec, suffix, cfg, names, published: bool):
    from .montecarlo import analytic_value
    rows = []
    for name in names:
        for v in spec.grid:
            c = config_at(cfg, spec.variable, v)
            val = _published(name, c) if published else analytic_value(name, c)
            label = _label(f"{name}:published" if published else name, suffix)
            rows.append((spec.variable, _fmt(v), label, "", "", "" if val is None else repr(val), "", ""))
    return rows


def run_experiment(spec: ExperimentSpec, *, workers: Optional[int] = None) -> ExperimentResult:
    result = ExperimentResult(spec)
    for series_index, (suffix, cfg) in enumerate(spec.series()):
        res = sweep(spec.run_strategies, cfg, spec.variable, spec.grid, spec.trials, spec.seed,
                    common_random_numbers=spec.common_random_numbers,
                    include_analytic=spec.include_analytic, workers=workers, series=series_index)
        result.sweeps.append((suffix, cfg, res))
        for name in spec.run_strategies:
            for v, est, val in zip(spec.grid, res.estimates[name], res.analytic[name]):
                result.rows.append((spec.variable, _fmt(v), _label(name, suffix), repr(est.p_hat),
                                    repr(est.std_err), "" if val is None else repr(val),
                                    str(est.trials), str(est.seed)))
        if spec.include_published:
            names = [n for n in spec.strategies if n in ("alg1", "min_gain_qos")]
            result.rows.extend(_analytic_rows(spec, suffix, cfg, names, published=True))
    return result


def analytic_only(spec: ExperimentSpec) -> list:
    rows = []
    names = [n for n in spec.strategies if n in ("alg1", "min_gain_qos")]
    for suffix, cfg in spec.series():
        rows.extend(_analytic_rows(spec, suffix, cfg, names, published=False))
        if spec.include_published:
            rows.extend(_analytic_rows(spec, suffix, cfg, names, published=True))
    return rows


def csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def write_csv_atomic(path, rows) -> None:
    """Write the whole file or nothing."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(csv_text(rows))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def summary_table(rows) -> str:
    """Plain-text table of the CSV rows for the terminal."""
    lines = [f"{'strategy':<32} {'value':>8} {'p_mc':>12} {'std_err':>10} {'analytic':>12}"]
    for variable, value, label, p, se, an, _, _ in rows:
        p_s = f"{float(p):.4e}" if p else "-"
        se_s = f"{float(se):.2e}" if se else "-"
        an_s = f"{float(an):.4e}" if an else "-"
        lines.append(f"{label:<32} {value:>8} {p_s:>12} {se_s:>10} {an_s:>12}")
    return "\n".join(lines)
