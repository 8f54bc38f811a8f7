"""Experiment configuration, alpha sweeps, refinement studies and output.

Configuration files are flat ``key = value`` text; ``#`` starts a comment.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .circle_kernel import InitialData
from .girsanov import StopSpec, log_density
from .grid import MAX_NX, GridSpec
from .noise import generate, generate_fine
from .solver import (DEFAULT_TRUNCATION, ConstantG, ModelParams, PathRecord,
                     SineG, run_batch)

Z95 = 1.959963984540054
INVALID_BUDGET = 1e-3

PATH_COLUMNS = ["seed", "alpha", "hit", "tau_hat", "min_over_run",
                "singular_integral", "log_weight", "invalid"]
SWEEP_COLUMNS = ["alpha", "n_paths", "n_hit", "p_hat", "ci_lo", "ci_hi",
                 "mean_tau", "invalid_count"]


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    J: float = 1.0                # circle length (space)
    nx: int = 256                 # spatial cells; dt = dx = J / nx
    T: float = 1.0                # horizon (time)
    alpha: float = 0.5            # drift exponent for single runs
    alpha_list: list = field(default_factory=lambda: [0.5, 4.0])
    g_kind: str = "constant"      # constant | sine
    g_value: float = 1.0          # constant value, or mean for sine
    g_amp: float = 0.0
    g_freq: float = 1.0
    trunc_level: int = DEFAULT_TRUNCATION
    drift: bool = True
    init_kind: str = "constant"   # constant | cosine | tabulated
    u0: float = 0.2               # level (constant) or mean (cosine)
    u0_amp: float = 0.0           # cosine amplitude
    u0_values: list = field(default_factory=list)   # tabulated u0 on the nodes
    u1: float = 0.0               # constant initial velocity
    n_paths: int = 400
    base_seed: int = 0
    hit_level: float = 0.0
    stop_m: float = 1e6           # integrability budget for Girsanov weights
    output: str = ""

    def spec(self) -> GridSpec:
        return GridSpec.from_horizon(self.J, self.nx, self.T)

    def g(self):
        if self.g_kind == "constant":
            return ConstantG(self.g_value)
        if self.g_kind == "sine":
            return SineG(self.g_value, self.g_amp, self.g_freq)
        raise ConfigError(f"unknown g_kind {self.g_kind!r}")

    def params(self, alpha: float | None = None) -> ModelParams:
        return ModelParams(alpha=self.alpha if alpha is None else alpha,
                           g=self.g(), trunc_level=self.trunc_level,
                           drift_enabled=self.drift)

    def initial_data(self, spec: GridSpec | None = None) -> InitialData:
        spec = self.spec() if spec is None else spec
        if self.init_kind == "constant":
            return InitialData.constant(spec, self.u0, self.u1)
        if self.init_kind == "cosine":
            return InitialData.cosine(spec, self.u0, self.u0_amp, u1=self.u1)
        if self.init_kind == "tabulated":
            vals = np.asarray(self.u0_values, dtype=float)
            base = InitialData(vals, np.full(vals.size, self.u1), self.J)
            return base.on(spec) if vals.size != spec.nx else base
        raise ConfigError(f"unknown init_kind {self.init_kind!r}")

    def stop(self) -> StopSpec:
        return StopSpec(self.stop_m, self.T)

    def validate(self) -> "ExperimentConfig":
        try:
            spec = self.spec()
            if self.n_paths < 1:
                raise ConfigError("n_paths must be >= 1")
            if any(a <= 0 for a in self.alpha_list) or self.alpha <= 0:
                raise ConfigError("alpha values must be positive")
            self.params().check_g()
            self.initial_data(spec).validate()
            self.stop()
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return self


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _parse_value(name: str, raw: str, kind):
    if kind is bool:
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if kind is list:
        items = [s for s in raw.replace(",", " ").split()]
        try:
            return [float(s) for s in items]
        except ValueError:
            raise ConfigError(f"{name}: expected numbers, got {raw!r}")
    try:
        if kind is int:
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind.__name__}")


def parse_config(text: str) -> ExperimentConfig:
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    types = {"float": float, "int": int, "str": str, "bool": bool,
             "list": list}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw, types[kinds[key]])
    return ExperimentConfig(**values).validate()


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, list):
            v = ", ".join(repr(float(x)) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# statistics

def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # exact endpoints at the boundary, free of rounding
    if k == 0:
        lo = 0.0
    if k == n:
        hi = 1.0
    return lo, hi


@dataclass
class SweepRow:
    alpha: float
    n_paths: int
    n_hit: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    mean_tau: float
    invalid_count: int


@dataclass
class SweepResult:
    rows: list
    records: dict = field(default_factory=dict, repr=False)

    def row(self, alpha: float) -> SweepRow:
        for r in self.rows:
            if r.alpha == alpha:
                return r
        raise KeyError(alpha)

    @property
    def invalid_fraction(self) -> float:
        n = sum(r.n_paths for r in self.rows)
        return sum(r.invalid_count for r in self.rows) / n if n else 0.0


def summarize(alpha: float, records: Sequence[PathRecord]) -> SweepRow:
    records = sorted(records, key=lambda r: r.seed)
    n = len(records)
    invalid = sum(r.invalid for r in records)
    taus = [r.tau_hat for r in records if r.hit]
    k = len(taus)
    lo, hi = wilson_interval(k, n)
    return SweepRow(alpha=float(alpha), n_paths=n, n_hit=k,
                    p_hat=k / n if n else math.nan, ci_lo=lo, ci_hi=hi,
                    mean_tau=math.fsum(taus) / k if k else math.nan,
                    invalid_count=invalid)


# --------------------------------------------------------------------------
# orchestration

def _chunk_job(args):
    params, init, spec, seeds, hit_level, stop, weigh = args
    recs = run_batch(params, init, spec, seeds=seeds, hit_level=hit_level,
                     record_history=weigh)
    for r in recs:
        if weigh and not r.invalid:
            nz = generate(spec, r.seed)
            r.log_weight = log_density(r, nz, stop, params).log_density
        r.history = None
    return recs


def run_paths(params: ModelParams, init: InitialData, spec: GridSpec,
              seeds: Sequence[int], hit_level: float = 0.0,
              stop: StopSpec | None = None, workers: int = 1,
              chunk: int = 64) -> list[PathRecord]:
    """Run paths in chunks, optionally on a process pool; sorted by seed.

    Drift-free runs with a ``stop`` also get their Girsanov log weight
    towards the drifted law.
    """
    seeds = [int(s) for s in seeds]
    weigh = stop is not None and not params.drift_enabled
    jobs = [(params, init, spec, seeds[i:i + chunk], hit_level, stop, weigh)
            for i in range(0, len(seeds), chunk)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_chunk_job, jobs))
    else:
        parts = [_chunk_job(j) for j in jobs]
    out = [r for part in parts for r in part]
    out.sort(key=lambda r: r.seed)
    return out


def run_sweep(cfg: ExperimentConfig, workers: int = 1) -> SweepResult:
    spec = cfg.spec()
    init = cfg.initial_data(spec)
    seeds = [cfg.base_seed + i for i in range(cfg.n_paths)]
    rows, records = [], {}
    for a in cfg.alpha_list:
        recs = run_paths(cfg.params(a), init, spec, seeds, cfg.hit_level,
                         cfg.stop(), workers)
        records[float(a)] = recs
        rows.append(summarize(a, recs))
    return SweepResult(rows, records)


@dataclass
class RefineLevel:
    nx: int
    n_paths: int
    n_hit: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    mean_singular_integral: float
    singular_integrals: list = field(repr=False, default_factory=list)
    hits: list = field(repr=False, default_factory=list)


def refine_study(cfg: ExperimentConfig, levels: int = 3,
                 alpha: float | None = None, n_paths: int | None = None
                 ) -> list[RefineLevel]:
    """Rerun the same seeds on ``nx, 2nx, 4nx, ...``.

    Noise is drawn once on the finest grid and summed onto the coarser
    cells, so every level sees the same continuum noise.
    """
    base = cfg.spec()
    if base.nx * 2 ** (levels - 1) > MAX_NX:
        raise MemoryError(f"finest level exceeds nx = {MAX_NX}")
    params = cfg.params(alpha)
    n = cfg.n_paths if n_paths is None else n_paths
    seeds = [cfg.base_seed + i for i in range(n)]
    specs = [base]
    for _ in range(levels - 1):
        specs.append(specs[-1].refined(2))
    inits = [cfg.initial_data(s) for s in specs]
    per_level = [[] for _ in specs]
    for sd in seeds:
        grids = generate_fine(base, sd, levels - 1)
        for L, (s, nz) in enumerate(zip(specs, grids)):
            per_level[L].append(run_batch(params, inits[L], s, noises=[nz],
                                          hit_level=cfg.hit_level)[0])
    out = []
    for s, recs in zip(specs, per_level):
        k = sum(r.hit for r in recs)
        lo, hi = wilson_interval(k, len(recs))
        si = [r.singular_integral for r in recs]
        out.append(RefineLevel(s.nx, len(recs), k, k / len(recs), lo, hi,
                               math.fsum(si) / len(si), si,
                               [r.hit for r in recs]))
    return out


# --------------------------------------------------------------------------
# output

def fmt_real(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def path_row(r: PathRecord) -> dict:
    return {"seed": r.seed, "alpha": r.alpha, "hit": int(r.hit),
            "tau_hat": r.tau_hat, "min_over_run": r.min_over_run,
            "singular_integral": r.singular_integral,
            "log_weight": r.log_weight, "invalid": int(r.invalid)}


def _rows_of(results):
    if isinstance(results, SweepResult):
        return SWEEP_COLUMNS, [asdict(r) for r in results.rows]
    if isinstance(results, SweepRow):
        return SWEEP_COLUMNS, [asdict(results)]
    results = list(results)
    if results and isinstance(results[0], SweepRow):
        return SWEEP_COLUMNS, [asdict(r) for r in results]
    if results and isinstance(results[0], RefineLevel):
        cols = ["nx", "n_paths", "n_hit", "p_hat", "ci_lo", "ci_hi",
                "mean_singular_integral"]
        return cols, [{c: getattr(r, c) for c in cols} for r in results]
    return PATH_COLUMNS, [path_row(r) for r in results]


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt_real(row[c]) if isinstance(row[c], float) else row[c]
                    for c in columns])
    return buf.getvalue()


def to_json(columns, rows) -> str:
    return json.dumps([{c: row[c] for c in columns} for row in rows],
                      indent=1) + "\n"


def atomic_write(path: str, text: str):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(results, fmt: str, path: str):
    columns, rows = _rows_of(results)
    if fmt == "csv":
        text = to_csv(columns, rows)
    elif fmt == "json":
        text = to_json(columns, rows)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    atomic_write(path, text)


def check_invalid_budget(records: Sequence[PathRecord]):
    n = len(records)
    bad = sum(r.invalid for r in records)
    if n and bad / n >= INVALID_BUDGET:
        raise NumericalFailure(f"{bad} of {n} paths invalid "
                               f"(budget {INVALID_BUDGET:.1%})")
