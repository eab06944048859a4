"""Batch experiments over the synthetic portfolio case study.

One row is produced per (formulation, n, data replication, covariate index).
Results are deterministic for a fixed master seed regardless of how many
worker processes are used.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .backend import HighsBackend
from .casestudy import CaseStudyConfig, build_case_study, portfolio_program
from .dro import SAA, Hellinger, SampleRobust, Wasserstein, solve_dro
from .evaluation import MRPConfig, fi_saa_reference, mrp_ucb
from .exceptions import ConfigurationError
from .radius import (RadiusGrid, TuningConfig, default_grid, tune_radius_covariate_dependent,
                     tune_radius_covariate_independent, tune_radius_naive)
from .regression import fit_with_cv, loo_residuals, loo_residuals_refit, predict_and_residuals
from .scenarios import build_er_scenarios

FORMULATIONS = {
    "E": SAA,
    "W": Wasserstein,
    "S": SampleRobust,
    "H": Hellinger,
    "J": SAA,
}
TUNERS = ("alg1", "alg2", "alg3", "fixed")
REGRESSIONS = ("ols", "lasso", "ridge")
COLUMNS = ("formulation", "regression", "tuner", "d_x", "theta", "n", "rep", "cov_idx",
           "zeta", "value", "ucb99", "status", "message", "wall_time")

# seed stages
_COEF, _DATA, _COV, _MRP, _TUNE, _REGCV = range(6)


def derive_seed(master: int, stage: int, *keys: int) -> int:
    """Counter-based child seed for ``(stage, *keys)``; independent of scheduling."""
    return int(np.random.SeedSequence([master, stage, *keys]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    formulations: list = field(default_factory=lambda: ["E"])
    regression: str = "ols"
    tuner: str = "alg2"
    radius: float = 0.0  # used by tuner "fixed"
    grid: list | None = None
    d_x: int = 3
    theta: float = 1.0
    n: list = field(default_factory=lambda: [20])
    replications: int = 1
    covariates: int = 1
    seed: int = 0
    folds: int = 5
    samples_per_fold: int | None = None
    mrp_reps: int = 30
    saa_samples: int = 20_000
    eval_samples: int = 5_000
    paper_scale: bool = False
    strict: bool = False

    def __post_init__(self):
        if isinstance(self.formulations, str):
            self.formulations = [f.strip() for f in self.formulations.split(",") if f.strip()]
        if isinstance(self.n, int):
            self.n = [self.n]
        m = re.fullmatch(r"fixed\(([^)]*)\)", str(self.tuner))
        if m:
            self.tuner, self.radius = "fixed", float(m.group(1))
        self.theta = float(self.theta)
        bad = [f for f in self.formulations if f not in FORMULATIONS]
        if not self.formulations or bad:
            raise ConfigurationError(f"formulations must be drawn from {sorted(FORMULATIONS)}")
        if self.regression not in REGRESSIONS:
            raise ConfigurationError(f"regression must be one of {REGRESSIONS}")
        if self.tuner not in TUNERS:
            raise ConfigurationError(f"tuner must be one of {TUNERS} or fixed(<radius>)")
        if self.replications < 1 or self.covariates < 1:
            raise ConfigurationError("replications and covariates must be >= 1")
        if not self.n or any(int(v) < 2 for v in self.n):
            raise ConfigurationError("every sample size must be >= 2")
        self.n = [int(v) for v in self.n]
        CaseStudyConfig(dim_x=self.d_x, theta=self.theta)  # validates theta / d_x
        self.mrp_config()

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "formulation" in data:
            if "formulations" in data:
                raise ConfigurationError("give either formulation or formulations, not both")
            data["formulations"] = data.pop("formulation")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        import yaml

        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigurationError("config file must contain a mapping")
        return cls.from_mapping(data)

    def mrp_config(self) -> MRPConfig:
        if self.paper_scale:
            return MRPConfig.full_scale()
        return MRPConfig(self.mrp_reps, self.saa_samples, self.eval_samples)

    def radius_grid(self) -> np.ndarray:
        return default_grid() if self.grid is None else RadiusGrid(self.grid).values


def _covariate_points(cfg: ExperimentConfig, study):
    return [study.sample_covariates(np.random.default_rng(derive_seed(cfg.seed, _COV, c)), 1)[0]
            for c in range(cfg.covariates)]


def _study(cfg: ExperimentConfig):
    return build_case_study(CaseStudyConfig(dim_x=cfg.d_x, theta=cfg.theta,
                                            coef_seed=derive_seed(cfg.seed, _COEF)))


def _reference_task(cfg: ExperimentConfig, c: int):
    study = _study(cfg)
    cost, Z = portfolio_program()
    x = _covariate_points(cfg, study)[c]
    return fi_saa_reference(cost, Z, study.true_model, study.sample_errors, x,
                            cfg.mrp_config(), HighsBackend(), derive_seed(cfg.seed, _MRP, c))


def _tuner_label(cfg: ExperimentConfig, form: str) -> str:
    if form in ("E", "J"):
        return "none"
    return f"fixed({cfg.radius!r})" if cfg.tuner == "fixed" else cfg.tuner


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _unit_task(cfg: ExperimentConfig, references, n_idx: int, rep: int):
    """All rows for one (sample size, data replication)."""
    n = cfg.n[n_idx]
    study = _study(cfg)
    cost, Z = portfolio_program()
    backend = HighsBackend()
    xs = _covariate_points(cfg, study)
    mrp_cfg = cfg.mrp_config()
    grid = cfg.radius_grid()
    data = study.sample_dataset(derive_seed(cfg.seed, _DATA, n, rep), n)
    fit = partial(fit_with_cv, method=cfg.regression, seed=derive_seed(cfg.seed, _REGCV, n, rep))
    rows = []

    def base(form, c):
        return {"formulation": form, "regression": cfg.regression,
                "tuner": _tuner_label(cfg, form), "d_x": cfg.d_x,
                "theta": cfg.theta, "n": n, "rep": rep, "cov_idx": c}

    def fail(form, c, exc, started):
        if cfg.strict:
            raise exc
        row = base(form, c)
        row.update(zeta=float("nan"), value=float("nan"), ucb99=float("nan"),
                   status="error", message=f"{type(exc).__name__}: {exc}".replace("\n", " "),
                   wall_time=time.perf_counter() - started)
        rows.append(row)

    started = time.perf_counter()
    try:
        model = fit(data)
        _, resid = predict_and_residuals(model, data)
        loo = None
        if "J" in cfg.formulations:
            loo = loo_residuals(data) if cfg.regression == "ols" else loo_residuals_refit(data, fit)
    except Exception as exc:  # noqa: BLE001 - fail-soft row recording
        for form in cfg.formulations:
            for c in range(cfg.covariates):
                fail(form, c, exc, started)
        return rows

    support = study.support
    for form in cfg.formulations:
        family = FORMULATIONS[form]()
        tune_cfg = TuningConfig(cfg.folds, cfg.samples_per_fold, family,
                                derive_seed(cfg.seed, _TUNE, n, rep, ord(form)))
        shared_radius, shared_error = None, None
        t0 = time.perf_counter()
        if form not in ("E", "J"):
            try:
                if cfg.tuner == "fixed":
                    shared_radius = cfg.radius
                elif cfg.tuner == "alg1":
                    shared_radius = tune_radius_naive(data, cost, Z, grid, tune_cfg, backend)
                elif cfg.tuner == "alg2":
                    shared_radius = tune_radius_covariate_independent(
                        data, cost, Z, grid, tune_cfg, fit, backend, support)
            except Exception as exc:  # noqa: BLE001
                shared_error = exc
        shared_time = time.perf_counter() - t0
        for c, x in enumerate(xs):
            started = time.perf_counter()
            try:
                if shared_error is not None:
                    raise shared_error
                if form in ("E", "J"):
                    radius = 0.0
                elif cfg.tuner == "alg3":
                    radius = tune_radius_covariate_dependent(
                        data, cost, Z, x, grid, tune_cfg, fit, backend, support)
                else:
                    radius = shared_radius
                residuals = loo if form == "J" else resid
                scen = build_er_scenarios(model, residuals, x, support,
                                          "jackknife" if form == "J" else "ER")
                sol = solve_dro(cost, Z, scen, family.with_radius(radius), backend)
                report = mrp_ucb(sol.decision, cost, Z, study.true_model, study.sample_errors,
                                 x, mrp_cfg, backend, derive_seed(cfg.seed, _MRP, c),
                                 reference=references[c])
            except Exception as exc:  # noqa: BLE001
                fail(form, c, exc, started)
                continue
            row = base(form, c)
            row.update(zeta=float(radius), value=float(sol.value), ucb99=float(report.ucb99),
                       status="ok", message="",
                       wall_time=time.perf_counter() - started + shared_time / cfg.covariates)
            rows.append(row)
    return rows


def _sort_key(row, cfg):
    return (row["n"], row["rep"], cfg.formulations.index(row["formulation"]), row["cov_idx"])


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> list[dict]:
    """Run the full grid and return rows sorted by (n, rep, formulation, cov_idx)."""
    units = [(i, rep) for i in range(len(cfg.n)) for rep in range(cfg.replications)]
    if workers <= 1:
        references = [_reference_task(cfg, c) for c in range(cfg.covariates)]
        batches = [_unit_task(cfg, references, i, rep) for i, rep in units]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            references = list(pool.map(partial(_reference_task, cfg), range(cfg.covariates)))
            futures = [pool.submit(_unit_task, cfg, references, i, rep) for i, rep in units]
            batches = [f.result() for f in futures]
    rows = [row for batch in batches for row in batch]
    rows.sort(key=lambda r: _sort_key(r, cfg))
    return rows


def rows_to_csv(rows, out=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[col]) if col != "wall_time" else f"{row[col]:.3f}"
                         for col in COLUMNS])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def _git_stamp() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def write_sidecar(cfg: ExperimentConfig, csv_path) -> Path:
    path = Path(str(csv_path) + ".json")
    meta = {"config": asdict(cfg), "version": __version__, "git": _git_stamp(),
            "columns": list(COLUMNS)}
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


# --- summaries ---------------------------------------------------------------------

GROUP_KEYS = ("formulation", "tuner", "n", "theta", "d_x")
SUMMARY_COLUMNS = GROUP_KEYS + ("count", "p5", "p25", "p50", "p75", "p95", "mean_zeta")


def read_results(path) -> list[dict]:
    """Parse a results CSV; raises ``ValueError`` naming every malformed line."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        missing = [c for c in ("formulation", "tuner", "n", "theta", "d_x", "zeta", "ucb99",
                               "status") if c not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        rows, errors = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                errors.append(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
                continue
            row = dict(zip(header, rec))
            if row["status"] == "ok":
                try:
                    row["ucb99"] = float(row["ucb99"])
                    row["zeta"] = float(row["zeta"])
                    row["n"] = int(row["n"])
                    row["d_x"] = int(row["d_x"])
                    row["theta"] = float(row["theta"])
                except ValueError as exc:
                    errors.append(f"line {lineno}: {exc}")
                    continue
            rows.append(row)
    if errors:
        raise ValueError("malformed rows:\n" + "\n".join(errors))
    return rows


def summarize(rows) -> list[dict]:
    """Box-plot percentiles of the UCBs for every group of successful rows."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if row.get("status", "ok") != "ok":
            continue
        groups.setdefault(tuple(row[k] for k in GROUP_KEYS), []).append(row)
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        vals = np.array([r["ucb99"] for r in groups[key]], dtype=float)
        pct = np.percentile(vals, [5, 25, 50, 75, 95])
        entry = dict(zip(GROUP_KEYS, key))
        entry.update(count=int(vals.size), p5=pct[0], p25=pct[1], p50=pct[2], p75=pct[3],
                     p95=pct[4], mean_zeta=float(np.mean([r["zeta"] for r in groups[key]])))
        out.append(entry)
    return out


def summary_to_csv(summary, out=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for entry in summary:
        writer.writerow([_fmt(float(entry[c])) if isinstance(entry[c], (float, np.floating))
                         else entry[c] for c in SUMMARY_COLUMNS])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def summary_table(summary) -> str:
    """Fixed-width text rendering of a summary."""
    head = SUMMARY_COLUMNS
    cells = [[str(e[c]) if not isinstance(e[c], (float, np.floating)) else f"{e[c]:.4g}"
              for c in head] for e in summary]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
              for i, h in enumerate(head)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines)
