"""Configuration-driven Monte-Carlo experiments with CSV output.

A run sweeps either the snapshot count or the SNR, executes independent
trials (seed = base_seed + trial index), matches sorted estimates to
sorted truth, and reports per-angle RMSE, bias and the CRB alongside.
Identical configurations produce byte-identical CSV files when timing
capture is disabled.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .arrays import AngularGrid, ArrayGeometry, manifold_matrix
from .crb import crb_doa
from .pipeline import (
    DoaEstimate,
    coarse_to_fine_correlated,
    estimate_doas_joint,
    estimate_doas_uncorrelated,
    estimate_doas_unknown_support,
)
from .simulate import (
    NoiseModel,
    SourceScenario,
    sample_covariance,
    simulate_snapshots,
    tridiagonal_noise_covariance,
    true_covariance,
)
from .solvers import (
    MaskedKrOperator,
    RegularizationSet,
    SolverConfig,
    lambda_u_rule,
)
from .support import SupportSet, band_support, block_support

SCHEMA_VERSION = 1
ESTIMATORS = ("uncorrelated", "correlated-two-step", "joint", "unknown-support")

RESULT_CSV_HEADER = ("sweep_name,sweep_value,angle_index,true_deg,rmse_deg,"
                     "crb_sqrt_deg,bias_deg,n_trials,n_shortfall,wall_ms")
HISTOGRAM_CSV_HEADER = "estimator,trial,angle_index,estimate_deg"


class ConfigError(ValueError):
    """Configuration problem, reported with the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    angles_deg: tuple = (88.05, 91.95)
    correlation: float = 0.0
    snr_db: float | tuple = 0.0
    m: int = 10
    noise_diag: float = 1.0
    noise_offdiag: complex = 0.5j
    support_kind: str = "band"
    support_bandwidth: int = 1
    support_block_sizes: tuple | None = None
    grid_spacing_deg: float = 0.1
    estimator: str = "uncorrelated"
    regs: RegularizationSet = field(default_factory=RegularizationSet)
    lambda_u_auto: bool = False
    num_snapshots: int | tuple = 500
    n_trials: int = 100
    base_seed: int = 12345
    solver: SolverConfig = field(default_factory=SolverConfig)
    timing: bool = True
    threads: int = 1
    exact_covariance: bool = False
    estimators: tuple = ()
    paper_scale: dict | None = None

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError("n_trials: must be >= 1")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(
                f"estimator: {self.estimator!r} is not one of {ESTIMATORS}")
        n_sweeps = isinstance(self.num_snapshots, tuple) + isinstance(self.snr_db, tuple)
        if n_sweeps > 1:
            raise ConfigError(
                "num_snapshots/snr_db: at most one of them may be a sweep")
        if isinstance(self.num_snapshots, tuple) and not self.num_snapshots:
            raise ConfigError("num_snapshots: sweep must be non-empty")
        if isinstance(self.snr_db, tuple) and not self.snr_db:
            raise ConfigError("snr_db: sweep must be non-empty")
        if self.support_kind not in ("band", "block"):
            raise ConfigError("support.kind: must be 'band' or 'block'")
        if not all(0.0 < a < 180.0 for a in self.angles_deg):
            raise ConfigError("scenario.angles_deg: must lie in (0, 180)")
        if self.grid_spacing_deg <= 0:
            raise ConfigError("grid.spacing_deg: must be > 0")
        if self.threads < 1:
            raise ConfigError("threads: must be >= 1")

    # -- model builders ----------------------------------------------------

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry.ula(self.m)

    def noise_model(self) -> NoiseModel:
        if self.support_kind == "block":
            omega = block_support(self.support_block_sizes)
            cov = np.zeros((self.m, self.m), dtype=complex)
            np.fill_diagonal(cov, self.noise_diag)
            idx = np.arange(self.m - 1)
            inband = omega.mask[idx, idx + 1]
            cov[idx[inband], idx[inband] + 1] = self.noise_offdiag
            cov[idx[inband] + 1, idx[inband]] = np.conj(self.noise_offdiag)
            return NoiseModel(cov, omega)
        noise = tridiagonal_noise_covariance(self.m, self.noise_diag,
                                             self.noise_offdiag)
        if self.support_bandwidth != 1:
            return NoiseModel(noise.covariance,
                              band_support(self.m, self.support_bandwidth))
        return noise

    def support_set(self) -> SupportSet:
        return self.noise_model().support

    def scenario(self, snr_db: float) -> SourceScenario:
        q = len(self.angles_deg)
        if q == 0:
            return SourceScenario.noise_only()
        cov = np.full((q, q), self.correlation, dtype=complex)
        np.fill_diagonal(cov, 1.0)
        return SourceScenario(np.array(self.angles_deg), cov, snr_db)

    def grid(self) -> AngularGrid:
        return AngularGrid.uniform(int(round(180.0 / self.grid_spacing_deg)))

    def sweep(self) -> tuple[str, tuple]:
        if isinstance(self.num_snapshots, tuple):
            return "N", self.num_snapshots
        if isinstance(self.snr_db, tuple):
            return "snr_db", self.snr_db
        return "N", (self.num_snapshots,)

    def resolve_lambda_u(self) -> float:
        if not self.lambda_u_auto:
            return self.regs.lambda_u
        geom = self.geometry()
        a_tilde = manifold_matrix(geom, self.grid())
        return lambda_u_rule(a_tilde, self.support_set(), seed=self.base_seed)

    def with_paper_scale(self) -> "ExperimentConfig":
        """Apply the full-reproduction overrides carried by the config."""
        if not self.paper_scale:
            return self
        return _merge_config(self, dict(self.paper_scale))


@dataclass(frozen=True)
class ResultRow:
    """Aggregate of one sweep point; vector entries are per angle."""

    sweep_name: str
    sweep_value: float
    true_deg: np.ndarray
    rmse_deg: np.ndarray
    crb_sqrt_deg: np.ndarray
    bias_deg: np.ndarray
    n_trials: int
    n_shortfall: int
    wall_ms: float


@dataclass(frozen=True)
class HistogramRow:
    estimator: str
    trial: int
    angle_index: int
    estimate_deg: float


# ---------------------------------------------------------------------------
# config parsing


def _take(mapping: dict, key: str, default=None):
    return mapping.get(key, default) if mapping else default


def _parse_complex(value, where: str) -> complex:
    try:
        return complex(str(value).replace(" ", ""))
    except ValueError as err:
        raise ConfigError(f"{where}: cannot parse {value!r} as complex") from err


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build a validated config from a parsed YAML/JSON mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    schema = raw.get("schema")
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"schema: expected {SCHEMA_VERSION}, got {schema!r}")

    scenario = raw.get("scenario", {})
    noise = raw.get("noise", {})
    supp = raw.get("support", {})
    grid = raw.get("grid", {})
    reg = raw.get("regularization", {})
    solver = raw.get("solver", {})
    geometry = raw.get("geometry", {})

    def seq_or_scalar(value, where, cast=float):
        if isinstance(value, (list, tuple)):
            try:
                return tuple(cast(v) for v in value)
            except (TypeError, ValueError) as err:
                raise ConfigError(f"{where}: bad sweep entry in {value!r}") from err
        try:
            return cast(value)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"{where}: bad value {value!r}") from err

    lambda_u_raw = _take(reg, "lambda_u", 0.54)
    lambda_u_auto = isinstance(lambda_u_raw, str) and lambda_u_raw.lower() == "auto"

    def opt_float(mapping, key):
        v = _take(mapping, key)
        return None if v is None else float(v)

    regs = RegularizationSet(
        lambda1=float(_take(reg, "lambda1", 10.0)),
        lambda2=float(_take(reg, "lambda2", 5.0)),
        alpha=opt_float(reg, "alpha"),
        beta=opt_float(reg, "beta"),
        lambda_u=0.54 if lambda_u_auto else float(lambda_u_raw),
        gamma_d=opt_float(reg, "gamma_d"),
        lambda_d=opt_float(reg, "lambda_d"),
    )
    solver_cfg = SolverConfig(
        max_iter=int(_take(solver, "max_iter", 5000)),
        tol_primal=float(_take(solver, "tol_primal", 1e-6)),
        tol_dual=float(_take(solver, "tol_dual", 1e-6)),
        admm_penalty=float(_take(solver, "admm_penalty", 1.0)),
        verbose=bool(_take(solver, "verbose", False)),
    )
    block_sizes = _take(supp, "sizes")
    try:
        return ExperimentConfig(
            angles_deg=tuple(float(a) for a in _take(scenario, "angles_deg", [])),
            correlation=float(_take(scenario, "correlation", 0.0)),
            snr_db=seq_or_scalar(_take(scenario, "snr_db", 0.0), "scenario.snr_db"),
            m=int(_take(geometry, "m", 10)),
            noise_diag=float(_take(noise, "diag", 1.0)),
            noise_offdiag=_parse_complex(_take(noise, "offdiag", "0.5j"),
                                         "noise.offdiag"),
            support_kind=str(_take(supp, "kind", "band")),
            support_bandwidth=int(_take(supp, "bandwidth", 1)),
            support_block_sizes=tuple(int(s) for s in block_sizes) if block_sizes else None,
            grid_spacing_deg=float(_take(grid, "spacing_deg", 0.1)),
            estimator=str(raw.get("estimator", "uncorrelated")),
            regs=regs,
            lambda_u_auto=lambda_u_auto,
            num_snapshots=seq_or_scalar(raw.get("num_snapshots", 500),
                                        "num_snapshots", int),
            n_trials=int(raw.get("n_trials", 100)),
            base_seed=int(raw.get("base_seed", 12345)),
            solver=solver_cfg,
            timing=bool(raw.get("timing", True)),
            threads=int(raw.get("threads", 1)),
            exact_covariance=bool(raw.get("exact_covariance", False)),
            estimators=tuple(raw.get("estimators", ())),
            paper_scale=raw.get("paper_scale"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err


def config_from_yaml(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    return config_from_dict(raw)


def _merge_config(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Apply a flat/nested override mapping onto an existing config."""
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    updates = {}
    for key, value in overrides.items():
        if key == "regularization":
            reg_updates = {k: (float(v) if v is not None else None)
                           for k, v in value.items()}
            updates["regs"] = dataclasses.replace(config.regs, **reg_updates)
        elif key == "grid":
            updates["grid_spacing_deg"] = float(value["spacing_deg"])
        elif key == "solver":
            updates["solver"] = dataclasses.replace(
                config.solver, **{k: v for k, v in value.items()})
        elif key == "num_snapshots":
            updates["num_snapshots"] = (tuple(int(v) for v in value)
                                        if isinstance(value, (list, tuple))
                                        else int(value))
        elif key in known:
            updates[key] = value
        else:
            raise ConfigError(f"override {key!r} is not a config field")
    return dataclasses.replace(config, **updates)


# ---------------------------------------------------------------------------
# metrics


def rmse(estimates: np.ndarray, truth) -> np.ndarray:
    """Per-angle root mean square error with sorted association."""
    estimates = np.atleast_2d(np.asarray(estimates, dtype=float))
    truth = np.sort(np.asarray(truth, dtype=float))
    if estimates.size == 0:
        raise ValueError("no estimates to score")
    if estimates.shape[1] != truth.size:
        raise ValueError("estimate rows must have one entry per true angle")
    err = np.sort(estimates, axis=1) - truth[None, :]
    return np.sqrt(np.mean(err ** 2, axis=0))


def _bias(estimates: np.ndarray, truth) -> np.ndarray:
    truth = np.sort(np.asarray(truth, dtype=float))
    err = np.sort(estimates, axis=1) - truth[None, :]
    return err.mean(axis=0)


# ---------------------------------------------------------------------------
# runners


def _make_estimator(config: ExperimentConfig, lambda_u: float):
    """Returns estimate(rx) -> DoaEstimate with shared precomputations."""
    geom = config.geometry()
    omega = config.support_set()
    q = len(config.angles_deg)
    name = config.estimator
    if name == "uncorrelated":
        grid = config.grid()
        a_tilde = manifold_matrix(geom, grid)
        operator = MaskedKrOperator.build(a_tilde, omega)

        def run(rx) -> DoaEstimate:
            return estimate_doas_uncorrelated(
                rx, omega, geom, grid, lambda_u, q, config.solver,
                operator=operator)
    elif name == "correlated-two-step":
        def run(rx) -> DoaEstimate:
            return coarse_to_fine_correlated(rx, omega, geom, config.regs,
                                             config.solver, q=q)
    elif name == "joint":
        grid = config.grid()

        def run(rx) -> DoaEstimate:
            return estimate_doas_joint(rx, omega, geom, grid, config.regs,
                                       config.solver, q=q)
    elif name == "unknown-support":
        def run(rx) -> DoaEstimate:
            return estimate_doas_unknown_support(rx, geom, config.regs,
                                                 config.solver, q=q)
    else:  # pragma: no cover - guarded by config validation
        raise ConfigError(f"unknown estimator {name!r}")
    return run


def _trial_covariance(config: ExperimentConfig, scenario, noise, geom,
                      num_snapshots: int, seed: int) -> np.ndarray:
    if config.exact_covariance:
        return true_covariance(scenario, noise, geom)
    x = simulate_snapshots(scenario, noise, geom, num_snapshots, seed)
    return sample_covariance(x)


def _run_trials(config: ExperimentConfig, estimator, scenario, noise, geom,
                num_snapshots: int) -> list[DoaEstimate]:
    def one(trial: int) -> DoaEstimate:
        rx = _trial_covariance(config, scenario, noise, geom, num_snapshots,
                               config.base_seed + trial)
        return estimator(rx)

    indices = range(config.n_trials)
    if config.threads == 1:
        return [one(t) for t in indices]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        return list(pool.map(one, indices))


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Monte-Carlo RMSE/CRB table over the configured sweep."""
    geom = config.geometry()
    noise = config.noise_model()
    truth = np.sort(np.asarray(config.angles_deg, dtype=float))
    q = truth.size
    lambda_u = config.resolve_lambda_u()
    estimator = _make_estimator(config, lambda_u)
    sweep_name, sweep_values = config.sweep()

    rows = []
    for value in sweep_values:
        if sweep_name == "N":
            num_snapshots = int(value)
            snr_db = float(config.snr_db)
        else:
            num_snapshots = int(config.num_snapshots)
            snr_db = float(value)
        scenario = config.scenario(snr_db)

        t0 = time.perf_counter()
        estimates = _run_trials(config, estimator, scenario, noise, geom,
                                num_snapshots)
        wall_ms = (time.perf_counter() - t0) * 1e3 if config.timing else 0.0

        kept = [e.angles_deg for e in estimates
                if not e.shortfall and e.angles_deg.size == q]
        n_shortfall = config.n_trials - len(kept)
        if kept:
            mat = np.vstack(kept)
            row_rmse = rmse(mat, truth)
            row_bias = _bias(mat, truth)
        else:
            row_rmse = np.full(q, np.nan)
            row_bias = np.full(q, np.nan)
        crb_sqrt = np.sqrt(crb_doa(scenario, noise, geom, num_snapshots))

        rows.append(ResultRow(
            sweep_name=sweep_name,
            sweep_value=float(value),
            true_deg=truth,
            rmse_deg=row_rmse,
            crb_sqrt_deg=crb_sqrt,
            bias_deg=row_bias,
            n_trials=config.n_trials,
            n_shortfall=n_shortfall,
            wall_ms=wall_ms,
        ))
    return rows


def run_histogram(config: ExperimentConfig) -> list[HistogramRow]:
    """Per-trial estimates for each configured estimator (no binning)."""
    if len(config.estimators) < 2:
        raise ConfigError("estimators: histogram runs need at least two entries")
    geom = config.geometry()
    noise = config.noise_model()
    if isinstance(config.num_snapshots, tuple) or isinstance(config.snr_db, tuple):
        raise ConfigError("histogram runs take scalar num_snapshots and snr_db")
    scenario = config.scenario(float(config.snr_db))

    rows: list[HistogramRow] = []
    for spec in config.estimators:
        if "name" not in spec:
            raise ConfigError("estimators[]: each entry needs a 'name'")
        sub = _merge_config(config, {k: v for k, v in spec.items()
                                     if k != "name"})
        sub = dataclasses.replace(sub, estimator=spec["name"])
        estimator = _make_estimator(sub, sub.resolve_lambda_u())
        estimates = _run_trials(sub, estimator, scenario, noise, geom,
                                int(sub.num_snapshots))
        for trial, est in enumerate(estimates):
            for k, angle in enumerate(est.angles_deg):
                rows.append(HistogramRow(spec["name"], trial, k, float(angle)))
    return rows


# ---------------------------------------------------------------------------
# CSV output


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def results_to_csv(rows: list[ResultRow]) -> str:
    lines = [RESULT_CSV_HEADER]
    for row in rows:
        for k in range(row.true_deg.size):
            lines.append(",".join([
                row.sweep_name,
                _fmt(row.sweep_value),
                str(k),
                _fmt(row.true_deg[k]),
                _fmt(row.rmse_deg[k]),
                _fmt(row.crb_sqrt_deg[k]),
                _fmt(row.bias_deg[k]),
                str(row.n_trials),
                str(row.n_shortfall),
                _fmt(row.wall_ms),
            ]))
    return "\n".join(lines) + "\n"


def histogram_to_csv(rows: list[HistogramRow]) -> str:
    lines = [HISTOGRAM_CSV_HEADER]
    for row in rows:
        lines.append(",".join([row.estimator, str(row.trial),
                               str(row.angle_index), _fmt(row.estimate_deg)]))
    return "\n".join(lines) + "\n"


def write_csv(text: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
