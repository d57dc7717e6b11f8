"""Experiment configuration: validation, hashing and execution.

A config is one JSON document::

    {
      "problem":   {"kind": "quadratic", "dimension": 20, "kappa": 100, "seed": 0},
      "oracle":    {"noise": "none"},
      "optimizer": {"kind": "nesterov-optimal"},
      "schedule":  null,
      "iterations": 1000,
      "replicas": 1,
      "seed": 0,
      "tolerances": {"grad_norm": null}
    }

Unknown keys are rejected with the line on which they appear.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from ..errors import ConfigError, ContractError
from ..oracles import GradientOracle, MeanEstimationOracle, NoiseSpec, make_stream
from ..problems import ChainProblem, SpectralQuadratic

__all__ = ["ExperimentConfig", "config_hash", "load_config", "parse_config", "build_problem", "run_experiment"]

TOP_KEYS = {"problem", "oracle", "optimizer", "schedule", "iterations", "replicas", "seed", "tolerances", "w0"}

PROBLEM_KEYS = {
    "quadratic": {"kind", "dimension", "kappa", "mu", "spacing", "seed", "eigenvalues", "minimizer", "offset"},
    "chain": {"kind", "dimension", "L", "mu"},
    "mean-estimation": {"kind", "target", "scale"},
}
ORACLE_KEYS = {"noise", "sigma", "convention", "batch_size"}
OPTIMIZER_KEYS = {
    "gd": {"kind", "alpha"},
    "heavy-ball": {"kind", "h", "beta"},
    "nesterov": {"kind", "h", "beta"},
    "nesterov-dynamic": {"kind", "kappa0_inv"},
    "nesterov-optimal": {"kind"},
    "general-schema": {"kind", "lam0"},
    "cg": {"kind"},
    "bfgs": {"kind", "alpha"},
    "dfp": {"kind", "alpha"},
    "lbfgs": {"kind", "alpha", "memory"},
    "backtracking": {"kind", "alpha0", "delta", "two_way"},
    "sgd": {"kind"},
    "adaptive": {"kind", "variant", "hyper"},
}
TOLERANCE_KEYS = {"grad_norm"}


def config_hash(doc: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON encoding (sorted keys, no whitespace)."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _line_of(text: Optional[str], key: str) -> Optional[int]:
    if text is None:
        return None
    pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return i
    return None


@dataclass
class ExperimentConfig:
    """Validated experiment description.

    Attributes
    ----------
    problem, oracle, optimizer : dict
    schedule : dict or None
        Required for ``sgd``; ``{"kind": ..., <params>}``.
    iterations, replicas, seed : int
    tolerances : dict
        ``grad_norm`` stops deterministic runs early (``None`` never stops).
    w0 : list of float or None
        Defaults to ``w* + 1`` for quadratics and ``0`` for chains.
    raw : dict
        The document as given, used for hashing.
    """

    problem: Dict[str, Any]
    oracle: Dict[str, Any]
    optimizer: Dict[str, Any]
    schedule: Optional[Dict[str, Any]]
    iterations: int
    replicas: int = 1
    seed: int = 0
    tolerances: Dict[str, Any] = field(default_factory=dict)
    w0: Optional[list] = None
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def with_overrides(self, seed: Optional[int] = None, iterations: Optional[int] = None) -> "ExperimentConfig":
        raw = dict(self.raw)
        if seed is not None:
            raw["seed"] = int(seed)
        if iterations is not None:
            raw["iterations"] = int(iterations)
        return parse_config(raw)


def _reject_unknown(section: Dict[str, Any], allowed, where: str, text: Optional[str]):
    for k in section:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r} in {where}", _line_of(text, k))


def _need(section: Dict[str, Any], key: str, where: str, text: Optional[str]):
    if key not in section:
        raise ConfigError(f"missing key {key!r} in {where}", _line_of(text, where) if where != "config" else None)
    return section[key]


def _section(doc, key, text, required=True):
    val = doc.get(key)
    if val is None:
        if required:
            raise ConfigError(f"missing section {key!r}")
        return None
    if not isinstance(val, dict):
        raise ConfigError(f"section {key!r} must be an object", _line_of(text, key))
    return val


def parse_config(doc: Dict[str, Any], text: Optional[str] = None) -> ExperimentConfig:
    """Validate a decoded config document.

    Parameters
    ----------
    doc : dict
    text : str, optional
        Source text, used to attach line numbers to errors.

    Raises
    ------
    ConfigError
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", 1)
    _reject_unknown(doc, TOP_KEYS, "config", text)
    prob = _section(doc, "problem", text)
    orc = _section(doc, "oracle", text, required=False) or {"noise": "none"}
    opt = _section(doc, "optimizer", text)
    sched = _section(doc, "schedule", text, required=False)
    tols = _section(doc, "tolerances", text, required=False) or {}

    pk = _need(prob, "kind", "problem", text)
    if pk not in PROBLEM_KEYS:
        raise ConfigError(f"unknown problem kind {pk!r}", _line_of(text, "kind"))
    _reject_unknown(prob, PROBLEM_KEYS[pk], "problem", text)
    _reject_unknown(orc, ORACLE_KEYS, "oracle", text)
    ok = _need(opt, "kind", "optimizer", text)
    if ok not in OPTIMIZER_KEYS:
        raise ConfigError(f"unknown optimizer kind {ok!r}", _line_of(text, "kind"))
    _reject_unknown(opt, OPTIMIZER_KEYS[ok], "optimizer", text)
    _reject_unknown(tols, TOLERANCE_KEYS, "tolerances", text)

    it = doc.get("iterations")
    if not isinstance(it, int) or isinstance(it, bool) or it < 0:
        raise ConfigError("iterations must be a non-negative integer", _line_of(text, "iterations"))
    reps = doc.get("replicas", 1)
    if not isinstance(reps, int) or isinstance(reps, bool) or reps < 1:
        raise ConfigError("replicas must be a positive integer", _line_of(text, "replicas"))
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer", _line_of(text, "seed"))
    if ok == "sgd" and sched is None:
        raise ConfigError("optimizer 'sgd' needs a schedule", _line_of(text, "optimizer"))
    if ok != "sgd" and sched is not None:
        raise ConfigError("schedule is only used by optimizer 'sgd'", _line_of(text, "schedule"))
    if ok != "sgd" and reps != 1:
        raise ConfigError("replicas > 1 only make sense for 'sgd'", _line_of(text, "replicas"))

    cfg = ExperimentConfig(prob, orc, opt, sched, it, reps, seed, tols, doc.get("w0"), doc)
    # build once so that value errors surface as config errors
    try:
        _build(cfg)
    except ContractError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid value: {exc}") from exc
    return cfg


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    return parse_config(doc, text)


def build_problem(spec: Dict[str, Any]):
    """Problem object from its config section."""
    kind = spec["kind"]
    if kind == "quadratic":
        if "eigenvalues" in spec:
            lam = np.asarray(spec["eigenvalues"], dtype=np.float64)
            seed = spec.get("seed", 0)
            p = SpectralQuadratic(lam) if seed is None else SpectralQuadratic.from_seed(lam, seed)
        else:
            p = SpectralQuadratic.with_condition(
                int(spec["dimension"]), float(spec["kappa"]), float(spec.get("mu", 1.0)),
                spec.get("seed", 0), spec.get("spacing", "linear"),
            )
        if "minimizer" in spec or "offset" in spec:
            p = SpectralQuadratic(p.eigenvalues, p.rotation, spec.get("minimizer"), float(spec.get("offset", 0.0)))
        return p
    if kind == "chain":
        return ChainProblem(int(spec["dimension"]), float(spec["L"]), float(spec.get("mu", 0.0)))
    if kind == "mean-estimation":
        return MeanEstimationOracle(np.asarray(spec["target"], dtype=np.float64), float(spec.get("scale", 1.0)))
    raise ConfigError(f"unknown problem kind {kind!r}")  # pragma: no cover


def _build(cfg: ExperimentConfig):
    obj = build_problem(cfg.problem)
    if isinstance(obj, MeanEstimationOracle):
        problem, oracle = obj.problem, obj
        if cfg.oracle.get("noise", "none") != "none":
            raise ConfigError("the mean-estimation problem brings its own noise; use oracle.noise = 'none'")
    else:
        problem = obj
        noise = NoiseSpec(cfg.oracle.get("noise", "none"), cfg.oracle.get("sigma", 0.0),
                          cfg.oracle.get("convention", "raw"))
        oracle = GradientOracle(problem, noise, int(cfg.oracle.get("batch_size", 1)))
    schedule = None
    if cfg.schedule is not None:
        from ..optimizers.schedules import Schedule

        params = {k: v for k, v in cfg.schedule.items() if k != "kind"}
        if "kind" not in cfg.schedule:
            raise ConfigError("schedule needs a 'kind'")
        schedule = Schedule(cfg.schedule["kind"], params)
    if cfg.w0 is not None:
        w0 = np.asarray(cfg.w0, dtype=np.float64)
        if w0.shape != (problem.d,):
            raise ConfigError(f"w0 has shape {w0.shape}, expected ({problem.d},)")
    elif isinstance(problem, ChainProblem):
        w0 = np.zeros(problem.d)
    else:
        w0 = problem.minimizer + 1.0
    return problem, oracle, schedule, w0


def run_experiment(cfg: ExperimentConfig):
    """Execute a config.

    Returns
    -------
    Trace
        For ``sgd`` the trace summarizes the ensemble: ``loss_gap`` and
        ``grad_norm`` are replica means and ``dist`` is the root of the mean
        squared distance.
    """
    from ..linesearch import run_backtracking_gd
    from ..optimizers import (
        Trace, cg_run, quasi_newton_run, run_adaptive, run_dynamic_nesterov, run_general_schema,
        run_gd, run_heavy_ball, run_nesterov, sgd_run,
    )

    problem, oracle, schedule, w0 = _build(cfg)
    o = cfg.optimizer
    kind = o["kind"]
    n = cfg.iterations
    tol = cfg.tolerances.get("grad_norm")
    L = problem.L
    kinv = problem.mu / problem.L

    if kind == "gd":
        tr, _ = run_gd(problem, w0, float(o.get("alpha", 1.0 / L)), n, tol)
    elif kind in ("heavy-ball", "nesterov"):
        from ..spectral import optimal_hb

        # defaults: optimal heavy ball, or Nesterov's constant-momentum choice
        if kind == "heavy-ball" and problem.mu > 0:
            h_opt, b_opt, _ = optimal_hb(problem.mu, L)
        else:
            sk = np.sqrt(kinv)
            h_opt, b_opt = 1.0 / L, (1 - sk) / (1 + sk)
        h = float(o.get("h", h_opt))
        beta = float(o.get("beta", b_opt))
        runner = run_heavy_ball if kind == "heavy-ball" else run_nesterov
        tr, _ = runner(problem, w0, h, beta, n, tol)
    elif kind == "nesterov-dynamic":
        tr, _ = run_dynamic_nesterov(problem, w0, L, kinv, n, kappa0_inv=o.get("kappa0_inv", kinv if kinv > 0 else 1.0), tol=tol)
    elif kind == "nesterov-optimal":
        tr, _ = run_dynamic_nesterov(problem, w0, L, kinv, n, optimal=True, tol=tol)
    elif kind == "general-schema":
        tr, _ = run_general_schema(problem, w0, L, problem.mu, float(o.get("lam0", L)), n, tol)
    elif kind == "cg":
        tr, _ = cg_run(problem, w0, max_iters=n, tol=0.0 if tol is None else tol)
    elif kind in ("bfgs", "dfp", "lbfgs"):
        qkind = "DFP" if kind == "dfp" else "BFGS-inverse"
        tr = quasi_newton_run(problem, w0, n, qkind, o.get("memory", 10) if kind == "lbfgs" else None,
                              float(o.get("alpha", 1.0)), 0.0 if tol is None else tol)
    elif kind == "backtracking":
        tr, _ = run_backtracking_gd(problem, w0, float(o.get("alpha0", 1.0)), n, float(o.get("delta", 0.5)),
                                    bool(o.get("two_way", False)), 0.0 if tol is None else tol)
    elif kind == "adaptive":
        stream = make_stream(cfg.seed, 0)
        noisy = not getattr(getattr(oracle, "noise", None), "is_zero", True)
        tr, _ = run_adaptive(o.get("variant", "Adam"), problem, w0, n, o.get("hyper"),
                             oracle if noisy or isinstance(oracle, MeanEstimationOracle) else None, stream, tol)
    elif kind == "sgd":
        res = sgd_run(problem, oracle, schedule, w0, n, cfg.replicas, cfg.seed)
        tr = Trace()
        gap = res.loss_gap.mean(axis=1)
        dist = np.sqrt(res.dist2.mean(axis=1))
        gn = res.grad_norm.mean(axis=1)
        for i in range(n + 1):
            tr.append(i, gap[i], dist[i], gn[i], res.lr[i])
    else:  # pragma: no cover
        raise ConfigError(f"unknown optimizer kind {kind!r}")
    return tr
