"""Command-line entry point.

One JSON config document (``--config``) drives every command; the most
common fields can be overridden by flags.  All randomness flows from a
single ``--seed``: experiment commands (bias, mu-detect, wasserstein)
require it, one-shot sampling defaults to fresh entropy.

Commands:
  sample           draw an anomaly + ASD observations, write CSV/JSON
  estimate         run an estimator on an observations file
  bias             Monte-Carlo bias/F-measure experiment -> report JSON+CSV
  mu-detect        detectability threshold + error curves
  wasserstein      GMM-vs-ASD distance scaling report
  asymptotic-bias  closed-form unstructured bias {t_star, bias}
  disease          Poisson count model end to end (scan MLE or mixture)
  export-ilp       LP-format feasibility model for external solvers
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

from typing import Optional

import numpy as np

from .experiments import (
    BiasConfig,
    bias_experiment,
    estimate_mu_detect,
    asymptotic_unstructured_bias,
    wasserstein_scaling,
)
from .families import (
    FamilySpec,
    Graph,
    generate_graph,
    read_graph,
)
from .ilp import export_ilp
from .mixture import (
    BandEmptyError,
    EMConfig,
    fit_gmm_em,
    fit_poisson_mixture_em,
    gmm_estimator,
    gmm_estimator_shifted,
    save_mixture_fit,
)
from .sampling import (
    AnomalySampler,
    NoMemberOfSizeError,
    Observations,
    rng_from,
    sample_asd,
)
from .scan import Budget, mle, poisson_scan_mle, regularized_submatrix_mle

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4


class ConfigError(ValueError):
    """Aggregated configuration problems; message lists every violation."""


class DataError(ValueError):
    pass


# -- observation files ---------------------------------------------------------------


def load_observations(path, mode: str) -> Observations:
    """CSV with header `index,value` (gaussian) or `index,count,baseline` (poisson)."""
    want = ["index", "value"] if mode == "gaussian" else ["index", "count", "baseline"]
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file")
        if [h.strip() for h in header] != want:
            raise DataError(
                f"{path}: header must be {','.join(want)!r}, got {','.join(header)!r}"
            )
        seen: dict[int, int] = {}
        rows: list[tuple[int, list[str]]] = []
        for ln, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(want):
                raise DataError(f"{path}: line {ln}: expected {len(want)} cells")
            try:
                idx = int(rec[0])
            except ValueError:
                raise DataError(f"{path}: line {ln}: non-integer index {rec[0]!r}")
            if idx in seen:
                raise DataError(
                    f"{path}: line {ln}: duplicate index {idx} (first at line {seen[idx]})"
                )
            seen[idx] = ln
            rows.append((idx, rec[1:]))
    n = len(rows)
    missing = set(range(n)) - set(seen)
    if missing:
        raise DataError(
            f"{path}: indices must cover 0..{n - 1} exactly once; missing {sorted(missing)[:5]}"
        )
    if mode == "gaussian":
        values = np.empty(n)
        for idx, cells in rows:
            try:
                values[idx] = float(cells[0])
            except ValueError:
                raise DataError(
                    f"{path}: line {seen[idx]}: non-numeric value {cells[0]!r}"
                )
        return Observations.gaussian(values)
    counts = np.empty(n, dtype=np.int64)
    baselines = np.empty(n)
    for idx, cells in rows:
        try:
            counts[idx] = int(cells[0])
            baselines[idx] = float(cells[1])
        except ValueError:
            raise DataError(f"{path}: line {seen[idx]}: non-numeric cell")
        if baselines[idx] <= 0:
            raise DataError(
                f"{path}: line {seen[idx]}: baseline must be positive, got {baselines[idx]}"
            )
    try:
        return Observations.poisson(counts, baselines)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_observations(obs: Observations, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if obs.mode == "gaussian":
            writer.writerow(["index", "value"])
            for i, v in enumerate(obs.values):
                writer.writerow([i, f"{float(v):.17g}"])
        else:
            writer.writerow(["index", "count", "baseline"])
            for i, (c, b) in enumerate(zip(obs.counts, obs.baselines)):
                writer.writerow([i, int(c), f"{float(b):.17g}"])


def _write_json(payload: dict, path) -> None:
    body = json.dumps(payload, indent=2, sort_keys=True)
    payload = dict(payload)
    payload["content_hash"] = hashlib.sha256(body.encode()).hexdigest()
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- config parsing --------------------------------------------------------------------


def _family_from_config(cfg: dict, errors: list[str], n_hint: Optional[int] = None) -> Optional[FamilySpec]:
    fam = cfg.get("family")
    if fam is None:
        errors.append("missing 'family' block")
        return None
    if isinstance(fam, str):
        fam = {"kind": fam}
    kind = fam.get("kind")
    n = fam.get("n", n_hint)
    if kind in (None, ""):
        errors.append("family.kind is required")
        return None
    try:
        if kind in ("interval", "unstructured"):
            if n is None:
                errors.append("family.n is required (or inferred from observations)")
                return None
            return FamilySpec(kind, int(n))
        if kind == "submatrix":
            rows, cols = fam.get("rows"), fam.get("cols")
            if rows is None or cols is None:
                errors.append("submatrix family requires rows and cols")
                return None
            return FamilySpec(kind, int(rows) * int(cols), rows=int(rows), cols=int(cols))
        if kind in ("connected", "graph_cut", "edge_dense"):
            graph = _graph_from_config(fam.get("graph"), errors)
            if graph is None:
                return None
            if kind == "connected":
                return FamilySpec(kind, graph.n_vertices, graph=graph)
            if kind == "graph_cut":
                if fam.get("rho") is None:
                    errors.append("graph_cut family requires rho")
                    return None
                return FamilySpec(kind, graph.n_vertices, graph=graph, rho=int(fam["rho"]))
            if fam.get("delta") is None:
                errors.append("edge_dense family requires delta")
                return None
            return FamilySpec(
                kind, graph.n_vertices, graph=graph, delta=float(fam["delta"])
            )
        if kind == "epsilon_ball":
            pts = fam.get("points")
            if pts is None and fam.get("points_path"):
                pts = np.loadtxt(fam["points_path"], delimiter=",", ndmin=2).tolist()
            if pts is None or fam.get("epsilon") is None:
                errors.append("epsilon_ball family requires points (or points_path) and epsilon")
                return None
            pts = tuple(tuple(float(c) for c in p) for p in pts)
            return FamilySpec(
                kind, len(pts), points=pts, epsilon=float(fam["epsilon"])
            )
        errors.append(f"unknown family kind {kind!r}")
    except (ValueError, TypeError) as exc:
        errors.append(str(exc))
    return None


def _graph_from_config(gcfg, errors: list[str]) -> Optional[Graph]:
    if gcfg is None:
        errors.append("graph families require a 'graph' block (path or generator)")
        return None
    try:
        if isinstance(gcfg, str) or ("path" in gcfg and "kind" not in gcfg):
            return read_graph(gcfg if isinstance(gcfg, str) else gcfg["path"])
        kind = gcfg.get("kind")
        return generate_graph(
            kind,
            int(gcfg["n"]),
            seed=gcfg.get("seed"),
            p=gcfg.get("p"),
            path_len=gcfg.get("path_len"),
            clique_len=gcfg.get("clique_len"),
        )
    except (OSError, ValueError, KeyError, TypeError) as exc:
        errors.append(f"graph: {exc}")
        return None


def _budget_from_config(cfg: dict) -> Budget:
    b = cfg.get("budget", {})
    return Budget(
        iterations=b.get("iterations"),
        restarts=int(b.get("restarts", 5)),
        submatrix_restarts=int(b.get("submatrix_restarts", 20)),
        enum_cap=int(b.get("enum_cap", 300_000)),
        seed=int(b.get("seed", cfg.get("seed") or 0)),
    )


def _em_from_config(cfg: dict) -> EMConfig:
    e = cfg.get("em", {})
    return EMConfig(
        tol=float(e.get("tol", 1e-8)),
        max_iter=int(e.get("max_iter", 1000)),
        restarts=int(e.get("restarts", 5)),
        seed=int(e.get("seed", cfg.get("seed") or 0)),
    )


def _require(cfg: dict, keys: list[str], errors: list[str]) -> None:
    for key in keys:
        if cfg.get(key) is None:
            errors.append(f"missing required field '{key}'")


def _threads(cfg: dict) -> int:
    if cfg.get("threads") is not None:
        return int(cfg["threads"])
    env = os.environ.get("STRUCTSCAN_THREADS")
    if env:
        return int(env)
    return os.cpu_count() or 1


# -- command implementations ------------------------------------------------------------


def _cmd_sample(cfg: dict) -> int:
    errors: list[str] = []
    family = _family_from_config(cfg, errors)
    _require(cfg, ["mu", "out"], errors)
    k = cfg.get("anomaly_size")
    if k is None and cfg.get("anomaly_frac") is not None and family is not None:
        k = int(round(float(cfg["anomaly_frac"]) * family.n))
    if k is None:
        errors.append("need anomaly_size or anomaly_frac")
    if errors:
        raise ConfigError("; ".join(errors))
    seed = cfg.get("seed")  # entropy when omitted
    anomaly = AnomalySampler(family, int(k)).draw(rng_from(seed, 0))
    obs = sample_asd(anomaly, float(cfg["mu"]), family.n, rng_from(seed, 1))
    out = cfg["out"]
    write_observations(obs, f"{out}.csv")
    _write_json(
        {
            "anomaly": list(anomaly.indices),
            "family": family.kind,
            "n": family.n,
            "k": int(k),
            "mu": float(cfg["mu"]),
            "seed": seed,
            "observations": f"{out}.csv",
        },
        f"{out}.json",
    )
    print(f"wrote {out}.csv and {out}.json")
    return EXIT_OK


def _cmd_estimate(cfg: dict) -> int:
    errors: list[str] = []
    _require(cfg, ["observations", "out"], errors)
    estimator = cfg.get("estimator", "mle")
    if estimator not in ("mle", "gmm", "gmm_shifted", "regularized"):
        errors.append(f"unknown estimator {estimator!r}")
    if errors:
        raise ConfigError("; ".join(errors))
    obs = load_observations(cfg["observations"], "gaussian")
    errors = []
    family = _family_from_config(cfg, errors, n_hint=len(obs))
    if errors:
        raise ConfigError("; ".join(errors))
    budget = _budget_from_config(cfg)
    if estimator == "mle":
        result = mle(obs, family, budget)
    elif estimator == "regularized":
        result = regularized_submatrix_mle(obs, budget)
    else:
        fit = fit_gmm_em(obs, _em_from_config(cfg))
        if estimator == "gmm":
            result = gmm_estimator(obs, family, fit, budget, band=cfg.get("band", "exact"))
        else:
            result = gmm_estimator_shifted(obs, family, fit, budget)
        out = cfg["out"]
        save_mixture_fit(fit, f"{out}.fit.json", f"{out}.responsibilities.csv")
    payload = {
        "indices": list(result.set.indices),
        "size": len(result.set),
        "score": result.score,
        "solver": result.solver,
        "evaluations": result.evaluations,
        "estimator": estimator,
        "family": family.kind,
        "seed": cfg.get("seed"),
    }
    _write_json(payload, f"{cfg['out']}.json")
    print(json.dumps({"size": len(result.set), "score": result.score, "solver": result.solver}))
    return EXIT_OK


def _cmd_bias(cfg: dict) -> int:
    errors: list[str] = []
    family = _family_from_config(cfg, errors)
    _require(cfg, ["seed", "mu_grid", "trials", "estimator", "out"], errors)
    if errors:
        raise ConfigError("; ".join(errors))
    sample_family = None
    if cfg.get("sample_family") is not None:
        sub_errors: list[str] = []
        sample_family = _family_from_config({"family": cfg["sample_family"]}, sub_errors)
        if sub_errors:
            raise ConfigError("; ".join(sub_errors))
    config = BiasConfig(
        family=family,
        n=family.n,
        mu_grid=tuple(float(m) for m in cfg["mu_grid"]),
        trials=int(cfg["trials"]),
        estimator=cfg["estimator"],
        seed=int(cfg["seed"]),
        anomaly_frac=cfg.get("anomaly_frac", 0.05),
        anomaly_size=cfg.get("anomaly_size"),
        budget=_budget_from_config(cfg),
        em_config=_em_from_config(cfg),
        band=cfg.get("band", "exact"),
        sample_family=sample_family,
    )
    report = bias_experiment(config, n_jobs=_threads(cfg))
    out = cfg["out"]
    report.save(f"{out}.json", f"{out}.csv")
    for cell in report.cells:
        print(
            f"mu={cell.mu:g} bias_mean={cell.bias_mean:+.4f} "
            f"f={cell.f_mean:.3f} intersection={cell.intersection_mean:.3f}"
        )
    return EXIT_OK


def _cmd_mu_detect(cfg: dict) -> int:
    errors: list[str] = []
    family = _family_from_config(cfg, errors)
    _require(cfg, ["seed", "anomaly_size", "out"], errors)
    if errors:
        raise ConfigError("; ".join(errors))
    details = estimate_mu_detect(
        family,
        family.n,
        int(cfg["anomaly_size"]),
        error_target=float(cfg.get("error_target", 0.01)),
        trials_null=int(cfg.get("trials_null", 1000)),
        trials_alt=int(cfg.get("trials_alt", 1000)),
        seed=int(cfg["seed"]),
        budget=_budget_from_config(cfg),
        mu_max=float(cfg.get("mu_max", 10.0)),
        return_details=True,
    )
    out = cfg["out"]
    with open(f"{out}.curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mu", "type2_error"])
        for mu, err in details.curve:
            writer.writerow([mu, err])
    _write_json(
        {
            "mu_detect": details.mu_detect,
            "threshold": details.threshold,
            "error_target": details.error_target,
            "seed": cfg["seed"],
            "curve_csv": f"{out}.curve.csv",
        },
        f"{out}.json",
    )
    print(f"mu_detect = {details.mu_detect:g}")
    return EXIT_OK


def _cmd_wasserstein(cfg: dict) -> int:
    errors: list[str] = []
    _require(cfg, ["seed", "pairs", "n_grid", "trials", "out"], errors)
    if errors:
        raise ConfigError("; ".join(errors))
    result = wasserstein_scaling(
        [(float(a), float(m)) for a, m in cfg["pairs"]],
        [int(n) for n in cfg["n_grid"]],
        int(cfg["trials"]),
        seed=int(cfg["seed"]),
    )
    _write_json(
        {
            "pairs": [list(p) for p in result.pairs],
            "n_grid": list(result.n_grid),
            "trials": result.trials,
            "distances": [list(d) for d in result.distances],
            "slopes": list(result.slopes),
            "seed": cfg["seed"],
        },
        f"{cfg['out']}.json",
    )
    for pair, slope in zip(result.pairs, result.slopes):
        print(f"alpha={pair[0]:g} mu={pair[1]:g} slope={slope:+.3f}")
    return EXIT_OK


def _cmd_asymptotic_bias(cfg: dict) -> int:
    errors: list[str] = []
    _require(cfg, ["alpha", "mu"], errors)
    if errors:
        raise ConfigError("; ".join(errors))
    result = asymptotic_unstructured_bias(float(cfg["alpha"]), float(cfg["mu"]))
    payload = {"t_star": result.t_star, "bias": result.bias}
    print(json.dumps(payload))
    if cfg.get("out"):
        _write_json(payload, f"{cfg['out']}.json")
    return EXIT_OK


def _cmd_disease(cfg: dict) -> int:
    errors: list[str] = []
    _require(cfg, ["observations", "out"], errors)
    estimator = cfg.get("estimator", "mle")
    if estimator not in ("mle", "gmm", "gmm_shifted"):
        errors.append(f"disease estimator must be mle, gmm or gmm_shifted, got {estimator!r}")
    if errors:
        raise ConfigError("; ".join(errors))
    obs = load_observations(cfg["observations"], "poisson")
    errors = []
    family = _family_from_config(cfg, errors, n_hint=len(obs))
    if errors:
        raise ConfigError("; ".join(errors))
    budget = _budget_from_config(cfg)
    out = cfg["out"]
    if estimator == "mle":
        result = poisson_scan_mle(obs, family, budget)
        extra = {}
    else:
        fit = fit_poisson_mixture_em(obs, _em_from_config(cfg))
        save_mixture_fit(fit, f"{out}.fit.json", f"{out}.responsibilities.csv")
        if estimator == "gmm":
            result = gmm_estimator(obs, family, fit, budget, band=cfg.get("band", "exact"))
        else:
            result = gmm_estimator_shifted(obs, family, fit, budget)
        extra = {"alpha_hat": fit.alpha_hat, "q_hat": fit.q_hat}
    payload = {
        "indices": list(result.set.indices),
        "size": len(result.set),
        "score": result.score,
        "solver": result.solver,
        "estimator": estimator,
        "family": family.kind,
        "seed": cfg.get("seed"),
        **extra,
    }
    _write_json(payload, f"{out}.json")
    print(json.dumps({"size": len(result.set), "score": result.score}))
    return EXIT_OK


def _cmd_export_ilp(cfg: dict) -> int:
    errors: list[str] = []
    _require(cfg, ["observations", "out"], errors)
    if errors:
        raise ConfigError("; ".join(errors))
    mode = cfg.get("mode", "gaussian")
    obs = load_observations(cfg["observations"], mode)
    errors = []
    family = _family_from_config(cfg, errors, n_hint=len(obs))
    if errors:
        raise ConfigError("; ".join(errors))
    weights = obs.values if mode == "gaussian" else obs.counts.astype(float)
    export_ilp(
        weights,
        family,
        f"{cfg['out']}.lp",
        fixed_size=cfg.get("anomaly_size"),
    )
    print(f"wrote {cfg['out']}.lp")
    return EXIT_OK


_COMMANDS = {
    "sample": _cmd_sample,
    "estimate": _cmd_estimate,
    "bias": _cmd_bias,
    "mu-detect": _cmd_mu_detect,
    "wasserstein": _cmd_wasserstein,
    "asymptotic-bias": _cmd_asymptotic_bias,
    "disease": _cmd_disease,
    "export-ilp": _cmd_export_ilp,
}


def run(config: dict) -> int:
    """Dispatch one validated config; returns the process exit code."""
    command = config.get("command")
    if command not in _COMMANDS:
        raise ConfigError(
            f"unknown command {command!r}; expected one of {sorted(_COMMANDS)}"
        )
    return _COMMANDS[command](config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structscan",
        description="Scan-statistic and mixture estimators for structured anomalies",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="JSON config document")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--estimator")
    parser.add_argument("--family", help="family kind override (interval/unstructured/...)")
    parser.add_argument("--observations")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--mu", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--out")
    parser.add_argument("--threads", type=int)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    for key in ("seed", "estimator", "observations", "trials", "mu", "alpha", "out", "threads"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.family is not None:
        cfg["family"] = args.family
    cfg["command"] = args.command
    if args.command in ("bias", "mu-detect", "wasserstein") and cfg.get("seed") is None:
        print(
            "config error: --seed is mandatory for experiment commands",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NoMemberOfSizeError, BandEmptyError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
