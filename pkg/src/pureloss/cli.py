"""Command-line sweeps: bounds, lemma checks, codebook audits and tail tables.

Exit codes: 0 when every check passes, 2 when a row contradicts a proven
inequality (which can only mean a bug), 3 for configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Callable

import numpy as np

from pureloss import bounds as B
from pureloss.channel import ChannelParams, lemma2_output_shadow_bound, output_shadow_exact, \
    random_diagonal_input, worst_case_input
from pureloss.codebook import GaussianEnsemble, audit_constraint_E1, markov_union_bound, \
    sample_codebook
from pureloss.concentration import BinomialTransmission, GeometricLaw, binomial_tail_below, \
    chernoff_constant, geometric_sum_tail_above, hoeffding_lower_bound, monte_carlo_tail, \
    thermal_chernoff_constant
from pureloss.errors import DomainError, PreconditionError
from pureloss.fock import thermal_product_distribution
from pureloss.numerics import ceil_tol
from pureloss.rng import keyed_generator

SCHEMA_VERSION = "pureloss-table/1"

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_CONFIG = 3

GRID_KEYS = ("eta", "ns", "n", "rate", "p", "epsilon", "delta", "delta1", "delta2", "delta3")


class ConfigError(Exception):
    pass


def parse_grid(text: str) -> list[float]:
    """Comma-separated values and inclusive ``start:stop:step`` ranges."""
    out: list[float] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                pieces = part.split(":")
                if len(pieces) != 3:
                    raise ConfigError(f"range must be start:stop:step, got {part!r}")
                start, stop, step = (Decimal(x) for x in pieces)
                if step <= 0:
                    raise ConfigError(f"range step must be positive, got {part!r}")
                v = start
                while v <= stop:
                    out.append(float(v))
                    v += step
            else:
                out.append(float(Decimal(part)))
        except InvalidOperation as exc:
            raise ConfigError(f"not a number: {part!r}") from exc
    return out


def _int_grid(values: list[float], name: str) -> list[int]:
    ints = []
    for v in values:
        if v != int(v):
            raise ConfigError(f"{name} must be integers, got {v}")
        ints.append(int(v))
    return ints


@dataclass
class RunConfig:
    command: str
    grid: dict[str, list[float]] = field(default_factory=dict)
    seed: int = 0
    samples: int = 0
    seeds: int = 200
    messages: int = 100
    budget: int = 10_000_000
    random_inputs: int = 0
    out: str | None = None
    format: str = "csv"

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d


# --- formatting -----------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
        return _fmt(v)
    return v


def render(config: RunConfig, columns: list[str], rows: list[dict]) -> str:
    if config.format == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "config": config.to_dict(),
            "columns": columns,
            "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION} command={config.command}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


# --- helpers --------------------------------------------------------------

def lab_threads() -> int:
    env = os.environ.get("LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"LAB_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def parallel_rows(fn: Callable[[tuple], list[dict]], points: list[tuple]) -> list[dict]:
    """Evaluate grid points in parallel; output order is the grid order."""
    threads = lab_threads()
    if threads == 1 or len(points) <= 1:
        chunks = [fn(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            chunks = list(ex.map(fn, points))
    return [row for chunk in chunks for row in chunk]


def _grid(config: RunConfig, key: str, default: list[float] | None = None) -> list[float]:
    vals = config.grid.get(key)
    if vals is None:
        return list(default) if default is not None else []
    return vals


def default_delta1(n: int, ns: float, delta: float) -> float:
    """Shadow deficit preset C(delta, N_S - delta)^(n/2) from the random-coding ensemble."""
    if not 0 < delta < ns:
        raise ConfigError(f"need 0 < delta < N_S for the preset delta1, got delta={delta}, N_S={ns}")
    return math.exp((n / 2) * thermal_chernoff_constant(delta, ns - delta).log_C)


# --- commands -------------------------------------------------------------

BOUNDS_COLUMNS = [
    "eta", "ns", "n", "rate", "epsilon", "p", "delta", "delta1", "delta2", "delta3",
    "g_eta_ns", "h2_eps", "weak_converse_rate", "simulation_rate",
    "tradeoff_rate", "tradeoff_error",
    "rank_term", "disturbance_term", "exp_term", "raw_total", "success_upper",
    "rank_slack", "delta_unshifted", "rank_term_exact", "decaying", "rank_term_covers_exact",
    "status",
]


def cmd_bounds(config: RunConfig) -> tuple[list[str], list[dict], int]:
    etas = _grid(config, "eta", [1.0])
    nss = _grid(config, "ns", [1.0])
    ns_ = _int_grid(_grid(config, "n", [100]), "n")
    rates = _grid(config, "rate", [math.nan])
    eps = _grid(config, "epsilon", [0.0])
    ps = _grid(config, "p", [0.0])
    d1s = _grid(config, "delta1", [math.nan])
    d2s = _grid(config, "delta2", [0.1])
    d3s = _grid(config, "delta3", [math.nan])
    deltas = _grid(config, "delta", [0.1])
    if any(len(v) == 0 for v in (etas, nss, ns_, rates, eps, ps, d1s, d2s, d3s, deltas)):
        return BOUNDS_COLUMNS, [], EXIT_OK
    points = list(itertools.product(etas, nss, ns_, rates, eps, ps, d1s, d2s, d3s, deltas))

    def row(pt):
        eta, ns, n, rate, epsilon, p, d1, d2, d3, delta = pt
        r = {"eta": eta, "ns": ns, "n": n, "rate": rate, "epsilon": epsilon, "p": p,
             "delta": delta, "delta2": d2}
        try:
            params = ChannelParams(eta, n, ns)
            r["g_eta_ns"] = B.simulation_rate(params)
            r["h2_eps"] = B.binary_entropy(epsilon)
            r["weak_converse_rate"] = B.weak_converse_rate_bound(epsilon, params)
            r["simulation_rate"] = B.simulation_rate(params)
            r["tradeoff_rate"], r["tradeoff_error"] = B.tradeoff_point(p, params)
            if math.isnan(rate):
                r["status"] = "ok"
                return [r]
            if math.isnan(d1):
                d1 = default_delta1(n, ns, delta)
            if math.isnan(d3):
                d3 = params.delta3_max(d2)
            r["delta1"], r["delta3"] = d1, d3
            rep = B.strong_converse_success_bound(
                B.CodeParams(rate=rate, epsilon=epsilon), params, B.ConverseSlack(d1, d2, d3))
            t = rep.bound_terms
            r.update({k: t[k] for k in ("rank_term", "disturbance_term", "exp_term", "raw_total",
                                        "delta_unshifted", "rank_term_exact")})
            r["rank_slack"] = t["delta"]
            r["success_upper"] = rep.success_upper
            r.update(rep.flags)
            r["status"] = "ok"
        except PreconditionError as exc:
            r["status"] = f"precondition: {exc}"
        except (DomainError, ConfigError) as exc:
            r["status"] = f"error: {exc}"
        return [r]

    return BOUNDS_COLUMNS, parallel_rows(row, points), EXIT_OK


LEMMAS_COLUMNS = [
    "lemma", "n", "ns", "eta", "delta1", "delta2", "delta3", "input", "cutoff",
    "exact", "bound", "margin", "status",
]


def cmd_lemmas(config: RunConfig) -> tuple[list[str], list[dict], int]:
    ns_ = _int_grid(_grid(config, "n", list(range(1, 61))), "n")
    nss = _grid(config, "ns", [0.25, 0.5, 1.0, 2.0, 5.0])
    etas = _grid(config, "eta", [0.5])
    d1s = _grid(config, "delta1", [0.01])
    d2s = _grid(config, "delta2", [0.1])
    d3s = _grid(config, "delta3", [math.nan])

    def lemma1(pt):
        n, ns = pt
        r = {"lemma": "rank", "n": n, "ns": ns}
        try:
            rb = B.lemma1_rank_bound(n, ns)
        except AssertionError:
            r["status"] = "fail"
            return [r]
        except DomainError as exc:
            r["status"] = f"precondition: {exc}"
            return [r]
        r.update(cutoff=rb.cutoff, exact=rb.log2_rank, bound=rb.bound.log2_value,
                 margin=rb.margin_bits, status="pass")
        return [r]

    def lemma2(pt):
        n, ns, eta, d1, d2, d3 = pt
        base = {"lemma": "output_shadow", "n": n, "ns": ns, "eta": eta,
                "delta1": d1, "delta2": d2}
        try:
            params = ChannelParams(eta, n, ns)
            d3v = params.delta3_max(d2) if math.isnan(d3) else d3
            base["delta3"] = d3v
            lb = lemma2_output_shadow_bound(d1, d2, d3v, params)
        except PreconditionError as exc:
            base["status"] = f"precondition: {exc}"
            return [base]
        except DomainError as exc:
            base["status"] = f"precondition: {exc}"
            return [base]
        inputs = [("worst_case", worst_case_input(params, d1))]
        rng = keyed_generator(config.seed, n, int(ns * 1000), int(eta * 1000),
                              int(d1 * 1e6), int(d2 * 1e6))
        for i in range(config.random_inputs):
            inputs.append((f"random_{i}", random_diagonal_input(rng, params, d1)))
        rows = []
        for name, dist in inputs:
            exact = output_shadow_exact(dist, eta, lb.output_cutoff)
            ok = exact >= lb.bound - 1e-12
            rows.append({**base, "input": name, "cutoff": lb.output_cutoff, "exact": exact,
                         "bound": lb.bound, "margin": exact - lb.bound,
                         "status": "pass" if ok else "fail"})
        return rows

    rows = parallel_rows(lemma1, list(itertools.product(ns_, nss)))
    rows += parallel_rows(lemma2, list(itertools.product(ns_, nss, etas, d1s, d2s, d3s)))
    code = EXIT_VIOLATION if any(r["status"] == "fail" for r in rows) else EXIT_OK
    return LEMMAS_COLUMNS, rows, code


CODEBOOK_COLUMNS = [
    "kind", "seed", "n", "ns", "delta", "variance", "messages", "cutoff", "delta1",
    "average_shadow", "average_deficit", "worst_shadow", "budget_violations", "e1_pass",
    "failure_frequency", "failure_stderr", "predicted_failure_bound", "thermal_tail",
    "chernoff_tail_bound", "mean_deficit", "mean_deficit_stderr", "epsilon",
    "union_markov_bound", "e2", "status",
]


def cmd_codebook(config: RunConfig) -> tuple[list[str], list[dict], int]:
    ns_ = _int_grid(_grid(config, "n", [50]), "n")
    nss = _grid(config, "ns", [1.0])
    deltas = _grid(config, "delta", [0.1])
    eps = _grid(config, "epsilon", [0.1])
    M = config.messages
    for n in ns_:
        if M * n > config.budget:
            raise ConfigError(f"M*n = {M * n} exceeds budget {config.budget}")
    rows: list[dict] = []
    code = EXIT_OK
    for n, ns, delta in itertools.product(ns_, nss, deltas):
        variance = ns - delta
        L = ceil_tol(n * ns)
        if variance == 0 and delta > 0:
            log_C = -math.inf  # vacuum ensemble: the photon sum is always 0
        else:
            try:
                log_C = thermal_chernoff_constant(delta, variance).log_C
            except DomainError as exc:
                rows.append({"kind": "summary", "n": n, "ns": ns, "delta": delta,
                             "status": f"precondition: {exc}"})
                continue
        d1 = math.exp((n / 2) * log_C)
        seeds = list(range(config.seed, config.seed + config.seeds))

        def one(seed, n=n, ns=ns, delta=delta, variance=variance, L=L, d1=d1):
            cb = sample_codebook(M, GaussianEnsemble(variance, n, seed))
            a = audit_constraint_E1(cb, L, d1, photon_budget=ns)
            return [{"kind": "seed", "seed": seed, "n": n, "ns": ns, "delta": delta,
                     "variance": variance, "messages": M, "cutoff": L, "delta1": d1,
                     "average_shadow": a.average_shadow, "average_deficit": a.average_deficit,
                     "worst_shadow": a.worst_shadow,
                     "budget_violations": len(a.budget_violations),
                     "e1_pass": a.passed, "status": "ok"}]

        seed_rows = parallel_rows(one, seeds)
        rows += seed_rows
        fails = sum(1 for r in seed_rows if not r["e1_pass"])
        k = len(seed_rows)
        freq = fails / k if k else 0.0
        deficits = np.array([r["average_deficit"] for r in seed_rows])
        thermal = thermal_product_distribution(variance, n, L)
        thermal_tail = 1 - thermal.cdf(L)
        chern_bound = math.exp(n * log_C)
        for epsilon in eps:
            if d1 > 0:
                union = markov_union_bound(thermal_tail, d1, epsilon ** 2, epsilon)
            else:
                union = epsilon if thermal_tail == 0 else math.inf
            status = "ok"
            if thermal_tail > chern_bound * (1 + 1e-9):
                status = "fail"
                code = EXIT_VIOLATION
            rows.append({
                "kind": "summary", "n": n, "ns": ns, "delta": delta, "variance": variance,
                "messages": M, "cutoff": L, "delta1": d1,
                "failure_frequency": freq,
                "failure_stderr": math.sqrt(max(freq * (1 - freq), 1.0 / k) / k) if k else 0.0,
                "predicted_failure_bound": d1,
                "thermal_tail": thermal_tail,
                "chernoff_tail_bound": chern_bound,
                "mean_deficit": float(deficits.mean()) if k else None,
                "mean_deficit_stderr": float(deficits.std(ddof=1) / math.sqrt(k)) if k > 1 else None,
                "epsilon": epsilon,
                "union_markov_bound": union,
                "e2": "not_constructed",
                "status": status,
            })
    return CODEBOOK_COLUMNS, rows, code


TAILS_COLUMNS = [
    "family", "delta", "p", "n", "eta", "delta3", "threshold",
    "exact", "tail", "bound", "chernoff_C", "x_star", "mc_estimate", "mc_stderr", "status",
]


def cmd_tails(config: RunConfig) -> tuple[list[str], list[dict], int]:
    deltas = _grid(config, "delta", [1.0])
    ps = _grid(config, "p", [0.5])
    ns_ = _int_grid(_grid(config, "n", [1, 10, 100]), "n")
    etas = _grid(config, "eta", [])
    d3s = _grid(config, "delta3", [0.1])

    def geo(pt):
        delta, p, n = pt
        r = {"family": "geometric", "delta": delta, "p": p, "n": n}
        try:
            law = GeometricLaw(p)
            opt = chernoff_constant(delta, p)
        except DomainError as exc:
            r["status"] = f"error: {exc}"
            return [r]
        T = ceil_tol(n * (law.mu + delta))
        exact = geometric_sum_tail_above(law, n, delta)
        bound = opt.tail_bound(n)
        r.update(threshold=T, exact=exact, tail=exact, bound=bound, chernoff_C=opt.C,
                 x_star=opt.x_star)
        if config.samples > 0:
            mc = monte_carlo_tail(law, n, T, config.samples, config.seed, workers=1)
            r.update(mc_estimate=mc.estimate, mc_stderr=mc.stderr)
        r["status"] = "pass" if exact <= bound * (1 + 1e-12) else "fail"
        return [r]

    def binom(pt):
        S, eta, d3 = pt
        r = {"family": "binomial", "n": S, "eta": eta, "delta3": d3}
        try:
            dist = BinomialTransmission(S, eta)
            bound = hoeffding_lower_bound(S, d3)
        except DomainError as exc:
            r["status"] = f"error: {exc}"
            return [r]
        T = math.floor(S * (eta + d3) + 1e-12)
        exact = binomial_tail_below(dist, T)
        r.update(threshold=T, exact=exact, tail=max(0.0, 1 - exact) if T < S else 0.0,
                 bound=bound)
        if config.samples > 0:
            mc = monte_carlo_tail(dist, 0, T, config.samples, config.seed, workers=1)
            r.update(mc_estimate=mc.estimate, mc_stderr=mc.stderr)
        r["status"] = "pass" if exact >= bound - 1e-12 else "fail"
        return [r]

    rows = parallel_rows(geo, list(itertools.product(deltas, ps, ns_)))
    rows += parallel_rows(binom, list(itertools.product(ns_, etas, d3s)))
    code = EXIT_VIOLATION if any(r["status"] == "fail" for r in rows) else EXIT_OK
    return TAILS_COLUMNS, rows, code


COMMANDS = {
    "bounds": (cmd_bounds, BOUNDS_COLUMNS),
    "lemmas": (cmd_lemmas, LEMMAS_COLUMNS),
    "codebook": (cmd_codebook, CODEBOOK_COLUMNS),
    "tails": (cmd_tails, TAILS_COLUMNS),
}


COLUMN_DOCS = {
    "eta": "transmissivity",
    "ns": "mean photon budget per input mode",
    "n": "number of modes (blocklength); trials for binomial tail rows",
    "rate": "code rate in bits per mode",
    "epsilon": "error probability (weak converse) or Markov threshold for E2",
    "p": "vacuum mixing weight (bounds) or geometric ratio (tails)",
    "delta": "slack above the mean in the Chernoff tail; sets the preset delta1 in bounds",
    "rank_slack": "rank-bound slack at budget eta N_S + delta2",
    "delta1": "input shadow deficit",
    "delta2": "output cutoff slack per mode",
    "delta3": "Hoeffding slack",
    "g_eta_ns": "capacity g(eta N_S)",
    "h2_eps": "binary entropy of epsilon",
    "weak_converse_rate": "(g(eta N_S) + h2(eps)) / (1 - eps)",
    "simulation_rate": "qubits per mode to simulate the channel",
    "tradeoff_rate": "g(eta N_S / (1 - p))",
    "tradeoff_error": "error p paired with tradeoff_rate",
    "rank_term": "2^(-n (R - g(eta N_S) - delta2 - delta))",
    "disturbance_term": "2 sqrt(delta1 + exp_term + 2 sqrt(delta1))",
    "exp_term": "exp(-2 delta3^2 eta N_S n)",
    "raw_total": "rank_term + disturbance_term, unclamped",
    "success_upper": "raw_total clamped to [0, 1]",
    "delta_unshifted": "rank-bound slack at budget eta N_S",
    "rank_term_exact": "exact projector rank at the output cutoff times 2^(-nR)",
    "decaying": "whether the rank-term exponent is negative",
    "rank_term_covers_exact": "whether rank_term is at least rank_term_exact",
    "status": "ok, pass, fail, precondition: ..., or error: ...",
    "lemma": "rank or output_shadow",
    "input": "worst_case or random_<i>",
    "cutoff": "photon cutoff L used for this row",
    "exact": "exact value being bounded (log2 rank, shadow, or tail probability)",
    "bound": "bound on exact (log2 for rank rows)",
    "margin": "distance from exact to the bound, positive when respected",
    "kind": "seed (one codebook) or summary (across seeds)",
    "seed": "codebook seed",
    "variance": "Gaussian ensemble variance N_S - delta",
    "messages": "codebook size M",
    "average_shadow": "codebook-average input shadow at cutoff",
    "average_deficit": "1 - average_shadow",
    "worst_shadow": "smallest per-codeword shadow",
    "budget_violations": "codewords whose mean photon number exceeds N_S",
    "e1_pass": "average_shadow >= 1 - delta1",
    "failure_frequency": "fraction of seeds failing E1",
    "failure_stderr": "binomial standard error of failure_frequency",
    "predicted_failure_bound": "C(delta, N_S - delta)^(n/2)",
    "thermal_tail": "exact 1 - Tr{Pi_L theta^(x)n}",
    "chernoff_tail_bound": "C(delta, N_S - delta)^n",
    "mean_deficit": "mean of average_deficit over seeds",
    "mean_deficit_stderr": "standard error of mean_deficit",
    "union_markov_bound": "thermal_tail / delta1 + epsilon",
    "e2": "decoder constraint status (not constructed)",
    "family": "geometric (upper tail of a sum) or binomial (lower tail)",
    "threshold": "integer threshold of the tail event",
    "tail": "probability above the threshold",
    "chernoff_C": "Chernoff constant C",
    "x_star": "optimal tilt e^t",
    "mc_estimate": "Monte Carlo estimate of exact",
    "mc_stderr": "Monte Carlo standard error",
}


def schema() -> dict:
    return {"schema_version": SCHEMA_VERSION,
            "commands": {name: [{"name": c, "doc": COLUMN_DOCS[c]} for c in cols]
                         for name, (_, cols) in COMMANDS.items()}}


# --- argument handling ----------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    for key in GRID_KEYS:
        flag = "--" + key.replace("_", "-")
        p.add_argument(flag, dest=key, default=None, help=f"grid for {key}")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=None, help="Monte Carlo samples per row")
    p.add_argument("--seeds", type=int, default=None, help="number of codebooks to sample")
    p.add_argument("--messages", type=int, default=None, help="codebook size M")
    p.add_argument("--budget", type=int, default=None, help="cap on M*n")
    p.add_argument("--random-inputs", dest="random_inputs", type=int, default=None,
                   help="random diagonal inputs per output-shadow row")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--config", default=None, help="key=value file, one flag per line")


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not theorem violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pureloss", description=__doc__)
    parser.add_argument("--schema", action="store_true", help="print column schema and exit")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        _add_common(sub.add_parser(name, help=COMMANDS[name][0].__doc__))
    return parser


def read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            k, v = line.split("=", 1)
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = parts
        out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    return out


_SCALARS = {"seed": 0, "samples": 0, "seeds": 200, "messages": 100, "budget": 10_000_000,
            "random_inputs": 0}


def make_config(args: argparse.Namespace) -> RunConfig:
    file_vals = read_config_file(args.config) if args.config else {}
    unknown = set(file_vals) - set(GRID_KEYS) - set(_SCALARS) - {"out", "format"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    def pick(key):
        v = getattr(args, key, None)
        return v if v is not None else file_vals.get(key)

    grid = {}
    for key in GRID_KEYS:
        v = pick(key)
        if v is not None:
            grid[key] = parse_grid(v)
    scalars = {}
    for key, default in _SCALARS.items():
        v = pick(key)
        try:
            scalars[key] = int(v) if v is not None else default
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {v!r}")
    fmt = pick("format") or "csv"
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    return RunConfig(command=args.command, grid=grid, out=pick("out"), format=fmt, **scalars)


def run(config: RunConfig) -> tuple[str, int]:
    fn, _ = COMMANDS[config.command]
    columns, rows, code = fn(config)
    return render(config, columns, rows), code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        sys.stdout.write(json.dumps(schema(), indent=1, sort_keys=True) + "\n")
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        config = make_config(args)
        text, code = run(config)
    except (ConfigError, OSError) as exc:
        print(f"pureloss: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
