"""Command-line entry point: one subcommand per verification experiment.

Exit codes: 0 all checks passed, 1 a sign or identity check failed,
2 numerical accuracy failure, 64 usage error, 65 malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channels, covmap, fields, numkit, rwa
from .errors import (
    AccuracyError,
    ConsistencyError,
    DomainError,
    EvaluationError,
    RangeError,
    WitnessInconclusiveError,
)

SCHEMA = 1
EXIT_OK, EXIT_CLAIM, EXIT_NUMERIC, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 64, 65

DEFAULT_TOLS = {
    "free-sign": {"sign": 1e-9},
    "im-indeterminate": {"agreement": 1e-3},
    "covmap": {"roundtrip": 1e-12, "decomposition": 1e-9, "purity": 1e-4, "routes": 1e-6},
    "kraus": {},
    "rwa": {"oracle": 1e-4, "laplace": 1e-5, "functional": 1e-9},
    "bessel-identities": {"gr_3876_1": 1e-5, "gr_6677_6": 1e-8},
}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    out: str | None = None
    format: str = "json"
    tols: dict = field(default_factory=dict)
    fixture: str = "default"
    options: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "seed": self.seed,
            "format": self.format,
            "fixture": self.fixture,
            "tolerances": dict(sorted(self.tols.items())),
            "options": dict(sorted(self.options.items())),
        }


@dataclass
class Outcome:
    results: list
    code: int = EXIT_OK
    verdict: str = "verified"
    messages: list = field(default_factory=list)


def workers() -> int:
    """Thread cap from PROPSIGN_THREADS (default: CPU count)."""
    raw = os.environ.get("PROPSIGN_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"PROPSIGN_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("PROPSIGN_THREADS must be at least 1")
    return n


def _pmap(fn, items):
    """Order-preserving parallel map capped by PROPSIGN_THREADS."""
    items = list(items)
    n = min(workers(), max(len(items), 1))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def _fail(outcome: Outcome, message: str, code: int = EXIT_CLAIM) -> None:
    outcome.messages.append(message)
    # numerical failures dominate claim failures
    if code == EXIT_NUMERIC or outcome.code == EXIT_OK:
        outcome.code = code
        outcome.verdict = "numerical_error" if code == EXIT_NUMERIC else "claim_failed"


# -- free-sign ---------------------------------------------------------------------


def random_test_function(rng: np.random.Generator) -> fields.TestFunction:
    if rng.random() < 0.5:
        temporal = fields.GaussianT(float(rng.uniform(-2, 2)), float(rng.uniform(0.3, 2.0)))
    else:
        temporal = fields.Exponential(float(rng.uniform(0.2, 3.0)))
    if rng.random() < 0.5:
        spatial = fields.Gaussian3D(float(rng.uniform(0.3, 2.0)), float(rng.uniform(0.5, 2.0)))
    else:
        direction = rng.standard_normal(3)
        k0 = direction / np.linalg.norm(direction) * rng.uniform(0.0, 3.0)
        spatial = fields.PlaneWavePacket(tuple(float(x) for x in k0), float(rng.uniform(0.5, 2.0)))
    return fields.TestFunction(temporal, spatial)


def cmd_free_sign(cfg: RunConfig) -> Outcome:
    n = cfg.options["n"]
    if n < 0:
        raise UsageError("--n must be nonnegative")
    rng = np.random.default_rng(cfg.seed)
    funcs = [random_test_function(rng) for _ in range(n)]
    field_cfg = fields.FieldConfig(mass=cfg.options["mass"], n_k=cfg.options["n_k"])
    tol = cfg.tols["sign"]

    def run(item):
        idx, f = item
        try:
            return idx, f, fields.re_idf_free(f, field_cfg), None
        except (AccuracyError, EvaluationError) as exc:
            return idx, f, None, str(exc)

    outcome = Outcome([])
    for idx, f, value, error in _pmap(run, enumerate(funcs)):
        row = {"index": idx, "temporal": repr(f.temporal), "spatial": repr(f.spatial), "value": value}
        if error is not None:
            row["pass"] = False
            _fail(outcome, f"function {idx}: {error}", EXIT_NUMERIC)
        else:
            # sign tolerance is relative to the squared norm of f
            row["pass"] = value >= -tol * f.l2_norm_sq()
            if not row["pass"]:
                _fail(outcome, f"function {idx}: Re iDF = {value:.3e} < 0")
        outcome.results.append(row)
    return outcome


# -- im-indeterminate --------------------------------------------------------------


def cmd_im_indeterminate(cfg: RunConfig) -> Outcome:
    beta, mass = cfg.options["beta"], cfg.options["mass"]
    if not 0.0 < beta < 1.0:
        raise UsageError(f"--beta must lie in (0, 1), got {beta}")
    if not mass > 0:
        raise UsageError("--mass must be positive")
    g = fields.Gaussian3D(cfg.options["width"])
    report = fields.indeterminacy_witness(mass, beta, g, fields.FieldConfig(mass=mass), cfg.tols["agreement"])
    outcome = Outcome([report.as_dict()])
    if not report.product < 0:
        _fail(outcome, "Im iDF has the same sign on both test functions")
    if report.discrepancy > report.tolerance:
        _fail(outcome, f"quadrature and closed form differ by {report.discrepancy:.2e}")
    return outcome


# -- covmap -----------------------------------------------------------------------


def cmd_covmap(cfg: RunConfig) -> Outcome:
    tau, scale = cfg.options["tau"], cfg.options["lambda_scale"]
    if not tau > 0:
        raise UsageError("--tau must be positive")
    rng = np.random.default_rng(cfg.seed)
    psi, phi, basis, _ = covmap.default_witness_fixture()
    basis = covmap.MomentumBasis(basis.scalars * scale, degenerate=scale == 0)
    outcome = Outcome([])

    rho = channels.random_density(basis.dim, rng)
    fwd = covmap.gaussian_forward(covmap.PState(basis, rho), tau)
    back = covmap.gaussian_backward(fwd.rho, basis, tau)
    gap = float(np.max(np.abs(back - rho.entries)))
    outcome.results.append({"fixture": "roundtrip", "value": gap, "pass": gap <= cfg.tols["roundtrip"]})

    z = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    z /= np.linalg.norm(z)
    mix = 0.5 * (
        covmap.sigma_pm(z, basis, tau, 1).entries + covmap.sigma_pm(z, basis, tau, -1).entries
    )
    direct = covmap.gaussian_forward(covmap.PState(basis, channels.DensityMatrix.pure(z)), tau).rho.entries
    gap = float(np.max(np.abs(mix - direct)))
    outcome.results.append({"fixture": "decomposition", "value": gap, "pass": gap <= cfg.tols["decomposition"]})

    h = 1e-6
    state = covmap.PState(basis, channels.DensityMatrix.pure(z))
    slope = (channels.purity(covmap.gaussian_forward(state, h).rho) - 1.0) / h
    rate = covmap.purity_rate(z, basis.scalars)
    gap = abs(slope - rate) / abs(rate) if rate else abs(slope)
    outcome.results.append(
        {"fixture": "purity_rate", "value": rate, "finite_difference": slope, "pass": gap <= cfg.tols["purity"]}
    )

    try:
        report = covmap.nononto_witness(psi, phi, basis, tau)
    except WitnessInconclusiveError as exc:
        outcome.messages.append(f"warning: witness inconclusive: {exc}")
        outcome.results.append({"fixture": "witness", "verdict": "inconclusive", "pass": True})
    else:
        row = {"fixture": "witness", **report.as_dict(), "route_gap": report.route_gap}
        row["pass"] = (
            min(report.w_plus, report.w_minus) < 0
            and report.route_gap <= cfg.tols["routes"]
            and abs(report.w_plus + report.w_minus) <= 1e-8
        )
        outcome.results.append(row)

    for row in outcome.results:
        if not row["pass"]:
            _fail(outcome, f"covmap fixture {row['fixture']} failed")
    return outcome


# -- kraus ------------------------------------------------------------------------


def cmd_kraus(cfg: RunConfig) -> Outcome:
    path = cfg.options["channel_file"]
    try:
        with open(path, encoding="utf-8") as fh:
            kraus = channels.KrausSet.loads(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: malformed Kraus set JSON ({exc})") from None
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from None
    report = channels.analyze_channel(kraus, rng=np.random.default_rng(cfg.seed))
    outcome = Outcome([report.as_dict()])
    outcome.verdict = report.verdict
    return outcome


# -- rwa --------------------------------------------------------------------------


def _fixture_model(name: str) -> rwa.RwaModel:
    c = rwa.Coupling.constant
    if name == "default":
        return rwa.RwaModel(1.0, c(1e-4), c(3e-4), c(2e-4), c(2e-4))
    if name == "free":
        return rwa.RwaModel()
    if name == "pumped":
        return rwa.RwaModel(1.0, c(1e-2), c(0.0), c(0.0), c(0.0))
    raise UsageError(f"unknown rwa fixture {name!r} (choose default, free, pumped)")


def _load_model(cfg: RunConfig) -> rwa.RwaModel:
    path = cfg.options.get("model_file")
    if path is None:
        return _fixture_model(cfg.fixture)
    try:
        with open(path, encoding="utf-8") as fh:
            return rwa.RwaModel.loads(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except (json.JSONDecodeError, DomainError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_rwa(cfg: RunConfig) -> Outcome:
    model = _load_model(cfg)
    outcome = Outcome([])
    rng = np.random.default_rng(cfg.seed)

    sweep = rwa.positivity_sweep(cfg.options["n_sweep"], rng)
    bad = [row for row in sweep if not row["pass"]]
    outcome.results.append({"check": "positivity_sweep", "points": len(sweep), "violations": len(bad), "pass": not bad})
    for row in bad:
        _fail(outcome, f"negative closed form at omega_bar={row['omega_bar']:.6g}, k={row['k']:.6g}")
    if cfg.format == "csv":
        outcome.results.extend({"check": "sweep_point", **row} for row in sweep)

    def oracle_row(item):
        q, gammas = item
        local = rwa.discrete_model(q.k_norm, gammas, model.mass)
        closed = rwa.two_time_average(q, local)
        oracle = rwa.lindblad_oracle(q, local, n_max=12, full_output=True)
        gap = rwa.relative_gap(closed, oracle.value, 1e-12 * float(local.norm_factor(q.k_norm)))
        return {
            "check": "oracle",
            "indices": list(q.indices),
            "k": q.k_norm,
            "times": [q.t_prime, q.t_doubleprime, q.tau],
            "gammas": list(gammas),
            "closed_form": closed,
            "oracle": oracle.value,
            "leakage": oracle.leakage,
            "relative_gap": gap,
            "pass": gap <= cfg.tols["oracle"],
        }

    for row in _pmap(oracle_row, rwa.oracle_fixture()):
        outcome.results.append(row)
        if not row["pass"]:
            _fail(outcome, f"oracle mismatch for indices {row['indices']} at k={row['k']}")

    for omega_bar, k in rwa.laplace_lattice():
        for sector in (1, 2):
            row = {"check": "laplace", **rwa.laplace_cross_check(model, omega_bar, k, sector)}
            row["pass"] = row["relative_gap"] <= cfg.tols["laplace"]
            if model == rwa.RwaModel(model.mass):
                w = math.hypot(k, model.mass)
                golden = (2 * math.pi) ** 3 * w / (w * w + omega_bar**2)
                row["golden"] = golden
                row["pass"] = row["pass"] and abs(row["closed_form"] - golden) <= 1e-12 * golden
            outcome.results.append(row)
            if not row["pass"]:
                _fail(outcome, f"Laplace cross-check failed at omega_bar={omega_bar}, k={k}, sector {sector}")

    field_cfg = fields.FieldConfig(mass=model.mass)
    profiles = [fields.Gaussian3D(1.0), fields.PlaneWavePacket((0.0, 0.0, 1.5), 0.8)]
    for n, g in enumerate(profiles):
        for omega_bar in (0.5, 1.0):
            value = rwa.interacting_functional(g, omega_bar, model, field_cfg)
            norm = g.l2_norm_sq() / (2.0 * omega_bar)
            row = {
                "check": "functional",
                "profile": repr(g),
                "omega_bar": omega_bar,
                "value": value,
                "pass": value >= -cfg.tols["functional"] * norm,
            }
            outcome.results.append(row)
            if not row["pass"]:
                _fail(outcome, f"interacting functional negative for profile {n}, omega_bar={omega_bar}")
    return outcome


# -- bessel-identities ------------------------------------------------------------


def cmd_bessel_identities(cfg: RunConfig) -> Outcome:
    first, second = numkit.identity_lattice()
    outcome = Outcome([])
    rows = []
    for name, check, points in (
        ("gr_3876_1", numkit.gr_3876_1_check, first),
        ("gr_6677_6", numkit.gr_6677_6_check, second),
    ):
        tol = cfg.tols[name]
        values = _pmap(lambda p, check=check: check(*p), points)
        for p, (lhs, rhs) in zip(points, values):
            err = abs(lhs - rhs)
            rows.append({"identity": name, "m": p[0], "dt": p[1], "arg": p[2], "lhs": lhs, "rhs": rhs,
                         "error": err, "pass": err <= tol})
            if err > tol:
                _fail(outcome, f"{name} off by {err:.2e} at m={p[0]}, dt={p[1]}, arg={p[2]}")
    outcome.results = rows
    return outcome


COMMANDS = {
    "free-sign": cmd_free_sign,
    "im-indeterminate": cmd_im_indeterminate,
    "covmap": cmd_covmap,
    "kraus": cmd_kraus,
    "rwa": cmd_rwa,
    "bessel-identities": cmd_bessel_identities,
}


# -- plumbing ----------------------------------------------------------------------


def _tol_pair(text: str):
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} needs a number, got {value!r}") from None
    if not number >= 0:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} must be nonnegative")
    return name, number


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--fixture", default="default")

    parser = _Parser(prog="propsign", description="Sign-property verification experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("free-sign", parents=[common], help="Re iDF >= 0 on random test functions")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--n-k", type=int, default=128)
    p.add_argument("--mass", type=float, default=1.0)

    p = sub.add_parser("im-indeterminate", parents=[common], help="Im iDF takes both signs")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--width", type=float, default=1.0)

    p = sub.add_parser("covmap", parents=[common], help="covariant Gaussian map checks")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--lambda-scale", type=float, default=1.0)

    p = sub.add_parser("kraus", parents=[common], help="invertibility analysis of a Kraus set")
    p.add_argument("channel_file")

    p = sub.add_parser("rwa", parents=[common], help="rotating-wave closed forms vs oracle")
    p.add_argument("model_file", nargs="?", default=None)
    p.add_argument("--n-sweep", type=int, default=10_000)

    sub.add_parser("bessel-identities", parents=[common], help="tabulated Bessel integrals")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    tols = dict(DEFAULT_TOLS[args.command])
    for name, value in args.tol:
        if name not in tols:
            known = ", ".join(sorted(tols)) or "none"
            raise UsageError(f"unknown tolerance {name!r} for {args.command} (known: {known})")
        tols[name] = value
    reserved = {"command", "seed", "out", "format", "tol", "fixture"}
    options = {k: v for k, v in vars(args).items() if k not in reserved}
    return RunConfig(args.command, args.seed, args.out, args.format, tols, args.fixture, options)


def render(cfg: RunConfig, outcome: Outcome) -> str:
    if cfg.format == "csv":
        keys: list = []
        for row in outcome.results:
            keys.extend(k for k in row if k not in keys)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for row in outcome.results:
            writer.writerow({k: _csv_cell(v) for k, v in row.items()})
        return buf.getvalue()
    payload = {
        "schema": SCHEMA,
        "command": cfg.command,
        "config_echo": cfg.echo(),
        "results": outcome.results,
        "verdict": outcome.verdict,
        "messages": outcome.messages,
    }
    return json.dumps(_jsonable(payload), indent=2) + "\n"


def _csv_cell(value):
    value = _jsonable(value)
    if isinstance(value, list):
        return json.dumps(value)
    if isinstance(value, float):
        return repr(value)
    return value


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        started = time.perf_counter()
        outcome = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"propsign: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"propsign: bad input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AccuracyError, EvaluationError, RangeError, ConsistencyError) as exc:
        outcome = Outcome([], EXIT_NUMERIC, "numerical_error", [f"{type(exc).__name__}: {exc}"])
        started = None
    text = render(cfg, outcome)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for message in outcome.messages:
        print(message, file=sys.stderr)
    if started is not None:
        print(f"{cfg.command}: {outcome.verdict} in {time.perf_counter() - started:.2f} s", file=sys.stderr)
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
