"""Command-line front end: analyze, verify, certify, interconnect, simulate,
reproduce.

Systems, certificates and supplies travel as JSON; trajectories as CSV.
Every command emits a RunReport (JSON with --report) that is byte-identical
across runs for identical inputs and seed, wall time excluded. Tolerances
come from the default numeric policy unless PDOM_NUMERIC_POLICY names a JSON
override file.

Exit codes: 0 all checks passed, 1 a criterion failed (or was inconclusive),
2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import registry, reproduce
from .differential import LureSystem, check_diff_dominance
from .dissipativity import DissipativityCertificate, SupplyRate, verify_dissipativity
from .errors import (
    CouplingError,
    LmiInfeasibleError,
    NonHyperbolicError,
    NumericalError,
    PdomError,
    RateMismatchError,
    UnsupportedConfigurationError,
)
from .interconnect import FeedbackLoop, closed_loop_certificate, coupling_condition
from .lti import DominanceCertificate, LtiSystem, check_dominance, construct_certificate, eigen_split_test
from .policy import NumericPolicy
from .sim import classify_asymptotics, integrate, write_trajectory_csv

EXIT_OK = 0
EXIT_CRITERION_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3


@dataclass
class RunReport:
    """Serializable record of one command run; deterministic given inputs + seed."""

    command: str
    inputs: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_dict(self, include_volatile: bool = True) -> dict:
        data = {
            "command": self.command,
            "inputs": self.inputs,
            "verdicts": self.verdicts,
            "certificates": self.certificates,
            "metrics": self.metrics,
            "warnings": self.warnings,
        }
        if include_volatile:
            data["wall_time_s"] = self.wall_time_s
        return data

    def canonical_json(self) -> str:
        """Deterministic serialization: volatile fields (wall time) excluded."""
        return json.dumps(self.to_dict(include_volatile=False), sort_keys=True, indent=2)


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise PdomError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise PdomError(f"cannot parse {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")


def _load_system(spec: str):
    """A system argument is either a built-in name or a JSON file path."""
    if spec in registry.builtin_names():
        return registry.builtin_system(spec), {"builtin": spec}
    data = _load_json(spec)
    source = {"path": spec, "sha256": _digest(spec)}
    if "channels" in data:
        return LureSystem.from_dict(data), source
    return LtiSystem.from_dict(data), source


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise PdomError(f"cannot parse vector {text!r}; expected comma-separated numbers")


def cmd_analyze(args, policy: NumericPolicy) -> tuple[int, RunReport]:
    report = RunReport(command="analyze")
    system, source = _load_system(args.system)
    report.inputs = {"system": source, "lambda": args.rate, "p": args.p, "seed": args.seed}
    if isinstance(system, LureSystem):
        raise UnsupportedConfigurationError(
            "analyze handles linear systems; use the vertex checks for Lur'e models"
        )
    split = eigen_split_test(system, args.rate, args.p, policy)
    report.verdicts.append({"check": "eigen_split", **split.to_dict()})
    if split.status == "inconclusive":
        report.warnings.append("split inconclusive: an eigenvalue sits on the shifted axis")
        return EXIT_CRITERION_FAILED, report
    if split.status == "fail":
        return EXIT_CRITERION_FAILED, report
    cert = construct_certificate(system, args.rate, args.p, policy)
    verdict = check_dominance(system, cert, policy)
    report.certificates.append(cert.to_dict())
    report.verdicts.append({"check": "dominance", **verdict.to_dict()})
    return (EXIT_OK if verdict.passed else EXIT_CRITERION_FAILED), report


def cmd_verify(args, policy: NumericPolicy) -> tuple[int, RunReport]:
    report = RunReport(command="verify")
    system, source = _load_system(args.system)
    cert_data = _load_json(args.certificate)
    report.inputs = {
        "system": source,
        "certificate": {"path": args.certificate, "sha256": _digest(args.certificate)},
        "seed": args.seed,
    }
    supply_data = None
    if args.supply:
        supply_data = _load_json(args.supply)
        report.inputs["supply"] = {"path": args.supply, "sha256": _digest(args.supply)}
    elif "supply" in cert_data:
        supply_data = cert_data["supply"]

    if isinstance(system, LureSystem):
        P = np.asarray(cert_data["P"], dtype=float)
        rate = float(cert_data["lambda"])
        if supply_data is not None:
            from .differential import check_diff_dissipativity

            supply = SupplyRate.from_dict(supply_data, r=system.r, m=system.m)
            verdict = check_diff_dissipativity(
                system, P, rate, supply, float(cert_data.get("epsilon", 0.0)), policy
            )
        else:
            verdict = check_diff_dominance(system, P, rate, policy)
        report.verdicts.append({"check": "vertex_family", **verdict.to_dict()})
        return (EXIT_OK if verdict.passed else EXIT_CRITERION_FAILED), report

    if supply_data is not None:
        cert = DissipativityCertificate.from_dict(
            {**cert_data, "supply": supply_data}, r=system.r, m=system.m
        )
        verdict = verify_dissipativity(system, cert, policy)
        report.verdicts.append({"check": "dissipativity", **verdict.to_dict()})
    else:
        cert = DominanceCertificate.from_dict(cert_data)
        verdict = check_dominance(system, cert, policy)
        report.verdicts.append({"check": "dominance", **verdict.to_dict()})
    return (EXIT_OK if verdict.passed else EXIT_CRITERION_FAILED), report


def cmd_certify(args, policy: NumericPolicy) -> tuple[int, RunReport]:
    report = RunReport(command="certify")
    system, source = _load_system(args.system)
    report.inputs = {
        "system": source,
        "lambda": args.rate,
        "p": args.p,
        "passivity": args.passivity,
        "seed": args.seed,
    }
    if isinstance(system, LureSystem):
        raise UnsupportedConfigurationError("certify handles linear systems")
    if args.passivity:
        from .dissipativity import find_passivity_storage

        cert = find_passivity_storage(system, args.rate, args.p, policy)
        verdict = verify_dissipativity(system, cert, policy)
    else:
        cert = construct_certificate(system, args.rate, args.p, policy)
        verdict = check_dominance(system, cert, policy)
    report.certificates.append(cert.to_dict())
    report.verdicts.append({"check": "certificate", **verdict.to_dict()})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(cert.to_dict(), fh, indent=2, sort_keys=True)
        report.metrics["certificate_file"] = args.out
    return (EXIT_OK if verdict.passed else EXIT_CRITERION_FAILED), report


def cmd_interconnect(args, policy: NumericPolicy) -> tuple[int, RunReport]:
    report = RunReport(command="interconnect")
    data = _load_json(args.loop)
    report.inputs = {"loop": {"path": args.loop, "sha256": _digest(args.loop)}, "seed": args.seed}
    loop = FeedbackLoop.from_dict(data)
    coupling = coupling_condition(loop.supply1, loop.supply2, policy)
    report.verdicts.append({"check": "coupling", **coupling.to_dict()})
    if not coupling.passed:
        return EXIT_CRITERION_FAILED, report

    certs = []
    for key, system, supply in (
        ("cert1", loop.sys1, loop.supply1),
        ("cert2", loop.sys2, loop.supply2),
    ):
        if key in data:
            entry = dict(data[key])
            entry.setdefault("lambda", loop.rate)
            certs.append(
                DissipativityCertificate(
                    P=np.asarray(entry["P"], dtype=float),
                    rate=float(entry["lambda"]),
                    epsilon=float(entry.get("epsilon", 0.0)),
                    p=int(entry["p"]),
                    supply=supply,
                )
            )
        elif isinstance(system, LtiSystem) and not np.any(supply.Q):
            from .dissipativity import find_passivity_storage

            split = eigen_split_test(system, loop.rate, 0, policy)
            cert = find_passivity_storage(system, loop.rate, split.unstable_count, policy)
            certs.append(
                DissipativityCertificate(
                    P=cert.P, rate=cert.rate, epsilon=cert.epsilon, p=cert.p, supply=supply
                )
            )
        else:
            raise PdomError(
                f"loop file must provide {key} (a storage) for this subsystem"
            )
    cert = closed_loop_certificate(loop.sys1, certs[0], loop.sys2, certs[1], policy)
    report.certificates.append(cert.to_dict())
    report.verdicts.append(
        {"check": "closed_loop", "passed": True, "p": cert.p, "lambda": cert.rate}
    )
    return EXIT_OK, report


def cmd_simulate(args, policy: NumericPolicy) -> tuple[int, RunReport]:
    report = RunReport(command="simulate")
    system, source = _load_system(args.system)
    if args.dt <= 0:
        raise PdomError("--dt must be positive")
    if args.t_end < args.dt:
        raise PdomError("--t must be at least --dt")
    x0 = _parse_vector(args.x0)
    if x0.shape[0] != system.n:
        raise PdomError(f"--x0 has {x0.shape[0]} entries, system has {system.n} states")
    input_policy = _parse_vector(args.input) if args.input else None
    report.inputs = {
        "system": source,
        "x0": x0.tolist(),
        "t": args.t_end,
        "dt": args.dt,
        "input": None if input_policy is None else input_policy.tolist(),
        "seed": args.seed,
    }
    traj = integrate(
        system, x0, t_end=args.t_end, dt=args.dt, input_policy=input_policy, record_every=args.record_every
    )
    verdict = classify_asymptotics(traj, policy)
    report.verdicts.append({"check": "asymptotics", **verdict.to_dict()})
    report.metrics["samples"] = int(traj.states.shape[0])
    if args.out:
        write_trajectory_csv(traj, args.out)
        report.metrics["trajectory_file"] = args.out
    # divergence is a legitimate verdict, not a failure of the run
    return EXIT_OK, report


def cmd_reproduce(args, policy: NumericPolicy) -> tuple[int, RunReport]:
    report = RunReport(command="reproduce")
    report.inputs = {"which": args.which, "seed": args.seed, "jobs": args.jobs}
    results = reproduce.run(args.which, policy, seed=args.seed, jobs=args.jobs)
    all_passed = True
    for suite in results:
        print(f"== {suite.suite} ==")
        for line in suite.lines:
            print(f"  {line}")
        all_passed &= suite.passed
        report.verdicts.append(suite.to_dict())
        report.warnings.extend(f"{suite.suite}: {w.name}" for w in suite.warnings)
    summary = "ALL PASS" if all_passed else "FAILURES PRESENT"
    print(summary + (f" ({sum(len(s.warnings) for s in results)} warnings)" if any(s.warnings for s in results) else ""))
    report.metrics["summary"] = summary
    return (EXIT_OK if all_passed else EXIT_CRITERION_FAILED), report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdom",
        description="Dominance and dissipativity certification for linear and Lur'e systems",
    )
    parser.add_argument("--seed", type=int, default=42, help="seed for all randomized probes")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for independent sub-checks")
    parser.add_argument("--report", help="write the RunReport JSON to this path")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("analyze", help="split test + certificate construction + verification")
    p.add_argument("system", help="system JSON path or built-in name")
    p.add_argument("--lambda", dest="rate", type=float, required=True, help="dominance rate")
    p.add_argument("--p", type=int, required=True, help="claimed dominant dimension")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="check a dominance or dissipativity certificate")
    p.add_argument("system", help="system JSON path or built-in name")
    p.add_argument("certificate", help="certificate JSON path")
    p.add_argument("--supply", help="supply JSON path (switches to the dissipativity test)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("certify", help="construct a certificate and write it out")
    p.add_argument("system", help="system JSON path or built-in name")
    p.add_argument("--lambda", dest="rate", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--passivity", action="store_true", help="search a storage with P B = C^T")
    p.add_argument("--out", help="certificate output path")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("interconnect", help="coupling test + closed-loop certificate")
    p.add_argument("loop", help="loop JSON path: sys1, sys2, supply1, supply2, lambda[, cert1, cert2]")
    p.set_defaults(func=cmd_interconnect)

    p = sub.add_parser("simulate", help="integrate and classify the asymptotic behavior")
    p.add_argument("system", help="system JSON path or built-in name")
    p.add_argument("--x0", required=True, help="initial state, comma separated")
    p.add_argument("--t", dest="t_end", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--input", help="constant input, comma separated (default: zero)")
    p.add_argument("--record-every", type=int, default=1, help="record every k-th step")
    p.add_argument("--out", help="trajectory CSV output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", help="run a built-in reproduction suite")
    p.add_argument("which", choices=["1", "2", "3", "all"])
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        policy = NumericPolicy.from_env()
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: bad numeric policy override: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    start = time.perf_counter()
    try:
        code, report = args.func(args, policy)
    except (NumericalError, LmiInfeasibleError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE
    except NonHyperbolicError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_CRITERION_FAILED
    except (CouplingError, RateMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (PdomError, ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    report.wall_time_s = time.perf_counter() - start

    if args.verb != "reproduce":
        for verdict in report.verdicts:
            label = verdict.get("check", "check")
            if "kind" in verdict:
                status = verdict["kind"]
            elif "status" in verdict:
                status = verdict["status"]
            else:
                status = "pass" if verdict.get("passed") else "fail"
            print(f"{label}: {status}")
        for warning in report.warnings:
            print(f"warning: {warning}")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report.to_dict(), sort_keys=True, indent=2))
            fh.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
