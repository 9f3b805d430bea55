"""Command-line frontend: ``mscw analyze | verify | sample``.

Exit codes: 0 success, 2 invalid model or arguments, 3 solver
non-convergence, 4 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .exactdist import (
    BudgetExceeded,
    compare_to_law,
    conditional_joint,
    exact_joint,
    glauber_sample,
    normalized_moments,
)
from .landscape import MinimumType, NonConvergence, find_global_minima
from .limits import DegeneracyError, build_limit_law, law_moments
from .model import ModelError, SpeciesPartition, load_model, validate_model
from .serialize import (
    critical_point_to_dict,
    discrepancy_to_dict,
    dumps,
    header,
    law_to_dict,
    minima_to_dict,
    report_to_dict,
)

EXIT_OK, EXIT_INVALID, EXIT_NONCONV, EXIT_BUDGET = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"{what}: expected comma-separated numbers, got {text!r}", EXIT_INVALID) from None


def _ints(text: str, what: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"{what}: expected comma-separated integers, got {text!r}", EXIT_INVALID) from None
    if not vals or any(v <= 0 for v in vals):
        raise CliError(f"{what}: values must be positive", EXIT_INVALID)
    return vals


def _load(args):
    if not os.path.exists(args.model):
        raise CliError(f"model file {args.model} does not exist", EXIT_INVALID)
    try:
        spec = load_model(args.model)
        model = validate_model(spec)
    except ModelError as exc:
        raise CliError(f"invalid model: {exc}", EXIT_INVALID) from None
    if not model.positive_definite:
        raise CliError(
            "reduced interaction matrix not positive definite "
            f"(smallest eigenvalue {model.smallest_eigenvalue:.6g})",
            EXIT_INVALID,
        )
    return spec, model


def _minima(model, grid):
    try:
        return find_global_minima(model, grid_points_per_axis=grid)
    except NonConvergence as exc:
        raise CliError(f"mean-field solver did not converge: {exc} (residual {exc.residual:.3e})", EXIT_NONCONV) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None


def _law(pt, model):
    try:
        return build_limit_law(pt, model)
    except (ValueError, DegeneracyError) as exc:
        raise CliError(f"no limit law at mu={np.round(pt.mu, 8).tolist()}: {exc}", EXIT_INVALID) from None


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _fmt(v) -> str:
    v = np.asarray(v, dtype=float).reshape(-1)
    return "(" + ", ".join(f"{x:.6g}" for x in v) + ")"


def _csv_text(spec, rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    buf.write(f"# mscw {__version__} model={dumps(spec.to_dict()).replace(chr(10), '').replace(' ', '')}\n")
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r[k]) for k in columns})
    return buf.getvalue()


# ---------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    spec, model = _load(args)
    ms = _minima(model, args.grid)
    laws = []
    print(f"mscw {__version__}: n={model.n} sizes={list(spec.partition.sizes)} "
          f"lambda_min(A)={model.smallest_eigenvalue:.6g}")
    print(f"{'#':>3}  {'mu':<32} {'G(mu)':>14}  {'kind':<26} law")
    for i, pt in enumerate(ms.points):
        law = None if pt.k == MinimumType.UNCLASSIFIED else build_limit_law(pt, model)
        laws.append(law)
        desc = "-" if law is None else f"{law.kind} exponents={_fmt(law.exponents)}"
        print(f"{i:>3}  {_fmt(pt.mu):<32} {pt.value:>14.8g}  {pt.k.value:<26} {desc}")
        if law is not None and law.kind == "gaussian":
            print(f"     chi = {np.round(law.chi, 8).tolist()}")
    print(f"delta_bar = {ms.delta_bar:.6g}")
    if args.out:
        if args.format == "json":
            doc = {
                **header(spec),
                "minima": minima_to_dict(ms),
                "laws": [None if l is None else law_to_dict(l) for l in laws],
            }
            _write(args.out, dumps(doc))
        else:
            n = model.n
            cols = [f"mu{l + 1}" for l in range(n)] + ["value", "kind", "law", "grad_norm"]
            rows = []
            for pt, law in zip(ms.points, laws):
                r = {f"mu{l + 1}": repr(float(pt.mu[l])) for l in range(n)}
                r.update(value=repr(pt.value), kind=pt.k.value,
                         law=None if law is None else law.kind, grad_norm=repr(pt.grad_norm))
                rows.append(r)
            _write(args.out, _csv_text(spec, rows, cols))
    return EXIT_OK


# ---------------------------------------------------------------- verify


def _sweep_partitions(model, sizes, split):
    n = model.n
    weights = [1] * n if split is None else _ints(split, "--split")
    if len(weights) != n:
        raise CliError(f"--split needs {n} weights", EXIT_INVALID)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise CliError("--sizes must be strictly increasing", EXIT_INVALID)
    parts = []
    for v in sizes:
        part = SpeciesPartition(tuple(v * w for w in weights))
        if part.fractions != model.partition.fractions:
            raise CliError(
                f"sizes {part.sizes} change the species proportions of the model {model.partition.sizes}; "
                "use --split to match them",
                EXIT_INVALID,
            )
        parts.append(part)
    return parts


def _verify_one(model, part, pt, law, ball):
    try:
        if ball is None:
            dist = exact_joint(model, part)
        else:
            dist = conditional_joint(model, part, ball[0], ball[1])
    except BudgetExceeded as exc:
        return {"sizes": part.sizes, "N": part.N, "status": "budget_exceeded", "message": str(exc)}
    report = normalized_moments(dist, center=pt.mu, exponents=law.exponents)
    disc = compare_to_law(report, law, dist)
    return {
        "sizes": part.sizes,
        "N": part.N,
        "status": "ok",
        "report": report,
        "discrepancy": disc,
        "mean_magnetization": dist.mean_magnetization(),
        "boundary_mass": dist.boundary_mass,
        "boundary_flag": dist.boundary_flag,
    }


def cmd_verify(args) -> int:
    spec, model = _load(args)
    sizes = _ints(args.sizes, "--sizes")
    parts = _sweep_partitions(model, sizes, args.split)
    ms = _minima(model, args.grid)
    ball = None
    if args.ball_center is not None or args.ball_radius is not None:
        if args.ball_center is None or args.ball_radius is None:
            raise CliError("--ball-center and --ball-radius go together", EXIT_INVALID)
        center = np.array(_floats(args.ball_center, "--ball-center"))
        if center.shape != (model.n,):
            raise CliError(f"--ball-center needs {model.n} coordinates", EXIT_INVALID)
        radius = float(args.ball_radius)
        if not radius > 0 or radius >= ms.delta_bar:
            raise CliError(f"--ball-radius must lie in (0, {ms.delta_bar:.6g})", EXIT_INVALID)
        pt = ms.nearest(center)
        ball = (center, radius)
    else:
        if len(ms) != 1:
            raise CliError(
                f"{len(ms)} global minima; select one with --ball-center and --ball-radius",
                EXIT_INVALID,
            )
        pt = ms.points[0]
    law = _law(pt, model)
    target = law_moments(law)

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        rows = list(pool.map(lambda p: _verify_one(model, p, pt, law, ball), parts))

    n = model.n
    print(f"mscw {__version__}: verify at mu={_fmt(pt.mu)} ({pt.k.value}, {law.kind} law)")
    print(f"law fourth moments {_fmt(target.fourth)}  covariance diag {_fmt(np.diag(target.covariance))}")
    print(f"{'sizes':<16} {'cov_rel':>10} {'cov_abs':>10} {'fourth_abs':>11} {'kurt_abs':>10} {'tv':>10}  fourth")
    for r in rows:
        if r["status"] != "ok":
            print(f"{str(list(r['sizes'])):<16} BUDGET EXCEEDED: {r['message']}")
            continue
        d = r["discrepancy"]
        tv = "-" if d.tv is None else f"{d.tv:.4g}"
        flag = "  [boundary mass > 1%]" if r["boundary_flag"] else ""
        print(f"{str(list(r['sizes'])):<16} {d.cov_rel:>10.4g} {d.cov_abs:>10.4g} "
              f"{np.max(d.fourth_abs):>11.4g} {np.max(d.kurtosis_abs):>10.4g} {tv:>10}  "
              f"{_fmt(r['report'].fourth)}{flag}")
    budget_hit = any(r["status"] != "ok" for r in rows)

    if args.out:
        if args.format == "json":
            doc = {
                **header(spec),
                "minimum": critical_point_to_dict(pt),
                "law": law_to_dict(law),
                "law_moments": report_to_dict(target),
                "ball": None if ball is None else {"center": ball[0], "radius": ball[1]},
                "budget_exceeded": budget_hit,
                "rows": [
                    {
                        "sizes": list(r["sizes"]),
                        "N": r["N"],
                        "status": r["status"],
                        **({"message": r["message"]} if r["status"] != "ok" else {
                            "moments": report_to_dict(r["report"]),
                            "discrepancy": discrepancy_to_dict(r["discrepancy"]),
                            "mean_magnetization": r["mean_magnetization"],
                            "boundary_mass": r["boundary_mass"],
                            "boundary_flag": r["boundary_flag"],
                        }),
                    }
                    for r in rows
                ],
            }
            _write(args.out, dumps(doc))
        else:
            cols = (["N"] + [f"N{l + 1}" for l in range(n)] + ["status", "cov_abs", "cov_rel", "mean_abs"]
                    + [f"fourth{l + 1}" for l in range(n)] + [f"fourth_abs{l + 1}" for l in range(n)]
                    + [f"kurtosis{l + 1}" for l in range(n)] + ["tv", "boundary_mass"])
            out_rows = []
            for r in rows:
                row = {"N": r["N"], "status": r["status"]}
                row.update({f"N{l + 1}": r["sizes"][l] for l in range(n)})
                if r["status"] == "ok":
                    d, rep = r["discrepancy"], r["report"]
                    row.update(cov_abs=repr(d.cov_abs), cov_rel=repr(d.cov_rel), mean_abs=repr(d.mean_abs),
                               tv=None if d.tv is None else repr(d.tv), boundary_mass=repr(r["boundary_mass"]))
                    for l in range(n):
                        row[f"fourth{l + 1}"] = repr(float(rep.fourth[l]))
                        row[f"fourth_abs{l + 1}"] = repr(float(d.fourth_abs[l]))
                        row[f"kurtosis{l + 1}"] = repr(float(rep.kurtosis[l]))
                out_rows.append(row)
            _write(args.out, _csv_text(spec, out_rows, cols))
    if budget_hit:
        print("enumeration budget exceeded for at least one size; partial results written", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


# ---------------------------------------------------------------- sample


def cmd_sample(args) -> int:
    spec, model = _load(args)
    if args.sweeps <= args.burn_in or args.burn_in < 0:
        raise CliError("need --sweeps > --burn-in >= 0", EXIT_INVALID)
    if args.batches < 2 or args.sweeps - args.burn_in < args.batches:
        raise CliError("need at least two batches and one sweep per batch", EXIT_INVALID)
    part = model.partition
    if args.sizes is not None:
        sizes = _ints(args.sizes, "--sizes")
        if len(sizes) != model.n:
            raise CliError(f"--sizes needs {model.n} species sizes for sample", EXIT_INVALID)
        part = SpeciesPartition(tuple(sizes))
        if part.fractions != model.partition.fractions:
            raise CliError(f"sizes {part.sizes} change the species proportions of the model", EXIT_INVALID)
    ms = _minima(model, args.grid)
    if args.center is not None:
        center = np.array(_floats(args.center, "--center"))
        if center.shape != (model.n,):
            raise CliError(f"--center needs {model.n} coordinates", EXIT_INVALID)
        pt = ms.nearest(center)
    elif len(ms) == 1:
        pt = ms.points[0]
    else:
        raise CliError(f"{len(ms)} global minima; pick a centering minimum with --center", EXIT_INVALID)
    exps = np.full(model.n, 0.5)
    if pt.k != MinimumType.UNCLASSIFIED:
        exps = _law(pt, model).exponents
    report = glauber_sample(
        model, part, sweeps=args.sweeps, burn_in=args.burn_in, seed=args.seed,
        center=pt.mu, exponents=exps, batches=args.batches,
    )
    print(f"mscw {__version__}: heat-bath sample sizes={list(part.sizes)} sweeps={args.sweeps} seed={args.seed}")
    print(f"{'stat':<10} {'estimate':<40} stderr")
    for key, val in (("mean", report.mean), ("third", report.third),
                     ("fourth", report.fourth), ("kurtosis", report.kurtosis)):
        print(f"{key:<10} {_fmt(val):<40} {_fmt(report.stderr[key])}")
    print(f"{'cov':<10} {np.round(report.covariance, 6).tolist()}")
    if args.out:
        if args.format == "json":
            doc = {
                **header(spec),
                "sizes": list(part.sizes),
                "sweeps": args.sweeps,
                "burn_in": args.burn_in,
                "batches": args.batches,
                "seed": args.seed,
                "report": report_to_dict(report),
            }
            _write(args.out, dumps(doc))
        else:
            n = model.n
            rows = []
            for key in ("mean", "third", "fourth", "kurtosis"):
                for l in range(n):
                    rows.append({"stat": key, "coord": l + 1, "estimate": repr(float(getattr(report, key)[l])),
                                 "stderr": repr(float(report.stderr[key][l]))})
            _write(args.out, _csv_text(spec, rows, ["stat", "coord", "estimate", "stderr"]))
    return EXIT_OK


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, help="model JSON {sizes, J, h}")
    common.add_argument("--out", help="write the machine-readable result here")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid", type=int, default=21, help="multi-start points per axis")

    p = argparse.ArgumentParser(prog="mscw", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mscw {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("analyze", parents=[common], help="minima, classification and limit laws")

    v = sub.add_parser("verify", parents=[common], help="exact finite-N convergence sweep")
    v.add_argument("--sizes", required=True, help='per-species sizes, e.g. "100,200,400,800"')
    v.add_argument("--split", help="integer species weights; species l gets size*w_l (default equal)")
    v.add_argument("--ball-center", help='condition on a ball around "mu1,...,mun"')
    v.add_argument("--ball-radius", type=float)

    s = sub.add_parser("sample", parents=[common], help="heat-bath Monte Carlo moments")
    s.add_argument("--sizes", help="species sizes (default: the model's)")
    s.add_argument("--sweeps", type=int, default=100_000)
    s.add_argument("--burn-in", type=int, default=1000)
    s.add_argument("--batches", type=int, default=50)
    s.add_argument("--center", help="centre on the minimum nearest to this point")
    return p


COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "sample": cmd_sample}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_INVALID
    if args.seed < 0 or args.seed >= 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
