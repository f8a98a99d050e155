"""Command-line interface: ``ecapm <command> ...``.

Commands
--------
generate     synthetic ground truth -> truth.csv, marginals.csv, generate.json
calibrate    marginals -> z (JSON on stdout, calibrate.json)
reconstruct  marginals -> per-node expectations (TSV) and a summary JSON;
             ``--pairs`` streams every pair's probability and weight law
sample       marginals -> n sampled edge lists
evaluate     truth (+ marginals, candidates) -> evaluate.json
report       evaluate.json -> plot-ready TSV tables

Failures print ``{"error": {...}}`` on stderr and exit with a code from
``EXIT_CODES``. Output defaults to ``$ECAPM_OUTPUT_DIR`` or the working
directory.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .calibration import CalibrationError, InfeasibleTargetError, default_tolerance, solve_z, sparse_z
from .core import BipartiteNetwork, NetworkError, StrengthSequences, degrees, density, strengths
from .indicators import (
    ann_degrees,
    ann_strengths,
    classifier_scores,
    confusion,
    expected_ann,
    expected_confusion,
    mecapm_dense_limit_confusion,
    relative_systemicness,
    systemicness_report,
)
from .io import (
    FormatError,
    file_digest,
    read_edge_list,
    read_marginals,
    write_edge_list,
    write_json,
    write_marginals,
    write_tsv,
    dump_json,
)
from .models import EcapmModel, ModelKind, make_model, sample
from .synthetic import FitnessSpec, generate_fitness, generate_ground_truth

TOOL = "ecapm"
OUTPUT_ENV = "ECAPM_OUTPUT_DIR"

EXIT_CODES = {
    "ok": 0,
    "internal": 1,
    "usage": 2,
    "missing_file": 3,
    "bad_input": 4,
    "infeasible": 5,
}


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D401 - argparse hook
        raise CliError("usage", message)


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    out: Optional[str] = None
    seed: Optional[int] = None
    draws: Optional[int] = None
    density: Optional[float] = None
    models: list = field(default_factory=list)
    tolerance: Optional[float] = None
    extra: dict = field(default_factory=dict)


def _header(cfg: RunConfig) -> dict:
    digests = {}
    for name, path in cfg.inputs.items():
        if isinstance(path, list):
            digests[name] = [file_digest(p) for p in path]
        elif path is not None:
            digests[name] = file_digest(path)
    config = asdict(cfg)
    # the output location does not affect results; leaving it out keeps
    # reports from identical runs byte-identical wherever they are written
    del config["out"]
    return {
        "tool": TOOL,
        "version": __version__,
        "config": config,
        "seed": cfg.seed,
        "input_digests": digests,
    }


def _out_dir(arg: Optional[str]) -> Path:
    out = Path(arg or os.environ.get(OUTPUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(path: str) -> str:
    if not Path(path).is_file():
        raise CliError("missing_file", f"no such file: {path}")
    return path


def _calibrated(kind: ModelKind, s: StrengthSequences, L: int, tol: Optional[float]):
    z = None
    calib = None
    if kind is ModelKind.ECAPM:
        res = solve_z(s.V, s.C, L, tol)
        if res.method_tag == "degenerate":
            raise CliError("infeasible", "target link count is zero: empty ensemble")
        z = res.z
        calib = {"z": res.z, "residual": res.residual, "iterations": res.iterations,
                 "method": res.method_tag}
    return make_model(kind, s, z), calib


# -- commands ------------------------------------------------------------------

def cmd_generate(args) -> int:
    out = _out_dir(args.out)
    cfg = RunConfig("generate", out=str(out), seed=args.seed, density=args.density,
                    extra={"holders": args.holders, "issuers": args.issuers,
                           "holder_fitness": args.holder_fitness,
                           "issuer_fitness": args.issuer_fitness, "noise": args.noise})
    try:
        hs = FitnessSpec.parse(args.holder_fitness, args.holders, args.seed)
        is_ = FitnessSpec.parse(args.issuer_fitness, args.issuers, args.seed + 1)
    except ValueError as e:
        raise CliError("usage", f"bad fitness spec: {e}") from None
    gt = generate_ground_truth(generate_fitness(hs), generate_fitness(is_),
                               args.density, args.seed, noise=args.noise)
    write_edge_list(gt.network, out / "truth.csv")
    write_marginals(gt.strengths, gt.realized_links, out / "marginals.csv")
    report = _header(cfg)
    report.update({
        "z": gt.z,
        "target_links": gt.target_links,
        "realized_links": gt.realized_links,
        "realized_density": density(gt.network),
        "outputs": {name: file_digest(out / name) for name in ("truth.csv", "marginals.csv")},
    })
    write_json(report, out / "generate.json")
    return 0


def cmd_calibrate(args) -> int:
    cfg = RunConfig("calibrate", inputs={"marginals": _require(args.marginals)},
                    out=args.out, tolerance=args.tolerance)
    s, L = read_marginals(args.marginals)
    res = solve_z(s.V, s.C, L, args.tolerance)
    report = _header(cfg)
    report.update({
        "n_holders": s.n_holders,
        "n_issuers": s.n_issuers,
        "W": s.W,
        "target_links": L,
        "tolerance": default_tolerance(L) if args.tolerance is None else args.tolerance,
        "z": res.z,
        "residual": res.residual,
        "iterations": res.iterations,
        "method": res.method_tag,
        "sparse_z": sparse_z(s.V, s.C, L) if s.W > 0 else None,
    })
    dump_json(report, sys.stdout)
    if args.out is not None or os.environ.get(OUTPUT_ENV):
        write_json(report, _out_dir(args.out) / "calibrate.json")
    return 0


def _fmt(x) -> Optional[float]:
    if x is np.ma.masked:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def cmd_reconstruct(args) -> int:
    out = _out_dir(args.out)
    kind = ModelKind(args.model)
    cfg = RunConfig("reconstruct", inputs={"marginals": _require(args.marginals)}, out=str(out),
                    models=[kind.value], tolerance=args.tolerance, extra={"pairs": args.pairs})
    s, L = read_marginals(args.marginals)
    model, calib = _calibrated(kind, s, L, args.tolerance)
    N, M = model.shape
    hl = s.holder_labels
    il = s.issuer_labels

    ann = expected_ann(model)
    write_tsv(out / f"holders_{kind.value}.tsv",
              ["label", "V", "expected_k", "expected_d_nn", "expected_C_nn"],
              ((hl[i], float(s.V[i]), float(ann.degree.holder_value[i]),
                _fmt(ann.degree.holder_nn[i]), _fmt(ann.strength.holder_nn[i])) for i in range(N)))
    write_tsv(out / f"issuers_{kind.value}.tsv",
              ["label", "C", "expected_d", "expected_k_nn", "expected_V_nn"],
              ((il[a], float(s.C[a]), float(ann.degree.issuer_value[a]),
                _fmt(ann.degree.issuer_nn[a]), _fmt(ann.strength.issuer_nn[a])) for a in range(M)))

    # one pass over rows for the probability summary (and the pair stream)
    n_pairs = 0
    p_sum = p_sq = 0.0
    p_min, p_max = math.inf, -math.inf
    below_one = 0
    defined = 0
    pair_fh = open(out / f"pairs_{kind.value}.tsv", "w", encoding="utf-8", newline="\n") if args.pairs else None
    try:
        if pair_fh:
            pair_fh.write("holder\tissuer\tp\tmean\tvariance\tconditional_weight\tsigma_ratio\n")
        for i in range(N):
            p = model.probability_row(i)
            n_pairs += p.size
            p_sum += float(p.sum())
            p_sq += float((p * p).sum())
            p_min = min(p_min, float(p.min(initial=math.inf)))
            p_max = max(p_max, float(p.max(initial=-math.inf)))
            if isinstance(model, EcapmModel):
                m = model.mean_row(i)
                ok = (m > 0) & (p < 1)
                r = np.zeros_like(p)
                r[ok] = np.sqrt(m[ok] / (1 + m[ok])) * np.sqrt(1 / p[ok] - 1)
                defined += int(ok.sum())
                below_one += int((r[ok] < 1).sum())
            if pair_fh:
                m = model.mean_row(i)
                var = model.variance_row(i)
                cw = model.conditional_weight_row(i) if isinstance(model, EcapmModel) else None
                for a in range(M):
                    sr = ""
                    cws = ""
                    if cw is not None:
                        cws = repr(float(cw[a]))
                        if m[a] > 0 and p[a] < 1:
                            sr = repr(float(math.sqrt(m[a] / (1 + m[a])) * math.sqrt(1 / p[a] - 1)))
                    pair_fh.write(f"{hl[i]}\t{il[a]}\t{float(p[a])!r}\t{float(m[a])!r}\t"
                                  f"{float(var[a])!r}\t{cws}\t{sr}\n")
    finally:
        if pair_fh:
            pair_fh.close()
    mean_p = p_sum / n_pairs if n_pairs else None
    report = _header(cfg)
    report.update({
        "model": kind.value,
        "calibration": calib,
        "target_links": L,
        "expected_links": p_sum,
        "probability": {
            "mean": mean_p,
            "std": math.sqrt(max(p_sq / n_pairs - mean_p**2, 0.0)) if n_pairs else None,
            "min": p_min if n_pairs else None,
            "max": p_max if n_pairs else None,
        },
        "weight_sigma_ratio_below_one": (below_one / defined) if defined else None,
    })
    write_json(report, out / f"reconstruct_{kind.value}.json")
    return 0


def cmd_sample(args) -> int:
    out = _out_dir(args.out)
    kind = ModelKind(args.model)
    cfg = RunConfig("sample", inputs={"marginals": _require(args.marginals)}, out=str(out),
                    seed=args.seed, draws=args.draws, models=[kind.value], tolerance=args.tolerance)
    if args.draws < 1:
        raise CliError("usage", "--draws must be at least 1")
    s, L = read_marginals(args.marginals)
    model, calib = _calibrated(kind, s, L, args.tolerance)
    width = max(4, len(str(args.draws - 1)))
    files = {}
    for d in range(args.draws):
        name = f"sample_{kind.value}_{d:0{width}d}.csv"
        write_edge_list(sample(model, args.seed, d), out / name)
        files[name] = file_digest(out / name)
    report = _header(cfg)
    report.update({"model": kind.value, "calibration": calib, "outputs": files})
    write_json(report, out / f"sample_{kind.value}.json")
    return 0


def _ann_json(rep) -> dict:
    return {"holder_value": rep.holder_value, "holder_nn": rep.holder_nn,
            "issuer_value": rep.issuer_value, "issuer_nn": rep.issuer_nn}


def cmd_evaluate(args) -> int:
    out = _out_dir(args.out)
    inputs = {"truth": _require(args.truth)}
    if args.marginals:
        inputs["marginals"] = _require(args.marginals)
    if args.candidate:
        inputs["candidates"] = [_require(c) for c in args.candidate]
    kinds = [ModelKind(m) for m in (args.model or ["ecapm", "mecapm"])]
    cfg = RunConfig("evaluate", inputs=inputs, out=str(out), models=[k.value for k in kinds],
                    tolerance=args.tolerance, extra={"variance_method": args.variance_method})

    if args.marginals:
        s, L = read_marginals(args.marginals)
        truth = read_edge_list(args.truth, s.holder_labels, s.issuer_labels)
    else:
        truth = read_edge_list(args.truth)
        s, L = strengths(truth), truth.n_links
    deg = degrees(truth)
    ann_d, ann_s = ann_degrees(truth), ann_strengths(truth)

    report = _header(cfg)
    report["truth"] = {
        "n_holders": truth.n_holders,
        "n_issuers": truth.n_issuers,
        "links": truth.n_links,
        "density": density(truth),
        "holder_labels": list(truth.holder_labels),
        "issuer_labels": list(truth.issuer_labels),
        "k": deg.k, "d": deg.d,
        "ann_degree": _ann_json(ann_d),
        "ann_strength": _ann_json(ann_s),
    }
    models = []
    report["models"] = {}
    for kind in kinds:
        model, calib = _calibrated(kind, s, L, args.tolerance)
        models.append(model)
        counts = expected_confusion(truth, model)
        entry = {
            "calibration": calib,
            "expected_confusion": counts.as_dict(),
            "expected_scores": classifier_scores(counts).as_dict(),
        }
        ea = expected_ann(model)
        entry["expected_ann_degree"] = _ann_json(ea.degree)
        entry["expected_ann_strength"] = _ann_json(ea.strength)
        if kind is ModelKind.MECAPM:
            dl = mecapm_dense_limit_confusion(truth)
            entry["dense_limit"] = {
                "confusion": dl.as_dict(),
                "scores": classifier_scores(dl).as_dict(),
                "ann": ea.dense_limit,
            }
        report["models"][kind.value] = entry

    sysrep = systemicness_report(truth, models, method=args.variance_method)
    report["systemicness"] = {
        "method": sysrep.method,
        "holder_strength": sysrep.holder_strength,
        "observed_overlap": sysrep.observed_overlap,
        "expected_ratio": sysrep.expected_ratio,
        "sigma": sysrep.sigma,
        "sigma_ratio": sysrep.sigma_ratio,
    }

    report["candidates"] = {}
    for path in args.candidate or []:
        cand = read_edge_list(path, truth.holder_labels, truth.issuer_labels)
        counts = confusion(truth, cand)
        report["candidates"][Path(path).name] = {
            "confusion": counts.as_dict(),
            "scores": classifier_scores(counts).as_dict(),
            "relative_systemicness": relative_systemicness(truth, cand),
            "ann_degree": _ann_json(ann_degrees(cand)),
            "ann_strength": _ann_json(ann_strengths(cand)),
        }
    write_json(report, out / "evaluate.json")
    return 0


def cmd_report(args) -> int:
    out = _out_dir(args.out)
    with open(_require(args.evaluation), encoding="utf-8") as fh:
        ev = json.load(fh)
    try:
        truth = ev["truth"]
        hl, il = truth["holder_labels"], truth["issuer_labels"]
        models = ev["models"]
    except (KeyError, TypeError):
        raise CliError("bad_input", f"{args.evaluation} is not an evaluate report") from None
    kinds = sorted(models)
    cands = sorted(ev.get("candidates", {}))

    def ann_table(name, layer, labels, quantity):
        key = f"ann_{quantity}"
        side_v, side_nn = f"{layer}_value", f"{layer}_nn"
        header = ["label", "observed_x", "observed_nn"]
        cols = [truth[key][side_v], truth[key][side_nn]]
        for k in kinds:
            header += [f"{k}_x", f"{k}_nn"]
            cols += [models[k][f"expected_{key}"][side_v], models[k][f"expected_{key}"][side_nn]]
        for c in cands:
            header += [f"{c}_x", f"{c}_nn"]
            cols += [ev["candidates"][c][key][side_v], ev["candidates"][c][key][side_nn]]
        write_tsv(out / name, header, ([lab] + [col[n] for col in cols] for n, lab in enumerate(labels)))

    ann_table("ann_degree_holders.tsv", "holder", hl, "degree")
    ann_table("ann_degree_issuers.tsv", "issuer", il, "degree")
    ann_table("ann_strength_holders.tsv", "holder", hl, "strength")
    ann_table("ann_strength_issuers.tsv", "issuer", il, "strength")

    score_keys = ["tpr", "spc", "fpr", "ppv", "acc"]
    count_keys = ["tp", "tn", "fp", "fn"]
    rows = []
    for k in kinds:
        rows.append([k, "expected"] + [models[k]["expected_scores"][s] for s in score_keys]
                    + [models[k]["expected_confusion"][c] for c in count_keys])
        if "dense_limit" in models[k]:
            dl = models[k]["dense_limit"]
            rows.append([k, "dense_limit"] + [dl["scores"][s] for s in score_keys]
                        + [dl["confusion"][c] for c in count_keys])
    for c in cands:
        cd = ev["candidates"][c]
        rows.append([c, "observed"] + [cd["scores"][s] for s in score_keys]
                    + [cd["confusion"][x] for x in count_keys])
    write_tsv(out / "scores.tsv", ["source", "kind"] + score_keys + count_keys, rows)

    sysj = ev["systemicness"]
    header = ["label", "V", "observed_overlap"]
    cols = [sysj["holder_strength"], sysj["observed_overlap"]]
    for k in kinds:
        header += [f"expected_ratio_{k}", f"sigma_{k}"]
        cols += [sysj["expected_ratio"][k], sysj["sigma"][k]]
    header.append("sigma_ratio")
    cols.append(sysj["sigma_ratio"])
    for c in cands:
        header.append(f"relative_{c}")
        cols.append(ev["candidates"][c]["relative_systemicness"])
    write_tsv(out / "systemicness.tsv", header,
              ([lab] + [col[n] for col in cols] for n, lab in enumerate(hl)))
    return 0


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=TOOL, description="Bipartite network reconstruction (CAPM, MECAPM, ECAPM).")
    p.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    models = [k.value for k in ModelKind]

    g = sub.add_parser("generate", help="synthetic ground truth")
    g.add_argument("--holders", type=int, required=True)
    g.add_argument("--issuers", type=int, required=True)
    g.add_argument("--density", type=float, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--holder-fitness", default="pareto:2.5:1e4", help="kind:a:b")
    g.add_argument("--issuer-fitness", default="pareto:2.5:1e4", help="kind:a:b")
    g.add_argument("--noise", type=float, default=None, help="log-normal weight noise scale")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("calibrate", help="solve for z")
    c.add_argument("marginals")
    c.add_argument("--tolerance", type=float)
    c.add_argument("--out")
    c.set_defaults(func=cmd_calibrate)

    r = sub.add_parser("reconstruct", help="per-node expectations and probability summary")
    r.add_argument("marginals")
    r.add_argument("--model", choices=models, default="ecapm")
    r.add_argument("--tolerance", type=float)
    r.add_argument("--pairs", action="store_true", help="stream every pair to pairs_<model>.tsv")
    r.add_argument("--out")
    r.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("sample", help="draw networks from the ensemble")
    s.add_argument("marginals")
    s.add_argument("--model", choices=models, default="ecapm")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--draws", type=int, default=1)
    s.add_argument("--tolerance", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("evaluate", help="indicators of models and candidates against a truth")
    e.add_argument("--truth", required=True)
    e.add_argument("--marginals")
    e.add_argument("--candidate", action="append")
    e.add_argument("--model", action="append", choices=models)
    e.add_argument("--variance-method", choices=["exact", "decoupled"], default="exact")
    e.add_argument("--tolerance", type=float)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    t = sub.add_parser("report", help="TSV tables from evaluate.json")
    t.add_argument("evaluation")
    t.add_argument("--out")
    t.set_defaults(func=cmd_report)
    return p


def _fail(kind: str, message: str, exc: Optional[BaseException] = None) -> int:
    err = {"code": EXIT_CODES[kind], "kind": kind, "message": message}
    if exc is not None:
        err["type"] = type(exc).__name__
        line = getattr(exc, "line", None)
        if line is not None:
            err["line"] = line
    sys.stderr.write(json.dumps({"error": err}, sort_keys=True) + "\n")
    return EXIT_CODES[kind]


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as e:
        return _fail(e.kind, str(e), e)
    except FileNotFoundError as e:
        return _fail("missing_file", str(e), e)
    except InfeasibleTargetError as e:
        return _fail("infeasible", str(e), e)
    except CalibrationError as e:
        return _fail("infeasible", str(e), e)
    except (FormatError, NetworkError) as e:
        return _fail("bad_input", str(e), e)
    except ValueError as e:
        return _fail("bad_input", str(e), e)
    except Exception as e:  # noqa: BLE001 - reported as a structured error
        return _fail("internal", f"{type(e).__name__}: {e}", e)


if __name__ == "__main__":
    sys.exit(main())
