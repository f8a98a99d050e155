"""End-to-end run at holder/issuer counts of a large securities-holdings panel.

Generates a ground truth, reconstructs it with ECAPM and MECAPM from its
realized marginals, and prints scores and timings.

    python scripts/reference_scale_run.py --holders 266 --issuers 3146 --density 0.24
"""
import argparse
import time

import numpy as np

from ecapm.calibration import solve_z
from ecapm.indicators import classifier_scores, expected_confusion, mecapm_dense_limit_confusion
from ecapm.models import EcapmModel, MecapmModel
from ecapm.synthetic import FitnessSpec, generate_fitness, generate_ground_truth


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--holders", type=int, default=266)
    ap.add_argument("--issuers", type=int, default=3146)
    ap.add_argument("--density", type=float, default=0.24)
    ap.add_argument("--fitness", default="pareto:2.5:1e4")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t0 = time.perf_counter()
    V = generate_fitness(FitnessSpec.parse(args.fitness, args.holders, args.seed))
    C = generate_fitness(FitnessSpec.parse(args.fitness, args.issuers, args.seed + 1))
    gt = generate_ground_truth(V, C, args.density, args.seed)
    t1 = time.perf_counter()
    s, L = gt.strengths, gt.realized_links
    cal = solve_z(s.V, s.C, L)
    t2 = time.perf_counter()
    models = {"ecapm": EcapmModel(s, cal.z), "mecapm": MecapmModel(s)}

    print(f"truth: N={args.holders} M={args.issuers} L={L} density={L / (args.holders * args.issuers):.4f}")
    print(f"generation {t1 - t0:.2f} s, calibration {t2 - t1:.3f} s "
          f"(z={cal.z:.6g}, residual={cal.residual:.2e}, {cal.iterations} evaluations)")
    print(f"{'model':<18}{'TPR':>8}{'SPC':>8}{'PPV':>8}{'ACC':>8}")
    rows = {k: classifier_scores(expected_confusion(gt.network, m)) for k, m in models.items()}
    rows["mecapm dense lim."] = classifier_scores(mecapm_dense_limit_confusion(gt.network))
    for name, sc in rows.items():
        vals = [np.nan if v is None else v for v in (sc.tpr, sc.spc, sc.ppv, sc.acc)]
        print(f"{name:<18}" + "".join(f"{v:8.3f}" for v in vals))
    print(f"total {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
