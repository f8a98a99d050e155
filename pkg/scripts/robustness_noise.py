"""Reconstruction quality on mis-specified ground truths.

Multiplies every ground-truth weight by log-normal noise of increasing
scale and reports expected accuracy and the spread of the relative
systemicness of a single ECAPM draw.

    python scripts/robustness_noise.py --noise 0 0.5 1 2
"""
import argparse

import numpy as np

from ecapm.calibration import solve_z
from ecapm.indicators import classifier_scores, expected_confusion, relative_systemicness
from ecapm.models import EcapmModel, MecapmModel, sample
from ecapm.synthetic import FitnessSpec, generate_fitness, generate_ground_truth


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--holders", type=int, default=100)
    ap.add_argument("--issuers", type=int, default=400)
    ap.add_argument("--density", type=float, default=0.1)
    ap.add_argument("--fitness", default="pareto:2.5:1e4")
    ap.add_argument("--noise", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    V = generate_fitness(FitnessSpec.parse(args.fitness, args.holders, args.seed))
    C = generate_fitness(FitnessSpec.parse(args.fitness, args.issuers, args.seed + 1))
    print(f"{'noise':>6}{'ACC ecapm':>11}{'ACC mecapm':>12}{'median S~/S':>13}{'IQR':>8}")
    for sigma in args.noise:
        gt = generate_ground_truth(V, C, args.density, args.seed, noise=sigma or None)
        s, L = gt.strengths, gt.realized_links
        e = EcapmModel(s, solve_z(s.V, s.C, L).z)
        acc_e = classifier_scores(expected_confusion(gt.network, e)).acc
        acc_m = classifier_scores(expected_confusion(gt.network, MecapmModel(s))).acc
        rel = relative_systemicness(gt.network, sample(e, args.seed + 7)).compressed()
        q1, med, q3 = np.percentile(rel, [25, 50, 75])
        print(f"{sigma:6.2f}{acc_e:11.3f}{acc_m:12.3f}{med:13.3f}{q3 - q1:8.3f}")


if __name__ == "__main__":
    main()
