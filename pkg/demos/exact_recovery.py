"""Column-subset recovery on a noise-free matrix with duplicated columns.

Builds a 30 x 40 matrix whose columns all lie in the span of five of
them, with every column appearing twice, then runs the Gibbs sampler at
a generous rank and at exactly the true rank. The generous run drives
the reconstruction error to numerical zero. The true-rank run usually
does not, and the printout explains the mechanism: a swap proposal is
scored with the interpolation weights as they currently stand, and a
freshly activated column enters with prior-drawn weights that fit
poorly, so once the noise estimate has tightened almost every swap is
rejected and the column search freezes where it started.
"""

import argparse

import numpy as np

from bayesid.model import Hyperparameters, ObservedMatrix
from bayesid.sampler import run_gibbs, run_gibbs_aggressive


def build_instance(rng, m=30, n_pre=20, rank=5):
    basis = rng.normal(size=(m, rank))
    weights = rng.uniform(-1.0, 1.0, size=(rank, n_pre - rank))
    full = np.concatenate([basis, basis @ weights], axis=1)
    return np.concatenate([full, full], axis=1)


def run_once(data, k, seed, aggressive):
    hp = Hyperparameters(k=k, iterations=200, burn_in=50, thinning=5, aggressive=aggressive)
    runner = run_gibbs_aggressive if aggressive else run_gibbs
    state, trace = runner(data, hp, np.random.default_rng(seed))
    label = "aggressive" if aggressive else "plain"
    print(
        f"  k={k:2d} {label:10s} best mse {trace.mse_per_iter.min():10.3e}   "
        f"final mse {trace.mse_per_iter[-1]:10.3e}   accepted swaps {trace.accepted_swaps}"
    )
    return trace


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(1000 + args.seed)
    a = build_instance(rng)
    data = ObservedMatrix.fully_observed(a)
    print(f"instance: {a.shape[0]} x {a.shape[1]}, true rank 5, every column duplicated\n")

    print("generous rank (k = 10, twice the true rank):")
    run_once(data, 10, args.seed, aggressive=False)
    run_once(data, 10, args.seed, aggressive=True)

    print("\nexactly the true rank (k = 5):")
    t_plain = run_once(data, 5, args.seed, aggressive=False)
    t_aggr = run_once(data, 5, args.seed, aggressive=True)

    print(
        "\nWith slack in the rank the sampler only has to find columns that span\n"
        "the data, and it does. At exactly the true rank it must find one twin\n"
        "of each basis column, and the swap move struggles: a proposal is\n"
        "scored with the interpolation weights as they currently stand, and an\n"
        "inactive column carries prior draws for weights. Activating it bumps\n"
        "the squared error by an amount that dwarfs the fitted noise level\n"
        f"(sigma2 finished at {t_plain.sigma2_chain[-1]:.1e} in the plain run), so the log odds\n"
        "land hundreds below zero and the active set freezes where it began.\n"
        "The aggressive variant re-proposes a whole candidate set each\n"
        "iteration but gives it a single weight sweep before the comparison;\n"
        f"on this seed it adopted {t_aggr.accepted_swaps} candidate sets and reached\n"
        f"{t_aggr.mse_per_iter.min():.1e}, better than the plain run's {t_plain.mse_per_iter.min():.1e} but still\n"
        "short of the numerical zero the generous-rank runs deliver."
    )


if __name__ == "__main__":
    main()
