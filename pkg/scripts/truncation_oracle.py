"""Compare the analytic truncation error with a Monte Carlo estimate."""
import argparse

import numpy as np

from ddkbasis.fcore import Grid
from ddkbasis.fpca import truncation_error
from ddkbasis.simulate import EXAMPLE_A, EXAMPLE_LAMBDA, example_kl_model, sample_kl
from ddkbasis.bases import project


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=1)
    a = p.parse_args()
    model = example_kl_model()
    coefs = project(sample_kl(model, a.n, Grid.midpoints(1000), a.seed), model.basis)
    for kept in (range(2, 9), range(0, 7)):
        dropped = [i for i in range(EXAMPLE_A.shape[1]) if i not in kept]
        mc = np.mean(np.sum(coefs[:, dropped] ** 2, axis=1))
        exact = truncation_error(EXAMPLE_A, EXAMPLE_LAMBDA, kept)
        print(f"kept {kept.start + 1}..{kept.stop}: formula {exact:.5f}  monte carlo {mc:.5f}")


if __name__ == "__main__":
    main()
