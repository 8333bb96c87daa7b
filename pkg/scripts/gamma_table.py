"""Table of the recursion constants (n, a_n, b_n, gamma) for a range of alpha."""
import argparse

import numpy as np

from nashkernel import gamma_certificate


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--count", type=int, default=19)
    args = p.parse_args(argv)
    print(f"{'alpha':>7} {'n':>3} {'alpha_n':>9} {'a_n':>10} {'b_n':>10} {'gamma':>10}")
    for a in np.linspace(0.05, 0.95, args.count):
        a = round(float(a), 12)
        c = gamma_certificate(a, args.epsilon)
        print(f"{a:7.3f} {c.n_steps:3d} {c.alpha_n:9.5f} {c.a_n:10.6f} {c.b_n:10.6f} {c.gamma:10.6f}")


if __name__ == "__main__":
    main()
