"""Compare every Kupiec variant with the published exceedance p-values.

Counts 19, 23, 18, 11, 9 out of 259 days at 95% confidence. Also prints each
variant's exact size at the 5% level under Binomial(259, 0.05).
"""

from __future__ import annotations

from scipy import stats

from specmargin.backtest import DEFAULT_KUPIEC_VARIANT, KUPIEC_VARIANTS, kupiec_test

COUNTS = (19, 23, 18, 11, 9)
PUBLISHED = (0.0373, 0.0030, 0.0629, 0.3531, 0.1624)
N, ALPHA = 259, 0.95


def main() -> None:
    dist = stats.binom(N, 1 - ALPHA)
    print(f"{'variant':>18} " + " ".join(f"x={x:<5}" for x in COUNTS) + "  max err   size")
    print(f"{'published':>18} " + " ".join(f"{p:<7.4f}" for p in PUBLISHED))
    for v in KUPIEC_VARIANTS:
        ps = [kupiec_test(x, N, ALPHA, v) for x in COUNTS]
        err = max(abs(a - b) for a, b in zip(ps, PUBLISHED))
        size = sum(dist.pmf(x) for x in range(N + 1) if kupiec_test(x, N, ALPHA, v) < 0.05)
        tag = "  <- default" if v == DEFAULT_KUPIEC_VARIANT else ""
        print(f"{v:>18} " + " ".join(f"{p:<7.4f}" for p in ps) + f"  {err:.4f}   {size:.4f}{tag}")


if __name__ == "__main__":
    main()
