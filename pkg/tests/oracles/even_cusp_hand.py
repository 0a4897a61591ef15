"""Even-dimensional one-cusp torsion, summed by hand.

For m even and link Betti numbers b_q, the value is
    (m/2) * sum over q with 2q < m-1 of (-1)^q b_q log(m-1-2q).
Each case below lists the surviving terms written out explicitly;
nothing here calls the package.  Run directly to print the table.
"""
from math import log

CASES = {
    # m = 2, Z = circle, b = [1, 1]: only q = 0, log(1) = 0
    (2, (1, 1)): 1.0 * (1 * log(1)),
    # m = 4, b0 = 1: q = 0 gives log 3, q = 1 has b1 = 0
    (4, (1,)): 2.0 * (1 * log(3)),
    # m = 4, Z = T^3: b = [1, 3, 3, 1]; q = 0 -> log 3, q = 1 -> -3 log 1
    (4, (1, 3, 3, 1)): 2.0 * (log(3) - 3 * log(1)),
    # m = 6, b = [1, 2, 0, 0, 2, 1]: q = 0 -> log 5, q = 1 -> -2 log 3, q = 2 -> 0
    (6, (1, 2, 0, 0, 2, 1)): 3.0 * (log(5) - 2 * log(3)),
    # m = 6, Z = S^5: q = 0 only
    (6, (1, 0, 0, 0, 0, 1)): 3.0 * log(5),
    # m = 8, b = [2, 1, 1, 0, 0, 1, 1, 2]: 2 log 7 - log 5 + log 3
    (8, (2, 1, 1, 0, 0, 1, 1, 2)): 4.0 * (2 * log(7) - log(5) + log(3)),
}

if __name__ == "__main__":
    for (m, b), value in CASES.items():
        print(m, list(b), repr(value))
