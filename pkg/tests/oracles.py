"""Brute-force reference computations that share no code with the package."""

from fractions import Fraction
from itertools import product
from math import comb


def tuple_weight(weights, t):
    w = Fraction(1)
    for i in t:
        w *= weights[i]
    return w


def enumerate_prob(weights, tuples):
    return sum((tuple_weight(weights, t) for t in tuples), Fraction(0))


def freq_tuples(size, base_tuples, n, k, inside):
    """All k-sequences of level-n tuples whose count of base hits satisfies ``inside(j, k)``."""
    base = set(base_tuples)
    out = []
    for flat in product(range(size), repeat=n * k):
        j = sum(flat[i * n:(i + 1) * n] in base for i in range(k))
        if inside(j, k):
            out.append(flat)
    return out


def binomial_sum(p, k, inside):
    p = Fraction(p)
    return sum((comb(k, j) * p**j * (1 - p) ** (k - j) for j in range(k + 1) if inside(j, k)),
               Fraction(0))
