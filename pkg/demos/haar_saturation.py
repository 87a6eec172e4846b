"""Deep random circuits saturate the CSS entropy at its Haar value.

Run a brick wall of Haar two-qudit gates long enough to scramble a small
chain, then compare the circuit-averaged Upsilon with the closed form
obtained by summing over the symmetric group.

    python3 demos/haar_saturation.py
"""
from fractions import Fraction

import numpy as np

from magicflow import haar_css_entropy
from magicflow.exact import brickwall_upsilon, realization_seeds

depth, M = 30, 500
for d, N in [(2, 3), (2, 4), (3, 2), (3, 3)]:
    ups = np.array([brickwall_upsilon(d, N, [depth], s)[0] for s in realization_seeds(7, M)])
    mean, err = ups.mean(), ups.std(ddof=1) / np.sqrt(M)
    haar = haar_css_entropy(N=N, d=d).upsilon
    closed = Fraction(4, 2**N + 3) if d == 2 else Fraction(3, 3**N + 2)
    print(
        f"d={d} N={N}  circuit <Upsilon> = {mean:.5f} +- {err:.5f}   "
        f"Haar sum = {haar:.5f}   closed form {closed} = {float(closed):.5f}"
    )
