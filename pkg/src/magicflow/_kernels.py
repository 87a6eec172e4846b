"""Compiled kernels for Pauli-spectrum updates."""
import numba
import numpy as np
from numba import types
from numba.extending import intrinsic


@intrinsic
def _popcount(typingctx, v):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.ctpop(args[0])

    return sig, codegen


@numba.njit(cache=True)
def pauli_rotate(c, n, px, pz, sign, cos2, sin2):
    """Conjugate the state by ``cos + i sin P`` in place on its Pauli spectrum.

    ``c[x << n | z] = tr(sigma(x, z) rho)`` with Hermitian ``sigma``. Strings
    commuting with ``P`` are untouched; each anticommuting pair ``(Q, QP)``
    mixes with angle ``2 theta``. Returns the change of ``sum c^4``.
    """
    one = np.uint64(1)
    mask = np.uint64((1 << n) - 1)
    px = np.uint64(px)
    pz = np.uint64(pz)
    flip = (px << np.uint64(n)) | pz
    # visit each pair once through the member with the top bit of flip unset
    h = np.uint64(0)
    while (flip >> (h + one)) != 0:
        h += one
    low = (one << h) - one
    ppc = _popcount(px & pz)
    delta = 0.0
    for j in range(c.size // 2):
        u = np.uint64(j)
        q = ((u >> h) << (h + one)) | (u & low)
        partner = q ^ flip
        a = c[q]
        b = c[partner]
        if a == 0.0 and b == 0.0:
            continue
        x = q >> np.uint64(n)
        z = q & mask
        anti = float((_popcount(x & pz) + _popcount(z & px)) & one)
        # sigma_Q sigma_P = i^e sigma_QP; the mixing sign is i^(e+1), and
        # flips for the partner since sigma_QP sigma_P = i^-e sigma_Q
        e = _popcount(x & z) + ppc + (_popcount(z & px) << one) - _popcount((x ^ px) & (z ^ pz))
        s = sign * sin2 * (1.0 - float((e + one) & np.uint64(2)))
        na = a + anti * ((cos2 - 1.0) * a + s * b)
        nb = b + anti * ((cos2 - 1.0) * b - s * a)
        c[q] = na
        c[partner] = nb
        delta += na**4 + nb**4 - a**4 - b**4
    return delta


@numba.njit(cache=True)
def pauli_fourth_moment(c):
    total = 0.0
    for v in c:
        v2 = v * v
        total += v2 * v2
    return total
