"""Which CSS codes on k replicas give a magic measure?

A defect subspace of Z_d^k is isotropic under the mod-D dot product and
orthogonal to the all-ones vector. Each one defines a CSS projector on the
replica space, whose rank is d^(k - 2 dim A).

    python3 demos/defect_census.py
"""
from magicflow import css_projector, find_defect_subspaces

for d, k in [(2, 4), (2, 5), (2, 6), (3, 3), (7, 3)]:
    subs = find_defect_subspaces(d, k)
    dims = sorted({s.dim for s in subs})
    print(f"d={d} k={k}: {len(subs)} subspaces, dimensions {dims}")
    for s in subs[:3]:
        Q = css_projector(s)
        print(f"    {s}  rank Q_A = {round(Q.matrix.trace().real)}")
