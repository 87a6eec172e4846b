"""Magic injected by sparse T gates into a random Clifford circuit.

One T gate per layer on an N=8 qubit chain. Y_2 first grows by roughly
log(4/3) per T gate, then saturates. Past the crossover each further T
gate shrinks the remaining gap by a factor of about 3/4.

    python3 demos/doped_clifford.py
"""
import numpy as np

from magicflow import DopedCliffordSpec, doped_reference_curve, haar_Y, run_doped_clifford

N, depth = 8, 40
stats = run_doped_clifford(DopedCliffordSpec(N=N, t=depth, seed=3, M=200))
delta = haar_Y(2, N) - stats.annealed
ref = doped_reference_curve(stats.t, N)

print(" t      Y_2     deltaY    reference")
for t in range(0, depth + 1, 4):
    print(f"{t:2d}  {stats.annealed[t]:7.4f}  {delta[t]:8.2e}  {ref[t]:8.2e}")

tail = (stats.t >= 24) & (delta > 5 * stats.annealed_err)
slope = np.polyfit(stats.t[tail], np.log(delta[tail]), 1)[0]
print(f"\ntail slope of log deltaY = {slope:.3f}   (log 3/4 = {np.log(0.75):.3f})")
