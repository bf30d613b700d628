"""Purity loss 1-|R(tau)| after one period for the trajectory figures.

Reports the low-frequency Gaussian number under both parameter readings of
the weaker-environment figure (alpha = 0.03 and alpha = 0.003), the 1/f
numbers at both cutoffs and temperatures, and a gamma scan for the 1/f
model whose coupling is not fixed by the figure.

    python scripts/purity_losses.py
"""
import numpy as np

from qubitgp import DeltaNoise, GaussianNoise, OneOverFNoise, QubitParams, evolve
from qubitgp.sweep import sweep_config

P = QubitParams(0.5)


def loss(noise) -> float:
    traj = evolve(P, noise, cfg=sweep_config(P))
    return 1.0 - float(np.linalg.norm(traj.final_bloch))


def main():
    rows = [
        ("gaussian gamma=0.03 alpha=0.03", GaussianNoise(0.03, 0.03, 0.03, 0.03)),
        ("gaussian gamma=0.03 alpha=0.003", GaussianNoise(0.03, 0.03, 0.003, 0.003)),
        ("gaussian gamma=0.03 alpha=1", GaussianNoise(0.03, 0.03, 1.0, 1.0)),
        ("gaussian gamma=0.03 alpha=30", GaussianNoise(0.03, 0.03, 30.0, 30.0)),
        ("delta gamma=0.03 kBT=1", DeltaNoise(0.03, 0.03)),
        ("1/f zero_t gamma=7 lam=0.001", OneOverFNoise(7.0, 0.001)),
        ("1/f zero_t gamma=7 lam=0.1", OneOverFNoise(7.0, 0.1)),
        ("1/f high_t gamma=7 lam=0.001 kBT=1", OneOverFNoise(7.0, 0.001, "high_t", 1.0)),
        ("1/f high_t gamma=7 lam=0.1 kBT=1", OneOverFNoise(7.0, 0.1, "high_t", 1.0)),
    ]
    print(f"{'model':40s} 1-|R(tau)|")
    for label, n in rows:
        print(f"{label:40s} {loss(n):.5f}")

    print("\nsmaller couplings, both alpha readings")
    for g in (0.003, 0.01, 0.015):
        for a in (0.03, 0.003):
            print(f"gaussian gamma={g:<6g} alpha={a:<6g}          {loss(GaussianNoise(g, g, a, a)):.5f}")

    print("\n1/f zero_t gamma scan")
    for g in (0.03, 0.3, 1.0, 3.0, 7.0, 10.0):
        print(f"gamma={g:<5g} lam=0.001 {loss(OneOverFNoise(g, 0.001)):.5f}   "
              f"lam=0.1 {loss(OneOverFNoise(g, 0.1)):.5f}")


if __name__ == "__main__":
    main()
