# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Two-qubit depolarising decay
#
# A random pure 2-qubit density matrix is hit repeatedly by a two-qubit
# depolarising channel. The expectation of the traceless `Z0 Z1 + 0.5 X0`
# shrinks by the same factor each step, and the state approaches I/4.

# %%
import numpy as np

from qlink import Environment, hamiltonian_matrix
from qlink.demos import depolarising_decay
from qlink.observables import transverse_pair

P, STEPS = 0.1, 100

# %%
rows = depolarising_decay(P, STEPS, seed=0)
values = np.array([v for _, v in rows])
for step, value in rows[:5] + rows[-3:]:
    print(f"{step:4d}  {value:+.3e}")

# %% [markdown]
# Traceless observables decay by `1 - 16p/15` per application.

# %%
ratios = values[1:] / values[:-1]
print("per-step ratio", ratios.mean(), "expected", 1 - 16 * P / 15)

# %% [markdown]
# Distance from the maximally mixed state after the last step.

# %%
env = Environment(0)
rho = env.create_density_qureg(2)
env.init_random_pure(rho, 0)
for _ in range(STEPS):
    env.mix_two_qubit_depolarising(rho, 0, 1, P)
final = env.get_qureg_matrix(rho)
print("trace distance to I/4:", 0.5 * np.abs(np.linalg.eigvalsh(final - np.eye(4) / 4)).sum())
print("<h> at I/4:", np.trace(hamiltonian_matrix(transverse_pair(), 2)).real / 4)
