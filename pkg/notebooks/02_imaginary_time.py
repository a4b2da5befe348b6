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
# # Variational imaginary time
#
# A two-layer ansatz on two qubits is driven towards the ground state of
# `Z0 Z1 + 0.5 X0` by solving `A dθ = C dt` each iteration.

# %%
import numpy as np

from qlink import hamiltonian_matrix, parse_pauli_sum
from qlink.variational import ImagTimeConfig, layered_ansatz, run_imag_time

h = parse_pauli_sum("1.0 * Z 0 Z 1 + 0.5 * X 0")
ansatz = layered_ansatz(2, 2)
print("parameters:", ansatz.param_count)

# %%
result = run_imag_time(ansatz, h, config=ImagTimeConfig(dt=0.1, iterations=200, regularization=1e-6, seed=0))
ground = np.linalg.eigvalsh(hamiltonian_matrix(h, 2))[0]
for it in (0, 5, 10, 20, 50, 100, 200):
    print(f"{it:4d}  {result.energies[it]:+.10f}")
print("exact ground energy", ground)

# %% [markdown]
# After the first few iterations the energy never rises.

# %%
print("largest rise after iteration 5:", np.max(np.diff(result.energies[5:])))
