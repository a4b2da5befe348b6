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
# # Remote execution and the benchmark circuit
#
# A server runs in a background thread on an ephemeral port. The same calls
# go through the local environment and through the socket, and the results
# are compared bit for bit.

# %%
import numpy as np

from qlink import Environment, RemoteEnv, Server
from qlink.draw import draw_circuit
from qlink.bench import format_results, gen_benchmark_circuit, run_benchmark
from qlink.wire import payload_size, sigma

server = Server(("127.0.0.1", 0)).start()
remote = RemoteEnv(*server.address)
print("server protocol version", remote.ping())

# %%
circuit = gen_benchmark_circuit(10, 3, seed=1)
results = []
for env in (Environment(), remote):
    q = env.create_qureg(10)
    env.apply_circuit(q, circuit)
    results.append(env.get_qureg_matrix(q))
print("bit-identical:", results[0].tobytes() == results[1].tobytes())

# %% [markdown]
# Each repetition of the benchmark circuit has three random rotations per
# qubit, then controlled rotations on neighbouring pairs in even and odd
# layers.

# %%
print(draw_circuit(gen_benchmark_circuit(4, 1, seed=0)))
big = gen_benchmark_circuit(15, 50, seed=0)
print(len(big), "gates,", payload_size(big), "bytes =", 8 * sigma(big))

# %%
print(format_results(run_benchmark(12, [1, 5, 10], trials=3, seed=0, env=remote)))
remote.close()
server.close()
