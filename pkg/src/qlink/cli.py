"""Command-line entry point ``qlink``.

Exit status is 1 for invalid input (validation or parse errors), 2 for file
or other I/O errors and 3 for transport failures talking to a server.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from qlink import bench, demos
from qlink.draw import draw_circuit
from qlink.env import Environment
from qlink.errors import ParseError, TransportError, ValidationError
from qlink.language import parse_circuit
from qlink.observables import PauliSum
from qlink.remote import ENV_VAR, connect_environment, parse_address, serve_environment
from qlink.wire import DEFAULT_PORT

EXIT_VALIDATION, EXIT_IO, EXIT_TRANSPORT = 1, 2, 3


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _table(columns, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(columns, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


@contextlib.contextmanager
def _environment(args):
    """Local environment, or a session on ``--remote``."""
    if getattr(args, "remote", None):
        host, port = parse_address(args.remote)
        env = connect_environment(host, port)
        try:
            if args.seed is not None:
                env.seed(args.seed)
            yield env
        finally:
            env.close()
    else:
        yield Environment(getattr(args, "seed", None))


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_circuit(args):
    return parse_circuit(_read(args.circuit))


def _num_qubits(args, circuit, h=None) -> int:
    needed = max(circuit.span, h.num_qubits if h is not None else 0, 1)
    return args.qubits if args.qubits is not None else needed


# -- subcommands --------------------------------------------------------------------


def cmd_run(args) -> None:
    circuit = _load_circuit(args)
    n = _num_qubits(args, circuit)
    with _environment(args) as env:
        q = env.create_qureg(n, args.density)
        outcomes = env.apply_circuit(q, circuit)
        amps = np.asarray(env.get_qureg_matrix(q)).reshape(-1)
    if args.format == "json":
        text = json.dumps(
            {
                "num_qubits": n,
                "density": bool(args.density),
                "outcomes": outcomes,
                "amplitudes": [[z.real, z.imag] for z in amps.tolist()],
            },
            indent=2,
        ) + "\n"
    else:
        dim = 2**n
        if args.density:
            rows = [(i // dim, i % dim, repr(z.real), repr(z.imag)) for i, z in enumerate(amps.tolist())]
            text = _table(("row", "col", "real", "imag"), rows, "csv")
        else:
            rows = [(i, repr(z.real), repr(z.imag)) for i, z in enumerate(amps.tolist())]
            text = _table(("index", "real", "imag"), rows, "csv")
        if outcomes:
            text = "# outcomes " + " ".join(map(str, outcomes)) + "\n" + text
    _emit(args, text)


def cmd_draw(args) -> None:
    circuit = _load_circuit(args)
    text = draw_circuit(circuit, args.qubits, fmt=args.format)
    _emit(args, text + "\n")


def cmd_expect(args) -> None:
    circuit = _load_circuit(args)
    h = PauliSum.parse(_read(args.hamiltonian))
    n = _num_qubits(args, circuit, h)
    with _environment(args) as env:
        q = env.create_qureg(n, args.density)
        work = env.create_qureg(n, args.density)
        env.apply_circuit(q, circuit)
        value = env.calc_expec_pauli_sum(q, h, work)
    if args.format == "json":
        _emit(args, json.dumps({"expectation": value}) + "\n")
    else:
        _emit(args, f"{value!r}\n")


def cmd_bench(args) -> None:
    reps = range(1, args.max_reps + 1)
    with _environment(args) as env:
        results = bench.run_benchmark(args.qubits, reps, args.trials, args.seed or 0, env)
    _emit(args, bench.format_results(results, args.format) + ("\n" if args.format == "json" else ""))


def cmd_serve(args) -> None:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s", stream=sys.stderr)
    serve_environment(args.bind, args.port)


def _hamiltonian(args):
    return PauliSum.parse(_read(args.hamiltonian)) if args.hamiltonian else None


def cmd_demo_depol(args) -> None:
    with _environment(args) as env:
        rows = demos.depolarising_decay(args.p, args.steps, args.seed or 0, _hamiltonian(args), env)
    _emit(args, _table(demos.DEPOL_COLUMNS, rows, args.format))


def cmd_demo_imagtime(args) -> None:
    with _environment(args) as env:
        rows = demos.imag_time_demo(
            args.dt, args.iters, args.seed or 0, args.depth, _hamiltonian(args), env
        )
    _emit(args, _table(demos.IMAGTIME_COLUMNS, rows, args.format))


def cmd_demo_trotter(args) -> None:
    orders = args.order or [1, 2]
    reps = args.reps or [1, 2, 4, 8, 16, 32, 64]
    with _environment(args) as env:
        rows = demos.trotter_sweep(
            args.qubits, args.time, orders, reps, args.p, args.seed or 0, _hamiltonian(args), env
        )
    _emit(args, _table(demos.TROTTER_COLUMNS, rows, args.format))


# -- parser -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlink", description="Quantum register emulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every random draw")
    common.add_argument("--threads", type=int, default=None, help="cap numerical library threads")
    common.add_argument(
        "--remote",
        metavar="HOST:PORT",
        default=os.environ.get(ENV_VAR),
        help=f"run on a server (default ${ENV_VAR})",
    )
    common.add_argument("--out", metavar="FILE", help="write output here instead of stdout")

    table = argparse.ArgumentParser(add_help=False)
    table.add_argument("--format", choices=("csv", "json"), default="csv")

    circuit = argparse.ArgumentParser(add_help=False)
    circuit.add_argument("--circuit", metavar="FILE", required=True, help="circuit file (.qc), '-' for stdin")
    circuit.add_argument("--qubits", type=int, default=None, help="register size (default: circuit span)")

    p = sub.add_parser("run", parents=[common, table, circuit], help="apply a circuit and print the state")
    p.add_argument("--density", action="store_true", help="simulate a density matrix")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("draw", parents=[common, circuit], help="draw a circuit as text or SVG")
    p.add_argument("--format", choices=("text", "svg"), default="text")
    p.set_defaults(func=cmd_draw)

    p = sub.add_parser("expect", parents=[common, table, circuit], help="expectation of a Pauli sum")
    p.add_argument("--hamiltonian", metavar="FILE", required=True, help="Pauli-sum file (.ham)")
    p.add_argument("--density", action="store_true")
    p.set_defaults(func=cmd_expect)

    p = sub.add_parser("bench", parents=[common, table], help="time random benchmark circuits")
    p.add_argument("--qubits", type=int, default=15)
    p.add_argument("--max-reps", type=int, default=50)
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="host environments over TCP")
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--threads", type=int, default=None, help="cap numerical library threads")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("demo-depol", parents=[common, table], help="depolarising decay of an expectation")
    p.add_argument("--p", type=float, default=0.1, help="two-qubit depolarising probability")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--hamiltonian", metavar="FILE", help="2-qubit Pauli sum (default Z0 Z1 + 0.5 X0)")
    p.set_defaults(func=cmd_demo_depol)

    p = sub.add_parser("demo-imagtime", parents=[common, table], help="variational imaginary time")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--depth", type=int, default=2, help="layers of the ansatz")
    p.add_argument("--hamiltonian", metavar="FILE", help="Pauli sum (default Z0 Z1 + 0.5 X0)")
    p.set_defaults(func=cmd_demo_imagtime)

    p = sub.add_parser("demo-trotter", parents=[common, table], help="Trotter fidelity sweep")
    p.add_argument("--qubits", type=int, default=5, help="Heisenberg ring size")
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--order", type=int, action="append", help="formula order (repeatable)")
    p.add_argument("--reps", type=int, action="append", help="repetitions (repeatable)")
    p.add_argument("--p", type=float, default=1e-4, help="depolarising probability per gate")
    p.add_argument("--hamiltonian", metavar="FILE", help="Pauli sum instead of the Heisenberg ring")
    p.set_defaults(func=cmd_demo_trotter)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr)
    limiter = contextlib.nullcontext()
    if getattr(args, "threads", None):
        from threadpoolctl import threadpool_limits

        limiter = threadpool_limits(limits=args.threads)
    try:
        with limiter:
            args.func(args)
    except TransportError as err:
        print(f"qlink: transport error: {err}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ValidationError, ParseError, ValueError) as err:
        print(f"qlink: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as err:
        print(f"qlink: {err}", file=sys.stderr)
        return EXIT_IO
    except KeyboardInterrupt:
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
