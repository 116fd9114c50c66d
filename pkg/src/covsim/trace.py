"""Simulation trace container and its on-disk formats.

Trace CSV schema (one row per step, step 0 is the initial state):

    step, t,
    p{i}_x, p{i}_y        for i = 0..n-1,
    u{i}_x, u{i}_y        for i = 0..n-1,
    cost_conventional, cost_proposed, lambda, rcov
    [, ahat{i}_{j}        for i = 0..n-1, j = 1..m   (unknown mode only)]

Units: positions in domain units, t in seconds, rcov in percent (NaN on the
first row). ``lambda`` and ``cost_proposed`` are NaN for Lloyd runs. Floats
are written with 9 significant digits, so identical runs produce
byte-identical files.
"""

import csv
import io

import numpy as np

from .metrics import path_length

FLOAT_FMT = "%.9g"


class SimulationTrace:
    """Per-step arrays of one run plus its summary facts."""

    def __init__(self, t, positions, controls, cost_conventional, cost_proposed,
                 lam, rcov, a_hat=None, converged_at_step=None, name="scenario",
                 method="proposed", env_mode="known"):
        self.t = np.asarray(t, dtype=float)
        self.positions = np.asarray(positions, dtype=float)
        self.controls = np.asarray(controls, dtype=float)
        self.cost_conventional = np.asarray(cost_conventional, dtype=float)
        self.cost_proposed = np.asarray(cost_proposed, dtype=float)
        self.lam = np.asarray(lam, dtype=float)
        self.rcov = np.asarray(rcov, dtype=float)
        self.a_hat = None if a_hat is None else np.asarray(a_hat, dtype=float)
        self.converged_at_step = converged_at_step
        self.name = name
        self.method = method
        self.env_mode = env_mode

    @property
    def n_agents(self) -> int:
        return self.positions.shape[1]

    @property
    def n_steps(self) -> int:
        """Steps executed; the trace holds this many records plus one."""
        return self.positions.shape[0] - 1

    def path_length(self, n_steps: int = 1400) -> float:
        return path_length(self.positions, n_steps)

    def summary(self) -> dict:
        out = {
            "name": self.name,
            "method": self.method,
            "env_mode": self.env_mode,
            "n_agents": self.n_agents,
            "steps": self.n_steps,
            "converged": self.converged_at_step is not None,
            "final_cost_conventional": float(self.cost_conventional[-1]),
            "path_length_1400": self.path_length(1400),
        }
        if self.converged_at_step is not None:
            out["converged_at_step"] = int(self.converged_at_step)
        if not np.isnan(self.cost_proposed[-1]):
            out["final_cost_proposed"] = float(self.cost_proposed[-1])
        return out

    def columns(self) -> list[str]:
        n = self.n_agents
        cols = ["step", "t"]
        cols += [f"p{i}_{ax}" for i in range(n) for ax in ("x", "y")]
        cols += [f"u{i}_{ax}" for i in range(n) for ax in ("x", "y")]
        cols += ["cost_conventional", "cost_proposed", "lambda", "rcov"]
        if self.a_hat is not None:
            m = self.a_hat.shape[2]
            cols += [f"ahat{i}_{j}" for i in range(self.n_agents) for j in range(1, m + 1)]
        return cols

    def write_csv(self, path):
        rows = self.n_steps + 1
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns())
            for k in range(rows):
                row = [str(k), FLOAT_FMT % self.t[k]]
                row += [FLOAT_FMT % v for v in self.positions[k].ravel()]
                row += [FLOAT_FMT % v for v in self.controls[k].ravel()]
                row += [FLOAT_FMT % self.cost_conventional[k],
                        FLOAT_FMT % self.cost_proposed[k],
                        FLOAT_FMT % self.lam[k],
                        FLOAT_FMT % self.rcov[k]]
                if self.a_hat is not None:
                    row += [FLOAT_FMT % v for v in self.a_hat[k].ravel()]
                writer.writerow(row)

    @classmethod
    def read_csv(cls, path, name="scenario", method="proposed", env_mode="known"):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            data = np.array([[float(v) for v in row] for row in reader])
        col = {name_: idx for idx, name_ in enumerate(header)}
        n = sum(1 for c in header if c.startswith("p") and c.endswith("_x"))
        rows = data.shape[0]
        positions = data[:, col["p0_x"]: col["p0_x"] + 2 * n].reshape(rows, n, 2)
        controls = data[:, col["u0_x"]: col["u0_x"] + 2 * n].reshape(rows, n, 2)
        a_hat = None
        if any(c.startswith("ahat") for c in header):
            first = col["ahat0_1"]
            m = (len(header) - first) // n
            a_hat = data[:, first:].reshape(rows, n, m)
        return cls(
            t=data[:, col["t"]], positions=positions, controls=controls,
            cost_conventional=data[:, col["cost_conventional"]],
            cost_proposed=data[:, col["cost_proposed"]],
            lam=data[:, col["lambda"]], rcov=data[:, col["rcov"]],
            a_hat=a_hat, name=name, method=method, env_mode=env_mode,
        )


def format_toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % value
    if isinstance(value, str):
        return '"%s"' % value.replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(format_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot format {type(value)!r} as a TOML value")


def write_summary(path, summary: dict):
    """Write a {key: scalar} or {key: {key: scalar}} mapping as TOML."""
    out = io.StringIO()
    tables = {k: v for k, v in summary.items() if isinstance(v, dict)}
    for key, value in summary.items():
        if not isinstance(value, dict):
            out.write(f"{key} = {format_toml_value(value)}\n")
    for tname, table in tables.items():
        out.write(f"\n[{tname}]\n")
        for key, value in table.items():
            out.write(f"{key} = {format_toml_value(value)}\n")
    with open(path, "w") as fh:
        fh.write(out.getvalue())
