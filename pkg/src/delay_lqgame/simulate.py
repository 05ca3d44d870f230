"""Closed-loop rollout, quadratic cost evaluation, and the equilibrium
no-improvement check.

The online loop mirrors what the distributed controllers actually do: at
step k each forms u_i(k) from the measured state and the previously
exchanged inputs (u_j(-1) = 0), the plant advances, and the controllers
exchange this step's inputs for use at k+1.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, SchemaError

# A unilateral single-step deviation may not lower the deviator's cost by
# more than this fraction of (1 + equilibrium cost).
NASH_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Trajectory:
    """States x(0..N), controls u_i(0..N-1), and the realized costs."""

    states: np.ndarray
    controls: np.ndarray
    per_player_cost: np.ndarray
    total_cost: float

    @property
    def horizon(self):
        return self.controls.shape[0]

    @property
    def p(self):
        return self.controls.shape[1]


def _closed_loop(dp, schedule, x0, deviation=None):
    """Run the feedback loop; optionally add one open-loop control offset.

    deviation is (player, step, delta): delta is added to that player's
    input at that single step, every law stays in place afterwards.
    """
    steps = schedule.horizon
    states = np.zeros((steps + 1, dp.M))
    controls = np.zeros((steps, dp.p, dp.N))
    x = np.asarray(x0, dtype=float).reshape(-1)
    states[0] = x
    u_prev = np.zeros((dp.p, dp.N))
    for k in range(steps):
        u = np.zeros((dp.p, dp.N))
        for i in range(dp.p):
            ui = schedule.A_coef[k, i] @ x
            for j in range(dp.p):
                ui = ui + schedule.B_coef[k, i, j] @ u_prev[j]
            u[i] = ui
        if deviation is not None and deviation[1] == k:
            u[deviation[0]] = u[deviation[0]] + deviation[2]
        x_next = dp.Phi @ x
        for i in range(dp.p):
            x_next = x_next + dp.Gamma0[i] @ u[i] + dp.Gamma1[i] @ u_prev[i]
        controls[k] = u
        states[k + 1] = x_next
        u_prev = u
        x = x_next
    return states, controls


def _costs(states, controls, weights):
    p = weights.p
    per_player = np.zeros(p)
    x_final = states[-1]
    for i in range(p):
        J = x_final @ weights.QN[i] @ x_final
        for k in range(controls.shape[0]):
            J += states[k] @ weights.Q[i] @ states[k]
            J += controls[k, i] @ weights.R[i] @ controls[k, i]
        per_player[i] = J
    # Shared-objective total: first controller's state weights, everyone's
    # control effort.  Matches the per-player costs exactly when all state
    # weights coincide, which both bundled presets satisfy.
    total = float(x_final @ weights.QN[0] @ x_final)
    for k in range(controls.shape[0]):
        total += states[k] @ weights.Q[0] @ states[k]
        for i in range(p):
            total += controls[k, i] @ weights.R[i] @ controls[k, i]
    return total, per_player


def rollout(dp, schedule, x0, weights):
    """Simulate the closed loop from x0 and return the costed trajectory."""
    if schedule.p != dp.p or schedule.M != dp.M or schedule.N != dp.N:
        raise DimensionError(
            f"schedule built for (M={schedule.M}, N={schedule.N}, "
            f"p={schedule.p}), plant is (M={dp.M}, N={dp.N}, p={dp.p})")
    if weights.horizon != schedule.horizon:
        raise DimensionError(
            f"weights horizon {weights.horizon} != schedule horizon "
            f"{schedule.horizon}")
    if weights.p != dp.p:
        raise DimensionError(
            f"{weights.p} weight sets for {dp.p} controllers")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != dp.M:
        raise DimensionError(f"x0 has length {x0.shape[0]}, expected {dp.M}")
    states, controls = _closed_loop(dp, schedule, x0)
    total, per_player = _costs(states, controls, weights)
    return Trajectory(states=states, controls=controls,
                      per_player_cost=per_player, total_cost=total)


def evaluate_costs(trajectory, weights):
    """Recompute (total, per-player) costs from a trajectory."""
    if trajectory.states.shape[0] != trajectory.horizon + 1:
        raise DimensionError("trajectory state/control lengths disagree")
    if weights.p != trajectory.p:
        raise DimensionError(
            f"{weights.p} weight sets for {trajectory.p} controllers")
    total, per_player = _costs(trajectory.states, trajectory.controls, weights)
    return total, tuple(per_player)


@dataclass(frozen=True)
class DeviationReport:
    """Outcome of randomized unilateral-deviation trials."""

    passed: bool
    trials: int
    min_delta: float
    min_margin: float
    tolerance: float


def nash_deviation_check(dp, schedule, weights, x0, trials=200,
                         magnitude=1e-2, seed=0):
    """Probe the no-improvement property of the synthesized equilibrium.

    Each trial perturbs one controller's input at one step by a random
    delta of the given norm, leaves every feedback law in place (all
    controllers, all later steps react to the perturbed history), re-rolls
    the loop, and records the deviator's cost change.  Trials are seeded
    individually from (seed, trial) so they are reproducible and order
    independent.
    """
    base = rollout(dp, schedule, x0, weights)
    min_delta = np.inf
    min_margin = np.inf
    for trial in range(int(trials)):
        rng = np.random.default_rng((int(seed), trial))
        player = int(rng.integers(dp.p))
        step = int(rng.integers(schedule.horizon))
        delta = rng.normal(size=dp.N)
        norm = np.linalg.norm(delta)
        if norm == 0.0:
            delta = np.zeros(dp.N)
            delta[0] = 1.0
            norm = 1.0
        delta = delta * (float(magnitude) / norm)
        states, controls = _closed_loop(dp, schedule, x0,
                                        deviation=(player, step, delta))
        _, per_player = _costs(states, controls, weights)
        change = per_player[player] - base.per_player_cost[player]
        allowance = NASH_TOLERANCE * (1.0 + base.per_player_cost[player])
        min_delta = min(min_delta, change)
        min_margin = min(min_margin, change + allowance)
    return DeviationReport(
        passed=bool(min_margin >= 0.0),
        trials=int(trials),
        min_delta=float(min_delta),
        min_margin=float(min_margin),
        tolerance=NASH_TOLERANCE,
    )


# ---------------------------------------------------------------------------
# trajectory files: CSV table plus a JSON sidecar with costs and metadata
# ---------------------------------------------------------------------------

def _fmt(x):
    # repr of a Python float: shortest decimal that round-trips.
    return repr(float(x))


def trajectory_header(M, p, N):
    cols = ["k"]
    cols += [f"x_{m + 1}" for m in range(M)]
    for i in range(p):
        cols += [f"u_{i + 1}_{n + 1}" for n in range(N)]
    return cols


def write_trajectory_csv(trajectory, path, scheme=None, delays=None, seed=0):
    """Write states/controls as CSV and costs/metadata as a .json sidecar.

    The final row carries x(N) with empty control cells.  Floats are
    rendered round-trip exactly, so identical trajectories produce
    byte-identical files.
    """
    path = Path(path)
    steps, p, N = trajectory.controls.shape
    M = trajectory.states.shape[1]
    lines = [",".join(trajectory_header(M, p, N))]
    for k in range(steps):
        cells = [str(k)]
        cells += [_fmt(v) for v in trajectory.states[k]]
        for i in range(p):
            cells += [_fmt(v) for v in trajectory.controls[k, i]]
        lines.append(",".join(cells))
    cells = [str(steps)] + [_fmt(v) for v in trajectory.states[steps]]
    cells += [""] * (p * N)
    lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")

    sidecar = {
        "total_cost": float(trajectory.total_cost),
        "per_player_cost": [float(v) for v in trajectory.per_player_cost],
        "M": M,
        "N": N,
        "p": p,
        "horizon": steps,
        "scheme": str(scheme) if scheme is not None else None,
        "delays": [float(v) for v in delays] if delays is not None else None,
        "seed": int(seed),
    }
    sidecar_path = path.with_suffix(".json")
    sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n")
    return sidecar_path


def read_trajectory_csv(path):
    """Reload a trajectory written by :func:`write_trajectory_csv`."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise SchemaError(str(path), "empty trajectory file")
    header = lines[0].split(",")
    sidecar = json.loads(path.with_suffix(".json").read_text())
    M, N, p = sidecar["M"], sidecar["N"], sidecar["p"]
    if header != trajectory_header(M, p, N):
        raise SchemaError(str(path), "trajectory header does not match sidecar")
    steps = len(lines) - 2
    states = np.zeros((steps + 1, M))
    controls = np.zeros((steps, p, N))
    for row, line in enumerate(lines[1:]):
        cells = line.split(",")
        k = int(cells[0])
        states[k] = [float(v) for v in cells[1:1 + M]]
        if k < steps:
            flat = [float(v) for v in cells[1 + M:]]
            controls[k] = np.array(flat).reshape(p, N)
    return Trajectory(
        states=states,
        controls=controls,
        per_player_cost=np.array(sidecar["per_player_cost"], dtype=float),
        total_cost=float(sidecar["total_cost"]),
    )
