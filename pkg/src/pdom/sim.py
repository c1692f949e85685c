"""Fixed-step integration and trajectory-level validation.

Classical fourth-order Runge-Kutta over a uniform grid, batched across
initial conditions, plus classifiers that turn raw trajectories into
asymptotic verdicts (fixed point, limit cycle, divergence) and checks that
validate the modal decay bounds and multistability predictions on samples.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .differential import LureSystem
from .errors import DimensionError, PropertyViolationError
from .lti import LtiSystem, ModalSplit
from .policy import DEFAULT_POLICY, NumericPolicy

__all__ = [
    "Trajectory",
    "AsymptoticVerdict",
    "DecayVerdict",
    "MultistabilityReport",
    "integrate",
    "integrate_batch",
    "classify_asymptotics",
    "modal_decay_check",
    "multistability_probe",
    "write_trajectory_csv",
]

_DIVERGENCE_NORM = 1e9


@dataclass(frozen=True)
class Trajectory:
    """States on a uniform time grid; ``truncated`` flags a divergence cutoff."""

    t0: float
    dt: float
    states: np.ndarray                 # (N, n)
    inputs: np.ndarray | None = None   # (N, m) when recorded
    truncated: bool = False

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 1:
            raise DimensionError("trajectory needs a (samples, n) state array")
        object.__setattr__(self, "states", states)
        if self.inputs is not None:
            inputs = np.asarray(self.inputs, dtype=float)
            if inputs.shape[0] != states.shape[0]:
                raise DimensionError("input record length does not match the state record")
            object.__setattr__(self, "inputs", inputs)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.states.shape[0])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _rhs_factory(sys, input_policy):
    """Batched vector field f(t, X) for LTI or Lur'e dynamics."""
    if isinstance(sys, LureSystem):
        drift = sys.rhs
        B = sys.B
    elif isinstance(sys, LtiSystem):
        drift = lambda X: X @ sys.A.T
        B = sys.B
    else:
        A = np.asarray(sys, dtype=float)
        drift = lambda X: X @ A.T
        B = None

    if input_policy is None:
        return lambda t, X: drift(X), None
    if callable(input_policy):
        if B is None:
            raise DimensionError("inputs supplied for a bare state matrix")
        u_of_t = lambda t: np.asarray(input_policy(t), dtype=float).ravel()
        return lambda t, X: drift(X) + u_of_t(t) @ B.T, u_of_t
    const = np.asarray(input_policy, dtype=float).ravel()
    if B is None:
        raise DimensionError("inputs supplied for a bare state matrix")
    if const.shape[0] != B.shape[1]:
        raise DimensionError("constant input dimension does not match B")
    return lambda t, X: drift(X) + const @ B.T, lambda t: const


def integrate_batch(
    sys,
    X0: np.ndarray,
    t_end: float,
    dt: float,
    input_policy=None,
    record_every: int = 1,
) -> list[Trajectory]:
    """RK4 over a batch of initial conditions (rows of X0), one grid for all.

    A row whose norm exceeds 1e9 is flagged as truncated and its record is
    cut at that step; the rest of the batch keeps integrating unaffected.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < dt:
        raise ValueError("t_end must be at least dt")
    if record_every < 1:
        raise ValueError("record_every must be a positive integer")
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    batch = X0.shape[0]
    f, u_of_t = _rhs_factory(sys, input_policy)
    steps = int(round(t_end / dt))
    if steps % record_every:
        raise ValueError("t_end must be a whole number of recorded intervals (dt * record_every)")
    X = X0.copy()
    history = [X0.copy()]
    inputs = [u_of_t(0.0)] if u_of_t is not None else None
    cut_length = np.full(batch, -1, dtype=int)  # record count at divergence, -1 if none
    t = 0.0
    with np.errstate(invalid="ignore", over="ignore"):
        for step in range(steps):
            k1 = f(t, X)
            k2 = f(t + 0.5 * dt, X + 0.5 * dt * k1)
            k3 = f(t + 0.5 * dt, X + 0.5 * dt * k2)
            k4 = f(t + dt, X + dt * k3)
            X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += dt
            norms = np.sqrt(np.einsum("ij,ij->i", X, X))
            bad = (
                ~np.isfinite(X).all(axis=1) | ~np.isfinite(norms) | (norms > _DIVERGENCE_NORM)
            ) & (cut_length < 0)
            if np.any(bad):
                # park diverged rows at the origin; their record is cut here anyway
                X[bad] = 0.0
                cut_length[bad] = len(history)
                if np.all(cut_length >= 0):
                    break
            if (step + 1) % record_every == 0:
                history.append(X.copy())
                if inputs is not None:
                    inputs.append(u_of_t(t))
    stacked = np.stack(history, axis=0)  # (N, batch, n)
    input_array = np.stack(inputs, axis=0) if inputs is not None else None
    out = []
    for i in range(batch):
        truncated = cut_length[i] >= 0
        last = cut_length[i] if truncated else stacked.shape[0]
        out.append(
            Trajectory(
                t0=0.0,
                dt=dt * record_every,
                states=stacked[:last, i, :],
                inputs=input_array[:last] if input_array is not None else None,
                truncated=bool(truncated),
            )
        )
    return out


def integrate(
    sys,
    x0,
    t_end: float,
    dt: float,
    input_policy=None,
    record_every: int = 1,
) -> Trajectory:
    """Integrate a single initial condition; see :func:`integrate_batch`."""
    x0 = np.asarray(x0, dtype=float).ravel()
    return integrate_batch(sys, x0[None, :], t_end, dt, input_policy, record_every)[0]


@dataclass(frozen=True)
class AsymptoticVerdict:
    """Classified tail behavior with the diagnostics that decided it."""

    kind: str  # "fixed_point" | "limit_cycle" | "divergent" | "undecided"
    location: np.ndarray | None = None
    period: float | None = None
    amplitude: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "location": None if self.location is None else self.location.tolist(),
            "period": self.period,
            "amplitude": self.amplitude,
            "diagnostics": {k: float(v) for k, v in self.diagnostics.items()},
        }


def _upward_crossings(times: np.ndarray, signal: np.ndarray) -> np.ndarray:
    """Linear-interpolated times where the signal crosses zero upward."""
    below = signal[:-1] < 0
    above = signal[1:] >= 0
    idx = np.where(below & above)[0]
    frac = -signal[idx] / (signal[idx + 1] - signal[idx])
    return times[idx] + frac * (times[idx + 1] - times[idx])


def classify_asymptotics(traj: Trajectory, policy: NumericPolicy = DEFAULT_POLICY) -> AsymptoticVerdict:
    """Decide fixed point vs limit cycle vs divergence from the trajectory tail.

    Fixed point: tail displacement below ``fp_tol_scale * (1 + |x_tail|)``
    over the last 20% of samples. Limit cycle: the tail oscillates, the last
    five zero-crossing periods of the liveliest coordinate agree to
    ``cycle_tol`` relative jitter, and the per-coordinate peak-to-peak
    pattern repeats over the last two estimated periods. Anything else is
    undecided.

    A trajectory started exactly on an unstable equilibrium stays there and
    classifies as a fixed point; that initial set has measure zero, so
    cycle-dichotomy sweeps should treat the equilibrium start as its own
    case.
    """
    if traj.truncated:
        return AsymptoticVerdict(kind="divergent", diagnostics={"samples": len(traj.states)})
    states = traj.states
    times = traj.times
    window = max(2, int(0.2 * states.shape[0]))
    tail = states[-window:]
    center = tail.mean(axis=0)
    tail_norm = float(np.linalg.norm(center))
    fp_tol = policy.fp_tol_scale * (1.0 + tail_norm)
    displacement = float(np.max(np.linalg.norm(tail - center, axis=1)))
    if displacement < fp_tol:
        return AsymptoticVerdict(
            kind="fixed_point",
            location=center,
            diagnostics={"tail_displacement": displacement, "fp_tol": fp_tol},
        )

    # liveliest coordinate drives the period estimate
    spans = np.ptp(tail, axis=0)
    coord = int(np.argmax(spans))
    signal = states[:, coord] - center[coord]
    crossings = _upward_crossings(times, signal)
    if crossings.size < 6:
        return AsymptoticVerdict(
            kind="undecided",
            diagnostics={"tail_displacement": displacement, "crossings": float(crossings.size)},
        )
    periods = np.diff(crossings)[-5:]
    mean_period = float(np.mean(periods))
    jitter = float((np.max(periods) - np.min(periods)) / mean_period)
    # peak-to-peak pattern must repeat over the last two estimated periods
    per_samples = max(2, int(round(mean_period / traj.dt)))
    if 2 * per_samples > states.shape[0]:
        return AsymptoticVerdict(
            kind="undecided",
            diagnostics={"tail_displacement": displacement, "crossings": float(crossings.size)},
        )
    last = states[-per_samples:]
    prev = states[-2 * per_samples : -per_samples]
    ptp_last = np.ptp(last, axis=0)
    ptp_prev = np.ptp(prev, axis=0)
    scale = np.maximum(np.max(ptp_last), 1e-12)
    ptp_drift = float(np.max(np.abs(ptp_last - ptp_prev)) / scale)
    if jitter < policy.cycle_tol and ptp_drift < 5 * policy.cycle_tol:
        return AsymptoticVerdict(
            kind="limit_cycle",
            period=mean_period,
            amplitude=float(np.max(ptp_last)),
            diagnostics={"jitter": jitter, "ptp_drift": ptp_drift},
        )
    return AsymptoticVerdict(
        kind="undecided",
        diagnostics={"tail_displacement": displacement, "jitter": jitter, "ptp_drift": ptp_drift},
    )


@dataclass(frozen=True)
class DecayVerdict:
    """Do the two modal decay bounds hold at every sample of a trajectory?"""

    passed: bool
    worst_lower_slack: float  # min over samples of |x_dom| - floor  (>= 0 to pass)
    worst_upper_slack: float  # min over samples of ceiling - |x_tran|
    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_lower_slack": self.worst_lower_slack,
            "worst_upper_slack": self.worst_upper_slack,
        }


def modal_decay_check(
    traj: Trajectory,
    split: ModalSplit,
    policy: NumericPolicy = DEFAULT_POLICY,
    rel_tol: float = 1e-6,
) -> DecayVerdict:
    """Check the dominant growth floor and transient decay ceiling on samples.

    Bounds are checked with a relative slack covering integrator error.
    """
    states = traj.states
    times = traj.times - traj.t0
    x_dom = states @ split.projector_dominant.T
    x_tran = states @ split.projector_transient.T
    dom_norm = np.linalg.norm(x_dom, axis=1)
    tran_norm = np.linalg.norm(x_tran, axis=1)

    lower_ok = True
    lower_slack = np.inf
    if split.p > 0 and dom_norm[0] > 0:
        floor = split.growth_floor * np.exp(-split.rate_dominant * times) * dom_norm[0]
        slack = dom_norm - floor * (1.0 - rel_tol)
        lower_slack = float(np.min(slack))
        lower_ok = lower_slack >= -rel_tol * max(1.0, dom_norm[0])
    upper_ok = True
    upper_slack = np.inf
    if split.p < states.shape[1] and tran_norm[0] > 0:
        ceiling = split.decay_ceiling * np.exp(-split.rate_transient * times) * tran_norm[0]
        slack = ceiling * (1.0 + rel_tol) - tran_norm
        upper_slack = float(np.min(slack))
        upper_ok = upper_slack >= -rel_tol * max(1.0, tran_norm[0])
    return DecayVerdict(
        passed=bool(lower_ok and upper_ok),
        worst_lower_slack=lower_slack,
        worst_upper_slack=upper_slack,
    )


@dataclass(frozen=True)
class MultistabilityReport:
    """Clustered equilibria reached from a grid of initial conditions."""

    equilibria: np.ndarray  # (k, n) cluster representatives
    verdicts: tuple[AsymptoticVerdict, ...]
    divergent: int

    @property
    def count(self) -> int:
        return self.equilibria.shape[0]


def multistability_probe(
    sys,
    grid: np.ndarray,
    t_end: float = 100.0,
    dt: float = 1e-3,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> MultistabilityReport:
    """Integrate a grid of initial conditions; every bounded run must settle.

    Raises :class:`PropertyViolationError` if any non-divergent trajectory
    classifies as something other than a fixed point. Equilibria are merged
    with a cluster radius of ten fixed-point tolerances.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    trajectories = integrate_batch(sys, grid, t_end, dt)
    verdicts = tuple(classify_asymptotics(t, policy) for t in trajectories)
    violations = [v for v in verdicts if v.kind not in ("fixed_point", "divergent")]
    if violations:
        raise PropertyViolationError(
            f"{len(violations)} bounded trajectories did not settle to fixed points",
            details=violations,
        )
    points = [v.location for v in verdicts if v.kind == "fixed_point"]
    divergent = sum(1 for v in verdicts if v.kind == "divergent")
    clusters: list[np.ndarray] = []
    for point in points:
        radius = 10.0 * policy.fp_tol_scale * (1.0 + float(np.linalg.norm(point)))
        if not any(np.linalg.norm(point - c) <= radius for c in clusters):
            clusters.append(point)
    equilibria = np.array(clusters) if clusters else np.empty((0, grid.shape[1]))
    return MultistabilityReport(equilibria=equilibria, verdicts=verdicts, divergent=divergent)


def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    """CSV export with header t, x1..xn and u1..um when inputs were recorded."""
    n = traj.states.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(n)]
    if traj.inputs is not None:
        header += [f"u{i + 1}" for i in range(traj.inputs.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, t in enumerate(traj.times):
            row = [t, *traj.states[i]]
            if traj.inputs is not None:
                row.extend(traj.inputs[i])
            writer.writerow([f"{v:.17g}" for v in row])
