"""Lockstep simulation of a concrete network against its abstraction.

Both layers advance under a shared switching signal.  At every step the
abstract controller picks uhat, each node's interface refines it into the
concrete input u_i (wiring what from abstract neighbor outputs and w from
concrete neighbor outputs), and the run records output errors, the composed
certificate value and input norms.  Two trajectory checks make the run an
oracle for the certificate: the one-step decrease of V and the closed-form
error envelope

    |y(k) - yhat(k)|_2 <= theta beta^k V(0)^(1/b) + gamma_ext(sup_{j<=k} |uhat(j)|_2)

with theta = alpha^(-1/b), beta = (1 - lambda_inf)^(1/b) and
gamma_ext(t) = (rho_ext(t) / (lambda_inf alpha))^(1/b), obtained by unrolling
the decrease inequality and splitting the 1/b power subadditively.

Per-node updates within a step are independent; steps are the only
synchronization points, so identical inputs give bitwise-identical runs
regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificates import interface_input
from .composition import ComposedCertificate
from .errors import DimensionMismatchError
from .network import NetworkSpec, SwitchingSignal, assemble_internal_input, step_with_modes


@dataclass
class SimulationRun:
    """Trajectories and traces of one lockstep run (indices are time steps)."""

    horizon: int
    node_ids: tuple[int, ...]
    states: list[list[np.ndarray]]
    abstract_states: list[list[np.ndarray]]
    external_outputs: list[list[np.ndarray]]
    abstract_external_outputs: list[list[np.ndarray]]
    refined_inputs: list[list[np.ndarray]]
    abstract_inputs: list[list[np.ndarray]]
    modes: list[list[int]]
    v_trace: list[float]
    error_trace: list[float]
    u_hat_norms: list[float]

    def running_sup_u_hat(self, k: int) -> float:
        return max(self.u_hat_norms[: k + 1])


def simulate_lockstep(
    spec: NetworkSpec,
    local_certs,
    composed: ComposedCertificate,
    x0,
    xhat0,
    abstract_controller,
    switching: SwitchingSignal,
    horizon: int,
) -> SimulationRun:
    """Run both networks for ``horizon`` steps, refining inputs per node.

    ``abstract_controller(abstract_states, k)`` returns the per-node uhat.
    Traces cover k = 0..horizon inclusive; inputs at the final step are
    evaluated but not applied.
    """
    certs = list(local_certs)
    if len(certs) != spec.n_nodes:
        raise DimensionMismatchError(
            f"need one certificate per node ({spec.n_nodes}), got {len(certs)}"
        )
    if horizon < 0:
        raise DimensionMismatchError(f"horizon must be nonnegative, got {horizon}")
    if switching.horizon is not None and switching.horizon < horizon + 1:
        raise DimensionMismatchError(
            f"switching horizon {switching.horizon} does not cover {horizon + 1} steps",
            horizon=horizon,
        )
    abstract = spec.abstract_view()
    states = [np.array(x, dtype=float) for x in x0]
    hat_states = [np.array(x, dtype=float) for x in xhat0]

    run = SimulationRun(
        horizon=horizon,
        node_ids=spec.graph.nodes,
        states=[], abstract_states=[],
        external_outputs=[], abstract_external_outputs=[],
        refined_inputs=[], abstract_inputs=[],
        modes=[], v_trace=[], error_trace=[], u_hat_norms=[],
    )

    for k in range(horizon + 1):
        modes = switching.modes_at(k)
        u_hats = [np.asarray(u, dtype=float) for u in abstract_controller(hat_states, k)]
        if len(u_hats) != spec.n_nodes:
            raise DimensionMismatchError(
                f"controller returned {len(u_hats)} inputs for {spec.n_nodes} nodes"
            )
        w_hats = assemble_internal_input(abstract, hat_states, modes)
        inputs = [
            interface_input(certs[i], states[i], hat_states[i], u_hats[i], w_hats[i], modes[i])
            for i in range(spec.n_nodes)
        ]
        y_ext, yhat_ext = [], []
        for i, sub in enumerate(spec.subsystems):
            lo, hi = sub.external_range(modes[i])
            y_ext.append((sub.modes[modes[i]].C @ states[i])[lo:hi])
            asub = abstract.subsystems[i]
            yhat_ext.append((asub.modes[modes[i]].C @ hat_states[i])[lo:hi])

        run.states.append([x.copy() for x in states])
        run.abstract_states.append([x.copy() for x in hat_states])
        run.external_outputs.append(y_ext)
        run.abstract_external_outputs.append(yhat_ext)
        run.refined_inputs.append(inputs)
        run.abstract_inputs.append(u_hats)
        run.modes.append(list(modes))
        run.v_trace.append(composed.evaluate_V(states, hat_states, modes))
        run.error_trace.append(
            float(
                np.sqrt(
                    sum(float(np.sum((a - b) ** 2)) for a, b in zip(y_ext, yhat_ext))
                )
            )
        )
        run.u_hat_norms.append(
            float(np.sqrt(sum(float(np.sum(u**2)) for u in u_hats)))
        )

        if k < horizon:
            states = step_with_modes(spec, states, inputs, modes).next_states
            hat_states = step_with_modes(abstract, hat_states, u_hats, modes).next_states
    return run


@dataclass(frozen=True)
class BoundConstants:
    """Envelope constants derived from a composed certificate.

    beta = (1 - lambda_inf)^(1/b), theta = alpha^(-1/b) and
    gamma_ext(t) = (rho_ext_coeff t^q / (lambda_inf alpha))^(1/b); with
    b = q = 2 the last is linear in t.
    """

    theta: float
    beta: float
    gamma_ext_coeff: float
    b_exp: int = 2

    def __post_init__(self):
        if self.theta <= 0 or not (0.0 < self.beta < 1.0) or self.gamma_ext_coeff < 0:
            raise ValueError(
                "bound constants must satisfy theta > 0, 0 < beta < 1, gamma >= 0"
            )

    @classmethod
    def from_composed(cls, composed: ComposedCertificate) -> "BoundConstants":
        b = composed.b_exp
        return cls(
            theta=composed.alpha_total ** (-1.0 / b),
            beta=(1.0 - composed.lambda_inf) ** (1.0 / b),
            gamma_ext_coeff=(
                composed.rho_ext_coeff / (composed.lambda_inf * composed.alpha_total)
            )
            ** (1.0 / b),
            b_exp=b,
        )

    def gamma_ext(self, t: float) -> float:
        return self.gamma_ext_coeff * t  # q = b: the power cancels

    def envelope(self, k: int, v0: float, sup_u_hat: float) -> float:
        return self.theta * self.beta**k * v0 ** (1.0 / self.b_exp) + self.gamma_ext(
            sup_u_hat
        )


@dataclass(frozen=True)
class TrajectoryReport:
    """Per-run check outcome; worst margin/slack aggregates order-free."""

    ok: bool
    worst_margin: float
    witness_step: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_trajectory_bound(
    run: SimulationRun,
    composed: ComposedCertificate,
    bound: BoundConstants | None = None,
) -> TrajectoryReport:
    """Error envelope check at every recorded step.

    The sup of |uhat| is the running supremum up to the current step, which
    is tighter than the full-horizon sup and still valid.
    """
    if bound is None:
        bound = BoundConstants.from_composed(composed)
    v0 = run.v_trace[0]
    worst = np.inf
    witness = None
    for k in range(run.horizon + 1):
        env = bound.envelope(k, v0, run.running_sup_u_hat(k)) + 1e-9
        margin = env - run.error_trace[k]
        if margin < worst:
            worst = float(margin)
            if margin < 0:
                witness = k
    return TrajectoryReport(ok=worst >= 0.0, worst_margin=worst, witness_step=witness)


def check_V_decrease(
    run: SimulationRun, composed: ComposedCertificate, lambda_inf: float | None = None
) -> TrajectoryReport:
    """One-step decrease of the composed value along the realized trajectory.

    V(k+1) - V(k) <= -lambda_inf V(k) + rho_ext(|uhat(k)|) with slack
    1e-9 (1 + V(k)); worst slack reported (negative means satisfied).
    """
    lam = composed.lambda_inf if lambda_inf is None else lambda_inf
    worst = -np.inf
    witness = None
    for k in range(run.horizon):
        allowed = (
            -lam * run.v_trace[k]
            + composed.rho_ext_coeff * run.u_hat_norms[k] ** 2
            + 1e-9 * (1.0 + run.v_trace[k])
        )
        slack = run.v_trace[k + 1] - run.v_trace[k] - allowed
        if slack > worst:
            worst = float(slack)
            if slack > 0:
                witness = k + 1
    if run.horizon == 0:
        worst = -np.inf
    return TrajectoryReport(ok=worst <= 0.0, worst_margin=worst, witness_step=witness)


def export_run(run: SimulationRun, path) -> None:
    """Write the run as CSV: one row per step, 17-significant-digit floats.

    Columns: k, error_norm, V, u_hat_norm, then the external output
    components of every node (y<i> or y<i>_<c> for multi-component blocks).
    """
    header = ["k", "error_norm", "V", "u_hat_norm"]
    widths = [y.shape[0] for y in run.external_outputs[0]] if run.external_outputs else []
    for node, width in zip(run.node_ids, widths):
        if width == 1:
            header.append(f"y{node}")
        else:
            header.extend(f"y{node}_{c}" for c in range(width))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(len(run.error_trace)):
            cells = [
                str(k),
                _fmt(run.error_trace[k]),
                _fmt(run.v_trace[k]),
                _fmt(run.u_hat_norms[k]),
            ]
            for y in run.external_outputs[k]:
                cells.extend(_fmt(v) for v in y)
            fh.write(",".join(cells) + "\n")


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"
