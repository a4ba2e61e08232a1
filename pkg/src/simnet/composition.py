"""Network-level gain composition.

From verified per-node gains this module assembles the coupling-gain
operator, certifies the small-gain condition (spectral radius of the
normalized operator below one, or a column-sum bound for templated
families), constructs the aggregation weights mu with the network decay
rate, and emits the composed certificate whose value is

    V(x, xhat, modes) = sum_i mu_i V_i(x_i, xhat_i).

Infinite families are handled in templated form only: finitely many node
templates with uniform gains and bounded fan-in/fan-out, certified through
column-sum bounds (valid because the spectral radius of a nonnegative
operator is dominated by its sup column sum); simulation always runs on
finite instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certificates import (
    DissipationReport,
    LocalGains,
    evaluate_V,
    interface_input,
)
from .errors import CompositionError, DimensionMismatchError
from .linalg import DEFAULT_TOL, ToleranceProfile, spectral_radius
from .network import InterconnectionGraph, NetworkSpec, assemble_internal_input, step_with_modes

# strictness margins pinned by the contract
RADIUS_MARGIN = 1e-9
MU_FEASIBILITY_MARGIN = 1e-6
EQ_SLACK = 1e-9


@dataclass(frozen=True)
class TemplateGains:
    """Uniform gains of one node template plus who reads its output.

    readers lists (reader_template_index, count): how many instances of that
    template take a node of this template as in-neighbor.  A non-finite
    count models unbounded fan-out and is rejected by the bound check.
    """

    lam: float
    alpha: float
    rho_int: float
    n_bar: int
    readers: tuple[tuple[int, float], ...]
    rho_ext: float = 0.0


@dataclass(frozen=True)
class GainOperator:
    """Coupling gains over the node set: dense for finite networks,
    templated for uniform infinite families."""

    kind: str  # "finite" | "templated"
    node_ids: tuple[int, ...] | None = None
    lam: np.ndarray | None = None
    gamma: np.ndarray | None = None
    alphas: np.ndarray | None = None
    rho_exts: np.ndarray | None = None
    templates: tuple[TemplateGains, ...] | None = None

    @property
    def lam_min(self) -> float:
        if self.kind == "finite":
            return float(self.lam.min())
        return min(t.lam for t in self.templates)

    @property
    def alpha_min(self) -> float:
        if self.kind == "finite":
            return float(self.alphas.min())
        return min(t.alpha for t in self.templates)

    @property
    def rho_ext_max(self) -> float:
        if self.kind == "finite":
            return float(self.rho_exts.max())
        return max(t.rho_ext for t in self.templates)

    def gamma_column_sum(self, j: int) -> float:
        """Total gain loading on the output of node/template j."""
        if self.kind == "finite":
            return float(self.gamma[:, j].sum())
        tpl = self.templates[j]
        return sum(
            count * self.templates[t].rho_int * self.templates[t].n_bar / tpl.alpha
            for t, count in tpl.readers
        )

    def psi_column_sum(self, j: int) -> float:
        if self.kind == "finite":
            return float((self.gamma[:, j] / self.lam).sum())
        tpl = self.templates[j]
        return sum(
            count
            * self.templates[t].rho_int
            * self.templates[t].n_bar
            / (tpl.alpha * self.templates[t].lam)
            for t, count in tpl.readers
        )

    @property
    def gamma_colsum_sup(self) -> float:
        """sup over columns of the gamma column sums (finite-loading statistic)."""
        if self.kind == "finite":
            return max(
                (self.gamma_column_sum(j) for j in range(len(self.node_ids))),
                default=0.0,
            )
        return max(self.gamma_column_sum(j) for j in range(len(self.templates)))


def build_gain_operator(gains, graph: InterconnectionGraph) -> GainOperator:
    """Dense gain operator on the given graph.

    gamma[i, j] = rho_int_i * N_i * (1 / alpha_j) for j feeding i (zero
    elsewhere), with N_i the in-degree of i in this graph.  ``gains`` is a
    dict keyed by node id or a sequence aligned with graph.nodes.
    """
    gains_by_id = _gains_by_id(gains, graph.nodes)
    n = len(graph.nodes)
    pos = {node: p for p, node in enumerate(graph.nodes)}
    lam = np.array([gains_by_id[i].lam for i in graph.nodes])
    alphas = np.array([gains_by_id[i].alpha for i in graph.nodes])
    rho_exts = np.array([gains_by_id[i].rho_ext for i in graph.nodes])
    gamma = np.zeros((n, n))
    for i in graph.nodes:
        fan_in = graph.in_neighbors.get(i, ())
        for j in fan_in:
            gamma[pos[i], pos[j]] = (
                gains_by_id[i].rho_int * len(fan_in) / gains_by_id[j].alpha
            )
    return GainOperator(
        kind="finite",
        node_ids=tuple(graph.nodes),
        lam=lam,
        gamma=gamma,
        alphas=alphas,
        rho_exts=rho_exts,
    )


def build_gain_operator_from_network(spec: NetworkSpec, gains) -> GainOperator:
    """Mode-robust dense operator straight from a network spec.

    Uses per-mode in-neighbor sets and takes the entrywise worst case over
    modes, so the result is valid for arbitrary (asynchronous) switching.
    """
    gains_by_id = _gains_by_id(gains, spec.graph.nodes)
    ids = spec.graph.nodes
    pos = {node: p for p, node in enumerate(ids)}
    n = len(ids)
    gamma = np.zeros((n, n))
    for sub in spec.subsystems:
        gi = gains_by_id[sub.id]
        for s in range(sub.n_modes):
            fan_in = sub.in_neighbors(s)
            for j in fan_in:
                cand = gi.rho_int * len(fan_in) / gains_by_id[j].alpha
                gamma[pos[sub.id], pos[j]] = max(gamma[pos[sub.id], pos[j]], cand)
    return GainOperator(
        kind="finite",
        node_ids=ids,
        lam=np.array([gains_by_id[i].lam for i in ids]),
        gamma=gamma,
        alphas=np.array([gains_by_id[i].alpha for i in ids]),
        rho_exts=np.array([gains_by_id[i].rho_ext for i in ids]),
    )


def templated_gain_operator(templates) -> GainOperator:
    return GainOperator(kind="templated", templates=tuple(templates))


def _gains_by_id(gains, node_ids) -> dict[int, LocalGains]:
    if isinstance(gains, dict):
        table = dict(gains)
    else:
        seq = list(gains)
        if len(seq) != len(node_ids):
            raise DimensionMismatchError(
                f"need gains for {len(node_ids)} nodes, got {len(seq)}"
            )
        table = dict(zip(node_ids, seq))
    missing = [i for i in node_ids if i not in table]
    if missing:
        raise CompositionError(f"missing gains for nodes {missing}", nodes=missing)
    return table


@dataclass(frozen=True)
class SmallGainResult:
    radius_or_bound: float
    satisfied: bool
    kind: str

    def __bool__(self) -> bool:
        return self.satisfied


def check_small_gain(op: GainOperator, tol: ToleranceProfile = DEFAULT_TOL) -> SmallGainResult:
    """Certify the small-gain condition.

    Finite: spectral radius of Psi = Lambda^-1 Gamma strictly below one.
    Templated: sup column sum of Psi below one (which dominates the radius
    for nonnegative operators, and is finite exactly when every template has
    bounded fan-out).
    """
    if op.kind == "finite":
        psi = op.gamma / op.lam[:, None]
        radius = spectral_radius(psi, tol)
        return SmallGainResult(radius, radius < 1.0 - RADIUS_MARGIN, "finite")
    sums = [op.psi_column_sum(j) for j in range(len(op.templates))]
    if any(not math.isfinite(s) for s in sums):
        raise CompositionError(
            "templated gain operator has unbounded column sums (infinite fan-out)",
            column_sums=sums,
        )
    bound = max(sums)
    return SmallGainResult(bound, bound < 1.0, "templated")


@dataclass(frozen=True)
class MuCertificate:
    """Aggregation weights and the network decay rate they certify.

    mu is None for templated operators (uniform weights, materialized when
    the composed certificate is built for a finite instance).
    """

    lambda_inf: float
    mu: np.ndarray | None
    operator: GainOperator


def construct_mu(op: GainOperator, tol: ToleranceProfile = DEFAULT_TOL) -> MuCertificate:
    """Construct weights mu > 0 and the largest certifiable decay rate.

    Finite case: bisection for the largest lam_inf in (0, min lam_i) keeping
    r(Gamma (Lambda - lam_inf I)^-1) <= 1 - 1e-6; at that rate mu solves
    (I - T') mu = 1, which by Neumann nonnegativity gives mu >= 1 and the
    componentwise weighted-decay inequality with margin.  Templated case:
    uniform weights and lam_inf = min over templates of (lam - gamma column
    sum), required positive.
    """
    sg = check_small_gain(op, tol)
    if not sg.satisfied:
        raise CompositionError(
            f"small-gain condition not satisfied (radius/bound {sg.radius_or_bound:.6f})",
            radius_or_bound=sg.radius_or_bound,
        )
    if op.kind == "templated":
        lam_inf = min(
            t.lam - op.gamma_column_sum(j) for j, t in enumerate(op.templates)
        )
        if lam_inf <= 0.0:
            raise CompositionError(
                f"templated decay margin is nonpositive ({lam_inf:.3e})",
                lambda_inf=lam_inf,
            )
        return MuCertificate(lambda_inf=lam_inf, mu=None, operator=op)

    lam = op.lam
    gamma = op.gamma
    lam_floor = float(lam.min())

    def feasible(x: float) -> bool:
        if x >= lam_floor:
            return False
        t_mat = gamma / (lam - x)[None, :]
        return spectral_radius(t_mat, tol) <= 1.0 - MU_FEASIBILITY_MARGIN

    if not feasible(0.0):
        raise CompositionError(
            "no feasible decay rate: the normalized gain operator is too close "
            "to the small-gain boundary (numerical degeneracy)",
        )
    lo, hi = 0.0, lam_floor
    while hi - lo > MU_FEASIBILITY_MARGIN:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    lam_inf = lo
    if lam_inf <= MU_FEASIBILITY_MARGIN:
        raise CompositionError(
            f"no feasible decay rate above tolerance (lambda_inf = {lam_inf:.3e})",
            lambda_inf=lam_inf,
        )
    t_mat = gamma / (lam - lam_inf)[None, :]
    n = len(lam)
    mu = np.linalg.solve(np.eye(n) - t_mat.T, np.ones(n))
    core = MuCertificate(lambda_inf=lam_inf, mu=mu, operator=op)
    _verify_weighted_decay(core)
    return core


def _verify_weighted_decay(core: MuCertificate) -> None:
    """Componentwise check of the weighted-decay inequality before returning."""
    op = core.operator
    mu = core.mu
    if np.any(mu <= 0.0):
        raise CompositionError("constructed weights are not positive", mu=mu.tolist())
    lhs = (-op.lam * mu + op.gamma.T @ mu) / mu
    worst = float(lhs.max())
    if worst > -core.lambda_inf + EQ_SLACK:
        raise CompositionError(
            f"weighted-decay inequality violated (worst {worst:.3e} vs "
            f"{-core.lambda_inf:.3e})",
            worst=worst, lambda_inf=core.lambda_inf,
        )


class ComposedCertificate:
    """Network certificate: weighted sum of local tracking energies."""

    p_exp = 2
    q_exp = 2
    b_exp = 2

    def __init__(self, mu, lambda_inf, alpha_total, rho_ext_coeff, certificates):
        self.mu = np.asarray(mu, dtype=float)
        self.lambda_inf = float(lambda_inf)
        self.alpha_total = float(alpha_total)
        self.rho_ext_coeff = float(rho_ext_coeff)
        self.certificates = tuple(certificates)
        if np.any(self.mu <= 0.0):
            raise CompositionError("mu must be positive componentwise")
        if not (0.0 < self.lambda_inf < 1.0):
            raise CompositionError(
                f"lambda_inf must lie in (0, 1), got {self.lambda_inf}"
            )
        if self.alpha_total <= 0.0:
            raise CompositionError("alpha_total must be positive")

    @property
    def mu_min(self) -> float:
        return float(self.mu.min())

    @property
    def mu_max(self) -> float:
        return float(self.mu.max())

    def rho_ext(self, t: float) -> float:
        return self.rho_ext_coeff * t**self.q_exp

    def evaluate_V(self, states, abstract_states, modes) -> float:
        """V = sum_i mu_i V_i at the given per-node modes."""
        return float(
            sum(
                self.mu[i] * evaluate_V(cert, states[i], abstract_states[i], modes[i])
                for i, cert in enumerate(self.certificates)
            )
        )


def compose_certificate(core: MuCertificate, gains, local_certs) -> ComposedCertificate:
    """Materialize the composed certificate for a finite node list.

    For templated cores the uniform weights are instantiated at the length
    of ``local_certs``.  alpha = mu_min * min alpha_i and the external-input
    term is rho_ext(t) = mu_max * max rho_ext_i * t^2.
    """
    certs = list(local_certs)
    gains = list(gains)
    if len(gains) != len(certs):
        raise DimensionMismatchError(
            f"gains ({len(gains)}) and certificates ({len(certs)}) must align"
        )
    if core.mu is None:
        mu = np.ones(len(certs))
    else:
        if len(core.mu) != len(certs):
            raise DimensionMismatchError(
                f"mu has {len(core.mu)} entries but {len(certs)} certificates given"
            )
        mu = core.mu
    alpha_total = float(mu.min()) * min(g.alpha for g in gains)
    rho_ext_coeff = float(mu.max()) * max(g.rho_ext for g in gains)
    return ComposedCertificate(mu, core.lambda_inf, alpha_total, rho_ext_coeff, certs)


def check_composed_dissipation(
    composed: ComposedCertificate,
    spec: NetworkSpec,
    samples: int = 500,
    seed: int = 0,
    synchronized: bool = False,
    tol: ToleranceProfile = DEFAULT_TOL,
) -> DissipationReport:
    """Refutation oracle for the composed one-step inequality on a finite net.

    Each sample draws states, abstract states, abstract inputs and a mode
    pair (per node, or one shared pair when ``synchronized``; use that for
    certificates that cover synchronized topology switching only), wires the
    internal inputs consistently on both layers, refines u through the
    interfaces and requires

        V'(x+, xhat+) - V(x, xhat) <= -lambda_inf V + rho_ext(|uhat|_2)

    with slack 1e-9 * (1 + V).
    """
    if spec.abstract_subsystems is None:
        raise CompositionError("composed dissipation needs declared abstract subsystems")
    if len(composed.certificates) != spec.n_nodes:
        raise DimensionMismatchError(
            f"composed certificate covers {len(composed.certificates)} nodes, "
            f"network has {spec.n_nodes}"
        )
    abstract = spec.abstract_view()
    rng = np.random.default_rng(seed)
    n_modes = [sub.n_modes for sub in spec.subsystems]
    if synchronized and len(set(n_modes)) != 1:
        raise CompositionError(
            "synchronized mode draws need a uniform mode count across nodes"
        )
    worst = -np.inf
    witness = None
    violations = 0
    for _ in range(samples):
        states = [rng.uniform(-1, 1, sub.n) for sub in spec.subsystems]
        hat_states = [rng.uniform(-1, 1, sub.n) for sub in abstract.subsystems]
        u_hats = [rng.uniform(-1, 1, sub.m) for sub in abstract.subsystems]
        if synchronized:
            pairs = composed.certificates[0].admissible_pairs()
            s, s2 = pairs[rng.integers(len(pairs))]
            modes_now = [s] * spec.n_nodes
            modes_next = [s2] * spec.n_nodes
        else:
            modes_now, modes_next = [], []
            for cert in composed.certificates:
                pairs = cert.admissible_pairs()
                s, s2 = pairs[rng.integers(len(pairs))]
                modes_now.append(s)
                modes_next.append(s2)
        w_hats = assemble_internal_input(abstract, hat_states, modes_now)
        inputs = [
            interface_input(
                cert, states[i], hat_states[i], u_hats[i], w_hats[i], modes_now[i]
            )
            for i, cert in enumerate(composed.certificates)
        ]
        nxt = step_with_modes(spec, states, inputs, modes_now)
        nxt_hat = step_with_modes(abstract, hat_states, u_hats, modes_now)
        v_now = composed.evaluate_V(states, hat_states, modes_now)
        v_next = composed.evaluate_V(nxt.next_states, nxt_hat.next_states, modes_next)
        u_hat_sq = float(sum(np.sum(u**2) for u in u_hats))
        slack = v_next - v_now - (
            -composed.lambda_inf * v_now + composed.rho_ext_coeff * u_hat_sq
        )
        allowed = 1e-9 * (1.0 + abs(v_now))
        if slack > worst:
            worst = float(slack)
            if slack > allowed:
                witness = {
                    "modes_now": modes_now,
                    "modes_next": modes_next,
                    "V": v_now,
                    "V_next": v_next,
                    "slack": float(slack),
                }
        if slack > allowed:
            violations += 1
    return DissipationReport(
        ok=violations == 0,
        worst_slack=worst,
        samples=samples,
        violations=violations,
        witness=witness,
    )
