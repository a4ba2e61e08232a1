"""Quadratic tracking certificates for one subsystem/abstraction pair.

A certificate bundles per-mode matrices (M, K) with the abstraction maps
(P, Q, R, T) and a decay rate kappa.  Its obligations are three matrix
conditions, checked mode by mode:

  output dominance   C_s' C_s <= M_s   and   C_s P = Chat_s
  decay              3 F_s' M_s2 F_s <= (1 - kappa) M_s,  F_s = A_s + B_s K_s,
                     for every admissible ordered mode pair (s, s2)
  structure          A_s P = P Ahat_s - B_s Q_s   and   D_s = P Dhat_s - B_s T_s

From a verified certificate the dissipation gains follow in closed form and
the refinement interface u = K(x - P xhat) + Q xhat + R uhat + T what makes
the tracking energy V = (x - P xhat)' M (x - P xhat) decrease up to the
gain-weighted input terms.  A seeded sampler provides the refutation oracle
for that inequality.

All functions are pure; mode pairs and samples may be checked in parallel
and reports aggregate order-independently (worst slack is a max).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CertificateError,
    ConvergenceError,
    DimensionMismatchError,
    SchemaError,
    StructuralInfeasibleError,
)
from .linalg import (
    DEFAULT_TOL,
    SymMatrix,
    ToleranceProfile,
    operator_norm,
    principal_sqrt,
    psd_margin,
    psd_order,
    solve_linear_least_squares,
)
from .network import SwitchedLinearSubsystem

SCHEMA_CERTS = "simnet-certs-v1"


class LocalCertificate:
    """Per-subsystem certificate data; immutable after construction."""

    def __init__(self, M, K, P, Q, R, T, kappa, transitions=None, node_id=None):
        self.M = tuple(m if isinstance(m, SymMatrix) else SymMatrix(m) for m in M)
        self.K = tuple(np.array(k, dtype=float) for k in K)
        self.P = np.array(P, dtype=float)
        self.Q = tuple(np.array(q, dtype=float) for q in Q)
        self.R = tuple(np.array(r, dtype=float) for r in R)
        self.T = tuple(np.array(t, dtype=float) for t in T)
        self.kappa = float(kappa)
        self.node_id = node_id
        self.transitions = (
            tuple((int(a), int(b)) for a, b in transitions) if transitions else None
        )
        self._validate()

    @property
    def n_modes(self) -> int:
        return len(self.M)

    @property
    def n(self) -> int:
        return self.M[0].dim

    @property
    def m(self) -> int:
        return self.K[0].shape[0]

    @property
    def n_abstract(self) -> int:
        return self.P.shape[1]

    def admissible_pairs(self):
        """Ordered (current, next) mode pairs; all pairs unless restricted."""
        if self.transitions is not None:
            return self.transitions
        return tuple(itertools.product(range(self.n_modes), repeat=2))

    def error_vector(self, x, x_hat) -> np.ndarray:
        return np.asarray(x, dtype=float) - self.P @ np.asarray(x_hat, dtype=float)

    def _validate(self):
        if not (0.0 < self.kappa < 1.0):
            raise CertificateError(f"kappa must lie in (0, 1), got {self.kappa}")
        r = self.n_modes
        if not (len(self.K) == len(self.Q) == len(self.R) == len(self.T) == r):
            raise DimensionMismatchError(
                "per-mode matrix families must all have the same length",
                modes=r,
            )
        n, m, nh = self.n, self.m, self.n_abstract
        if self.P.shape[0] != n:
            raise DimensionMismatchError(
                f"P must have {n} rows, got {self.P.shape}", matrix="P"
            )
        for s in range(r):
            if self.M[s].dim != n:
                raise DimensionMismatchError(f"M[{s}] must be {n}x{n}", mode=s)
            eigs = np.linalg.eigvalsh(self.M[s].entries)
            if float(eigs.min()) < -1e-8 * (1.0 + float(np.abs(eigs).max())):
                raise CertificateError(
                    f"M[{s}] must be positive semidefinite "
                    f"(lambda_min = {float(eigs.min()):.3e})",
                    mode=s, lambda_min=float(eigs.min()),
                )
            if self.K[s].shape != (m, n):
                raise DimensionMismatchError(f"K[{s}] must be {m}x{n}", mode=s)
            if self.Q[s].shape != (m, nh):
                raise DimensionMismatchError(f"Q[{s}] must be {m}x{nh}", mode=s)
            if self.R[s].ndim != 2 or self.R[s].shape[0] != m:
                raise DimensionMismatchError(f"R[{s}] must have {m} rows", mode=s)
            if self.T[s].ndim != 2 or self.T[s].shape[0] != m:
                raise DimensionMismatchError(f"T[{s}] must have {m} rows", mode=s)
        if self.transitions is not None:
            for s, s2 in self.transitions:
                if not (0 <= s < r and 0 <= s2 < r):
                    raise CertificateError(
                        f"transition pair ({s}, {s2}) references an unknown mode",
                        pair=(s, s2),
                    )


@dataclass(frozen=True)
class LocalGains:
    """Dissipation gains extracted from a verified certificate."""

    alpha: float
    lam: float
    rho_int: float
    rho_ext: float
    p_exp: int = 2
    q_exp: int = 2

    def __post_init__(self):
        if self.alpha <= 0:
            raise CertificateError(f"alpha must be positive, got {self.alpha}")
        if not (0.0 < self.lam < 1.0):
            raise CertificateError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.rho_int < 0 or self.rho_ext < 0:
            raise CertificateError("gain coefficients must be nonnegative")


@dataclass(frozen=True)
class VerificationReport:
    """Boolean verdict plus per-mode diagnostics; truthy iff the check passed."""

    ok: bool
    check: str
    failures: tuple[str, ...] = ()
    margins: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def _closed_loop(concrete: SwitchedLinearSubsystem, cert: LocalCertificate, s: int):
    mode = concrete.modes[s]
    return mode.A + mode.B @ cert.K[s]


def verify_output_dominance(
    cert: LocalCertificate,
    concrete: SwitchedLinearSubsystem,
    abstract_sub: SwitchedLinearSubsystem,
    tol: ToleranceProfile = DEFAULT_TOL,
) -> VerificationReport:
    """Per mode: C'C below M in the semidefinite order, and C P matching the
    abstract output map entrywise within eig_tol.

    Together these give the output-error lower bound with unit coefficient.
    """
    failures = []
    margins = {}
    for s in range(cert.n_modes):
        c = concrete.modes[s].C
        c_hat = abstract_sub.modes[s].C
        gram_margin = psd_margin(SymMatrix(c.T @ c), cert.M[s])
        match = float(np.abs(c @ cert.P - c_hat).max()) if c_hat.size else 0.0
        margins[s] = {"psd_margin": gram_margin, "output_match": match}
        scale = 1.0 + max(
            float(np.abs(np.linalg.eigvalsh(c.T @ c)).max()),
            float(np.abs(np.linalg.eigvalsh(cert.M[s].entries)).max()),
        )
        if gram_margin < -tol.psd_tol * scale:
            failures.append(f"mode {s}: output Gram matrix is not dominated by M")
        if match > tol.eig_tol:
            failures.append(f"mode {s}: C P differs from the abstract C by {match:.3e}")
    return VerificationReport(not failures, "output_dominance", tuple(failures), margins)


def verify_decay(
    cert: LocalCertificate,
    concrete: SwitchedLinearSubsystem,
    tol: ToleranceProfile = DEFAULT_TOL,
) -> VerificationReport:
    """3 F_s' M_s2 F_s <= (1 - kappa) M_s over all admissible mode pairs."""
    failures = []
    margins = {}
    for s, s2 in cert.admissible_pairs():
        f = _closed_loop(concrete, cert, s)
        lhs = SymMatrix(3.0 * f.T @ cert.M[s2].entries @ f)
        rhs = SymMatrix((1.0 - cert.kappa) * cert.M[s].entries)
        margins[(s, s2)] = psd_margin(lhs, rhs)
        if not psd_order(lhs, rhs, tol):
            failures.append(
                f"mode pair ({s} -> {s2}): decay inequality fails "
                f"(lambda_min margin {margins[(s, s2)]:.3e})"
            )
    return VerificationReport(not failures, "decay", tuple(failures), margins)


def verify_structure(
    cert: LocalCertificate,
    concrete: SwitchedLinearSubsystem,
    abstract_sub: SwitchedLinearSubsystem,
    tol: ToleranceProfile = DEFAULT_TOL,
) -> VerificationReport:
    """Structural matching: A P = P Ahat - B Q and D = P Dhat - B T per mode,
    with residuals measured entrywise against eig_tol * (1 + max|A|).
    """
    failures = []
    margins = {}
    for s in range(cert.n_modes):
        cm = concrete.modes[s]
        am = abstract_sub.modes[s]
        res_state = float(
            np.abs(cm.A @ cert.P - cert.P @ am.A + cm.B @ cert.Q[s]).max()
        )
        res_coupling = (
            float(np.abs(cm.D - cert.P @ am.D + cm.B @ cert.T[s]).max())
            if cm.D.size or am.D.size or cert.T[s].size
            else 0.0
        )
        margins[s] = {"state": res_state, "coupling": res_coupling}
        limit = tol.eig_tol * (1.0 + float(np.abs(cm.A).max()))
        if res_state > limit:
            failures.append(f"mode {s}: state matching residual {res_state:.3e}")
        if res_coupling > limit:
            failures.append(f"mode {s}: coupling matching residual {res_coupling:.3e}")
    return VerificationReport(not failures, "structure", tuple(failures), margins)


def derive_gains(
    cert: LocalCertificate,
    concrete: SwitchedLinearSubsystem,
    abstract_sub: SwitchedLinearSubsystem,
    tol: ToleranceProfile = DEFAULT_TOL,
) -> LocalGains:
    """Dissipation gains of a verified certificate.

    alpha = 1 and lambda = kappa by construction; the input gains are the
    worst case over admissible mode pairs of

        rho_int = 3 |sqrt(M_s2) D_s|^2
        rho_ext = 3 |sqrt(M_s2) (B_s R_s - P Bhat_s)|^2

    with |.| the induced 2-norm.  Raises CertificateError if any of the three
    verification obligations fails.
    """
    reports = [
        verify_output_dominance(cert, concrete, abstract_sub, tol),
        verify_decay(cert, concrete, tol),
        verify_structure(cert, concrete, abstract_sub, tol),
    ]
    bad = [r for r in reports if not r]
    if bad:
        raise CertificateError(
            "certificate verification failed: "
            + "; ".join(f"{r.check}: {', '.join(r.failures)}" for r in bad),
            checks={r.check: r.failures for r in bad},
        )
    rho_int = 0.0
    rho_ext = 0.0
    for s, s2 in cert.admissible_pairs():
        sq = principal_sqrt(cert.M[s2], tol).entries
        cm = concrete.modes[s]
        am = abstract_sub.modes[s]
        rho_int = max(rho_int, 3.0 * operator_norm(sq @ cm.D) ** 2)
        mismatch = cm.B @ cert.R[s] - cert.P @ am.B
        rho_ext = max(rho_ext, 3.0 * operator_norm(sq @ mismatch) ** 2)
    return LocalGains(alpha=1.0, lam=cert.kappa, rho_int=rho_int, rho_ext=rho_ext)


def interface_input(cert: LocalCertificate, x, x_hat, u_hat, w_hat, mode: int) -> np.ndarray:
    """Refined input u = K (x - P xhat) + Q xhat + R uhat + T what."""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    u_hat = np.asarray(u_hat, dtype=float)
    w_hat = np.asarray(w_hat, dtype=float)
    if x.shape != (cert.n,) or x_hat.shape != (cert.n_abstract,):
        raise DimensionMismatchError(
            f"interface expects state dims ({cert.n},)/({cert.n_abstract},), "
            f"got {x.shape}/{x_hat.shape}"
        )
    return (
        cert.K[mode] @ cert.error_vector(x, x_hat)
        + cert.Q[mode] @ x_hat
        + cert.R[mode] @ u_hat
        + cert.T[mode] @ w_hat
    )


def evaluate_V(cert: LocalCertificate, x, x_hat, mode: int) -> float:
    """Tracking energy (x - P xhat)' M_mode (x - P xhat); nonnegative."""
    e = cert.error_vector(x, x_hat)
    return max(float(e @ cert.M[mode].entries @ e), 0.0)


@dataclass(frozen=True)
class DissipationReport:
    """Outcome of the sampled dissipation check; truthy iff no violation."""

    ok: bool
    worst_slack: float
    samples: int
    violations: int
    witness: dict | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_dissipation_sampled(
    cert: LocalCertificate,
    concrete: SwitchedLinearSubsystem,
    abstract_sub: SwitchedLinearSubsystem,
    samples: int = 1000,
    seed: int = 0,
    gains: LocalGains | None = None,
    tol: ToleranceProfile = DEFAULT_TOL,
) -> DissipationReport:
    """Refutation oracle for the one-step dissipation inequality.

    Draws ``samples`` tuples (x, xhat, w, what, uhat) per admissible mode
    pair from uniform [-1, 1] boxes (all terms are quadratic, so scale is
    immaterial), refines u through the interface, advances both systems one
    step and checks

        V_s2(x+, xhat+) - V_s(x, xhat)
            <= -lam V_s + rho_ext |uhat|^2 + rho_int |w - what|^2

    pointwise with slack 1e-9 * (1 + |V|).  Slack is reported so that
    negative means satisfied; the worst case is the max over samples.
    """
    if gains is None:
        gains = derive_gains(cert, concrete, abstract_sub, tol)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    witness = None
    violations = 0
    total = 0
    for s, s2 in cert.admissible_pairs():
        cm = concrete.modes[s]
        am = abstract_sub.modes[s]
        x = rng.uniform(-1.0, 1.0, size=(samples, concrete.n))
        xh = rng.uniform(-1.0, 1.0, size=(samples, abstract_sub.n))
        w = rng.uniform(-1.0, 1.0, size=(samples, concrete.internal_width))
        wh = rng.uniform(-1.0, 1.0, size=(samples, abstract_sub.internal_width))
        uh = rng.uniform(-1.0, 1.0, size=(samples, abstract_sub.m))
        e = x - xh @ cert.P.T
        u = e @ cert.K[s].T + xh @ cert.Q[s].T + uh @ cert.R[s].T + wh @ cert.T[s].T
        x_next = x @ cm.A.T + w @ cm.D.T + u @ cm.B.T
        xh_next = xh @ am.A.T + wh @ am.D.T + uh @ am.B.T
        e_next = x_next - xh_next @ cert.P.T
        v = np.einsum("ij,jk,ik->i", e, cert.M[s].entries, e)
        v_next = np.einsum("ij,jk,ik->i", e_next, cert.M[s2].entries, e_next)
        rhs = (
            -gains.lam * v
            + gains.rho_ext * np.sum(uh**2, axis=1)
            + gains.rho_int * np.sum((w - wh) ** 2, axis=1)
        )
        slack = v_next - v - rhs
        allowed = 1e-9 * (1.0 + np.abs(v))
        bad = slack > allowed
        violations += int(bad.sum())
        total += samples
        idx = int(np.argmax(slack))
        if slack[idx] > worst:
            worst = float(slack[idx])
            if bad[idx]:
                witness = {
                    "mode_pair": (s, s2),
                    "x": x[idx].tolist(),
                    "x_hat": xh[idx].tolist(),
                    "w": w[idx].tolist(),
                    "w_hat": wh[idx].tolist(),
                    "u_hat": uh[idx].tolist(),
                    "slack": float(slack[idx]),
                }
    return DissipationReport(
        ok=violations == 0,
        worst_slack=worst,
        samples=total,
        violations=violations,
        witness=witness,
    )


def synthesize_certificate_matrix(
    concrete: SwitchedLinearSubsystem,
    K,
    kappa: float,
    tol: ToleranceProfile = DEFAULT_TOL,
) -> SymMatrix:
    """Conservative mode-independent certificate matrix by fixed-point iteration.

    Iterates M <- sum_s C_s'C_s + sum_s Ft_s' M Ft_s with the scaled closed
    loops Ft_s = sqrt(3/(1-kappa)) (A_s + B_s K_s).  Convergence yields a
    common M verifying both matrix conditions with margin; divergence means
    this sufficient-only scheme fails, not that no certificate exists.
    """
    if not (0.0 < kappa < 1.0):
        raise CertificateError(f"kappa must lie in (0, 1), got {kappa}")
    ks = [np.asarray(k, dtype=float) for k in K]
    if len(ks) != concrete.n_modes:
        raise DimensionMismatchError(
            f"need one feedback gain per mode ({concrete.n_modes}), got {len(ks)}"
        )
    scale = np.sqrt(3.0 / (1.0 - kappa))
    loops = [
        scale * (concrete.modes[s].A + concrete.modes[s].B @ ks[s])
        for s in range(concrete.n_modes)
    ]
    base = sum(m.C.T @ m.C for m in concrete.modes)
    m_cur = base.copy()
    cap = 1e12 * (1.0 + float(np.abs(base).max()))
    for _ in range(tol.iter_max):
        m_next = base + sum(f.T @ m_cur @ f for f in loops)
        change = float(np.abs(m_next - m_cur).max())
        if not np.isfinite(change) or float(np.abs(m_next).max()) > cap:
            raise ConvergenceError(
                "certificate-matrix iteration diverged (joint spectral condition "
                "fails for this conservative scheme); this does not prove that no "
                "certificate exists",
                growth=float(np.abs(m_next).max()),
            )
        m_cur = m_next
        if change < tol.eig_tol * (1.0 + float(np.abs(m_cur).max())):
            break
    else:
        raise ConvergenceError(
            f"certificate-matrix iteration did not settle within {tol.iter_max} "
            f"iterations",
            iter_max=tol.iter_max,
        )
    result = SymMatrix(m_cur)
    for s in range(concrete.n_modes):
        c = concrete.modes[s].C
        if not psd_order(SymMatrix(c.T @ c), result, tol):
            raise CertificateError("synthesized matrix fails output dominance", mode=s)
        lhs = SymMatrix(3.0 * (loops[s] / scale).T @ result.entries @ (loops[s] / scale))
        if not psd_order(lhs, SymMatrix((1.0 - kappa) * result.entries), tol):
            raise CertificateError("synthesized matrix fails the decay condition", mode=s)
    return result


@dataclass(frozen=True)
class StructuralSolution:
    Q: tuple
    T: tuple
    C_hat: tuple
    D_hat: tuple
    R: tuple


def solve_structural(
    concrete: SwitchedLinearSubsystem,
    abstract_A,
    P,
    *,
    abstract_B,
    abstract_D=None,
    weight=None,
    tol: ToleranceProfile = DEFAULT_TOL,
) -> StructuralSolution:
    """Solve the structural matching equations for Q, T and the abstract maps.

    Per mode, Q_s and T_s are minimum-norm least-squares solutions of
    B_s Q = P Ahat_s - A_s P and B_s T = P Dhat_s - D_s; a residual above
    eig_tol * (1 + max|A_s|) means the abstraction is infeasible for this P.
    Chat_s = C_s P always; R_s is the weight-optimal interface gain
    (BMB)^-1 BMP Bhat minimizing the external-input mismatch (identity
    weight when none is given).  Dhat defaults to zero (fully decoupled
    abstraction).
    """
    p = np.asarray(P, dtype=float)
    n_hat = p.shape[1]
    r = concrete.n_modes
    a_hats = _per_mode(abstract_A, r)
    b_hats = _per_mode(abstract_B, r)
    if abstract_D is None:
        d_hats = [np.zeros((n_hat, concrete.internal_width))] * r
    else:
        d_hats = [np.asarray(d, dtype=float) for d in _per_mode(abstract_D, r)]
    weights = (
        [np.eye(concrete.n)] * r
        if weight is None
        else [np.asarray(w) for w in _per_mode(weight, r)]
    )
    qs, ts, c_hats, rs = [], [], [], []
    for s in range(r):
        cm = concrete.modes[s]
        limit = tol.eig_tol * (1.0 + float(np.abs(cm.A).max()))
        q, res_q = solve_linear_least_squares(cm.B, p @ a_hats[s] - cm.A @ p, tol)
        if res_q > limit:
            raise StructuralInfeasibleError(
                f"abstraction infeasible for this P: state matching residual "
                f"{res_q:.3e} in mode {s}",
                equation="state", mode=s, residual=res_q,
            )
        t, res_t = solve_linear_least_squares(cm.B, p @ d_hats[s] - cm.D, tol)
        if res_t > limit:
            raise StructuralInfeasibleError(
                f"abstraction infeasible for this P: coupling matching residual "
                f"{res_t:.3e} in mode {s}",
                equation="coupling", mode=s, residual=res_t,
            )
        w = weights[s]
        gram = cm.B.T @ w @ cm.B
        rhs = cm.B.T @ w @ p @ b_hats[s]
        r_gain, _ = solve_linear_least_squares(gram, rhs, tol)
        qs.append(q)
        ts.append(t)
        c_hats.append(cm.C @ p)
        rs.append(r_gain)
    return StructuralSolution(
        Q=tuple(qs), T=tuple(ts), C_hat=tuple(c_hats), D_hat=tuple(d_hats), R=tuple(rs)
    )


def _per_mode(value, r: int) -> list:
    """Broadcast a single matrix to all modes, or pass a per-mode list through.

    A 2-d array (or nested list of scalars) is one matrix for every mode; a
    sequence of 2-d matrices is a per-mode family.
    """
    if isinstance(value, (list, tuple)):
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            arr = None
        if arr is not None and arr.ndim == 2:
            return [arr] * r
        seq = [np.asarray(v, dtype=float) for v in value]
        if len(seq) != r:
            raise DimensionMismatchError(
                f"per-mode list must have {r} entries, got {len(seq)}"
            )
        return seq
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 3:
        if arr.shape[0] != r:
            raise DimensionMismatchError(
                f"per-mode stack must have {r} entries, got {arr.shape[0]}"
            )
        return list(arr)
    return [arr] * r


# ---------------------------------------------------------------------------
# JSON ingestion


def certificates_to_json(certs: dict[int, LocalCertificate]) -> dict:
    def cert_json(node_id: int, cert: LocalCertificate) -> dict:
        def mode_map(family):
            return {str(s): np.asarray(mat).tolist() for s, mat in enumerate(family)}

        data = {
            "id": node_id,
            "kappa": cert.kappa,
            "M": {str(s): cert.M[s].entries.tolist() for s in range(cert.n_modes)},
            "K": mode_map(cert.K),
            "P": cert.P.tolist(),
            "Q": mode_map(cert.Q),
            "R": mode_map(cert.R),
            "T": mode_map(cert.T),
        }
        if cert.transitions is not None:
            data["transitions"] = [list(p) for p in cert.transitions]
        return data

    return {
        "schema": SCHEMA_CERTS,
        "certificates": [cert_json(i, c) for i, c in sorted(certs.items())],
    }


def save_certificates(certs: dict[int, LocalCertificate], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(certificates_to_json(certs), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_certificates(path) -> dict[int, LocalCertificate]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}", path=str(path)) from exc
    if not isinstance(data, dict) or data.get("schema") != SCHEMA_CERTS:
        raise SchemaError(
            f"missing or unsupported schema tag (expected '{SCHEMA_CERTS}')",
            schema=data.get("schema") if isinstance(data, dict) else None,
        )
    certs = {}
    for entry in data.get("certificates", []):
        if "id" not in entry:
            raise SchemaError("certificate entries must carry an 'id'")
        node = int(entry["id"])
        try:
            mode_keys = sorted(entry["M"], key=int)
            certs[node] = LocalCertificate(
                M=[entry["M"][k] for k in mode_keys],
                K=[entry["K"][k] for k in mode_keys],
                P=entry["P"],
                Q=[entry["Q"][k] for k in mode_keys],
                R=[entry["R"][k] for k in mode_keys],
                T=[entry["T"][k] for k in mode_keys],
                kappa=entry["kappa"],
                transitions=entry.get("transitions"),
                node_id=node,
            )
        except KeyError as exc:
            raise SchemaError(
                f"certificate for node {node} lacks field {exc}", node=node
            ) from exc
    return certs
