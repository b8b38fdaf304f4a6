"""Reference first-order methods run against the same transports.

PG-EXTRA tracks four local n-vectors and broadcasts the (current, previous)
iterate pair once per round. The consensus ADMM variant reuses the DPGA-W
message pattern but solves its x-update subproblem to high accuracy with an
inner accelerated solver.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dpga_w import CommunicationMatrix
from .errors import InnerSolveError, ProtocolError
from .objective import NodeObjective
from .topology import Graph, MixingPair

__all__ = [
    "PgExtraNode",
    "pg_extra_init",
    "pg_extra_round",
    "pg_extra_kkt_residuals",
    "AdmmNode",
    "admm_init",
    "admm_round",
    "prox_composite",
    "ProxOnlyObjective",
]


@dataclass(frozen=True)
class PgExtraNode:
    """PG-EXTRA agent state: current/previous iterates, the pre-prox point,
    and the previous gradient (four n-vectors)."""

    node_id: int
    x_curr: np.ndarray
    x_prev: np.ndarray
    x_half: np.ndarray
    grad_prev: np.ndarray
    c: float
    stage: int
    w_row: dict[int, float]
    wt_row: dict[int, float]

    def vector_count(self) -> int:
        return 4


def pg_extra_init(g: Graph, mixing: MixingPair, objectives, x0, c: float | None = None):
    """Nodes for PG-EXTRA with a common stepsize.

    The default c is 99% of the cap 2 lam_min(W_tilde) / L_max; the cap uses
    the largest smoothness constant in the network, so picking c needs one
    max-reduction before the run starts.
    """
    L_max = max(o.lipschitz for o in objectives)
    if c is None:
        if L_max <= 0:
            raise ValueError("cannot default the stepsize when every L_i is zero")
        c = 0.99 * 2.0 * mixing.lam_min_tilde / L_max
    cap = np.inf if L_max == 0 else 2.0 * mixing.lam_min_tilde / L_max
    if not 0 < c < cap:
        raise ValueError(f"stepsize {c} outside (0, {cap})")
    nodes = []
    for i in range(g.node_count):
        closed = sorted(set(g.neighbor_lists[i]) | {i})
        x_i = np.array(x0[i], dtype=float)
        nodes.append(
            PgExtraNode(
                node_id=i,
                x_curr=x_i,
                x_prev=x_i.copy(),
                x_half=np.zeros_like(x_i),
                grad_prev=np.zeros_like(x_i),
                c=float(c),
                stage=0,
                w_row={j: float(mixing.W[i, j]) for j in closed},
                wt_row={j: float(mixing.W_tilde[i, j]) for j in closed},
            )
        )
    return nodes


def _pair_inbox_sum(row: dict[int, float], own: np.ndarray, inbox, node_id: int, part: int):
    expected = set(row) - {node_id}
    if set(inbox) != expected:
        raise ProtocolError(
            f"node {node_id} expected messages from {sorted(expected)}, got {sorted(inbox)}"
        )
    acc = row[node_id] * own
    for j, w in row.items():
        if j != node_id:
            acc = acc + w * inbox[j][part]
    return acc


def pg_extra_round(nodes, objectives, exchange):
    """One PG-EXTRA round.

    Every node broadcasts the stacked pair (x_curr, x_prev); round zero sends
    the starting point twice so the message size never varies.
    """
    payloads = {nd.node_id: np.stack([nd.x_curr, nd.x_prev]) for nd in nodes}
    inboxes = exchange(payloads)
    new_nodes = []
    for node, obj in zip(nodes, objectives):
        i = node.node_id
        own = payloads[i]
        mix_curr = _pair_inbox_sum(node.w_row, own[0], inboxes[i], i, 0)
        grad_new = obj.f_grad(node.x_curr)
        if node.stage == 0:
            half = mix_curr - node.c * grad_new
        else:
            mix_prev = _pair_inbox_sum(node.wt_row, own[1], inboxes[i], i, 1)
            half = mix_curr - mix_prev + node.x_half - node.c * (grad_new - node.grad_prev)
        x_next = obj.prox(half, node.c)
        new_nodes.append(
            replace(
                node,
                x_prev=node.x_curr,
                x_curr=x_next,
                x_half=half,
                grad_prev=grad_new,
                stage=node.stage + 1,
            )
        )
    return new_nodes, payloads


def pg_extra_kkt_residuals(x_trace, half_trace, mixing: MixingPair, objectives, c):
    """Squared stationarity and consensus residuals per round.

    x_trace stacks the network iterate X^m for m = 0..T (rows are nodes);
    half_trace holds the pre-prox points X^{m+1/2} for m = 0..T-1. Entry m of
    the first array is |r^m|^2 weighted by W_tilde, where

        r^m = (W_tilde - W) sum_{tau<=m} X^tau + c (grad f(X^m) + G^{m+1})

    and G^{m+1} = (X^{m+1/2} - X^{m+1}) / c collects the prox subgradients.
    Entry m of the second is |U X^{m+1}|_F^2 with U the PSD square root of
    W_tilde - W.
    """
    T = len(half_trace)
    if len(x_trace) != T + 1:
        raise ValueError("need one more iterate than pre-prox point")
    diff = mixing.W_tilde - mixing.W
    evals, evecs = np.linalg.eigh(diff)
    U = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    kkt_sq = np.empty(T)
    cons_sq = np.empty(T)
    running = np.zeros_like(np.asarray(x_trace[0], dtype=float))
    for m in range(T):
        X_m = np.asarray(x_trace[m], dtype=float)
        X_next = np.asarray(x_trace[m + 1], dtype=float)
        running = running + X_m
        grads = np.stack([obj.f_grad(X_m[i]) for i, obj in enumerate(objectives)])
        G = (np.asarray(half_trace[m], dtype=float) - X_next) / c
        R = diff @ running + c * (grads + G)
        kkt_sq[m] = float(np.sum(R * (mixing.W_tilde @ R)))
        UX = U @ X_next
        cons_sq[m] = float(np.sum(UX * UX))
    return kkt_sq, cons_sq


def prox_composite(
    objective: NodeObjective,
    v: np.ndarray,
    c: float,
    tol: float = 1e-10,
    max_iter: int = 200000,
    z0: np.ndarray | None = None,
) -> np.ndarray:
    """argmin_z xi(z) + f(z) + |z - v|^2 / (2c) by accelerated proximal
    gradient with the strong-convexity momentum for mu = 1/c.

    Stops when the gradient mapping norm falls below tol; raises
    InnerSolveError (carrying the achieved residual) when max_iter is hit.
    """
    mu = 1.0 / c
    L_s = objective.lipschitz + mu
    t = 1.0 / L_s
    kappa = L_s / mu
    beta = (np.sqrt(kappa) - 1.0) / (np.sqrt(kappa) + 1.0)
    z = np.array(v if z0 is None else z0, dtype=float)
    w = z.copy()
    for _ in range(max_iter):
        grad = objective.f_grad(w) + (w - v) * mu
        z_new = objective.prox(w - t * grad, t)
        gap = float(np.linalg.norm(w - z_new)) / t
        if gap <= tol:
            return z_new
        w = z_new + beta * (z_new - z)
        z = z_new
    raise InnerSolveError(
        f"inner solve stalled at gradient mapping {gap:.3e} (tol {tol:.1e})",
        residual=gap,
    )


@dataclass(frozen=True)
class ProxOnlyObjective:
    """Presents Phi_i = xi_i + f_i as a pure prox term with a zero smooth
    part, so composite-prox methods can be driven through the same round
    functions. The prox itself is an inner solve."""

    inner: NodeObjective
    inner_tol: float = 1e-10

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def lipschitz(self) -> float:
        return 0.0

    def xi_value(self, x: np.ndarray) -> float:
        return self.inner.phi(x)

    def f_value(self, x: np.ndarray) -> float:
        return 0.0

    def f_grad(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    def phi(self, x: np.ndarray) -> float:
        return self.inner.phi(x)

    def prox(self, vbar: np.ndarray, t: float) -> np.ndarray:
        return prox_composite(self.inner, vbar, t, tol=self.inner_tol, z0=vbar)


@dataclass(frozen=True)
class AdmmNode:
    """Consensus ADMM agent; messages and storage match DpgaWNode."""

    node_id: int
    x: np.ndarray
    s: np.ndarray
    p: np.ndarray
    c: float
    gamma: float
    s_factor: float  # gamma / (d_i + 1)
    w_row: dict[int, float]

    def vector_count(self) -> int:
        return 3


def admm_init(g: Graph, W: CommunicationMatrix, objectives, gamma: float, x0):
    """ADMM nodes with the exact stepsizes c_i = 1 / (gamma |omega_i|^2)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    nodes = []
    for i in range(g.node_count):
        closed = sorted(set(g.neighbor_lists[i]) | {i})
        x_i = np.array(x0[i], dtype=float)
        nodes.append(
            AdmmNode(
                node_id=i,
                x=x_i,
                s=np.zeros_like(x_i),
                p=np.zeros_like(x_i),
                c=1.0 / (gamma * W.omega_norms_sq[i]),
                gamma=float(gamma),
                s_factor=float(gamma) / (g.degrees[i] + 1),
                w_row={j: float(W.matrix[i, j]) for j in closed},
            )
        )
    return nodes


def _admm_inbox_sum(node: AdmmNode, own: np.ndarray, inbox) -> np.ndarray:
    expected = set(node.w_row) - {node.node_id}
    if set(inbox) != expected:
        raise ProtocolError(
            f"node {node.node_id} expected messages from {sorted(expected)}, "
            f"got {sorted(inbox)}"
        )
    acc = node.w_row[node.node_id] * own
    for j, w in node.w_row.items():
        if j != node.node_id:
            acc = acc + w * inbox[j]
    return acc


def admm_round(nodes, objectives, exchange, inner_tol: float = 1e-10, inner_cap: int = 200000):
    """One ADMM round: exchange p + s, solve the composite x-update, exchange
    x, then update s and p. Returns the inner-solve count per node as well."""
    phase_a = {nd.node_id: nd.p + nd.s for nd in nodes}
    inbox_a = exchange(phase_a)
    proposals = {}
    inner_iters = []
    for node, obj in zip(nodes, objectives):
        drive = _admm_inbox_sum(node, phase_a[node.node_id], inbox_a[node.node_id])
        v = node.x - node.c * drive
        before = _InnerCounter(obj)
        proposals[node.node_id] = prox_composite(
            before, v, node.c, tol=inner_tol, max_iter=inner_cap, z0=node.x
        )
        inner_iters.append(before.calls)
    inbox_b = exchange(proposals)
    new_nodes = []
    for node in nodes:
        wx = _admm_inbox_sum(node, proposals[node.node_id], inbox_b[node.node_id])
        s_new = node.s_factor * wx
        new_nodes.append(
            replace(node, x=proposals[node.node_id], s=s_new, p=node.p + s_new)
        )
    return new_nodes, proposals, inner_iters


class _InnerCounter:
    """Counts gradient calls while delegating to a NodeObjective."""

    def __init__(self, obj: NodeObjective):
        self._obj = obj
        self.calls = 0

    @property
    def lipschitz(self) -> float:
        return self._obj.lipschitz

    def f_grad(self, x):
        self.calls += 1
        return self._obj.f_grad(x)

    def prox(self, v, t):
        return self._obj.prox(v, t)
