"""Communication graphs: construction, Laplacian spectra, mixing matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "SpectralSummary",
    "MixingPair",
    "TopologySpec",
    "build_topology",
    "spectral_summary",
    "mixing_pair",
    "edge_list_text",
]

ZERO_EIG_REL_TOL = 1e-9

KINDS = ("star", "circle", "clique", "small_world")


@dataclass(frozen=True)
class Graph:
    """Undirected connected graph with edges oriented low index to high index.

    Nodes are 0-based internally; text exports are 1-based.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    neighbor_lists: tuple[tuple[int, ...], ...] = field(init=False)
    degrees: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        n = self.node_count
        if n < 2:
            raise ValueError(f"need at least 2 nodes, got {n}")
        seen = set()
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for i, j in self.edges:
            if not (0 <= i < j < n):
                raise ValueError(f"edge ({i},{j}) violates 0 <= i < j < N")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add((i, j))
            nbrs[i].add(j)
            nbrs[j].add(i)
        object.__setattr__(
            self, "neighbor_lists", tuple(tuple(sorted(s)) for s in nbrs)
        )
        object.__setattr__(self, "degrees", tuple(len(s) for s in nbrs))
        # connectivity by traversal
        stack, reached = [0], {0}
        while stack:
            u = stack.pop()
            for v in nbrs[u]:
                if v not in reached:
                    reached.add(v)
                    stack.append(v)
        if len(reached) != n:
            raise ValueError("graph is not connected")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    @property
    def min_degree(self) -> int:
        return min(self.degrees)

    def laplacian(self) -> np.ndarray:
        omega = np.zeros((self.node_count, self.node_count))
        for i, j in self.edges:
            omega[i, j] = omega[j, i] = -1.0
        np.fill_diagonal(omega, self.degrees)
        return omega

    def incidence(self) -> np.ndarray:
        """Oriented incidence matrix M, one row per edge: +1 at i, -1 at j."""
        m = np.zeros((self.edge_count, self.node_count))
        for r, (i, j) in enumerate(self.edges):
            m[r, i] = 1.0
            m[r, j] = -1.0
        return m


@dataclass(frozen=True)
class SpectralSummary:
    laplacian: np.ndarray
    incidence: np.ndarray
    eigenvalues: np.ndarray
    psi_min_pos: float
    psi_max: float
    frob_norm_sq: float


@dataclass(frozen=True)
class MixingPair:
    W: np.ndarray
    W_tilde: np.ndarray
    lam_min_tilde: float


def build_topology(
    kind: str, N: int, extra_edges: int = 0, seed: int | None = None
) -> Graph:
    """Build one of the benchmark topologies.

    Parameters
    ----------
    kind : str
        One of ``star``, ``circle``, ``clique``, ``small_world``.
    N : int
        Node count, at least 2.
    extra_edges : int
        Number of random non-cycle edges added on top of the cycle.
        Only meaningful for ``small_world``.
    seed : int or None
        Seeds the extra-edge sampler; the result is deterministic for a
        fixed seed. Required for ``small_world`` with extra_edges > 0.

    Returns
    -------
    Graph
        Connected graph with the requested structure. The star's hub is
        node 0 internally (node 1 in 1-based exports).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown topology kind {kind!r}")
    if N < 2:
        raise ValueError(f"need at least 2 nodes, got {N}")
    if kind != "small_world" and extra_edges:
        raise ValueError(f"extra_edges is only valid for small_world, got kind={kind!r}")

    if kind == "star":
        edges = [(0, j) for j in range(1, N)]
    elif kind == "clique":
        edges = [(i, j) for i in range(N) for j in range(i + 1, N)]
    else:
        cycle = {tuple(sorted((i, (i + 1) % N))) for i in range(N)}
        edges = sorted(cycle)
        if kind == "small_world":
            free = [
                (i, j)
                for i in range(N)
                for j in range(i + 1, N)
                if (i, j) not in cycle
            ]
            if extra_edges > len(free):
                raise ValueError(
                    f"extra_edges={extra_edges} exceeds the {len(free)} available non-cycle pairs"
                )
            if extra_edges:
                if seed is None:
                    raise ValueError("extra_edges > 0 needs a seed for reproducibility")
                rng = np.random.default_rng(seed)
                picks = rng.choice(len(free), size=extra_edges, replace=False)
                edges.extend(free[k] for k in sorted(picks))
    return Graph(node_count=N, edges=tuple(sorted(edges)))


def spectral_summary(g: Graph) -> SpectralSummary:
    """Laplacian spectrum via a dense symmetric eigensolver.

    psi_min_pos is the second-smallest eigenvalue (the smallest positive one
    for a connected graph). Zero eigenvalues are identified with a threshold
    relative to psi_max.
    """
    omega = g.laplacian()
    m = g.incidence()
    try:
        eigs = np.linalg.eigvalsh(omega)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"Laplacian eigendecomposition failed: {exc}") from exc
    psi_max = float(eigs[-1])
    zero_count = int(np.sum(np.abs(eigs) < ZERO_EIG_REL_TOL * max(psi_max, 1.0)))
    if zero_count != 1:
        raise RuntimeError(
            f"expected exactly one zero Laplacian eigenvalue, found {zero_count}"
        )
    return SpectralSummary(
        laplacian=omega,
        incidence=m,
        eigenvalues=eigs,
        psi_min_pos=float(eigs[1]),
        psi_max=psi_max,
        frob_norm_sq=float(np.sum(omega * omega)),
    )


def mixing_pair(g: Graph) -> MixingPair:
    """PG-EXTRA mixing matrices W = I - Omega/(d_max+1) and W~ = (I+W)/2."""
    omega = g.laplacian()
    w = np.eye(g.node_count) - omega / (g.max_degree + 1)
    w_tilde = 0.5 * (np.eye(g.node_count) + w)
    lam_min = float(np.linalg.eigvalsh(w_tilde)[0])
    return MixingPair(W=w, W_tilde=w_tilde, lam_min_tilde=lam_min)


@dataclass(frozen=True)
class TopologySpec:
    """Serializable recipe for a topology; the seed is the source of truth."""

    kind: str
    N: int
    extra_edges: int = 0
    seed: int | None = None

    def build(self) -> Graph:
        return build_topology(self.kind, self.N, self.extra_edges, self.seed)

    def to_text(self) -> str:
        lines = [f"kind={self.kind}", f"N={self.N}", f"extra_edges={self.extra_edges}"]
        lines.append(f"seed={'none' if self.seed is None else self.seed}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TopologySpec":
        fields: dict[str, str] = {}
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {ln}: expected key=value, got {raw!r}")
            key, _, val = line.partition("=")
            fields[key.strip()] = val.strip()
        missing = {"kind", "N", "extra_edges", "seed"} - fields.keys()
        if missing:
            raise ValueError(f"missing keys: {sorted(missing)}")
        seed = None if fields["seed"] == "none" else int(fields["seed"])
        return cls(
            kind=fields["kind"],
            N=int(fields["N"]),
            extra_edges=int(fields["extra_edges"]),
            seed=seed,
        )


def edge_list_text(g: Graph) -> str:
    """One edge per line as 'i j', 1-based node ids."""
    return "\n".join(f"{i + 1} {j + 1}" for i, j in g.edges) + "\n"
