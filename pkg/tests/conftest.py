"""Shared factories for the test suite."""

import numpy as np

from netprox.objective import GroupPartition, NodeObjective


def random_partition(rng, n, K):
    perm = rng.permutation(n)
    chunks = np.array_split(perm, K)
    return GroupPartition(groups=tuple(np.sort(c).astype(np.intp) for c in chunks))


def random_objective(rng, n=12, m=6, K=3, delta=1.0, beta1=0.2, beta2=0.3, scale=1.0):
    part = random_partition(rng, n, K)
    A = scale * rng.standard_normal((m, n))
    x_true = rng.standard_normal(n)
    return NodeObjective(
        A=A, b=A @ x_true, delta=delta, beta1=beta1, beta2=beta2, partition=part
    )


def random_objectives(rng, N, n=12, m=4, K=3, delta=1.0, beta1=0.2, beta2=0.3, shared=True):
    part = random_partition(rng, n, K)
    x_true = rng.standard_normal(n)
    objs = []
    for i in range(N):
        p = part if shared else random_partition(rng, n, K)
        A = (0.5 ** (i % 2)) * rng.standard_normal((m, n))
        objs.append(
            NodeObjective(A=A, b=A @ x_true, delta=delta, beta1=beta1, beta2=beta2, partition=p)
        )
    return objs
