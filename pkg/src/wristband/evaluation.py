"""Calibrated barycentric-W2 evaluation.

A deterministic Gaussian reference batch is built by recursively
pairing Gaussian batches, solving an exact linear assignment inside
each pair, and replacing the pair with the midpoint batch of matched
points.  A candidate batch is then scored by its exact equal-weight W2
distance to the reference, standardized against the distances of fresh
Gaussian batches of the same shape.

Assignment solves go through scipy's exact Jonker-Volgenant solver;
exactness is cross-checked against a brute-force oracle in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractViolation
from .generators import RngStream, gaussian_batch
from .wristband_map import validate_point_batch

__all__ = [
    "Assignment",
    "BarycentricReference",
    "hungarian_assign",
    "w2_exact",
    "barycentric_reference",
    "barycentric_z_score",
    "save_reference",
    "load_reference",
]


@dataclass(frozen=True)
class Assignment:
    """An optimal row-to-column matching and its total cost."""

    perm: np.ndarray
    cost: float


@dataclass(frozen=True)
class BarycentricReference:
    """The reference batch plus the provenance needed to rebuild it."""

    batch: np.ndarray
    num_batches: int
    n: int
    dim: int
    seed: int
    depth: int
    stream_label: str

    def provenance(self) -> dict:
        return {
            "num_batches": self.num_batches,
            "n": self.n,
            "dim": self.dim,
            "seed": self.seed,
            "depth": self.depth,
            "stream_label": self.stream_label,
        }


def save_reference(path, ref: BarycentricReference) -> None:
    """Write the reference batch plus a provenance JSON sidecar."""
    import json

    from .io import write_batch

    write_batch(path, ref.batch)
    with open(f"{path}.provenance.json", "w") as fh:
        json.dump(ref.provenance(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_reference(path) -> BarycentricReference:
    """Load a reference batch written by :func:`save_reference`."""
    import json

    from .io import read_batch

    batch = read_batch(path)
    with open(f"{path}.provenance.json") as fh:
        prov = json.load(fh)
    return BarycentricReference(
        batch=batch,
        num_batches=int(prov["num_batches"]),
        n=int(prov["n"]),
        dim=int(prov["dim"]),
        seed=int(prov["seed"]),
        depth=int(prov["depth"]),
        stream_label=prov["stream_label"],
    )


def hungarian_assign(cost) -> Assignment:
    """Globally optimal assignment for a square cost matrix."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ContractViolation(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ContractViolation("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.int64)
    perm[rows] = cols
    return Assignment(perm=perm, cost=float(cost[rows, cols].sum()))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Explicit differences (tiled) rather than the Gram expansion: exact
    # zeros for coincident rows and no cancellation noise on near pairs.
    n, d = a.shape
    out = np.empty((n, b.shape[0]))
    rows = max(1, int(32e6 / max(1, b.shape[0] * d)))
    for lo in range(0, n, rows):
        hi = min(lo + rows, n)
        diff = a[lo:hi, None, :] - b[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def w2_exact(a, b) -> float:
    """Exact equal-weight W2 distance between two same-shape batches."""
    a = validate_point_batch(a)
    b = validate_point_batch(b)
    if a.shape != b.shape:
        raise ContractViolation(f"batch shapes differ: {a.shape} vs {b.shape}")
    assignment = hungarian_assign(_sq_dists(a, b))
    return math.sqrt(assignment.cost / a.shape[0])


def barycentric_reference(n: int, d: int, num_batches: int, stream: RngStream) -> BarycentricReference:
    """Recursive Hungarian-midpoint reduction of `num_batches` Gaussian batches.

    num_batches must be a power of two in [2, 128].  At each level the
    surviving batches are shuffled with a labeled stream, paired
    adjacently, and each pair replaced by the midpoint of its matched
    points.
    """
    if num_batches < 2 or num_batches > 128 or num_batches & (num_batches - 1):
        raise ContractViolation(
            f"num_batches must be a power of two in [2, 128], got {num_batches}"
        )
    batches = [
        gaussian_batch(n, d, stream.child(f"source{i:03d}")) for i in range(num_batches)
    ]
    depth = 0
    while len(batches) > 1:
        order = stream.child(f"pair/level{depth}").shuffled(len(batches))
        merged = []
        for j in range(0, len(order), 2):
            a = batches[order[j]]
            b = batches[order[j + 1]]
            assignment = hungarian_assign(_sq_dists(a, b))
            merged.append(0.5 * (a + b[assignment.perm]))
        batches = merged
        depth += 1
    return BarycentricReference(
        batch=batches[0],
        num_batches=num_batches,
        n=n,
        dim=d,
        seed=stream.seed,
        depth=depth,
        stream_label=stream.label,
    )


def barycentric_z_score(candidate, ref: BarycentricReference, null_batches: int,
                        stream: RngStream) -> float:
    """z-score of W2(candidate, ref) against fresh same-shape Gaussian batches.

    The null standard deviation uses the unbiased (n-1) estimator.  The
    numerator uses the W2 distance itself (not its square).
    """
    candidate = validate_point_batch(candidate)
    if candidate.shape != ref.batch.shape:
        raise ContractViolation(
            f"candidate shape {candidate.shape} does not match reference {ref.batch.shape}"
        )
    if null_batches < 2:
        raise ContractViolation(f"need at least 2 null batches, got {null_batches}")
    w = w2_exact(candidate, ref.batch)
    nulls = np.array(
        [
            w2_exact(gaussian_batch(ref.n, ref.dim, stream.child(f"null{k:03d}")), ref.batch)
            for k in range(null_batches)
        ]
    )
    sd = float(nulls.std(ddof=1))
    if sd <= 0.0:
        raise ContractViolation("null W2 distances have zero variance")
    return (w - float(nulls.mean())) / sd
