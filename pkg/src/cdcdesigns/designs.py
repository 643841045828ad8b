"""Block designs: construction, verification, and duals.

A :class:`BlockDesign` is a point set plus an ordered list of blocks. The
block order is significant: block ``i`` (1-based) becomes worker ``B_i``
once a scheme is built, so constructors that reproduce a published
labelling keep it. :meth:`BlockDesign.canonical` gives the
lexicographically sorted form for order-insensitive comparisons.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

__all__ = [
    "BlockDesign",
    "TDesignParams",
    "GddParams",
    "VerificationReport",
    "verify_t_design",
    "verify_gdd",
    "dualize",
    "lambda_derived",
    "fano_plane",
    "example_gdd",
    "projective_plane_sbibd",
    "transversal_gdd",
    "steiner_triple_bose",
    "boolean_sqs",
    "complete_design",
    "admissible_t_design",
    "admissible_2_gdd",
    "brute_force_design_search",
    "is_prime",
    "UnsupportedOrderError",
    "design_to_dict",
    "design_from_dict",
    "dump_design",
    "load_design",
]


class UnsupportedOrderError(ValueError):
    """Raised for algebraic constructions over non-prime orders."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _require_prime(p: int) -> None:
    if not is_prime(p):
        raise UnsupportedOrderError(
            f"order {p} is not prime; only prime orders are supported "
            "(prime-power fields GF(p^k), k > 1, are not implemented)"
        )


def _is_default_labels(labels: Sequence[int]) -> bool:
    return tuple(labels) == tuple(range(1, len(labels) + 1))


@dataclass(frozen=True)
class BlockDesign:
    """Points plus an ordered family of blocks, optionally with groups.

    ``block_labels`` names the blocks (default ``1..K``); ``block_groups``
    annotates each block with a group id, which is how the dual of a GDD
    remembers which of its blocks came from the same group. ``t``, ``lam``
    and ``family`` are descriptive metadata carried through JSON.
    """

    points: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]
    groups: tuple[tuple[int, ...], ...] | None = None
    block_labels: tuple[int, ...] | None = None
    block_groups: tuple[int, ...] | None = None
    t: int | None = None
    lam: int | None = None
    family: str = ""

    def __post_init__(self) -> None:
        points = tuple(sorted(int(x) for x in self.points))
        if len(set(points)) != len(points):
            raise ValueError("duplicate point identifiers")
        blocks = tuple(tuple(sorted(int(x) for x in b)) for b in self.blocks)
        pset = set(points)
        for i, b in enumerate(blocks, 1):
            if not b:
                raise ValueError(f"block {i} is empty")
            if len(set(b)) != len(b):
                raise ValueError(f"block {i} repeats a point")
            if not pset.issuperset(b):
                raise ValueError(f"block {i} contains points outside the point set")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "blocks", blocks)

        if self.groups is not None:
            groups = tuple(sorted(tuple(sorted(int(x) for x in g)) for g in self.groups))
            flat = [x for g in groups for x in g]
            if sorted(flat) != list(points):
                raise ValueError("groups do not partition the point set")
            if len({len(g) for g in groups}) > 1:
                raise ValueError("groups have unequal sizes")
            object.__setattr__(self, "groups", groups)

        if self.block_labels is not None:
            labels = tuple(int(x) for x in self.block_labels)
            if len(labels) != len(blocks) or len(set(labels)) != len(labels):
                raise ValueError("block_labels must give one distinct label per block")
            object.__setattr__(self, "block_labels", None if _is_default_labels(labels) else labels)
        if self.block_groups is not None:
            bg = tuple(int(x) for x in self.block_groups)
            if len(bg) != len(blocks):
                raise ValueError("block_groups must give one group id per block")
            object.__setattr__(self, "block_groups", bg)

    @property
    def labels(self) -> tuple[int, ...]:
        """Block labels, ``1..K`` unless overridden."""
        if self.block_labels is None:
            return tuple(range(1, len(self.blocks) + 1))
        return self.block_labels

    @property
    def num_points(self) -> int:
        return len(self.points)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def block_size(self) -> int | None:
        """Common block size, or ``None`` when sizes differ."""
        sizes = {len(b) for b in self.blocks}
        return sizes.pop() if len(sizes) == 1 else None

    def replication(self) -> dict[int, int]:
        counts = Counter(x for b in self.blocks for x in b)
        return {x: counts.get(x, 0) for x in self.points}

    def group_of(self) -> dict[int, int]:
        """Map point -> 1-based group index (requires groups)."""
        if self.groups is None:
            raise ValueError("design has no groups")
        return {x: i for i, g in enumerate(self.groups, 1) for x in g}

    def with_singleton_groups(self) -> "BlockDesign":
        return replace(self, groups=tuple((x,) for x in self.points))

    def canonical(self) -> "BlockDesign":
        """Same design with blocks sorted lexicographically and labels dropped."""
        return replace(
            self,
            blocks=tuple(sorted(self.blocks)),
            block_labels=None,
            block_groups=None,
        )


@dataclass(frozen=True)
class TDesignParams:
    t: int
    N: int
    M: int
    lam: int

    def __post_init__(self) -> None:
        if not 2 <= self.t <= self.M < self.N:
            raise ValueError(f"need 2 <= t <= M < N, got t={self.t}, M={self.M}, N={self.N}")
        if self.lam < 1:
            raise ValueError("lambda must be positive")

    @property
    def K(self) -> Fraction:
        return Fraction(self.lam * comb(self.N, self.t), comb(self.M, self.t))

    @property
    def r(self) -> Fraction:
        return Fraction(self.lam * comb(self.N - 1, self.t - 1), comb(self.M - 1, self.t - 1))


@dataclass(frozen=True)
class GddParams:
    t: int
    m: int
    q: int
    M: int
    lam: int

    def __post_init__(self) -> None:
        if not 2 <= self.t <= self.M <= self.m:
            raise ValueError(f"need 2 <= t <= M <= m, got t={self.t}, M={self.M}, m={self.m}")
        if self.q < 1 or self.lam < 1:
            raise ValueError("q and lambda must be positive")

    @property
    def N(self) -> int:
        return self.m * self.q

    @property
    def K(self) -> Fraction:
        return Fraction(self.lam * comb(self.m, self.t) * self.q**self.t, comb(self.M, self.t))

    @property
    def r(self) -> Fraction:
        return Fraction(
            self.lam * self.q ** (self.t - 1) * comb(self.m - 1, self.t - 1),
            comb(self.M - 1, self.t - 1),
        )


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    violation: str | None
    K: int
    r: int | None
    M: int | None
    expected_K: Fraction | None = None
    expected_r: Fraction | None = None
    counts_match: bool = False

    def __bool__(self) -> bool:
        return self.passed


def _fmt(s: Iterable[int]) -> str:
    return "{" + ",".join(str(x) for x in s) + "}"


def _check_blocks(d: BlockDesign, t: int) -> int:
    if t < 2:
        raise ValueError("t must be at least 2")
    if not d.blocks:
        raise ValueError("design has no blocks")
    if d.num_points < t:
        raise ValueError(f"design has fewer than t={t} points")
    smallest = min(len(b) for b in d.blocks)
    if t > smallest:
        raise ValueError(f"t={t} exceeds the smallest block size {smallest}")
    return smallest


def _regular_r(d: BlockDesign) -> int | None:
    reps = set(d.replication().values())
    return reps.pop() if len(reps) == 1 else None


def verify_t_design(d: BlockDesign, t: int, lam: int) -> VerificationReport:
    """Check that every t-subset of points lies in exactly ``lam`` blocks."""
    _check_blocks(d, t)
    K = d.num_blocks
    M = d.block_size
    r = _regular_r(d)

    def report(violation: str | None, expected_K=None, expected_r=None) -> VerificationReport:
        match = expected_K is not None and expected_K == K and expected_r == r
        return VerificationReport(
            passed=violation is None and match,
            violation=violation if violation or match else "block/occurrence counts disagree with the parameter formulas",
            K=K,
            r=r,
            M=M,
            expected_K=expected_K,
            expected_r=expected_r,
            counts_match=match,
        )

    if M is None:
        return report("blocks have unequal sizes")
    if M >= d.num_points:
        return report(f"block size {M} is not smaller than the number of points")
    counts = Counter(s for b in d.blocks for s in combinations(b, t))
    params = TDesignParams(t, d.num_points, M, lam)
    for s in combinations(d.points, t):
        c = counts.get(s, 0)
        if c != lam:
            return report(f"{t}-subset {_fmt(s)} covered {c} times, expected {lam}", params.K, params.r)
    return report(None, params.K, params.r)


def verify_gdd(d: BlockDesign, t: int, lam: int) -> VerificationReport:
    """Check the group divisible design conditions for strength ``t``."""
    if d.groups is None:
        raise ValueError("design has no groups")
    _check_blocks(d, t)
    K = d.num_blocks
    M = d.block_size
    r = _regular_r(d)
    gid = d.group_of()
    m = len(d.groups)
    q = len(d.groups[0])

    def report(violation, expected_K=None, expected_r=None):
        match = expected_K is not None and expected_K == K and expected_r == r
        return VerificationReport(
            passed=violation is None and match,
            violation=violation if violation or match else "block/occurrence counts disagree with the parameter formulas",
            K=K,
            r=r,
            M=M,
            expected_K=expected_K,
            expected_r=expected_r,
            counts_match=match,
        )

    if M is None:
        return report("blocks have unequal sizes")
    for i, b in enumerate(d.blocks, 1):
        seen: dict[int, int] = {}
        for x in b:
            g = gid[x]
            if g in seen:
                return report(
                    f"block {i} {_fmt(b)} meets group {_fmt(d.groups[g - 1])} more than once"
                )
            seen[g] = x
    if M > m:
        return report(f"block size {M} exceeds the number of groups {m}")
    params = GddParams(t, m, q, M, lam)
    counts = Counter(s for b in d.blocks for s in combinations(b, t))
    for s in combinations(d.points, t):
        if len({gid[x] for x in s}) < t:
            continue
        c = counts.get(s, 0)
        if c != lam:
            return report(f"{t}-subset {_fmt(s)} covered {c} times, expected {lam}", params.K, params.r)
    return report(None, params.K, params.r)


def dualize(d: BlockDesign) -> BlockDesign:
    """Swap the roles of points and blocks.

    The dual's points are the block labels of ``d``; its block for point
    ``x`` (labelled ``x``) holds the labels of all blocks containing ``x``.
    Group structure is turned into ``block_groups`` annotations and back,
    so ``dualize(dualize(d)) == d``.
    """
    labels = d.labels
    containing: dict[int, list[int]] = {x: [] for x in d.points}
    for label, b in zip(labels, d.blocks):
        for x in b:
            containing[x].append(label)
    dual_blocks = tuple(tuple(containing[x]) for x in d.points)

    block_groups = None
    if d.groups is not None:
        gid = d.group_of()
        block_groups = tuple(gid[x] for x in d.points)
    groups = None
    if d.block_groups is not None:
        cells: dict[int, list[int]] = {}
        for label, g in zip(labels, d.block_groups):
            cells.setdefault(g, []).append(label)
        groups = tuple(tuple(c) for _, c in sorted(cells.items()))

    if d.family.startswith("dual:"):
        family = d.family[len("dual:"):]
    else:
        family = "dual:" + d.family
    return BlockDesign(
        points=labels,
        blocks=dual_blocks,
        groups=groups,
        block_labels=d.points,
        block_groups=block_groups,
        t=d.t,
        lam=d.lam,
        family=family,
    )


def lambda_derived(params: TDesignParams | GddParams, t_prime: int) -> Fraction:
    """How many blocks contain a fixed t'-subset (cross-group for GDDs)."""
    t = params.t
    if not 2 <= t_prime <= t:
        raise ValueError(f"t' must satisfy 2 <= t' <= {t}, got {t_prime}")
    k = t - t_prime
    if isinstance(params, GddParams):
        return Fraction(
            params.lam * comb(params.m - t_prime, k) * params.q**k,
            comb(params.M - t_prime, k),
        )
    return Fraction(params.lam * comb(params.N - t_prime, k), comb(params.M - t_prime, k))


# ---------------------------------------------------------------------------
# constructions


def fano_plane() -> BlockDesign:
    """The (7,3,1) SBIBD with blocks B1..B7 = 124, 235, 346, 457, 561, 672, 713."""
    blocks = [(i % 7 + 1, (i + 1) % 7 + 1, (i + 3) % 7 + 1) for i in range(7)]
    return BlockDesign(points=range(1, 8), blocks=blocks, t=2, lam=1, family="fano")


def example_gdd() -> BlockDesign:
    """The 2-(3,2,3,1) GDD on {1..6} with groups 12|34|56."""
    return BlockDesign(
        points=range(1, 7),
        blocks=[(1, 3, 5), (1, 4, 6), (2, 4, 5), (2, 3, 6)],
        groups=[(1, 2), (3, 4), (5, 6)],
        t=2,
        lam=1,
        family="example-gdd",
    )


def _projective_points(p: int) -> list[tuple[int, int, int]]:
    # first nonzero coordinate normalised to 1
    pts = []
    for v in ((a, b, c) for a in range(p) for b in range(p) for c in range(p)):
        nz = next((x for x in v if x), 0)
        if nz == 1:
            pts.append(v)
    return sorted(pts)


def projective_plane_sbibd(p: int) -> BlockDesign:
    """Lines of PG(2, p): a 2-(p^2+p+1, p+1, 1) symmetric design."""
    _require_prime(p)
    pts = _projective_points(p)
    index = {v: i for i, v in enumerate(pts, 1)}
    blocks = []
    for a in pts:
        line = [index[x] for x in pts if (a[0] * x[0] + a[1] * x[1] + a[2] * x[2]) % p == 0]
        blocks.append(tuple(line))
    return BlockDesign(
        points=range(1, len(pts) + 1), blocks=sorted(blocks), t=2, lam=1, family=f"pg:{p}"
    )


def transversal_gdd(p: int) -> BlockDesign:
    """2-(p,p,p,1) GDD from the lines y = a*i + b over Z_p.

    Point ``(i, j)`` gets id ``i*p + j + 1``; group ``i`` is ``{(i, j)}``.
    """
    _require_prime(p)

    def pid(i: int, j: int) -> int:
        return i * p + j + 1

    blocks = [tuple(pid(i, (a * i + b) % p) for i in range(p)) for a in range(p) for b in range(p)]
    groups = [tuple(pid(i, j) for j in range(p)) for i in range(p)]
    return BlockDesign(
        points=range(1, p * p + 1),
        blocks=sorted(blocks),
        groups=groups,
        t=2,
        lam=1,
        family=f"tgdd:{p}",
    )


def steiner_triple_bose(n: int) -> BlockDesign:
    """Bose construction of an STS(n) for n = 3 (mod 6)."""
    if n < 3 or n % 6 != 3:
        raise ValueError(f"Bose construction needs n = 3 (mod 6), got {n}")
    g = n // 3  # odd order of the idempotent commutative quasigroup
    half = (g + 1) // 2

    def pid(x: int, i: int) -> int:
        return i * g + x + 1

    def op(x: int, y: int) -> int:
        return (x + y) * half % g

    blocks = [(pid(x, 0), pid(x, 1), pid(x, 2)) for x in range(g)]
    for x, y in combinations(range(g), 2):
        for i in range(3):
            blocks.append((pid(x, i), pid(y, i), pid(op(x, y), (i + 1) % 3)))
    blocks = sorted(tuple(sorted(b)) for b in blocks)
    return BlockDesign(points=range(1, n + 1), blocks=blocks, t=2, lam=1, family=f"sts:{n}")


def boolean_sqs(k: int) -> BlockDesign:
    """The 3-(2^k, 4, 1) design of 4-sets XOR-ing to zero."""
    if k < 3:
        raise ValueError(f"boolean SQS needs k >= 3, got {k}")
    n = 1 << k
    blocks = [
        (a, b, c, a ^ b ^ c)
        for a, b, c in combinations(range(n), 3)
        if (a ^ b ^ c) > c
    ]
    return BlockDesign(points=range(n), blocks=sorted(blocks), t=3, lam=1, family=f"sqs:{k}")


def complete_design(N: int, M: int, t: int) -> BlockDesign:
    """All M-subsets of {1..N}; a t-design with lambda = C(N-t, M-t)."""
    if not 2 <= t <= M < N:
        raise ValueError(f"need 2 <= t <= M < N, got N={N}, M={M}, t={t}")
    return BlockDesign(
        points=range(1, N + 1),
        blocks=list(combinations(range(1, N + 1), M)),
        t=t,
        lam=comb(N - t, M - t),
        family=f"complete:{N}:{M}",
    )


def admissible_t_design(t: int, N: int, M: int, lam: int) -> bool:
    """Divisibility conditions necessary for a t-(N, M, lam) design."""
    if not 2 <= t <= M < N:
        raise ValueError(f"need 2 <= t <= M < N, got t={t}, M={M}, N={N}")
    return all(lam * comb(N - i, t - i) % comb(M - i, t - i) == 0 for i in range(t))


def admissible_2_gdd(m: int, q: int, M: int) -> bool:
    """Divisibility conditions necessary for a 2-(m, q, M, 1) GDD."""
    if not 2 <= M <= m:
        raise ValueError(f"need 2 <= M <= m, got M={M}, m={m}")
    return all(q ** (2 - i) * comb(m - i, 2 - i) % comb(M - i, 2 - i) == 0 for i in (0, 1))


_SEARCH_MAX_POINTS = 14


def brute_force_design_search(
    t: int, N: int, M: int, lam: int, budget: int = 1_000_000
) -> BlockDesign | None:
    """Backtracking search for a t-(N, M, lam) design on {1..N}.

    Returns ``None`` when ``budget`` search nodes are used up without
    success. Raises ``ValueError`` for inadmissible parameters, for
    ``N > 14``, or when the whole space is exhausted (no design exists).
    """
    if N > _SEARCH_MAX_POINTS:
        raise ValueError(f"search is limited to N <= {_SEARCH_MAX_POINTS}")
    if not admissible_t_design(t, N, M, lam):
        raise ValueError(f"t-(N,M,lambda) = {t}-({N},{M},{lam}) is not admissible")

    tsubs = list(combinations(range(1, N + 1), t))
    tindex = {s: i for i, s in enumerate(tsubs)}
    cands = list(combinations(range(1, N + 1), M))
    cand_t = [tuple(tindex[s] for s in combinations(c, t)) for c in cands]
    by_t: list[list[int]] = [[] for _ in tsubs]
    for ci, ts in enumerate(cand_t):
        for ti in ts:
            by_t[ti].append(ci)

    counts = [0] * len(tsubs)
    chosen: list[int] = []
    nodes = 0
    target = int(TDesignParams(t, N, M, lam).K)

    def first_deficient(start: int) -> int:
        for i in range(start, len(tsubs)):
            if counts[i] < lam:
                return i
        return -1

    def solve(start: int, floor: int) -> bool | None:
        nonlocal nodes
        ti = first_deficient(start)
        if ti < 0:
            return len(chosen) == target
        nodes += 1
        if nodes > budget:
            return None
        lo = floor if ti == start else 0
        for ci in by_t[ti]:
            if ci < lo:
                continue
            ts = cand_t[ci]
            if any(counts[j] >= lam for j in ts):
                continue
            for j in ts:
                counts[j] += 1
            chosen.append(ci)
            res = solve(ti, ci)
            if res:
                return True
            chosen.pop()
            for j in ts:
                counts[j] -= 1
            if res is None:
                return None
        return False

    res = solve(0, 0)
    if res is None:
        return None
    if not res:
        raise ValueError(f"no {t}-({N},{M},{lam}) design exists")
    return BlockDesign(
        points=range(1, N + 1),
        blocks=[cands[ci] for ci in chosen],
        t=t,
        lam=lam,
        family=f"search:{t}:{N}:{M}:{lam}",
    )


# ---------------------------------------------------------------------------
# JSON


def design_to_dict(d: BlockDesign) -> dict:
    out: dict = {
        "points": list(d.points),
        "blocks": [list(b) for b in d.blocks],
    }
    if d.groups is not None:
        out["groups"] = [list(g) for g in d.groups]
    out["t"] = d.t
    out["lambda"] = d.lam
    out["family"] = d.family
    if d.block_labels is not None:
        out["block_labels"] = list(d.block_labels)
    if d.block_groups is not None:
        out["block_groups"] = list(d.block_groups)
    return out


def design_from_dict(obj: dict) -> BlockDesign:
    return BlockDesign(
        points=obj["points"],
        blocks=obj["blocks"],
        groups=obj.get("groups"),
        block_labels=obj.get("block_labels"),
        block_groups=obj.get("block_groups"),
        t=obj.get("t"),
        lam=obj.get("lambda"),
        family=obj.get("family", ""),
    )


def dump_design(d: BlockDesign) -> str:
    return json.dumps(design_to_dict(d), indent=None, separators=(",", ":")) + "\n"


def load_design(text: str) -> BlockDesign:
    return design_from_dict(json.loads(text))
