"""Cascaded CDC schemes built from the duals of block designs.

Workers are the blocks of the design, files are its points, and the
placement of file ``x`` is the dual block ``R_x`` (every block containing
``x``). The assignment family is either the same family (``r == s``) or the intersections of ``R_x`` over ``(t-1)``-subsets of
points (``r != s``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import NamedTuple

from .designs import (
    BlockDesign,
    GddParams,
    TDesignParams,
    dualize,
    lambda_derived,
    verify_gdd,
    verify_t_design,
)

__all__ = [
    "IvId",
    "CdcScheme",
    "DesignVerificationError",
    "WrongProvenanceError",
    "scheme_from_t_design",
    "scheme_from_gdd",
    "scheme_from_t_design_unequal",
    "computed_ivs",
    "required_ivs",
    "check_proposition_1",
    "check_proposition_3",
    "PropositionReport",
    "scheme_to_dict",
    "scheme_from_dict",
    "dump_scheme",
    "load_scheme",
]

THEOREM_1 = "theorem1"
THEOREM_2 = "theorem2"
THEOREM_3 = "theorem3"


class DesignVerificationError(ValueError):
    """The input design failed verification."""


class WrongProvenanceError(ValueError):
    """An operation was applied to a scheme built by the wrong construction."""


class IvId(NamedTuple):
    """Intermediate value ``v_{function, file}``."""

    function: int
    file: int


@dataclass(frozen=True)
class CdcScheme:
    workers: tuple[int, ...]
    files: tuple[int, ...]
    functions: tuple[int, ...]
    placement: dict[int, frozenset[int]]
    assignment: dict[int, frozenset[int]]
    K: int
    r: int
    s: int
    N: int
    Q: int
    M: int
    provenance: str
    t: int
    lam: int
    # GDD schemes: group id of each file/function point
    file_groups: dict[int, int] | None = None
    m: int | None = None
    q: int | None = None
    # subset-indexed schemes: function id -> (t-1)-subset of points
    function_subsets: dict[int, tuple[int, ...]] | None = None
    _stores: dict[int, frozenset[int]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.M >= self.N:
            raise ValueError("degenerate scheme: every worker would store every file")
        if self.K * self.M != self.r * self.N:
            raise ValueError(f"K*M != r*N ({self.K}*{self.M} != {self.r}*{self.N})")
        for n, ws in self.placement.items():
            if len(ws) != self.r:
                raise ValueError(f"file {n} is placed on {len(ws)} workers, expected r={self.r}")
        for q, ws in self.assignment.items():
            if len(ws) != self.s:
                raise ValueError(f"function {q} is assigned to {len(ws)} workers, expected s={self.s}")
        stores: dict[int, set[int]] = {w: set() for w in self.workers}
        for n, ws in self.placement.items():
            for w in ws:
                stores[w].add(n)
        for w, fs in stores.items():
            if len(fs) != self.M:
                raise ValueError(f"worker {w} stores {len(fs)} files, expected M={self.M}")
        object.__setattr__(self, "_stores", {w: frozenset(fs) for w, fs in stores.items()})

    def stored_files(self, worker: int) -> frozenset[int]:
        self._check_worker(worker)
        return self._stores[worker]

    def assigned_functions(self, worker: int) -> frozenset[int]:
        self._check_worker(worker)
        return frozenset(q for q in self.functions if worker in self.assignment[q])

    def can_compute(self, worker: int, iv: IvId) -> bool:
        return worker in self.placement[iv.file]

    def requires(self, worker: int, iv: IvId) -> bool:
        return worker in self.assignment[iv.function] and worker not in self.placement[iv.file]

    @property
    def params(self) -> tuple[int, int, int, int, int, int]:
        return (self.K, self.r, self.s, self.N, self.Q, self.M)

    def _check_worker(self, worker: int) -> None:
        if worker not in self._stores:
            raise KeyError(f"unknown worker {worker}")


def _dual_family(d: BlockDesign) -> dict[int, frozenset[int]]:
    dual = dualize(d)
    # dual block i corresponds to design point d.points[i]
    return {x: frozenset(R) for x, R in zip(d.points, dual.blocks)}


def _as_int(value: Fraction, what: str) -> int:
    if value.denominator != 1:
        raise ValueError(f"{what} = {value} is not an integer")
    return int(value)


def scheme_from_t_design(d: BlockDesign, t: int, lam: int) -> CdcScheme:
    """Placement and assignment both equal the dual blocks ``R_x``."""
    rep = verify_t_design(d, t, lam)
    if not rep.passed:
        raise DesignVerificationError(rep.violation)
    params = TDesignParams(t, d.num_points, rep.M, lam)
    R = _dual_family(d)
    r = _as_int(params.r, "r")
    return CdcScheme(
        workers=d.labels,
        files=d.points,
        functions=d.points,
        placement=R,
        assignment=dict(R),
        K=_as_int(params.K, "K"),
        r=r,
        s=r,
        N=d.num_points,
        Q=d.num_points,
        M=rep.M,
        provenance=THEOREM_1,
        t=t,
        lam=lam,
    )


def scheme_from_gdd(d: BlockDesign, t: int, lam: int) -> CdcScheme:
    """Same dual construction on a GDD; files remember their group."""
    rep = verify_gdd(d, t, lam)
    if not rep.passed:
        raise DesignVerificationError(rep.violation)
    m, q = len(d.groups), len(d.groups[0])
    params = GddParams(t, m, q, rep.M, lam)
    R = _dual_family(d)
    r = _as_int(params.r, "r")
    return CdcScheme(
        workers=d.labels,
        files=d.points,
        functions=d.points,
        placement=R,
        assignment=dict(R),
        K=_as_int(params.K, "K"),
        r=r,
        s=r,
        N=params.N,
        Q=params.N,
        M=rep.M,
        provenance=THEOREM_2,
        t=t,
        lam=lam,
        file_groups=d.group_of(),
        m=m,
        q=q,
    )


def scheme_from_t_design_unequal(d: BlockDesign, t: int, lam: int) -> CdcScheme:
    """Functions indexed by (t-1)-subsets C, assigned to the intersection of R_x over C.

    Function ids are ``1..C(N, t-1)`` in lexicographic order of ``C``;
    ``function_subsets`` maps them back. Distinct subsets may share a
    worker set when ``lam > 1``; each still names its own function.
    """
    rep = verify_t_design(d, t, lam)
    if not rep.passed:
        raise DesignVerificationError(rep.violation)
    params = TDesignParams(t, d.num_points, rep.M, lam)
    R = _dual_family(d)
    subsets = {i: C for i, C in enumerate(combinations(d.points, t - 1), 1)}
    assignment = {}
    for i, C in subsets.items():
        A = R[C[0]]
        for x in C[1:]:
            A = A & R[x]
        assignment[i] = frozenset(A)
    s = _as_int(lambda_derived(params, t - 1), "s") if t > 2 else _as_int(params.r, "s")
    return CdcScheme(
        workers=d.labels,
        files=d.points,
        functions=tuple(subsets),
        placement=R,
        assignment=assignment,
        K=_as_int(params.K, "K"),
        r=_as_int(params.r, "r"),
        s=s,
        N=d.num_points,
        Q=comb(d.num_points, t - 1),
        M=rep.M,
        provenance=THEOREM_3,
        t=t,
        lam=lam,
        function_subsets=subsets,
    )


def computed_ivs(s: CdcScheme, w: int) -> set[IvId]:
    """All IVs worker ``w`` can map locally: every function on every stored file."""
    files = s.stored_files(w)
    return {IvId(q, n) for q in s.functions for n in files}


def required_ivs(s: CdcScheme, w: int) -> set[IvId]:
    """IVs ``w`` needs for its Reduce functions but cannot compute."""
    files = s.stored_files(w)
    missing = [n for n in s.files if n not in files]
    return {IvId(q, n) for q in s.assigned_functions(w) for n in missing}


@dataclass(frozen=True)
class PropositionReport:
    passed: bool
    demanded: int
    not_demanded: int
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


def _demanded(s: CdcScheme) -> set[IvId]:
    out: set[IvId] = set()
    for w in s.workers:
        out |= required_ivs(s, w)
    return out


def check_proposition_1(s: CdcScheme) -> PropositionReport:
    """IV (x, y) is demanded by some worker iff x != y."""
    if s.provenance not in (THEOREM_1, THEOREM_2):
        raise WrongProvenanceError(f"needs a theorem1/theorem2 scheme, got {s.provenance}")
    demanded = _demanded(s)
    violations = []
    for x in s.functions:
        for y in s.files:
            iv = IvId(x, y)
            if (iv in demanded) != (x != y):
                violations.append(f"v_{{{x},{y}}} demanded={iv in demanded}")
    return PropositionReport(
        passed=not violations,
        demanded=len(demanded),
        not_demanded=len(s.functions) * len(s.files) - len(demanded),
        violations=tuple(violations),
    )


def check_proposition_3(s: CdcScheme) -> PropositionReport:
    """Subset-indexed schemes: B needs (A_C, x) iff B is in every R_x' (x' in C) and not in R_x."""
    if s.provenance != THEOREM_3:
        raise WrongProvenanceError(f"needs a theorem3 scheme, got {s.provenance}")
    violations = []
    demanded = 0
    for w in s.workers:
        stored = s.stored_files(w)
        req = required_ivs(s, w)
        comp = computed_ivs(s, w)
        for q, C in s.function_subsets.items():
            in_all = all(w in s.placement[x] for x in C)
            for x in s.files:
                iv = IvId(q, x)
                expect_req = in_all and x not in stored
                if (iv in req) != expect_req:
                    violations.append(f"worker {w} requires {iv}: {iv in req}, expected {expect_req}")
                if (iv in comp) != (w in s.placement[x]):
                    violations.append(f"worker {w} computes {iv}: {iv in comp}")
        demanded += len(req)
    total = len(s.workers) * s.Q * s.N
    return PropositionReport(
        passed=not violations,
        demanded=demanded,
        not_demanded=total - demanded,
        violations=tuple(violations[:20]),
    )


# ---------------------------------------------------------------------------
# JSON


def scheme_to_dict(s: CdcScheme) -> dict:
    out = {
        "K": s.K,
        "r": s.r,
        "s": s.s,
        "N": s.N,
        "Q": s.Q,
        "M": s.M,
        "placement": {str(n): sorted(s.placement[n]) for n in s.files},
        "assignment": {str(q): sorted(s.assignment[q]) for q in s.functions},
        "provenance": s.provenance,
        "t": s.t,
        "lambda": s.lam,
        "workers": list(s.workers),
    }
    if s.file_groups is not None:
        out["file_groups"] = {str(n): s.file_groups[n] for n in s.files}
        out["m"] = s.m
        out["q"] = s.q
    if s.function_subsets is not None:
        out["function_subsets"] = {str(q): list(C) for q, C in s.function_subsets.items()}
    return out


def scheme_from_dict(obj: dict) -> CdcScheme:
    placement = {int(k): frozenset(v) for k, v in obj["placement"].items()}
    assignment = {int(k): frozenset(v) for k, v in obj["assignment"].items()}
    workers = obj.get("workers")
    if workers is None:
        workers = sorted({w for ws in placement.values() for w in ws})
    fg = obj.get("file_groups")
    fs = obj.get("function_subsets")
    return CdcScheme(
        workers=tuple(workers),
        files=tuple(sorted(placement)),
        functions=tuple(sorted(assignment)),
        placement=placement,
        assignment=assignment,
        K=obj["K"],
        r=obj["r"],
        s=obj["s"],
        N=obj["N"],
        Q=obj["Q"],
        M=obj["M"],
        provenance=obj["provenance"],
        t=obj["t"],
        lam=obj["lambda"],
        file_groups={int(k): v for k, v in fg.items()} if fg is not None else None,
        m=obj.get("m"),
        q=obj.get("q"),
        function_subsets={int(k): tuple(v) for k, v in fs.items()} if fs is not None else None,
    )


def dump_scheme(s: CdcScheme) -> str:
    return json.dumps(scheme_to_dict(s), separators=(",", ":")) + "\n"


def load_scheme(text: str) -> CdcScheme:
    return scheme_from_dict(json.loads(text))
