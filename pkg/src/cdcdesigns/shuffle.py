"""Shuffle phase: coded signal generation, one-shot decoding, and bit-exact simulation.

Senders are chosen deterministically (smallest eligible worker) unless a
seeded ``random.Random`` is supplied. Signals are ordered by the pair or
t-subset that produced them.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Iterable, Literal

from .schemes import THEOREM_1, THEOREM_2, THEOREM_3, CdcScheme, IvId, WrongProvenanceError, required_ivs

__all__ = [
    "CodedSignal",
    "ShuffleTranscript",
    "SimulationConfig",
    "SimulationReport",
    "OneShotReport",
    "ProtocolViolation",
    "PayloadMismatchError",
    "deliver_strategy_1",
    "deliver_strategy_2",
    "deliver_strategy_3",
    "deliver",
    "reduce_decode",
    "decode_all",
    "signal_usefulness",
    "verify_one_shot",
    "iv_payload",
    "attach_payloads",
    "simulate_end_to_end",
    "transcript_to_list",
    "transcript_from_list",
    "dump_transcript",
]


class ProtocolViolation(RuntimeError):
    """A worker could not decode one of its required intermediate values."""

    def __init__(self, worker: int, iv: IvId, detail: str = "") -> None:
        self.worker = worker
        self.iv = iv
        msg = f"worker {worker} cannot decode v_{{{iv.function},{iv.file}}}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class PayloadMismatchError(RuntimeError):
    def __init__(self, worker: int, iv: IvId) -> None:
        self.worker = worker
        self.iv = iv
        super().__init__(f"worker {worker} decoded a wrong payload for v_{{{iv.function},{iv.file}}}")


@dataclass(frozen=True)
class CodedSignal:
    sender: int
    summands: tuple[IvId, ...]
    payload: int | None = None

    def __post_init__(self) -> None:
        sm = tuple(sorted(IvId(*iv) for iv in self.summands))
        if not sm:
            raise ValueError("a signal needs at least one summand")
        if len(set(sm)) != len(sm):
            raise ValueError("summands must be pairwise distinct")
        object.__setattr__(self, "summands", sm)

    @property
    def coded(self) -> bool:
        return len(self.summands) > 1


@dataclass(frozen=True)
class ShuffleTranscript:
    signals: tuple[CodedSignal, ...]
    T: int = 64
    strategy: str = ""

    @property
    def total_bits(self) -> int:
        return len(self.signals) * self.T

    def __len__(self) -> int:
        return len(self.signals)

    def sent_bits(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for sig in self.signals:
            out[sig.sender] = out.get(sig.sender, 0) + self.T
        return out


@dataclass(frozen=True)
class SimulationConfig:
    T: int = 64
    seed: int = 1
    mode: Literal["symbolic", "concrete"] = "symbolic"
    random_sender: bool = False

    def __post_init__(self) -> None:
        if self.T < 8 or self.T % 8:
            raise ValueError(f"T must be a positive multiple of 8, got {self.T}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.mode not in ("symbolic", "concrete"):
            raise ValueError(f"unknown mode {self.mode!r}")


def _pick(eligible: Iterable[int], rng: random.Random | None) -> int:
    pool = sorted(eligible)
    return rng.choice(pool) if rng is not None else pool[0]


def _require(s: CdcScheme, allowed: tuple[str, ...], name: str) -> None:
    if s.provenance not in allowed:
        raise WrongProvenanceError(f"{name} needs a {'/'.join(allowed)} scheme, got {s.provenance}")


def deliver_strategy_1(s: CdcScheme, T: int = 64, rng: random.Random | None = None) -> ShuffleTranscript:
    """One coded signal v_{x,y} + v_{y,x} per pair, from a worker in R_x & R_y."""
    _require(s, (THEOREM_1,), "strategy 1")
    signals = []
    for x, y in combinations(s.files, 2):
        both = s.placement[x] & s.placement[y]
        if not both:
            raise WrongProvenanceError(f"R_{x} and R_{y} do not intersect")
        signals.append(CodedSignal(_pick(both, rng), (IvId(x, y), IvId(y, x))))
    return ShuffleTranscript(tuple(signals), T, "1")


def deliver_strategy_2(s: CdcScheme, T: int = 64, rng: random.Random | None = None) -> ShuffleTranscript:
    """Strategy 1 where R_x & R_y is nonempty, two uncoded signals otherwise.

    The uncoded v_{y,x} is sent from a worker in R_x (it stores file x)
    and v_{x,y} from a worker in R_y.
    """
    _require(s, (THEOREM_1, THEOREM_2), "strategy 2")
    signals = []
    for x, y in combinations(s.files, 2):
        both = s.placement[x] & s.placement[y]
        if both:
            signals.append(CodedSignal(_pick(both, rng), (IvId(x, y), IvId(y, x))))
        else:
            signals.append(CodedSignal(_pick(s.placement[x], rng), (IvId(y, x),)))
            signals.append(CodedSignal(_pick(s.placement[y], rng), (IvId(x, y),)))
    return ShuffleTranscript(tuple(signals), T, "2")


def deliver_strategy_3(s: CdcScheme, T: int = 64, rng: random.Random | None = None) -> ShuffleTranscript:
    """One signal per t-subset: XOR of v_{A_C, T\\C} over its (t-1)-subsets C."""
    _require(s, (THEOREM_3,), "strategy 3")
    fid = {C: q for q, C in s.function_subsets.items()}
    signals = []
    for tset in combinations(s.files, s.t):
        common = frozenset.intersection(*(s.placement[x] for x in tset))
        if not common:
            raise WrongProvenanceError(f"no worker stores all of {tset}")
        summands = []
        for C in combinations(tset, s.t - 1):
            (rest,) = set(tset) - set(C)
            summands.append(IvId(fid[C], rest))
        signals.append(CodedSignal(_pick(common, rng), tuple(summands)))
    return ShuffleTranscript(tuple(signals), T, "3")


_STRATEGIES = {1: deliver_strategy_1, 2: deliver_strategy_2, 3: deliver_strategy_3}
_DEFAULT_STRATEGY = {THEOREM_1: 1, THEOREM_2: 2, THEOREM_3: 3}


def deliver(
    s: CdcScheme, strategy: int | str = "auto", T: int = 64, rng: random.Random | None = None
) -> ShuffleTranscript:
    if strategy == "auto":
        strategy = _DEFAULT_STRATEGY[s.provenance]
    return _STRATEGIES[int(strategy)](s, T, rng)


def _unknown(s: CdcScheme, w: int, sig: CodedSignal) -> list[IvId]:
    return [iv for iv in sig.summands if w not in s.placement[iv.file]]


def reduce_decode(s: CdcScheme, tr: ShuffleTranscript, w: int) -> dict[IvId, int]:
    """Decode every required IV of ``w`` from single signals.

    Returns a map from IV to the index of the signal it was decoded from.
    A signal is usable when exactly one summand is not locally computable
    and that summand is required; decoding never uses another signal's
    output. Raises :class:`ProtocolViolation` if a required IV is missed.
    """
    need = required_ivs(s, w)
    got: dict[IvId, int] = {}
    for i, sig in enumerate(tr.signals):
        if sig.sender == w:
            continue
        unknown = _unknown(s, w, sig)
        if len(unknown) == 1 and unknown[0] in need:
            got.setdefault(unknown[0], i)
    for iv in sorted(need):
        if iv not in got:
            raise ProtocolViolation(w, iv, "no single signal isolates it")
    return got


def decode_all(s: CdcScheme, tr: ShuffleTranscript) -> dict[int, dict[IvId, list[int]]]:
    """For every worker, every IV it can isolate and all signals that isolate it.

    Signal-centric counterpart of :func:`reduce_decode`; only workers
    assigned to some summand's function are considered as receivers.
    """
    out: dict[int, dict[IvId, list[int]]] = {w: {} for w in s.workers}
    for i, sig in enumerate(tr.signals):
        receivers = set().union(*(s.assignment[iv.function] for iv in sig.summands))
        receivers.discard(sig.sender)
        for w in receivers:
            unknown = _unknown(s, w, sig)
            if len(unknown) == 1 and s.requires(w, unknown[0]):
                out[w].setdefault(unknown[0], []).append(i)
    return out


def signal_usefulness(s: CdcScheme, tr: ShuffleTranscript) -> list[int]:
    """Number of workers that decode something from each signal."""
    counts = [0] * len(tr.signals)
    for per_iv in decode_all(s, tr).values():
        used = {idx[0] for idx in per_iv.values()}
        for i in used:
            counts[i] += 1
    return counts


@dataclass(frozen=True)
class OneShotReport:
    passed: bool
    sender_violations: tuple[int, ...] = ()
    starved: tuple[tuple[int, IvId], ...] = ()
    multiply_served: tuple[tuple[int, IvId], ...] = ()

    def __bool__(self) -> bool:
        return self.passed

    def describe(self) -> str:
        if self.passed:
            return "one-shot delivery verified"
        parts = []
        if self.sender_violations:
            parts.append(f"signals whose sender cannot compute a summand: {list(self.sender_violations)[:10]}")
        if self.starved:
            w, iv = self.starved[0]
            parts.append(f"{len(self.starved)} starved IVs, first: worker {w} v_{{{iv.function},{iv.file}}}")
        if self.multiply_served:
            parts.append(f"{len(self.multiply_served)} IVs served by more than one signal")
        return "; ".join(parts)


def verify_one_shot(tr: ShuffleTranscript, s: CdcScheme) -> OneShotReport:
    """Each required IV decodable from exactly one signal; every sender can compute its summands."""
    return _one_shot(tr, s, decode_all(s, tr))


def _one_shot(tr: ShuffleTranscript, s: CdcScheme, decoded: dict[int, dict[IvId, list[int]]]) -> OneShotReport:
    bad_senders = tuple(
        i for i, sig in enumerate(tr.signals) if any(sig.sender not in s.placement[iv.file] for iv in sig.summands)
    )
    starved, multi = [], []
    for w in s.workers:
        got = decoded[w]
        for iv in sorted(required_ivs(s, w)):
            n = len(got.get(iv, ()))
            if n == 0:
                starved.append((w, iv))
            elif n > 1:
                multi.append((w, iv))
    return OneShotReport(
        passed=not (bad_senders or starved or multi),
        sender_violations=bad_senders,
        starved=tuple(starved),
        multiply_served=tuple(multi),
    )


def iv_payload(seed: int, iv: IvId, T: int) -> int:
    """Deterministic T-bit stand-in for the Map output v_{q,n}."""
    h = hashlib.shake_256()
    h.update(seed.to_bytes(8, "little"))
    h.update(int(iv.function).to_bytes(8, "little", signed=True))
    h.update(int(iv.file).to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(T // 8), "little")


def attach_payloads(tr: ShuffleTranscript, seed: int) -> ShuffleTranscript:
    """XOR the summands' ground-truth payloads into each signal."""
    signals = []
    for sig in tr.signals:
        value = 0
        for iv in sig.summands:
            value ^= iv_payload(seed, iv, tr.T)
        signals.append(replace(sig, payload=value))
    return replace(tr, signals=tuple(signals))


@dataclass
class SimulationReport:
    passed: bool
    strategy: str
    mode: str
    T: int
    seed: int
    num_signals: int
    total_bits: int
    sent_bits: dict[int, int] = field(default_factory=dict)
    received_bits: dict[int, int] = field(default_factory=dict)
    required: dict[int, int] = field(default_factory=dict)
    decoded: dict[int, int] = field(default_factory=dict)
    one_shot: bool = False
    transcript: ShuffleTranscript | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "strategy": self.strategy,
            "mode": self.mode,
            "T": self.T,
            "seed": self.seed,
            "num_signals": self.num_signals,
            "total_bits": self.total_bits,
            "one_shot": self.one_shot,
            "l_k": {str(w): b for w, b in self.sent_bits.items()},
            "received_bits": {str(w): b for w, b in self.received_bits.items()},
            "required": {str(w): n for w, n in self.required.items()},
            "decoded": {str(w): n for w, n in self.decoded.items()},
        }


def simulate_end_to_end(
    s: CdcScheme, strategy: int | str = "auto", cfg: SimulationConfig | None = None
) -> SimulationReport:
    """Run the Shuffle and Reduce phases and check every worker's recovery.

    In concrete mode each IV gets a pseudorandom payload derived from
    ``(seed, q, n)``; receivers XOR out their local IVs and the result is
    compared bit-for-bit with the ground truth.
    """
    cfg = cfg or SimulationConfig()
    rng = random.Random(cfg.seed) if cfg.random_sender else None
    tr = deliver(s, strategy, cfg.T, rng)
    if cfg.mode == "concrete":
        tr = attach_payloads(tr, cfg.seed)

    decoded = decode_all(s, tr)
    truth: dict[IvId, int] = {}

    def payload(iv: IvId) -> int:
        if iv not in truth:
            truth[iv] = iv_payload(cfg.seed, iv, cfg.T)
        return truth[iv]

    required_count, decoded_count = {}, {}
    for w in s.workers:
        need = required_ivs(s, w)
        got = decoded[w]
        for iv in sorted(need):
            if iv not in got:
                raise ProtocolViolation(w, iv, "no single signal isolates it")
        required_count[w] = len(need)
        decoded_count[w] = len(need)
        if cfg.mode == "concrete":
            for iv in sorted(need):
                sig = tr.signals[got[iv][0]]
                value = sig.payload
                for other in sig.summands:
                    if other != iv:
                        value ^= payload(other)
                if value != payload(iv):
                    raise PayloadMismatchError(w, iv)

    sent = {w: 0 for w in s.workers}
    sent.update(tr.sent_bits())
    received = {w: tr.total_bits - sent[w] for w in s.workers}
    one_shot = _one_shot(tr, s, decoded).passed
    report = SimulationReport(
        passed=one_shot,
        strategy=tr.strategy,
        mode=cfg.mode,
        T=cfg.T,
        seed=cfg.seed,
        num_signals=len(tr),
        total_bits=tr.total_bits,
        sent_bits=sent,
        received_bits=received,
        required=required_count,
        decoded=decoded_count,
        one_shot=one_shot,
        transcript=tr,
    )
    return report


def transcript_to_list(tr: ShuffleTranscript) -> list[dict]:
    out = []
    width = tr.T // 4
    for sig in tr.signals:
        item: dict = {"sender": sig.sender, "summands": [[iv.function, iv.file] for iv in sig.summands]}
        if sig.payload is not None:
            item["payload_hex"] = format(sig.payload, f"0{width}x")
        out.append(item)
    return out


def transcript_from_list(items: list[dict], T: int = 64, strategy: str = "") -> ShuffleTranscript:
    signals = []
    for item in items:
        payload = item.get("payload_hex")
        signals.append(
            CodedSignal(
                sender=item["sender"],
                summands=tuple(IvId(q, n) for q, n in item["summands"]),
                payload=int(payload, 16) if payload is not None else None,
            )
        )
    return ShuffleTranscript(tuple(signals), T, strategy)


def dump_transcript(tr: ShuffleTranscript) -> str:
    return json.dumps(transcript_to_list(tr), separators=(",", ":")) + "\n"
