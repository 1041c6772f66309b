"""Broadcast scheduling: coded multicast with leader-based subset skipping.

The loop walks subset sizes j = k down to 1.  Each size-j subset S of active
users gets one message, the XOR of every member's needed block, truncated to
an increment that never overshoots full caches; subsets without a leader are
skipped because receivers can synthesize them.  The loop stops at the first
size whose full blocks would fill every cache.

``plan_schedule`` runs the loop on given block sizes and keeps exact rational
lengths.  ``deliver`` emits real payloads: message lengths are capped by the
increments computed from expected block sizes, rounded up to whole symbols,
and any per-user shortfall from truncation is repaired by dedicated top-up
symbols appended after the multicast phase.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .analysis import accumulated_share, comb0, stop_index
from .decoding import (BroadcastMessage, MessageComponent, direct_message,
                       seed_from_cache, strip_fixpoint, synthesize_skipped)
from .params import (CacheContents, RequestVector, SubfilePartition, SystemParams,
                     fraction_str, iter_subset_masks, mask_users, require_valid,
                     subset_mask)
from .placement import expected_subfile_size, partition_subfiles


def leaders(d: RequestVector) -> tuple[int, ...]:
    """Lowest-indexed user per distinct requested file, ascending."""
    seen: dict[int, int] = {}
    for user, file in enumerate(d.files):
        if file not in seen:
            seen[file] = user
    return tuple(sorted(seen.values()))


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


class ExpectedSizes:
    """Block sizes equal to their placement expectation; uniform per cardinality."""

    uniform = True

    def __init__(self, params: SystemParams):
        self._params = params

    def size_for_card(self, t: int) -> Fraction:
        return expected_subfile_size(self._params, t)

    def block_size(self, file: int, mask: int) -> Fraction:
        return self.size_for_card(mask.bit_count())


class MeasuredSizes:
    """Actual block sizes of a concrete placement."""

    uniform = False

    def __init__(self, partitions: dict[int, SubfilePartition]):
        self._partitions = partitions

    def block_size(self, file: int, mask: int) -> int:
        return self._partitions[file].block(mask).size


@dataclass
class IterationPlan:
    j: int
    seg: Fraction
    acc: Fraction
    acc_new: Fraction
    incr: Fraction
    cap: int | None
    n_messages: int
    symbols: int = 0  # realized symbols, filled by deliver


@dataclass(frozen=True)
class PlannedMessage:
    j: int
    subset_mask: int
    length: Fraction


@dataclass
class SchedulePlan:
    s: int
    iterations: list[IterationPlan]
    messages: list[PlannedMessage]
    total: Fraction


def plan_schedule(params: SystemParams, d: RequestVector, sizes) -> SchedulePlan:
    """Run the scheduling loop on the given block sizes, keeping exact lengths.

    The per-iteration representative block size is the mean over the distinct
    (file, size j-1 subset) blocks the iteration consumes; on uniform sizes
    this is the common value.
    """
    d.validate_for(params)
    k = params.k
    d0 = d.zero_based
    u_mask = subset_mask(leaders(d))
    f_total = Fraction(params.f)
    acc = Fraction(params.m * params.f, params.n_files)
    iterations: list[IterationPlan] = []
    messages: list[PlannedMessage] = []
    if acc >= f_total:
        return SchedulePlan(s=k + 1, iterations=[], messages=[], total=Fraction(0))
    demanded = sorted(set(d0))
    for j in range(k, 0, -1):
        if getattr(sizes, "uniform", False):
            seg = Fraction(sizes.size_for_card(j - 1))
        else:
            consumed = [
                Fraction(sizes.block_size(nf, a_mask))
                for a_mask in iter_subset_masks(k, j - 1)
                for nf in demanded
                if any(d0[u] == nf and not a_mask >> u & 1 for u in range(k))
            ]
            seg = sum(consumed, Fraction(0)) / len(consumed)
        c = comb0(k - 1, j - 1)
        acc_new = acc + seg * c
        incr = min(seg * c, f_total - acc) / c
        n_msg = 0
        if incr > 0:
            for smask in iter_subset_masks(k, j):
                if smask & u_mask:
                    messages.append(PlannedMessage(j=j, subset_mask=smask, length=incr))
                    n_msg += 1
        iterations.append(IterationPlan(j, seg, acc, acc_new, incr, None, n_msg))
        if acc_new >= f_total:
            return SchedulePlan(s=j, iterations=iterations, messages=messages,
                                total=sum((m.length for m in messages), Fraction(0)))
        acc = acc_new
    raise AssertionError("r >= 1 guarantees caches fill by subset size 1")


@dataclass
class DeliverySchedule:
    """Executed broadcast: multicast messages, synthesizable skips, top-ups."""

    params: SystemParams
    demand: RequestVector
    leaders_mask: int
    s: int
    iterations: list[IterationPlan]
    messages: list[BroadcastMessage]
    topups: list[BroadcastMessage]
    reconstruct: bool
    unsolved_skips: list[tuple[int, int]]

    @property
    def main_symbols(self) -> int:
        return sum(m.length for m in self.messages if m.kind == "main")

    @property
    def fallback_symbols(self) -> int:
        return sum(m.length for m in self.messages if m.kind == "fallback")

    @property
    def topup_symbols(self) -> int:
        return sum(m.length for m in self.topups)

    @property
    def total_symbols(self) -> int:
        return self.main_symbols + self.fallback_symbols + self.topup_symbols

    @property
    def rounding_overshoot(self) -> Fraction:
        """Symbols sent beyond the exact rational increments, from rounding up."""
        by_j = {it.j: it.incr for it in self.iterations}
        total = Fraction(0)
        for m in self.messages:
            if m.kind == "main":
                total += max(Fraction(0), Fraction(m.length) - by_j[m.j])
        return total

    def realized_per_iteration(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for m in self.messages:
            out[m.j] = out.get(m.j, 0) + m.length
        return out

    def to_json(self) -> str:
        obj = {
            "demand": list(self.demand.files),
            "leaders": list(mask_users(self.leaders_mask)),
            "stop_size": self.s,
            "reconstruct": self.reconstruct,
            "iterations": [
                {
                    "j": it.j,
                    "seg": fraction_str(it.seg),
                    "acc": fraction_str(it.acc),
                    "acc_new": fraction_str(it.acc_new),
                    "incr": fraction_str(it.incr),
                    "cap": it.cap,
                    "n_messages": it.n_messages,
                    "symbols": it.symbols,
                }
                for it in self.iterations
            ],
            "messages": [
                {
                    "j": m.j,
                    "subset": list(mask_users(m.subset_mask)),
                    "length": m.length,
                    "kind": m.kind,
                    "components": [
                        {
                            "user": c.user,
                            "file": c.file + 1,
                            "block_subset": list(mask_users(c.block_mask)),
                            "covered": len(c.indices),
                            "block_len": c.full_len,
                        }
                        for c in m.components
                    ],
                }
                for m in self.messages
            ],
            "topup": [
                {"user": m.components[0].user, "file": m.components[0].file + 1,
                 "symbols": m.length}
                for m in self.topups
            ],
            "totals": {
                "main": self.main_symbols,
                "fallback": self.fallback_symbols,
                "topup": self.topup_symbols,
                "total": self.total_symbols,
                "rounding_overshoot": fraction_str(self.rounding_overshoot),
            },
        }
        return json.dumps(obj, sort_keys=True)

    def save_payloads(self, path) -> None:
        arrays = {f"msg_{i:05d}": m.payload for i, m in enumerate(self.messages)}
        arrays.update({f"topup_{i:05d}": m.payload for i, m in enumerate(self.topups)})
        np.savez_compressed(path, **arrays)


def deliver(params: SystemParams, cache: CacheContents, d: RequestVector,
            coded_files: dict[int, np.ndarray], reconstruct: bool = True) -> DeliverySchedule:
    """Emit the broadcast for demand d over a concrete placement.

    Message lengths follow the increments computed from expected block sizes,
    rounded up to whole symbols and never beyond the longest XOR component.
    With reconstruct=False, subsets without a leader are transmitted outright
    instead of being left for receiver-side synthesis.
    """
    require_valid(params)
    d.validate_for(params)
    k = params.k
    d0 = d.zero_based
    u_mask = subset_mask(leaders(d))
    f_sym = params.f
    s = stop_index(params.n_files, params.m, k, params.r)
    partitions = {nf: partition_subfiles(cache, range(k), nf, params) for nf in set(d0)}

    iterations: list[IterationPlan] = []
    messages: list[BroadcastMessage] = []
    if s <= k:
        f_total = Fraction(f_sym)
        for j in range(k, s - 1, -1):
            seg = expected_subfile_size(params, j - 1)
            c = comb0(k - 1, j - 1)
            acc = accumulated_share(j + 1, params.n_files, params.m, k, params.r) * f_total
            acc_new = acc + seg * c
            incr = min(seg * c, f_total - acc) / c
            cap = _ceil(incr)
            plan = IterationPlan(j, seg, acc, acc_new, incr, cap, 0)
            if cap > 0:
                for smask in iter_subset_masks(k, j):
                    is_main = bool(smask & u_mask)
                    if not is_main and (reconstruct or j < 2):
                        continue
                    msg = _build_message(smask, j, cap, d0, partitions, coded_files,
                                         kind="main" if is_main else "fallback")
                    if msg is not None:
                        messages.append(msg)
                        if is_main:
                            plan.n_messages += 1
                        plan.symbols += msg.length
            iterations.append(plan)

    virtuals: list[BroadcastMessage] = []
    unsolved: list[tuple[int, int]] = []
    if reconstruct:
        virtuals, unsolved = synthesize_skipped(k, u_mask, d0, messages)

    # dedicated repair symbols for any user left short by truncation
    topups: list[BroadcastMessage] = []
    for user in range(k):
        file0 = d0[user]
        view = {nf: (cache.indices(user, nf), coded_files[nf][cache.indices(user, nf)])
                for nf in range(params.n_files)}
        know = seed_from_cache(view, params.coded_len)
        strip_fixpoint(know, messages + virtuals + topups)
        deficit = f_sym - know.count(file0)
        if deficit > 0:
            missing = np.flatnonzero(~know.mask(file0))[:deficit]
            topups.append(direct_message(user, file0, missing, coded_files[file0][missing]))

    return DeliverySchedule(params=params, demand=d, leaders_mask=u_mask, s=s,
                            iterations=iterations, messages=messages, topups=topups,
                            reconstruct=reconstruct, unsolved_skips=unsolved)


def _build_message(smask: int, j: int, cap: int, d0, partitions, coded_files,
                   kind: str) -> BroadcastMessage | None:
    users = mask_users(smask)
    blocks = [(u, d0[u], smask & ~(1 << u), partitions[d0[u]].block(smask & ~(1 << u)))
              for u in users]
    natural = max(b.size for _, _, _, b in blocks)
    length = min(natural, cap)
    if length == 0:
        return None
    payload = np.zeros(length, dtype=np.int64)
    comps = []
    for u, nf, amask, blk in blocks:
        covered = blk[: min(length, blk.size)]
        if covered.size:
            payload[: covered.size] ^= coded_files[nf][covered]
        comps.append(MessageComponent(user=u, file=nf, block_mask=amask,
                                      indices=covered, full_len=blk.size))
    return BroadcastMessage(j=j, subset_mask=smask, length=length, payload=payload,
                            components=tuple(comps), kind=kind)
