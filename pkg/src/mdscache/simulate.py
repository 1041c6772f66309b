"""Seeded Monte Carlo trials over placement, delivery, and per-user decoding.

Coded files come in two flavors:

* real: files are random symbol strings, coded by the MDS codec, and every
  successful decode reconstructs the original file bit-exactly (needs
  r*f <= 65535 and affordable interpolation, so moderate f)
* virtual: coded symbols are seeded pseudo-random values; a user succeeds when
  it ends up knowing >= f distinct coded symbols of its file, every one equal
  to the ground truth.  Delivery and accounting are value-exact either way,
  only the final interpolation step is vouched for by the codec test suite
  instead of being re-run per trial.  This is what makes file lengths far
  beyond the field size affordable.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from statistics import stdev

import numpy as np

from .analysis import rate_mds_dec
from .decoding import decode_user
from .delivery import deliver
from .mds import CodecConfig, mds_encode
from .params import RequestVector, SystemParams, fraction_str, require_valid
from .placement import TAG_FILE, TAG_TRIAL, TAG_VIRTUAL, derive_seed, prefetch

REAL_CODEC_MAX_F = 4096


def _splitmix64_np(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(0x9E3779B97F4A7C15)).astype(np.uint64)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def pseudo_symbols(seed: int, count: int, width_mask: int = 0xFFFF) -> np.ndarray:
    """Deterministic symbol string: splitmix64 over (seed XOR position+1)."""
    base = np.uint64(seed) ^ (np.arange(1, count + 1, dtype=np.uint64))
    return (_splitmix64_np(base) & np.uint64(width_mask)).astype(np.int64)


def choose_codec(params: SystemParams, codec: str) -> str:
    """Resolve 'auto' to 'real' when a single-codeword codec is affordable."""
    if codec == "auto":
        fits = params.coded_len <= 65535 and params.f <= REAL_CODEC_MAX_F
        return "real" if fits else "virtual"
    if codec == "real":
        CodecConfig.from_expansion(params.f, params.r)  # raises when infeasible
        return "real"
    if codec == "virtual":
        return "virtual"
    raise ValueError(f"codec must be auto, real, or virtual, got {codec!r}")


@dataclass
class TrialResult:
    trial: int
    seed: int
    demand: tuple[int, ...]
    codec_kind: str
    main_symbols: int
    fallback_symbols: int
    topup_symbols: int
    total_symbols: int
    rate: float
    per_iteration: tuple[tuple[int, int], ...]
    successes: tuple[bool, ...]
    known: tuple[int, ...]
    exact_successes: tuple[bool, ...] | None = None


@dataclass
class TrialStats:
    params: SystemParams
    demand: RequestVector
    mode: str
    codec_kind: str
    reconstruct: bool
    master_seed: int
    trials: list[TrialResult]

    @property
    def n_distinct(self) -> int:
        return self.demand.n_distinct

    @property
    def mean_rate_exact(self) -> Fraction:
        return Fraction(sum(t.total_symbols for t in self.trials),
                        len(self.trials) * self.params.f)

    @property
    def mean_rate(self) -> float:
        return float(self.mean_rate_exact)

    @property
    def std_rate(self) -> float:
        if len(self.trials) < 2:
            return 0.0
        return stdev(t.rate for t in self.trials)

    @property
    def success_fraction(self) -> float:
        flat = [ok for t in self.trials for ok in t.successes]
        return sum(flat) / len(flat)

    @property
    def topup_fraction(self) -> float:
        return sum(t.topup_symbols for t in self.trials) / (len(self.trials) * self.params.f)


def run_one_trial(params: SystemParams, demand: RequestVector, master_seed: int,
                  trial: int, mode: str, codec_kind: str,
                  reconstruct: bool = True) -> TrialResult:
    tseed = derive_seed(master_seed, TAG_TRIAL, trial)
    cache = prefetch(params, tseed)
    config: CodecConfig | None = None
    originals: dict[int, np.ndarray] = {}
    coded: dict[int, np.ndarray] = {}
    if codec_kind == "real":
        config = CodecConfig.from_expansion(params.f, params.r)
        for nf in range(params.n_files):
            originals[nf] = pseudo_symbols(derive_seed(tseed, TAG_FILE, nf), params.f,
                                           config.gf.order - 1)
            coded[nf] = mds_encode(originals[nf], config)
    else:
        for nf in range(params.n_files):
            coded[nf] = pseudo_symbols(derive_seed(tseed, TAG_VIRTUAL, nf), params.coded_len)

    schedule = deliver(params, cache, demand, coded, reconstruct=reconstruct)

    successes: list[bool] = []
    known: list[int] = []
    exact: list[bool] = []
    d0 = demand.zero_based
    for user in range(params.k):
        view = {nf: (cache.indices(user, nf), coded[nf][cache.indices(user, nf)])
                for nf in range(params.n_files)}
        res = decode_user(params, user, view, schedule, mode="accounting", codec=config)
        if res.success:
            idx, vals = res.points
            truth = coded[d0[user]][idx]
            if not np.array_equal(vals, truth):
                raise AssertionError(
                    f"trial {trial}: user {user} accounted wrong symbol values")
            if config is not None and not np.array_equal(res.symbols, originals[d0[user]]):
                raise AssertionError(
                    f"trial {trial}: user {user} decoded a different file")
        successes.append(res.success)
        known.append(res.known)
        if mode == "exact":
            res_x = decode_user(params, user, view, schedule, mode="exact", codec=config)
            if res.success and not res_x.success:
                raise AssertionError(
                    f"trial {trial}: accounting claimed success rank analysis denies")
            exact.append(res_x.success)

    per_it = tuple(sorted(schedule.realized_per_iteration().items(), reverse=True))
    total = schedule.total_symbols
    return TrialResult(
        trial=trial, seed=tseed, demand=demand.files, codec_kind=codec_kind,
        main_symbols=schedule.main_symbols, fallback_symbols=schedule.fallback_symbols,
        topup_symbols=schedule.topup_symbols, total_symbols=total,
        rate=total / params.f, per_iteration=per_it,
        successes=tuple(successes), known=tuple(known),
        exact_successes=tuple(exact) if mode == "exact" else None,
    )


def _trial_worker(args) -> TrialResult:
    return run_one_trial(*args)


def run_trials(params: SystemParams, demand: RequestVector | None = None,
               trials: int = 1, seed: int = 0, mode: str = "accounting",
               codec: str = "auto", jobs: int = 1,
               reconstruct: bool = True) -> TrialStats:
    """Run seeded independent trials; results do not depend on jobs."""
    require_valid(params)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if mode not in ("accounting", "exact"):
        raise ValueError(f"mode must be accounting or exact, got {mode!r}")
    if demand is None:
        demand = RequestVector.worst_case(params)
    demand.validate_for(params)
    codec_kind = choose_codec(params, codec)
    if mode == "exact" and codec_kind != "real":
        raise ValueError("exact mode needs the real codec (small f)")
    args = [(params, demand, seed, t, mode, codec_kind, reconstruct) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_worker, args))
    else:
        results = [run_one_trial(*a) for a in args]
    return TrialStats(params=params, demand=demand, mode=mode, codec_kind=codec_kind,
                      reconstruct=reconstruct, master_seed=seed, trials=results)


def compare_to_theory(stats: TrialStats, tolerance: float,
                      worst_case: bool = False) -> dict:
    """Check mean empirical rate against the closed form at the demand's
    distinct-file count (or the worst case), plus full decode success."""
    p = stats.params
    n_distinct = None if worst_case else stats.n_distinct
    theory = rate_mds_dec(p.n_files, p.m, p.k, p.r, n_distinct=n_distinct)
    mean = stats.mean_rate_exact
    if theory == 0:
        rel = None if mean == 0 else float("inf")
    else:
        rel = float(abs(mean - theory) / theory)
    ok_rate = (rel is None) or rel <= tolerance
    ok_success = stats.success_fraction == 1.0
    message = ""
    if tolerance == 0 and rel not in (None, 0.0):
        ok_rate = False
        message = ("tolerance 0 cannot be met by a finite-length simulation: "
                   "block sizes are random, so the realized rate fluctuates "
                   f"around the closed form (relative error {rel:.3e})")
    elif not ok_rate:
        message = f"mean rate off by {rel:.3e} relative, tolerance {tolerance:.3e}"
    elif not ok_success:
        message = "some user failed to decode its file"
    return {
        "theory_rate": fraction_str(theory),
        "theory_rate_float": float(theory),
        "mean_rate": fraction_str(mean),
        "mean_rate_float": float(mean),
        "relative_error": rel,
        "tolerance": tolerance,
        "success_fraction": stats.success_fraction,
        "topup_fraction": stats.topup_fraction,
        "distinct_files": "worst-case" if worst_case else stats.n_distinct,
        "passed": bool(ok_rate and ok_success),
        "message": message,
    }
