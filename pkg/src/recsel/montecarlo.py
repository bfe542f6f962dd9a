"""Monte Carlo engine: theta-sequence schemes, record-process simulation and
bias/risk tables for the selection estimators.

Replicate r always draws from an independent counter-based stream keyed by
(master_seed, r) and partial results are reduced in replicate order, so
summaries are bit-identical for any number of worker threads.
"""

from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from . import estimators, families
from .errors import DataError, NumericError, UsageError
from .records import Direction, RecordSet
from .streams import replicate_stream

_FIRST_BLOCK = 64
_MAX_BLOCK = 65536
_CHUNK = 2048  # fixed reduction granularity, independent of worker count
MAX_TRUNCATION_FRACTION = 0.01


class Scheme(str, enum.Enum):
    AR_POSITIVE_ERROR = "ar_positive_error"
    STOCHASTIC_GEOMETRIC = "stochastic_geometric"
    WHITE_NOISE = "white_noise"
    CONSTANT = "constant"
    USER_SUPPLIED = "user_supplied"


@dataclass(frozen=True)
class ParameterSequenceModel:
    """Generator description for the positive parameter sequence theta_i."""

    scheme: Scheme
    params: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        if self.scheme == Scheme.CONSTANT:
            if float(self.params.get("value", 0.0)) <= 0:
                raise UsageError("constant scheme needs value > 0")
        elif self.scheme == Scheme.USER_SUPPLIED:
            thetas = np.asarray(self.params.get("thetas", ()), dtype=float)
            if thetas.size == 0 or np.any(thetas <= 0):
                raise UsageError("user-supplied scheme needs a nonempty positive theta list")

    @staticmethod
    def constant(value: float) -> "ParameterSequenceModel":
        return ParameterSequenceModel(Scheme.CONSTANT, MappingProxyType({"value": float(value)}))

    @staticmethod
    def ar_positive_error() -> "ParameterSequenceModel":
        return ParameterSequenceModel(Scheme.AR_POSITIVE_ERROR)

    @staticmethod
    def stochastic_geometric(redraw_per_index: bool = True) -> "ParameterSequenceModel":
        return ParameterSequenceModel(
            Scheme.STOCHASTIC_GEOMETRIC, MappingProxyType({"redraw_per_index": bool(redraw_per_index)}))

    @staticmethod
    def white_noise(mean: float = 10.0, sd: float = 1.0) -> "ParameterSequenceModel":
        return ParameterSequenceModel(
            Scheme.WHITE_NOISE, MappingProxyType({"mean": float(mean), "sd": float(sd)}))

    @staticmethod
    def user_supplied(thetas) -> "ParameterSequenceModel":
        return ParameterSequenceModel(
            Scheme.USER_SUPPLIED, MappingProxyType({"thetas": tuple(float(t) for t in thetas)}))

    def to_json_dict(self) -> dict:
        return {"scheme": self.scheme.value, "params": dict(self.params)}

    @staticmethod
    def from_json_dict(doc: dict) -> "ParameterSequenceModel":
        try:
            scheme = Scheme(doc["scheme"])
        except (KeyError, ValueError) as exc:
            raise UsageError(f"bad theta model document: {exc}") from exc
        params = doc.get("params", {})
        if scheme == Scheme.USER_SUPPLIED:
            params = dict(params)
            params["thetas"] = tuple(float(t) for t in params.get("thetas", ()))
        return ParameterSequenceModel(scheme, MappingProxyType(dict(params)))


def _affine_scan(mult: np.ndarray, add: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inclusive scan of the affine recurrence x_i = mult_i * x_{i-1} + add_i.

    Returns (A, C) with x_i = A_i * x_0 + C_i.  Affine composition is
    associative, so a logarithmic-depth pass replaces the sequential loop.
    """
    A = mult.astype(float, copy=True)
    C = add.astype(float, copy=True)
    step = 1
    n = A.size
    while step < n:
        A_hi = A[step:]
        newA = A.copy()
        newC = C.copy()
        newA[step:] = A_hi * A[:-step]
        newC[step:] = C[step:] + A_hi * C[:-step]
        A, C = newA, newC
        step *= 2
    return A, C


class ThetaStream:
    """Stateful sampler of one theta sequence; take(k) continues where the
    previous call stopped."""

    def __init__(self, model: ParameterSequenceModel, rng: np.random.Generator):
        self.model = model
        self.rng = rng
        self._index = 0  # observations generated so far
        self._ar_prev = 0.0  # theta_0 = 0 for the autoregressive scheme
        self._geo_cd: tuple[float, float] | None = None

    def take(self, count: int) -> np.ndarray:
        if count <= 0:
            raise UsageError("take needs count >= 1")
        scheme = self.model.scheme
        i0 = self._index
        if scheme == Scheme.CONSTANT:
            out = np.full(count, float(self.model.params["value"]))
        elif scheme == Scheme.AR_POSITIVE_ERROR:
            z = self.rng.random(count)
            eps = self.rng.standard_exponential(count)
            A, C = _affine_scan(z, eps)
            out = A * self._ar_prev + C
            self._ar_prev = float(out[-1])
        elif scheme == Scheme.STOCHASTIC_GEOMETRIC:
            idx = np.arange(i0 + 1, i0 + count + 1, dtype=float)
            if self.model.params.get("redraw_per_index", True):
                c = self.rng.random(count)
                d = self.rng.random(count)
            else:
                if self._geo_cd is None:
                    self._geo_cd = (float(self.rng.random()), float(self.rng.random()))
                c, d = self._geo_cd
            # exponent capped: overflow is unreachable in practice because
            # records arrive long before i ~ 1e4, but keep the engine finite
            out = c * np.exp(np.minimum((idx - 1.0) * np.log1p(np.asarray(d) / 10.0), 700.0))
        elif scheme == Scheme.WHITE_NOISE:
            mean = float(self.model.params.get("mean", 10.0))
            sd = float(self.model.params.get("sd", 1.0))
            out = mean + sd * self.rng.standard_normal(count)
            while np.any(out <= 0):  # probability ~ 7.6e-24 per draw at the defaults
                bad = out <= 0
                out[bad] = mean + sd * self.rng.standard_normal(int(bad.sum()))
        elif scheme == Scheme.USER_SUPPLIED:
            thetas = self.model.params["thetas"]
            if i0 + count > len(thetas):
                raise DataError(
                    f"user-supplied theta list exhausted: need {i0 + count}, have {len(thetas)}")
            out = np.asarray(thetas[i0:i0 + count], dtype=float)
        else:  # pragma: no cover
            raise UsageError(f"unknown scheme {scheme}")
        self._index += count
        return out

    def next(self) -> float:
        return float(self.take(1)[0])

    def remaining(self) -> int | None:
        """How many more values this stream can produce (None = unbounded)."""
        if self.model.scheme == Scheme.USER_SUPPLIED:
            return len(self.model.params["thetas"]) - self._index
        return None


def generate_theta(model: ParameterSequenceModel, i: int, rng: np.random.Generator) -> float:
    """theta_i from a fresh stream advanced to index i (i >= 1).  Prefer
    ThetaStream when consuming a whole sequence."""
    if i < 1:
        raise UsageError("theta indices start at 1")
    stream = ThetaStream(model, rng)
    return float(stream.take(i)[-1])


# ---------------------------------------------------------------------------
# replicate engine


@dataclass(frozen=True)
class SimulationConfig:
    family: families.FamilySpec
    theta_model: ParameterSequenceModel
    n_target: int
    replications: int
    master_seed: int
    max_observations: int = 10**7

    def __post_init__(self):
        if self.n_target < 1:
            raise UsageError("n_target must be >= 1")
        if self.replications < 1:
            raise UsageError("replications must be >= 1")
        if self.max_observations < 1:
            raise UsageError("max_observations must be >= 1")


@dataclass(frozen=True)
class ReplicateResult:
    """One simulated path up to the n-th canonical record."""

    theta_selected: float
    records: RecordSet  # canonical scale (Gamma for model 1, exponential for model 2)
    thetas_at_records: np.ndarray
    s_inv_at_records: np.ndarray  # cumulative sum of 1/theta_i at the record times
    truncated: bool
    observations: int


@dataclass
class SimulationDraws:
    """Batch of replicates in matrix form; truncated rows carry NaN."""

    values: np.ndarray  # (replications, n_target) canonical record values
    thetas: np.ndarray  # theta at the record times
    times: np.ndarray  # record times (int64)
    s_inv: np.ndarray  # cumulative 1/theta at the record times
    truncated: np.ndarray  # bool per replicate
    observations: np.ndarray  # observations consumed per replicate

    @property
    def ok(self) -> np.ndarray:
        return ~self.truncated


def _simulate_one(config: SimulationConfig, rng: np.random.Generator,
                  out_vals, out_thetas, out_times, out_sinv) -> tuple[bool, int]:
    """Stream blocks of observations until the n_target-th canonical record.

    Per block the rng is consumed in a fixed order (theta draws, then the
    canonical Gamma/exponential draws); unused tail draws of the final block
    are discarded, which affects nothing downstream.
    """
    n_target = config.n_target
    cap = config.max_observations
    theta_stream = ThetaStream(config.theta_model, rng)
    gamma_kind = config.family.kind == families.Kind.GAMMA_TYPE
    shape_p = config.family.shape_p

    found = 0
    offset = 0
    cur_max = -np.inf
    sinv_carry = 0.0
    block = _FIRST_BLOCK
    while found < n_target and offset < cap:
        b = min(block, cap - offset)
        left = theta_stream.remaining()
        if left is not None:
            if left == 0:
                raise DataError(
                    f"user-supplied theta list exhausted after {offset} observations "
                    f"before record {n_target}")
            b = min(b, left)
        theta = theta_stream.take(b)
        if gamma_kind:
            y = rng.standard_gamma(shape_p, b) * theta
        else:
            y = rng.standard_exponential(b) * theta
        sinv = sinv_carry + np.cumsum(1.0 / theta)
        running = np.maximum.accumulate(y)
        prev = np.empty(b)
        prev[0] = cur_max
        prev[1:] = np.maximum(running[:-1], cur_max)
        idx = np.flatnonzero(y > prev)
        take = idx[: n_target - found]
        for j, i in enumerate(take):
            k = found + j
            out_vals[k] = y[i]
            out_thetas[k] = theta[i]
            out_times[k] = offset + int(i) + 1
            out_sinv[k] = sinv[i]
        found += take.size
        if found == n_target:
            return False, offset + int(take[-1]) + 1
        cur_max = max(cur_max, float(running[-1]))
        sinv_carry = float(sinv[-1])
        offset += b
        block = min(block * 2, _MAX_BLOCK)
    return True, offset


def run_replicate(config: SimulationConfig, rng: np.random.Generator) -> ReplicateResult:
    """Simulate one replicate; realizes the selected parameter theta_{T_n}.

    A replicate that hits max_observations first is returned with
    truncated=True, the records found so far, and a NaN selected parameter.
    """
    n = config.n_target
    vals = np.full(n, np.nan)
    thetas = np.full(n, np.nan)
    times = np.zeros(n, dtype=np.int64)
    sinv = np.full(n, np.nan)
    truncated, used = _simulate_one(config, rng, vals, thetas, times, sinv)
    found = int(np.sum(times > 0))
    rec = RecordSet(vals[:found], times[:found], Direction.UPPER,
                    used if truncated else int(times[found - 1]))
    selected = float("nan") if truncated else float(thetas[n - 1])
    return ReplicateResult(selected, rec, thetas[:found], sinv[:found], truncated, used)


def simulate_records(config: SimulationConfig, threads: int = 1) -> SimulationDraws:
    """All replicates as matrices; rows that hit max_observations before the
    n_target-th record are flagged truncated and NaN-filled."""
    reps = config.replications
    n = config.n_target
    values = np.full((reps, n), np.nan)
    thetas = np.full((reps, n), np.nan)
    times = np.zeros((reps, n), dtype=np.int64)
    s_inv = np.full((reps, n), np.nan)
    truncated = np.zeros(reps, dtype=bool)
    observations = np.zeros(reps, dtype=np.int64)

    def do_chunk(start: int, stop: int):
        for r in range(start, stop):
            rng = replicate_stream(config.master_seed, r)
            trunc, used = _simulate_one(config, rng, values[r], thetas[r], times[r], s_inv[r])
            truncated[r] = trunc
            observations[r] = used
            if trunc:
                values[r] = np.nan
                thetas[r] = np.nan
                s_inv[r] = np.nan
                times[r] = 0

    spans = [(s, min(s + _CHUNK, reps)) for s in range(0, reps, _CHUNK)]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda span: do_chunk(*span), spans))
    else:
        for span in spans:
            do_chunk(*span)
    return SimulationDraws(values, thetas, times, s_inv, truncated, observations)


# ---------------------------------------------------------------------------
# summaries


@dataclass(frozen=True)
class SummaryCell:
    estimator: estimators.EstimatorId
    n: int
    bias: float
    risk: float
    se_bias: float
    se_risk: float
    replications: int
    truncated: int


@dataclass(frozen=True)
class SimulationSummary:
    """Bias and risk of each estimator at each record index."""

    cells: tuple[SummaryCell, ...]
    config: SimulationConfig
    truncation_fraction: float

    def cell(self, estimator: estimators.EstimatorId, n: int) -> SummaryCell:
        for c in self.cells:
            if c.estimator == estimator and c.n == n:
                return c
        raise UsageError(f"no cell for ({estimator}, n={n})")

    def to_csv_rows(self, scheme: str | None = None, p: float | None = None,
                    n_values=None) -> list[list]:
        scheme = scheme if scheme is not None else self.config.theta_model.scheme.value
        if p is None and self.config.family.kind == families.Kind.GAMMA_TYPE:
            p = self.config.family.shape_p
        rows = []
        for c in self.cells:
            if n_values is not None and c.n not in n_values:
                continue
            rows.append([scheme, "" if p is None else p, c.n, c.estimator.value,
                         c.bias, c.risk, c.se_bias, c.se_risk])
        return rows

    def to_json_dict(self) -> dict:
        return {
            "scheme": self.config.theta_model.scheme.value,
            "family": families.to_json_dict(self.config.family),
            "replications": self.config.replications,
            "master_seed": self.config.master_seed,
            "truncation_fraction": self.truncation_fraction,
            "cells": [
                {"estimator": c.estimator.value, "n": c.n, "bias": c.bias, "risk": c.risk,
                 "se_bias": c.se_bias, "se_risk": c.se_risk,
                 "replications": c.replications, "truncated": c.truncated}
                for c in self.cells
            ],
        }


CSV_HEADER = ["scheme", "p", "n", "estimator", "bias", "risk", "se_bias", "se_risk"]


def default_estimators(family: families.FamilySpec) -> tuple[estimators.EstimatorId, ...]:
    if family.kind == families.Kind.GAMMA_TYPE:
        return (estimators.EstimatorId.UMVUE_GAMMA, estimators.EstimatorId.NATURAL_GAMMA)
    if family.kind == families.Kind.PROPORTIONAL_HAZARD:
        return (estimators.EstimatorId.UMVUE_PHR, estimators.EstimatorId.NATURAL_PHR)
    return (estimators.EstimatorId.UMVUE_PRHR, estimators.EstimatorId.NATURAL_PHR)


def _evaluate(estimator: estimators.EstimatorId, prev, curr, p):
    if estimator == estimators.EstimatorId.UMVUE_GAMMA:
        return estimators.umvue_gamma(prev, curr, p)
    if estimator == estimators.EstimatorId.NATURAL_GAMMA:
        return estimators.natural_gamma(curr, p)
    if estimator in (estimators.EstimatorId.UMVUE_PHR, estimators.EstimatorId.UMVUE_PRHR):
        return estimators.umvue_phr(prev, curr)
    if estimator == estimators.EstimatorId.NATURAL_PHR:
        return estimators.natural_phr(curr)
    raise UsageError(f"{estimator} is not a per-record selection estimator")


def bias_risk_table(config: SimulationConfig, estimator_ids=None,
                    threads: int = 1) -> SimulationSummary:
    """Simulated bias and risk of the chosen estimators for n = 1..n_target."""
    estimator_ids = tuple(estimator_ids or default_estimators(config.family))
    draws = simulate_records(config, threads=threads)
    ok = draws.ok
    n_ok = int(ok.sum())
    truncated = int(config.replications - n_ok)
    frac = truncated / config.replications
    if frac > MAX_TRUNCATION_FRACTION:
        raise NumericError(
            f"truncation fraction {frac:.3%} exceeds {MAX_TRUNCATION_FRACTION:.0%}; "
            f"raise max_observations")
    if n_ok == 0:
        raise NumericError("every replicate truncated")
    vals = draws.values[ok]
    ths = draws.thetas[ok]
    p = config.family.shape_p
    cells = []
    for est in estimator_ids:
        for n in range(1, config.n_target + 1):
            prev = vals[:, n - 2] if n > 1 else np.zeros(n_ok)
            curr = vals[:, n - 1]
            err = _evaluate(est, prev, curr, p) - ths[:, n - 1]
            sq = err * err
            bias = float(err.mean())
            risk = float(sq.mean())
            if n_ok > 1:
                se_bias = float(err.std(ddof=1) / np.sqrt(n_ok))
                se_risk = float(sq.std(ddof=1) / np.sqrt(n_ok))
            else:
                se_bias = float("nan")
                se_risk = float("nan")
            cells.append(SummaryCell(est, n, bias, risk, se_bias, se_risk, n_ok, truncated))
    return SimulationSummary(tuple(cells), config, frac)


def spacing_survival_check(config: SimulationConfig, y_grid, threads: int = 1) -> float:
    """Sup deviation over y_grid between the empirical survival of the last
    canonical record spacing and the memoryless mixture implied by the
    realized selected parameters."""
    if config.family.kind == families.Kind.GAMMA_TYPE:
        raise UsageError("the spacing identity holds for hazard families")
    if config.n_target < 1:
        raise UsageError("need n_target >= 1")
    y = np.asarray(y_grid, dtype=float)
    draws = simulate_records(config, threads=threads)
    ok = draws.ok
    curr = draws.values[ok, config.n_target - 1]
    prev = draws.values[ok, config.n_target - 2] if config.n_target > 1 else 0.0
    spacing = curr - prev
    theta_sel = draws.thetas[ok, config.n_target - 1]
    emp = (spacing[:, None] > y[None, :]).mean(axis=0)
    mix = np.exp(-y[None, :] / theta_sel[:, None]).mean(axis=0)
    return float(np.max(np.abs(emp - mix)))


def summary_to_csv(summary: SimulationSummary, path, n_values=None) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in summary.to_csv_rows(n_values=n_values):
            writer.writerow([_fmt(v) for v in row])


def summary_to_json(summary: SimulationSummary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".6g")
    return v
