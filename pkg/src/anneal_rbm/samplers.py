"""Sample producers: a noise-injecting simulated annealer, an exact oracle,
and a file bridge for out-of-process samplers.

The annealer runs independent single-spin-flip Metropolis chains, one per
read, over a geometric temperature ladder.  Each read consumes its own PCG64
substream keyed by (seed, read index), so a sample set is reproducible read
by read regardless of internal vectorization.  Noise perturbs the problem the
chains see; reported energies are always evaluated on the clean problem.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import (DimensionMismatchError, FormatError,
                     InvalidParameterError)
from .ising import (IsingProblem, as_spins, energies, make_problem,
                    problem_hash)

log = logging.getLogger(__name__)

_SWEEP_CHUNK_BUDGET = 4_000_000  # uniforms held in memory at once


@dataclass(frozen=True)
class AnnealParams:
    """Annealer call parameters; sweeps is the classical stand-in for
    annealing time (the hardware default of 100 us maps to 1000 sweeps)."""

    num_reads: int = 100
    sweeps: int = 1000
    seed: int = 0
    t_hot: float | None = None
    t_cold: float | None = None

    def __post_init__(self):
        if self.num_reads < 1:
            raise InvalidParameterError(f"num_reads must be >= 1, got {self.num_reads}")
        if self.sweeps < 1:
            raise InvalidParameterError(f"sweeps must be >= 1, got {self.sweeps}")
        if self.t_hot is not None and self.t_cold is not None:
            if not self.t_hot > self.t_cold > 0:
                raise InvalidParameterError(
                    f"need t_hot > t_cold > 0, got ({self.t_hot}, {self.t_cold})")


@dataclass(frozen=True)
class NoiseModel:
    """Persistent hardware imperfections, fixed by chip_seed.

    Per-qubit linear offsets (sigma_h), multiplicative coupler errors
    (sigma_j) and constant per-region linear offsets.  The perturbation is a
    pure function of the chip seed and the hardware placement, so it persists
    across calls, and the same logical problem placed in two regions sees
    offsets differing exactly by the region-bias delta.
    """

    sigma_h: float = 0.0
    sigma_j: float = 0.0
    chip_seed: int = 0
    region_bias: tuple[tuple[frozenset[int], float], ...] = ()

    def __post_init__(self):
        if self.sigma_h < 0 or self.sigma_j < 0:
            raise InvalidParameterError("noise std-devs must be >= 0")

    def perturb(self, p: IsingProblem,
                placement: dict[int, int] | None) -> IsingProblem:
        """The problem as the hardware sees it."""
        if placement is None:
            if self.region_bias:
                raise InvalidParameterError(
                    "placement map required when region_bias is nonempty")
            placement = {v: v for v in range(p.n)}

        h: dict[int, float] = dict(p.h)
        for v in range(p.n):
            q = placement[v]
            off = 0.0
            if self.sigma_h:
                off += float(rng.stream(self.chip_seed, rng.STREAM_NOISE_H, q)
                             .normal(0.0, self.sigma_h))
            for qubits, delta in self.region_bias:
                if q in qubits:
                    off += delta
            if off:
                h[v] = h.get(v, 0.0) + off

        j: dict[tuple[int, int], float] = {}
        for (a, b), val in p.j.items():
            if self.sigma_j:
                qa, qb = sorted((placement[a], placement[b]))
                factor = 1.0 + float(rng.stream(self.chip_seed, rng.STREAM_NOISE_J,
                                                qa, qb).normal(0.0, self.sigma_j))
                val = val * factor
            j[(a, b)] = val
        return make_problem(p.n, h, j)


def region_biases(regions, deltas) -> tuple[tuple[frozenset[int], float], ...]:
    """Pair replica regions with constant linear offsets."""
    regions = list(regions)
    deltas = list(deltas)
    if len(regions) != len(deltas):
        raise InvalidParameterError(
            f"{len(regions)} regions but {len(deltas)} bias deltas")
    return tuple((frozenset(r), float(d)) for r, d in zip(regions, deltas))


def noise_to_dict(nm: NoiseModel) -> dict:
    return {
        "sigma_h": nm.sigma_h,
        "sigma_j": nm.sigma_j,
        "chip_seed": nm.chip_seed,
        "region_bias": [{"qubits": sorted(q), "delta": d} for q, d in nm.region_bias],
    }


def noise_from_dict(data: dict) -> NoiseModel:
    try:
        return NoiseModel(
            sigma_h=float(data.get("sigma_h", 0.0)),
            sigma_j=float(data.get("sigma_j", 0.0)),
            chip_seed=int(data.get("chip_seed", 0)),
            region_bias=tuple((frozenset(int(q) for q in rb["qubits"]),
                               float(rb["delta"]))
                              for rb in data.get("region_bias", ())))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed noise payload: {exc}") from exc


@dataclass(frozen=True)
class SampleSet:
    """Reads plus their clean-problem energies and sampler metadata."""

    reads: np.ndarray
    energies: np.ndarray
    sampler: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.reads.ndim != 2:
            raise DimensionMismatchError(f"reads must be 2-d, got {self.reads.shape}")
        if self.reads.size and not np.all(np.abs(self.reads) == 1):
            raise InvalidParameterError("reads contain entries other than -1/+1")
        if self.energies.shape != (self.reads.shape[0],):
            raise DimensionMismatchError("one energy per read required")

    @property
    def num_reads(self) -> int:
        return self.reads.shape[0]

    def best(self) -> tuple[int, float]:
        """(read index, energy) of the lowest-energy read; first index wins ties."""
        idx = int(np.argmin(self.energies))
        return idx, float(self.energies[idx])


def _temperature_ladder(p: IsingProblem, params: AnnealParams) -> np.ndarray:
    scale = [abs(v) for v in p.h.values()] + [abs(v) for v in p.j.values()]
    site = {}
    for i, v in p.h.items():
        site[i] = site.get(i, 0.0) + abs(v)
    for (a, b), v in p.j.items():
        site[a] = site.get(a, 0.0) + abs(v)
        site[b] = site.get(b, 0.0) + abs(v)
    t_hot = params.t_hot if params.t_hot is not None else max(list(site.values()) + [1.0])
    t_cold = params.t_cold if params.t_cold is not None else \
        max(0.05 * min(scale), 1e-6) if scale else 1e-2
    if not t_hot > t_cold > 0:
        raise InvalidParameterError(f"derived schedule invalid: ({t_hot}, {t_cold})")
    if params.sweeps == 1:
        return np.array([t_cold])
    ratio = (t_cold / t_hot) ** (1.0 / (params.sweeps - 1))
    return t_hot * ratio ** np.arange(params.sweeps)


def sample_sa(p: IsingProblem, params: AnnealParams,
              noise: NoiseModel | None = None,
              placement: dict[int, int] | None = None) -> SampleSet:
    """Run num_reads independent Metropolis anneals of `sweeps` full sweeps.

    The chains anneal the noise-perturbed problem when a noise model is
    given; returned energies are evaluated on the clean problem.  Reads are
    vectorized internally but each consumes only its own (seed, read) stream:
    results are identical to running the reads sequentially.
    """
    if p.n < 1:
        raise InvalidParameterError("cannot sample an empty problem")
    t_start = time.perf_counter()
    annealed = noise.perturb(p, placement) if noise is not None else p
    temps = _temperature_ladder(annealed, params)

    # CSR neighbor structure of the annealed problem.
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(p.n)]
    for (a, b), v in annealed.j.items():
        nbrs[a].append((b, v))
        nbrs[b].append((a, v))
    nb_idx = [np.array([i for i, _ in lst], dtype=np.intp) for lst in nbrs]
    nb_val = [np.array([v for _, v in lst]) for lst in nbrs]
    h_vec = np.zeros(p.n)
    for i, v in annealed.h.items():
        h_vec[i] = v

    reads = params.num_reads
    gens = [rng.stream(params.seed, rng.STREAM_READ, r) for r in range(reads)]
    states = np.stack([g.integers(0, 2, p.n).astype(np.float64) * 2 - 1 for g in gens])

    chunk = max(1, _SWEEP_CHUNK_BUDGET // (reads * p.n))
    sweep = 0
    while sweep < params.sweeps:
        width = min(chunk, params.sweeps - sweep)
        uniforms = np.stack([g.random((width, p.n)) for g in gens])
        for t in range(width):
            temp = temps[sweep + t]
            for jspin in range(p.n):
                local = h_vec[jspin]
                if nb_idx[jspin].size:
                    local = local + states[:, nb_idx[jspin]] @ nb_val[jspin]
                d_e = -2.0 * states[:, jspin] * local
                accept = d_e <= 0
                hot = ~accept
                if np.any(hot):
                    accept[hot] = uniforms[hot, t, jspin] < np.exp(-d_e[hot] / temp)
                states[accept, jspin] = -states[accept, jspin]
        sweep += width

    final = states.astype(np.int8)
    clean_energies = energies(p, final)
    meta = {
        "num_reads": params.num_reads, "sweeps": params.sweeps,
        "seed": params.seed, "t_hot": float(temps[0]), "t_cold": float(temps[-1]),
        "noise_applied": noise is not None,
        "timing_s": time.perf_counter() - t_start,
    }
    return SampleSet(reads=final, energies=clean_energies,
                     sampler="sa-metropolis", params=meta)


@dataclass(frozen=True)
class ExactSolution:
    min_energy: float
    minimizers: np.ndarray  # (count, n) int8, possibly truncated
    num_minimizers: int


_EXACT_HARD_CAP = 30  # 2^30 energy evaluations is already minutes of work


def solve_exact(p: IsingProblem, cap: int = 24,
                max_minimizers: int = 4096) -> ExactSolution:
    """Exhaustive minimum over all 2^n configurations (n <= cap).

    Returns every minimizer up to ``max_minimizers``; ``num_minimizers`` is
    always the exact count.
    """
    if p.n > min(cap, _EXACT_HARD_CAP):
        raise InvalidParameterError(
            f"solve_exact refuses n={p.n}: exhaustive enumeration is capped at "
            f"n<={cap} (2^n configurations); raise `cap` explicitly to override"
            + (f", hard ceiling {_EXACT_HARD_CAP}" if cap > _EXACT_HARD_CAP else ""))
    if p.n == 0:
        return ExactSolution(0.0, np.zeros((1, 0), dtype=np.int8), 1)

    total = 1 << p.n
    chunk = min(total, 1 << 20)
    best = np.inf
    keep: list[np.ndarray] = []
    count = 0
    h_items = list(p.h.items())
    j_items = list(p.j.items())
    for base in range(0, total, chunk):
        codes = np.arange(base, min(base + chunk, total), dtype=np.uint64)
        e = np.zeros(codes.shape[0])
        spin = {}

        def spin_of(i):
            if i not in spin:
                spin[i] = 1.0 - 2.0 * ((codes >> np.uint64(i)) & np.uint64(1)).astype(np.float64)
            return spin[i]

        for i, v in h_items:
            e += v * spin_of(i)
        for (a, b), v in j_items:
            e += v * spin_of(a) * spin_of(b)

        lo = float(e.min())
        if lo < best:
            best = lo
            keep = []
            count = 0
        if lo <= best:
            hits = codes[e == best]
            count += hits.shape[0]
            room = max_minimizers - sum(h.shape[0] for h in keep)
            if room > 0:
                keep.append(hits[:room])

    codes = np.concatenate(keep) if keep else np.zeros(0, dtype=np.uint64)
    bits = ((codes[:, None] >> np.arange(p.n, dtype=np.uint64)[None, :]) & np.uint64(1))
    minimizers = (1 - 2 * bits.astype(np.int8)).astype(np.int8)
    return ExactSolution(float(best), minimizers, count)


# ---------------------------------------------------------------------------
# File bridge: lossless problem export plus sample import with local
# re-evaluation, so external samplers never have to be trusted about energies.

def export_problem(p: IsingProblem, path: str) -> None:
    from .ising import write_problem
    write_problem(p, path)


def sampleset_to_dict(ss: SampleSet, p: IsingProblem) -> dict:
    params = {k: v for k, v in ss.params.items() if k != "timing_s"}
    return {
        "problem_hash": problem_hash(p),
        "reads": [[int(s) for s in row] for row in ss.reads],
        "energies": [float(e) for e in ss.energies],
        "sampler": ss.sampler,
        "params": params,
    }


def export_samples(ss: SampleSet, p: IsingProblem, path: str) -> None:
    with open(path, "w") as f:
        json.dump(sampleset_to_dict(ss, p), f, sort_keys=True, indent=1)
        f.write("\n")


def sampleset_from_dict(data: dict, p: IsingProblem) -> SampleSet:
    try:
        raw = data["reads"]
        sampler = str(data.get("sampler", "external"))
        params = dict(data.get("params", {}))
        file_hash = data.get("problem_hash")
        file_energies = data.get("energies")
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed sample payload: {exc}") from exc
    if file_hash is not None and file_hash != problem_hash(p):
        raise FormatError("sample file was produced for a different problem "
                          f"(hash {file_hash[:12]}... != {problem_hash(p)[:12]}...)")
    if not isinstance(raw, list) or not raw:
        raise FormatError("sample file contains no reads")
    reads = np.array([as_spins(row, p.n) for row in raw], dtype=np.int8)
    local = energies(p, reads)
    if file_energies is not None:
        stated = np.asarray(file_energies, dtype=np.float64)
        if stated.shape != local.shape or not np.array_equal(stated, local):
            log.warning("imported energies disagree with local recomputation; "
                        "using recomputed values")
    return SampleSet(reads=reads, energies=local, sampler=sampler, params=params)


def import_samples(path: str, p: IsingProblem) -> SampleSet:
    with open(path) as f:
        return sampleset_from_dict(json.load(f), p)
