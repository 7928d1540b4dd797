"""Desk-scale experiment suites: one CSV row per (n, seed) cell."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .errors import BadParameters, CapExceeded, VerificationError
from .extraction.greedy import greedy_equilateral_or_lacunary
from .extraction.hst import COARSE, FINE, equilateral_or_binary_hst
from .extraction.increasing import equilateral_or_lacunary
from .extraction.results import DichotomyResult
from .instances import (
    cell_seed,
    certified_ramsey_graph,
    composition_power,
    euclidean_metric,
    random_metric,
)
from .metric import MetricSpace, leq
from .oracle import DEFAULT_CAPS, max_binary_hst_subset, max_equilateral_subset, max_lacunary_subset

COLUMNS = ("n", "alpha", "k", "eps", "algorithm", "branch", "size", "distortion", "guarantee", "oracle_opt", "seed", "ms")
SUITES = ("d-k-above-2", "d-k-below-2", "e-k-above-2", "e-k-below-2", "d-1")
FAMILIES = ("random", "euclidean", "composition")


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    alpha: float
    k: float
    eps: float
    algorithm: str
    branch: str
    size: int
    distortion: float
    guarantee: float
    oracle_opt: int | None
    seed: int
    ms: float

    def failures(self) -> list[str]:
        out = []
        if not leq(self.guarantee, self.size):
            out.append(f"size {self.size} below guarantee {self.guarantee}")
        if not leq(self.distortion, self.alpha):
            out.append(f"distortion {self.distortion} above budget {self.alpha}")
        if self.oracle_opt is not None and self.size > self.oracle_opt:
            out.append(f"size {self.size} above oracle optimum {self.oracle_opt}")
        return out

    def csv_values(self) -> list[str]:
        vals = []
        for name in COLUMNS:
            v = getattr(self, name)
            if v is None:
                vals.append("")
            elif name == "ms":
                vals.append(f"{v:.3f}")
            else:
                vals.append(repr(v) if isinstance(v, float) else str(v))
        return vals


def make_instance(family: str, n: int, seed: int, beta: float = 2.0) -> MetricSpace:
    """``random``: uniform [1, 2] distances; ``euclidean``: points in the unit square;
    ``composition``: beta-composition power of a certified diameter-2 graph
    (``n`` must be a perfect power ``s**t`` with ``3 <= s <= 24``, smallest ``t`` used)."""
    if family == "random":
        return random_metric(n, seed)
    if family == "euclidean":
        return euclidean_metric(n, 2, seed)
    if family == "composition":
        for t in range(1, int(math.log2(max(n, 2))) + 1):
            s = round(n ** (1 / t))
            if s**t == n and 3 <= s <= 24:
                break
        else:
            raise BadParameters(f"n = {n} is not s**t with 3 <= s <= 24")
        base, _ = certified_ramsey_graph(s, seed)
        return composition_power(base, beta, t, cap=max(n, DEFAULT_CAPS["equilateral"]))
    raise BadParameters(f"unknown family {family!r}")


def _run_d(M: MetricSpace, alpha: float, k: float):
    """Best certified equilateral-or-lacunary subspace within distortion ``alpha``."""
    if alpha > 2:
        cands = [("greedy-lacunary", greedy_equilateral_or_lacunary(M, alpha, k), 0.0)]
        eps = alpha - 1
        cands.append(("eq-or-lacunary", equilateral_or_lacunary(M, eps, k), eps))
        return max(cands, key=lambda c: c[1].size)
    eps = alpha - 1
    return "eq-or-lacunary", equilateral_or_lacunary(M, eps, k), eps


def _run_e(M: MetricSpace, alpha: float, k: float, mode: str):
    eps = alpha - 1
    return "hst-dichotomy-" + mode, equilateral_or_binary_hst(M, eps, k, mode=mode), eps


def run_algorithm(suite: str, M: MetricSpace, alpha: float, k: float) -> tuple[str, DichotomyResult, float]:
    if suite == "d-k-above-2":
        if not alpha > 2:
            raise BadParameters("d-k-above-2 needs alpha > 2")
        return _run_d(M, alpha, k)
    if suite == "d-k-below-2":
        if not 1 < alpha <= 2:
            raise BadParameters("d-k-below-2 needs 1 < alpha <= 2")
        return _run_d(M, alpha, k)
    if suite == "d-1":
        if not alpha > 1:
            raise BadParameters("d-1 needs alpha > 1")
        return _run_d(M, alpha, 1.0)
    if suite == "e-k-above-2":
        if not alpha > 2:
            raise BadParameters("e-k-above-2 needs alpha > 2")
        return _run_e(M, alpha, k, COARSE)
    if suite == "e-k-below-2":
        if not 1 < alpha <= 2:
            raise BadParameters("e-k-below-2 needs 1 < alpha <= 2")
        return _run_e(M, alpha, k, FINE)
    raise BadParameters(f"unknown suite {suite!r}")


def oracle_optimum(suite: str, M: MetricSpace, alpha: float, k: float, caps: dict) -> int | None:
    """Exact dichotomy optimum, or None when the instance exceeds a cap."""
    try:
        eq = max_equilateral_subset(M, alpha, caps).optimum
        if suite.startswith("d-"):
            kk = 1.0 if suite == "d-1" else k
            return max(eq, max_lacunary_subset(M, alpha, kk, caps).optimum)
        return max(eq, max_binary_hst_subset(M, alpha, k, caps).optimum)
    except CapExceeded:
        return None


def run_cell(suite: str, family: str, n: int, alpha: float, k: float, seed: int, caps: dict | None = None, require_oracle: bool = False) -> ExperimentRow:
    caps = dict(DEFAULT_CAPS, **(caps or {}))
    M = make_instance(family, n, cell_seed(seed, n))
    t0 = time.perf_counter()
    algorithm, res, eps = run_algorithm(suite, M, alpha, k)
    ms = (time.perf_counter() - t0) * 1e3
    bad = res.failures()
    if bad:
        raise VerificationError("; ".join(bad))
    opt = oracle_optimum(suite, M, alpha, k, caps)
    if opt is None and require_oracle:
        raise CapExceeded(f"n = {n} exceeds the oracle caps")
    row = ExperimentRow(
        M.n, float(alpha), 1.0 if suite == "d-1" else float(k), float(eps), algorithm, res.kind,
        res.size, float(res.distortion), float(res.guarantee.size), opt, int(seed), ms,
    )
    bad = row.failures()
    if bad:
        raise VerificationError("; ".join(bad))
    return row


def _cell(args):
    return run_cell(*args)


def run_suite(
    suite: str,
    ns,
    alpha: float,
    k: float = 2.0,
    seeds=range(20),
    family: str = "random",
    caps: dict | None = None,
    require_oracle: bool = False,
    workers: int = 1,
) -> list[ExperimentRow]:
    """All (n, seed) cells, returned in (n, seed) order whatever the completion order."""
    if suite not in SUITES:
        raise BadParameters(f"unknown suite {suite!r}")
    ns = [int(n) for n in ns]
    seeds = [int(s) for s in seeds]
    if not ns:
        raise BadParameters("empty n list")
    if not seeds:
        raise BadParameters("empty seed list")
    jobs = [(suite, family, n, alpha, k, s, caps, require_oracle) for n in sorted(ns) for s in sorted(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_cell, jobs))
    else:
        rows = [_cell(j) for j in jobs]
    return sorted(rows, key=lambda r: (r.n, r.seed))


def rows_to_csv(rows, fh=None) -> str:
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.csv_values())
    return buf.getvalue() if fh is None else ""


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def cell_means(rows) -> dict[tuple, float]:
    """Mean extracted size per (n, alpha, k)."""
    acc: dict[tuple, list[int]] = {}
    for r in rows:
        acc.setdefault((r.n, r.alpha, r.k), []).append(r.size)
    return {key: sum(v) / len(v) for key, v in acc.items()}


def monotone_fraction(means: list[float]) -> tuple[int, int]:
    """(nondecreasing adjacent pairs, total adjacent pairs)."""
    pairs = list(zip(means, means[1:]))
    return sum(1 for a, b in pairs if b >= a), len(pairs)


def row_dict(r: ExperimentRow) -> dict:
    return asdict(r)
