"""Self-verifying outcome of a dichotomy extraction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import MalformedInput, VerificationError
from ..metric import (
    REL_TOL,
    EmbeddingCert,
    MetricSpace,
    SubspaceWitness,
    distortion_of,
    equilateral_space,
    leq,
    restrict,
)
from ..trees import HstTree, LacunarySequence, hst_metric, hst_separation, is_binary, lacunary_metric

EQUILATERAL = "equilateral"
LACUNARY = "lacunary"
BINARY_HST = "binary-hst"
KINDS = (EQUILATERAL, LACUNARY, BINARY_HST)


@dataclass(frozen=True)
class Guarantee:
    """What the producing algorithm promises: ``|witness| >= size`` and ``distortion <= distortion``."""

    size: float
    distortion: float
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"size": self.size, "distortion": self.distortion, **_jsonable(self.params)}


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def target_for(kind: str, structure, witness: SubspaceWitness, scale: float | None = None) -> MetricSpace:
    """The model space a witness is certified against, rows in witness order."""
    if kind == EQUILATERAL:
        if scale is None:
            scale = float(witness.induced.dist.max()) if len(witness) > 1 else 1.0
        return equilateral_space(len(witness), scale)
    if kind == LACUNARY:
        return lacunary_metric(structure)
    if kind == BINARY_HST:
        return hst_metric(structure, order=list(witness.indices))
    raise MalformedInput(f"unknown result kind {kind!r}")


@dataclass(frozen=True, eq=False)
class DichotomyResult:
    """A witness subset together with its model space, certificate and guarantee.

    ``cert`` maps ``witness.induced`` onto ``target`` by the identity on positions;
    ``structure`` is the lacunary sequence or binary HST defining ``target``
    (None for equilateral witnesses).
    """

    kind: str
    witness: SubspaceWitness
    structure: HstTree | LacunarySequence | None
    target: MetricSpace
    cert: EmbeddingCert
    guarantee: Guarantee

    @classmethod
    def build(cls, kind, space: MetricSpace, indices, structure, guarantee: Guarantee, scale=None) -> "DichotomyResult":
        witness = restrict(space, indices)
        target = target_for(kind, structure, witness, scale)
        cert = distortion_of(range(len(witness)), witness.induced, target)
        return cls(kind, witness, structure, target, cert, guarantee)

    @property
    def indices(self) -> tuple[int, ...]:
        return self.witness.indices

    @property
    def size(self) -> int:
        return len(self.witness)

    @property
    def distortion(self) -> float:
        return self.cert.distortion

    def failures(self, tol: float = REL_TOL) -> list[str]:
        """Every violated claim; empty when the result re-verifies."""
        out = []
        fresh = target_for(self.kind, self.structure, self.witness, _eq_scale(self))
        if self.kind != EQUILATERAL and fresh != self.target:
            out.append("target does not match the structure")
        if self.kind == EQUILATERAL and len(self.witness) > 1:
            d = self.target.pair_distances()
            if d.min() != d.max():
                out.append("equilateral target is not equilateral")
        if not self.cert.verify(tol):
            out.append("stored certificate does not recompute")
        if self.cert.source != self.witness.induced:
            out.append("certificate source is not the witness")
        if not leq(self.cert.distortion, self.guarantee.distortion, tol):
            out.append(f"distortion {self.cert.distortion} exceeds bound {self.guarantee.distortion}")
        if not leq(self.guarantee.size, len(self.witness), tol):
            out.append(f"size {len(self.witness)} below bound {self.guarantee.size}")
        k = self.guarantee.params.get("k")
        if self.kind == LACUNARY:
            if not isinstance(self.structure, LacunarySequence):
                out.append("lacunary result without a sequence")
            elif k is not None and not leq(k, self.structure.k, tol):
                out.append(f"sequence is {self.structure.k}-lacunary, need {k}")
        if self.kind == BINARY_HST:
            if not isinstance(self.structure, HstTree):
                out.append("binary-hst result without a tree")
            else:
                if not is_binary(self.structure):
                    out.append("tree is not binary")
                if k is not None and not leq(k, hst_separation(self.structure), tol):
                    out.append(f"tree separation {hst_separation(self.structure)} below {k}")
        return out

    def verify(self, tol: float = REL_TOL) -> bool:
        return not self.failures(tol)

    def check(self) -> "DichotomyResult":
        bad = self.failures()
        if bad:
            raise VerificationError("; ".join(bad))
        return self

    def to_json(self) -> dict:
        if isinstance(self.structure, HstTree):
            structure: Any = self.structure.to_json()
        elif isinstance(self.structure, LacunarySequence):
            structure = {"values": list(self.structure.values), "k": self.structure.k}
        else:
            structure = None
        return {
            "kind": self.kind,
            "indices": list(self.witness.indices),
            "structure": structure,
            "distortion": self.cert.distortion,
            "scale": _eq_scale(self),
            "cert": self.cert.to_json(),
            "guarantee": self.guarantee.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict, space: MetricSpace) -> "DichotomyResult":
        """Rebuild against the space the result was computed on (recomputes the certificate)."""
        try:
            kind = obj["kind"]
            st = obj.get("structure")
            if kind == LACUNARY:
                structure = LacunarySequence(tuple(st["values"]), st["k"])
            elif kind == BINARY_HST:
                structure = HstTree.from_json(st)
            else:
                structure = None
            g = dict(obj["guarantee"])
            guarantee = Guarantee(g.pop("size"), g.pop("distortion"), g)
            return cls.build(kind, space, obj["indices"], structure, guarantee, obj.get("scale"))
        except (KeyError, TypeError) as exc:
            raise MalformedInput(f"malformed result object: {exc}") from None


def _eq_scale(result: DichotomyResult) -> float | None:
    if result.kind != EQUILATERAL or len(result.witness) < 2:
        return None
    return float(result.target.dist[0, 1])
