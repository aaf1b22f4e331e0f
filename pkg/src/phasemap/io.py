"""Document formats: instances, solutions, ground truth, freeze specs.

Everything is JSON. Floats are written with Python's shortest
round-trip representation, so a write/read cycle reproduces every
numeric value bit-for-bit and identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .evaluation import GroundTruth
from .model import (
    FreezeSpec,
    Instance,
    QGrid,
    Solution,
    SolverConfig,
    ValidationError,
    validate_instance,
)

__all__ = [
    "instance_to_doc",
    "solution_to_doc",
    "solution_from_doc",
    "truth_to_doc",
    "truth_from_doc",
    "freeze_from_doc",
    "read_instance",
    "write_instance",
    "read_solution",
    "write_solution",
    "read_truth",
    "write_truth",
    "read_freeze",
    "write_json",
    "read_json",
]

PathLike = Union[str, Path]


def write_json(path: PathLike, doc: dict) -> None:
    text = json.dumps(doc, sort_keys=True, indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path: PathLike) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed document {path}: {exc}") from exc


def instance_to_doc(instance: Instance) -> dict:
    return {
        "elements": list(instance.elements),
        "q": instance.q.values.tolist(),
        "samples": [
            {
                "id": s.id,
                "composition": s.composition.tolist(),
                "intensity": s.intensity.tolist(),
            }
            for s in instance.samples
        ],
    }


def read_instance(path: PathLike) -> Instance:
    return validate_instance(read_json(path))


def write_instance(path: PathLike, instance: Instance) -> None:
    write_json(path, instance_to_doc(instance))


def solution_to_doc(solution: Solution) -> dict:
    return {
        "log_q": solution.log_q.values.tolist(),
        "delta": solution.log_q.delta,
        "W": solution.W.tolist(),
        "H": solution.H.tolist(),
        "loss_trace": solution.loss_trace.tolist(),
        "segments": [[label, int(start)] for label, start in solution.segments],
        "shift_summary": {
            "s": solution.shift.tolist(),
            "lambda": solution.lam.tolist(),
        },
        "presence": solution.presence.tolist(),
        "config": solution.config.to_dict(),
        "iterations": solution.iterations,
    }


def solution_from_doc(doc: dict) -> Solution:
    try:
        log_q = QGrid(
            values=np.asarray(doc["log_q"], dtype=np.float64),
            kind="geometric",
            delta=float(doc["delta"]),
        )
        config = SolverConfig.from_dict(doc["config"])
        w = np.asarray(doc["W"], dtype=np.float64)
        h = np.asarray(doc["H"], dtype=np.float64)
        shift = np.asarray(doc["shift_summary"]["s"], dtype=np.float64)
        lam = np.asarray(doc["shift_summary"]["lambda"], dtype=np.float64)
        presence = np.asarray(doc["presence"], dtype=np.bool_)
        trace = np.asarray(doc["loss_trace"], dtype=np.float64)
        segments = tuple((str(s[0]), int(s[1])) for s in doc["segments"])
        iterations = int(doc.get("iterations", 0))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed solution document: {exc}") from exc
    from . import kernels

    r = kernels.reconstruct(w, h)
    return Solution(
        log_q=log_q,
        W=w,
        H=h,
        R=r,
        loss_trace=trace,
        segments=segments,
        shift=shift,
        lam=lam,
        presence=presence,
        config=config,
        iterations=iterations,
    )


def read_solution(path: PathLike) -> Solution:
    return solution_from_doc(read_json(path))


def write_solution(path: PathLike, solution: Solution) -> None:
    write_json(path, solution_to_doc(solution))


def truth_to_doc(truth: GroundTruth) -> dict:
    return {
        "q": truth.q.values.tolist(),
        "signals": truth.signals.tolist(),
        "weights": truth.weights.tolist(),
        "lambda": truth.lam.tolist(),
    }


def truth_from_doc(doc: dict) -> GroundTruth:
    try:
        return GroundTruth(
            q=QGrid.from_values(np.asarray(doc["q"], dtype=np.float64)),
            signals=np.asarray(doc["signals"], dtype=np.float64),
            weights=np.asarray(doc["weights"], dtype=np.float64),
            lam=np.asarray(doc["lambda"], dtype=np.float64),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed truth document: {exc}") from exc


def read_truth(path: PathLike) -> GroundTruth:
    return truth_from_doc(read_json(path))


def write_truth(path: PathLike, truth: GroundTruth) -> None:
    write_json(path, truth_to_doc(truth))


def freeze_from_doc(doc: dict) -> FreezeSpec:
    def arr(name):
        v = doc.get(name)
        return None if v is None else np.asarray(v)

    return FreezeSpec(
        w_mask=arr("w_mask"),
        w_values=arr("w_values"),
        h_mask=arr("h_mask"),
        h_values=arr("h_values"),
        w_init=arr("w_init"),
        h_init=arr("h_init"),
    )


def read_freeze(path: PathLike) -> FreezeSpec:
    return freeze_from_doc(read_json(path))
