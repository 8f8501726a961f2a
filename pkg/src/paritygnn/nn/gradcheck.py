"""Central finite-difference check of tape gradients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import Tape, Var


@dataclass
class GroupReport:
    name: str
    checked: int
    skipped: int
    max_rel_error: float
    max_abs_error: float


def relative_error(a: float, b: float, floor: float = 1e-6) -> float:
    # central differences with h = 1e-5 carry ~1e-11 roundoff, so gradients
    # much smaller than the floor are effectively compared in absolute terms
    return abs(a - b) / max(abs(a), abs(b), floor)


def grad_check(
    fn: Callable[[Tape, dict[str, Var]], Var],
    params: dict[str, np.ndarray],
    h: float = 1e-5,
    samples: int = 50,
    seed: int = 0,
) -> dict[str, GroupReport]:
    """Compare backward() against central differences on sampled coordinates.

    `fn` builds a scalar loss on the given tape from the registered params and
    must be deterministic (reseed any dropout generator inside it).  A
    coordinate is skipped when the perturbation moves any ReLU input across
    (or off) zero, since the loss is not differentiable there.
    """

    def run(values, track=False):
        tape = Tape(track_kinks=track)
        pv = {name: tape.param(name, v) for name, v in values.items()}
        return tape, fn(tape, pv)

    tape, loss = run(params, track=True)
    base_kinks = tape.kinks
    analytic = tape.backward(loss)
    rng = np.random.default_rng(seed)
    reports = {}
    for name, value in params.items():
        coords = np.arange(value.size)
        if value.size > samples:
            coords = rng.choice(value.size, size=samples, replace=False)
        worst_rel = worst_abs = 0.0
        checked = skipped = 0
        for c in coords:
            losses, kinks = [], []
            for step in (h, -h):
                shifted = {k: v.copy() for k, v in params.items()}
                shifted[name].flat[c] += step
                t, out = run(shifted, track=True)
                losses.append(float(out.value))
                kinks.append(t.kinks)
            if any(
                any(not np.array_equal(k0, k[i]) for k in kinks)
                for i, k0 in enumerate(base_kinks)
            ):
                skipped += 1
                continue
            numeric = (losses[0] - losses[1]) / (2 * h)
            exact = float(analytic[name].flat[c])
            worst_rel = max(worst_rel, relative_error(exact, numeric))
            worst_abs = max(worst_abs, abs(exact - numeric))
            checked += 1
        reports[name] = GroupReport(name, checked, skipped, worst_rel, worst_abs)
    return reports
