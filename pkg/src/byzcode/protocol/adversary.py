"""Traitor strategies.

A strategy sees every source sequence, the public codebook and the transcript
so far, and has its own random stream.  It never sees the random function
choices of honest sensors before they are transmitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument
from ..info_core import JointPmf, ZERO_PROB
from ..maxent import Cover
from .hashing import Codebook, find_collision


@dataclass
class SessionView:
    """What the traitors know about a running session."""

    p: JointPmf
    params: object
    traitors: frozenset[int]
    truths: list[np.ndarray]
    codebook: Codebook
    rng: np.random.Generator
    cover: Cover
    transcript: list = field(default_factory=list)

    @property
    def honest(self) -> frozenset[int]:
        return frozenset(range(self.p.m)) - self.traitors


class AdversaryStrategy:
    """Base strategy: traitors follow the protocol on their true sources."""

    name = "honest"

    def prepare(self, view: SessionView) -> None:
        pass

    def sequence(self, view: SessionView, round_: int, sensor: int) -> np.ndarray | None:
        """Sequence the traitor encodes honestly, or None to send random bits."""
        return view.truths[round_][sensor]

    def decoys(self, view: SessionView, round_: int, sensor: int) -> list[np.ndarray]:
        """Sequences crafted against ``sensor`` that the decoder should track explicitly."""
        return []


class Honest(AdversaryStrategy):
    name = "honest"


class Gibberish(AdversaryStrategy):
    """Uniformly random function indices and hash values."""

    name = "gibberish"

    def sequence(self, view, round_, sensor):
        return None


class Fabricate(AdversaryStrategy):
    """Draw fake traitor sources from q_tilde(x_traitors | x_honest), then act honestly.

    All fake blocks are drawn once, before the first round.
    """

    name = "fabricate"

    def __init__(self, q_tilde: JointPmf):
        self.q_tilde = q_tilde
        self.fakes: list[np.ndarray] = []

    def prepare(self, view):
        q = self.q_tilde
        T = sorted(view.traitors)
        H = sorted(view.honest)
        self.fakes = [np.array(block) for block in view.truths]
        if not T:
            return
        order = H + T
        table = np.transpose(q.probs, order)
        h_size = int(np.prod([q.alphabet_sizes[i] for i in H])) if H else 1
        t_sizes = tuple(q.alphabet_sizes[i] for i in T)
        table = table.reshape(h_size, -1)
        mass = table.sum(axis=1, keepdims=True)
        cond = np.divide(table, mass, out=np.zeros_like(table), where=mass > ZERO_PROB)
        cdf = np.cumsum(cond, axis=1)
        for r, block in enumerate(view.truths):
            if H:
                h_ids = np.ravel_multi_index(tuple(block[H]), tuple(q.alphabet_sizes[i] for i in H))
            else:
                h_ids = np.zeros(block.shape[1], dtype=np.int64)
            if np.any(mass[h_ids, 0] <= ZERO_PROB):
                raise InvalidArgument("q_tilde gives zero mass to an observed honest context")
            u = view.rng.random(block.shape[1]) * cdf[h_ids, -1]
            cells = np.array([np.searchsorted(cdf[h], x, side="right") for h, x in zip(h_ids, u)])
            cells = np.minimum(cells, cdf.shape[1] - 1)
            fake = np.unravel_index(cells, t_sizes)
            for j, sensor in enumerate(T):
                self.fakes[r][sensor] = fake[j]

    def sequence(self, view, round_, sensor):
        return self.fakes[round_][sensor]


class Collide(AdversaryStrategy):
    """Steer the decoder to a fake sequence for the next honest sensor.

    The first traitor to transmit guesses the function index ``c`` the target
    honest sensor will draw (certain when C = 1), builds a decoy that collides
    with the target's true sequence on its first transaction, and reports the
    decoy itself so the decoy costs nothing given the traitor's estimate.
    """

    name = "collide"

    def __init__(self):
        self._decoys: dict[tuple[int, int], np.ndarray] = {}

    def _target(self, view: SessionView, sensor: int) -> int | None:
        union = view.cover.union
        if sensor != min(sorted(view.traitors & union), default=None):
            return None
        later = [j for j in sorted(union) if j > sensor and j in view.honest]
        return later[0] if later else None

    def sequence(self, view, round_, sensor):
        truth = view.truths[round_][sensor]
        target = self._target(view, sensor)
        if target is None:
            return truth
        params = view.params
        c_guess = 0 if params.C == 1 else int(view.rng.integers(params.C))
        decoy = find_collision(
            view.codebook,
            view.truths[round_][target],
            round_,
            target,
            1,
            c_guess,
            params.first_bits,
            view.rng,
        )
        if decoy is None:
            return truth
        self._decoys[(round_, target)] = decoy
        return decoy % view.p.alphabet_sizes[sensor]

    def decoys(self, view, round_, sensor):
        d = self._decoys.get((round_, sensor))
        return [] if d is None else [d]


STRATEGIES = {"honest": Honest, "gibberish": Gibberish, "fabricate": Fabricate, "collide": Collide}


def make_strategy(name: str, q_tilde: JointPmf | None = None) -> AdversaryStrategy:
    key = name.lower()
    if key not in STRATEGIES:
        raise InvalidArgument(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}")
    if key == "fabricate":
        if q_tilde is None:
            raise InvalidArgument("the fabricate strategy needs q_tilde")
        return Fabricate(q_tilde)
    return STRATEGIES[key]()
