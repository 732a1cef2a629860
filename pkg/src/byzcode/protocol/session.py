"""One multi-round session of the variable-rate protocol.

Each round the decoder polls the sensors of ``U(V)`` in index order.  In the
phase of sensor ``i`` the sensor announces a random function index ``c`` and
then sends binning hashes of its sequence, one transaction at a time, while
the decoder raises its rate guess ``R`` by ``epsilon`` per transaction.  After
each transaction the decoder lists the sequences that are consistent with all
hashes so far and whose conditional type entropy given the earlier estimates
is at most ``R + eps'``.  One candidate ends the phase; two or more is a phase
error.  After the last phase the cover ``V`` shrinks to the members on which
the round's estimates are jointly typical.

Candidate lists are not enumerated.  The decoder tracks a small explicit pool
exactly (the true sequence, the sequence actually encoded and any decoys an
adversary crafted), and treats every other sequence as a random-oracle input:
the number of such sequences in each new entropy shell comes from type-class
counting, and how many of them match the hashes is drawn from the exact
binomial law.  With exact hashes on the pool this gives the same outcome
distribution as full enumeration under an idealized hash.  Small blocks can
be decoded by exhaustive enumeration instead (``decoder="exhaustive"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidArgument
from ..info_core import JointPmf, sample_block
from ..maxent import Cover, in_Q
from ..typicality import is_typical
from .adversary import AdversaryStrategy, Fabricate, SessionView, make_strategy
from .candidates import TargetSetCounter, all_sequences, anonymous_matches, conditional_entropies
from .hashing import Codebook, _masks, words_to_int

EXHAUSTIVE_AUTO_LIMIT = 4096
DECODERS = ("auto", "lazy", "exhaustive")


def _ceil_bits(x: float) -> int:
    # round first so that e.g. 200 * 0.05 does not become 11
    return int(math.ceil(round(x, 9)))


@dataclass(frozen=True)
class SimParams:
    """Protocol and simulation parameters.

    ``dot_factor`` sets the extra hash bits of a phase's first transaction,
    ``k * dot_factor * epsilon``; ``prime_factor`` sets the target-set slack
    ``eps' = prime_factor * epsilon``.  ``typ_eps`` is the typicality tolerance
    used for cover pruning (defaults to ``epsilon``).  With
    ``index_every_transaction`` each transaction draws and announces a fresh
    function index; otherwise one index is announced per phase.
    """

    k: int
    rounds: int = 1
    epsilon: float = 0.05
    C: int = 64
    seed: int = 0
    t: int = 0
    typ_eps: float | None = None
    decoder: str = "auto"
    prime_factor: float = 2.0
    dot_factor: float = 4.0
    index_every_transaction: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise InvalidArgument("k must be >= 1")
        if self.rounds < 1:
            raise InvalidArgument("rounds must be >= 1")
        if not self.epsilon > 0:
            raise InvalidArgument("epsilon must be > 0")
        if self.C < 1:
            raise InvalidArgument("C must be >= 1")
        if self.t < 0:
            raise InvalidArgument("t must be >= 0")
        if self.typ_eps is not None and not self.typ_eps > 0:
            raise InvalidArgument("typ_eps must be > 0")
        if self.decoder not in DECODERS:
            raise InvalidArgument(f"decoder must be one of {DECODERS}")
        if self.prime_factor < 0 or self.dot_factor < 0:
            raise InvalidArgument("prime_factor and dot_factor must be >= 0")

    @property
    def typicality_eps(self) -> float:
        return self.epsilon if self.typ_eps is None else self.typ_eps

    @property
    def epsilon_prime(self) -> float:
        return self.prime_factor * self.epsilon

    @property
    def index_bits(self) -> int:
        return math.ceil(math.log2(self.C)) if self.C > 1 else 0

    @property
    def step_bits(self) -> int:
        return _ceil_bits(self.k * self.epsilon)

    @property
    def first_bits(self) -> int:
        return _ceil_bits(self.k * self.epsilon * (1.0 + self.dot_factor))

    def hash_bits(self, transaction: int) -> int:
        return self.first_bits if transaction == 1 else self.step_bits

    def announces_index(self, transaction: int) -> bool:
        return transaction == 1 or self.index_every_transaction

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "rounds": self.rounds,
            "epsilon": self.epsilon,
            "C": self.C,
            "seed": self.seed,
            "t": self.t,
            "typ_eps": self.typicality_eps,
            "decoder": self.decoder,
            "prime_factor": self.prime_factor,
            "dot_factor": self.dot_factor,
            "index_every_transaction": self.index_every_transaction,
        }


@dataclass(frozen=True)
class Transaction:
    l: int
    round: int
    sensor: int
    transaction: int
    c: int
    index_bits: int
    hash_bits: int
    value: int
    R: float

    @property
    def bits(self) -> int:
        return self.index_bits + self.hash_bits


@dataclass(frozen=True)
class DecodeResult:
    """``status`` is ``unique``, ``none`` or ``ambiguous``."""

    status: str
    estimate: np.ndarray | None = None
    candidates: int = 0
    anonymous: bool = False


@dataclass(frozen=True)
class PhaseRecord:
    round: int
    sensor: int
    status: str  # decoded, ambiguous, exhausted or skipped
    transactions: int
    R: float
    bits: int
    anonymous: bool = False


@dataclass(frozen=True)
class SessionError:
    round: int
    kind: str  # ambiguous, exhausted or no_cover
    sensor: int | None = None


class PhaseDecoder:
    """Decoder state for one phase: hash constraints plus the target-set shells seen so far."""

    def __init__(self, codebook: Codebook, round_: int, sensor: int, context, params: SimParams,
                 pool=(), rng: np.random.Generator | None = None, exhaustive: bool = False):
        self.codebook = codebook
        self.round = round_
        self.sensor = sensor
        self.params = params
        self.rng = rng if rng is not None else np.random.default_rng(0)
        k = codebook.k
        self.alphabet = codebook.alphabet_sizes[sensor]
        self.cap = math.log2(self.alphabet) if self.alphabet > 1 else 0.0
        self.context = np.zeros((0, k), dtype=np.int64) if context is None else np.atleast_2d(np.asarray(context, dtype=np.int64)).reshape(-1, k)
        self.exhaustive = exhaustive
        if exhaustive:
            self.counter = None
            self.pool = all_sequences(k, self.alphabet)
            self.pool_H = conditional_entropies(self.pool, self.context) if self.alphabet > 1 else np.zeros(len(self.pool))
        else:
            self.counter = TargetSetCounter(self.context, self.alphabet, k)
            rows = [np.asarray(x, dtype=np.int64).reshape(k) for x in pool]
            self.pool = np.unique(np.array(rows), axis=0) if rows else np.zeros((0, k), dtype=np.int64)
            self.pool_bins = self.counter.bins_of(self.pool) if len(self.pool) else np.zeros(0, dtype=np.int64)
        self.alive = np.ones(len(self.pool), dtype=bool)
        self.bits = 0
        self.prev = -math.inf
        self.c: int | None = None

    def absorb(self, c: int | None, transaction: int, value: int, bits: int) -> None:
        """Apply one received hash (``c`` None keeps the phase's announced index)."""
        if c is not None:
            self.c = c
        if self.c is None:
            raise InvalidArgument("no function index announced in this phase")
        self.bits += bits
        if bits == 0:
            return
        idx = np.flatnonzero(self.alive)
        if idx.size:
            ok = self.codebook.matches(self.pool[idx], value, self.round, self.sensor, transaction, self.c, bits)
            self.alive[idx[~ok]] = False

    def _in_target(self, threshold: float) -> np.ndarray:
        if self.exhaustive:
            return self.pool_H <= threshold + 1e-12
        return self.pool_bins <= self.counter.index(threshold)

    def evaluate(self, R: float) -> DecodeResult:
        threshold = R + self.params.epsilon_prime
        lo = self.prev
        in_t = self._in_target(threshold)
        explicit = np.flatnonzero(self.alive & in_t)
        anon = 0
        if self.counter is not None:
            was_in = np.zeros(len(self.pool), dtype=bool) if lo == -math.inf else self._in_target(lo)
            fresh = self.counter.count_between(lo, threshold) - int((in_t & ~was_in).sum())
            anon = anonymous_matches(fresh, self.bits, float(self.rng.random()))
        self.prev = threshold
        total = explicit.size + anon
        if total == 0:
            return DecodeResult("none")
        if total >= 2:
            return DecodeResult("ambiguous", candidates=total)
        if explicit.size:
            return DecodeResult("unique", self.pool[explicit[0]].copy(), 1)
        return DecodeResult("unique", self._fresh_sample(lo, threshold), 1, anonymous=True)

    def _fresh_sample(self, lo: float, threshold: float) -> np.ndarray:
        """A uniform sequence of the new shell that is not in the explicit pool."""
        for _ in range(16):
            x = self.counter.sample(lo, threshold, self.rng)
            if not np.any(np.all(self.pool == x[None, :], axis=1)):
                return x
        return x

    def receive(self, tx: Transaction) -> DecodeResult:
        self.absorb(tx.c if tx.index_bits > 0 or self.c is None else None, tx.transaction, tx.value, tx.hash_bits)
        return self.evaluate(tx.R)

    @property
    def space_exhausted(self) -> bool:
        return self.prev >= self.cap - 1e-12


def decode_phase(received, context, R: float, params: SimParams, codebook: Codebook,
                 round_: int, sensor: int, pool=(), rng=None, exhaustive: bool | None = None) -> DecodeResult:
    """Decode a phase from all hashes received so far, in one shot.

    ``received`` is a list of ``(c, value)`` pairs for transactions 1, 2, ...
    with the bit widths the schedule in ``params`` assigns them.  Sequences
    outside ``pool`` are treated as random-oracle inputs (see the module notes)
    unless ``exhaustive`` is set, in which case every sequence is checked.
    """
    if exhaustive is None:
        exhaustive = codebook.alphabet_sizes[sensor] ** codebook.k <= EXHAUSTIVE_AUTO_LIMIT
    dec = PhaseDecoder(codebook, round_, sensor, context, params, pool, rng, exhaustive)
    if not received:
        dec.c = 0
    for n, (c, value) in enumerate(received, start=1):
        dec.absorb(c, n, value, params.hash_bits(n))
    return dec.evaluate(R)


def prune_cover(cover: Cover, estimates, p: JointPmf, eps: float, exclude=()) -> Cover | None:
    """Largest sub-family of ``cover`` on whose members the estimates are eps-typical.

    ``estimates`` is an ``(m, k)`` array or a list with None for missing rows;
    members touching a missing row or a sensor in ``exclude`` are dropped.
    Joint typicality on a family is a per-member condition, so the largest
    sub-family is unique.  Returns None if no member survives.
    """
    rows = list(estimates)
    k = next((len(r) for r in rows if r is not None), None)
    bad = {i for i, r in enumerate(rows) if r is None} | set(exclude)
    if k is None:
        return None
    block = np.array([np.zeros(k, dtype=np.int64) if r is None else np.asarray(r, dtype=np.int64) for r in rows])
    keep = [s for s in cover if not (s & bad) and is_typical(block, s, p, eps)]
    return cover.restrict(keep) if keep else None


@dataclass
class SessionReport:
    params: SimParams
    traitors: frozenset[int]
    strategy: str
    alphabet_sizes: tuple[int, ...]
    transcript: list[Transaction] = field(default_factory=list)
    truths: list[np.ndarray] = field(default_factory=list)
    estimates: list[list[np.ndarray | None]] = field(default_factory=list)
    phases: list[PhaseRecord] = field(default_factory=list)
    covers: list[Cover] = field(default_factory=list)
    final_cover: Cover | None = None
    errors: list[SessionError] = field(default_factory=list)
    honest_error_rounds: list[bool] = field(default_factory=list)

    @property
    def L(self) -> int:
        return len(self.transcript)

    @property
    def total_bits(self) -> int:
        return sum(tx.bits for tx in self.transcript)

    @property
    def honest_error(self) -> bool:
        return any(self.honest_error_rounds)

    @property
    def session_error_kind(self) -> str:
        return self.errors[0].kind if self.errors else "none"

    def round_bits(self, r: int) -> int:
        return sum(tx.bits for tx in self.transcript if tx.round == r)

    def per_round_sum_rate(self) -> list[float]:
        return [self.round_bits(r) / self.params.k for r in range(self.params.rounds)]

    @property
    def shrink_rounds(self) -> int:
        unions = [c.union for c in self.covers] + [self.final_cover.union]
        return sum(a != b for a, b in zip(unions, unions[1:]))

    def summary(self) -> dict:
        return {
            "honest_error": self.honest_error,
            "session_error_kind": self.session_error_kind,
            "sum_rate": measure_sum_rate(self),
            "L": self.L,
            "total_bits": self.total_bits,
            "final_cover": self.final_cover.label(),
        }

    def __eq__(self, other):
        if not isinstance(other, SessionReport):
            return NotImplemented
        def arrs(xs):
            return [None if x is None else np.asarray(x).tolist() for x in xs]
        return (
            self.params == other.params
            and self.traitors == other.traitors
            and self.strategy == other.strategy
            and self.transcript == other.transcript
            and [np.asarray(x).tolist() for x in self.truths] == [np.asarray(x).tolist() for x in other.truths]
            and [arrs(e) for e in self.estimates] == [arrs(e) for e in other.estimates]
            and self.phases == other.phases
            and self.covers == other.covers
            and self.final_cover == other.final_cover
            and self.errors == other.errors
        )


def measure_sum_rate(report: SessionReport) -> float:
    """Bits per source symbol over the whole session, index bits included."""
    return report.total_bits / (report.params.k * report.params.rounds)


def _random_value(rng: np.random.Generator, bits: int) -> int:
    if bits == 0:
        return 0
    raw = rng.bit_generator.random_raw(len(_masks(bits)))
    return words_to_int(np.asarray(raw, dtype=np.uint64) & _masks(bits))


def _check_fabricate(p: JointPmf, q_tilde: JointPmf, traitors: frozenset[int], t: int):
    if q_tilde.alphabet_sizes != p.alphabet_sizes:
        raise InvalidArgument("q_tilde must have the same alphabets as p")
    honest = frozenset(range(p.m)) - traitors
    if honest and np.abs(q_tilde.marginal_array(honest) - p.marginal_array(honest)).max() > 1e-9:
        raise InvalidArgument("q_tilde must match p on the honest sensors")
    if not in_Q(q_tilde, p, t, tol=1e-9):
        raise InvalidArgument("q_tilde is not in Q for this t")


def run_session(p: JointPmf, params: SimParams, traitors=(), strategy: str | AdversaryStrategy = "honest",
                q_tilde: JointPmf | None = None) -> SessionReport:
    """Run ``params.rounds`` rounds of the protocol and report everything that happened."""
    m = p.m
    traitors = frozenset(int(i) for i in traitors)
    if any(not 0 <= i < m for i in traitors):
        raise InvalidArgument(f"traitor ids must be in 0..{m - 1}")
    if len(traitors) > params.t:
        raise InvalidArgument(f"{len(traitors)} traitors exceeds t={params.t}")
    if params.t > m - 1:
        raise InvalidArgument(f"t={params.t} out of range for m={m}")
    if isinstance(strategy, str):
        strategy = make_strategy(strategy, q_tilde)
    if isinstance(strategy, Fabricate):
        _check_fabricate(p, strategy.q_tilde, traitors, params.t)

    src_seq, sensor_seq, adv_seq, dec_seq = np.random.SeedSequence(params.seed).spawn(4)
    src_rng = np.random.default_rng(src_seq)
    sensor_rng = np.random.default_rng(sensor_seq)
    adv_rng = np.random.default_rng(adv_seq)
    dec_rng = np.random.default_rng(dec_seq)

    k = params.k
    sizes = p.alphabet_sizes
    truths = [sample_block(p, k, src_rng).symbols for _ in range(params.rounds)]
    codebook = Codebook(params.seed, k, sizes)
    cover = Cover.full(m, params.t)
    report = SessionReport(params, traitors, strategy.name, sizes, truths=truths)
    view = SessionView(p, params, traitors, truths, codebook, adv_rng, cover, report.transcript)
    strategy.prepare(view)

    l = 0
    for r in range(params.rounds):
        report.covers.append(cover)
        view.cover = cover
        union = cover.union
        xhat: list[np.ndarray | None] = [None] * m
        failed: set[int] = set()
        for i in range(m):
            if i not in union:
                report.phases.append(PhaseRecord(r, i, "skipped", 0, 0.0, 0))
                continue
            ctx = [xhat[j] if xhat[j] is not None else np.zeros(k, dtype=np.int64) for j in range(i) if j in union]
            context = np.array(ctx, dtype=np.int64).reshape(len(ctx), k)
            honest = i not in traitors
            seq = truths[r][i] if honest else strategy.sequence(view, r, i)
            own = sensor_rng if honest else adv_rng
            pool = [truths[r][i]] + ([seq] if seq is not None else []) + strategy.decoys(view, r, i)
            exhaustive = params.decoder == "exhaustive" or (
                params.decoder == "auto" and sizes[i] ** k <= EXHAUSTIVE_AUTO_LIMIT
            )
            dec = PhaseDecoder(codebook, r, i, context, params, pool, dec_rng, exhaustive)
            n, c, bits_used = 0, 0, 0
            while True:
                n += 1
                R = round(n * params.epsilon, 12)
                announce = params.announces_index(n)
                if announce:
                    c = int(own.integers(params.C))
                hb = params.hash_bits(n)
                ib = params.index_bits if announce else 0
                if seq is None:
                    value = _random_value(own, hb)
                else:
                    value = codebook.hash(seq, r, i, n, c, hb)
                l += 1
                tx = Transaction(l, r, i, n, c, ib, hb, value, R)
                report.transcript.append(tx)
                bits_used += tx.bits
                res = dec.receive(tx)
                if res.status == "unique":
                    xhat[i] = res.estimate
                    report.phases.append(PhaseRecord(r, i, "decoded", n, R, bits_used, res.anonymous))
                    break
                if res.status == "ambiguous":
                    failed.add(i)
                    report.phases.append(PhaseRecord(r, i, "ambiguous", n, R, bits_used))
                    report.errors.append(SessionError(r, "ambiguous", i))
                    break
                if dec.space_exhausted:
                    failed.add(i)
                    report.phases.append(PhaseRecord(r, i, "exhausted", n, R, bits_used))
                    report.errors.append(SessionError(r, "exhausted", i))
                    break
        report.estimates.append(xhat)
        report.honest_error_rounds.append(
            any(xhat[j] is None or not np.array_equal(xhat[j], truths[r][j]) for j in range(m) if j not in traitors)
        )
        pruned = prune_cover(cover, [xhat[j] if j in union else None for j in range(m)], p,
                             params.typicality_eps, exclude=failed)
        if pruned is None:
            report.errors.append(SessionError(r, "no_cover"))
        else:
            cover = pruned
    report.final_cover = cover
    return report


def trial_params(params: SimParams, trial: int) -> SimParams:
    """Per-trial parameters with a seed derived from (master seed, trial index)."""
    seed = int(np.random.SeedSequence([params.seed, trial]).generate_state(1, dtype=np.uint64)[0] >> 1)
    return replace(params, seed=seed)
