"""Event-table replay buffer with stratified minibatch sampling.

A :class:`ReplayBuffer` is a default table that stores every inserted
transition plus zero or more event tables.  Each event table has a pure
condition evaluated on every step; when the condition fires, the most
recent transitions of the open episode that were not already sent to that
table (up to its history length ``tau``) are appended to it.  Tables have
independent FIFO lifetimes over shared transition objects: evicting a step
from the default table never removes it from an event table and vice
versa.

Minibatches draw fixed proportions from each table (``eta``), either by a
deterministic largest-remainder split or by multinomial assignment.
Tables below their minimum-data threshold are excluded and their
proportion is renormalized over the rest.  Optional per-table sum trees
provide TD-priority sampling within tables, and optional bias modes attach
importance weights that undo the stratification skew.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Optional, Sequence

import numpy as np

from .sum_tree import SumTree
from .transition import Transition

Predicate = Callable[[Transition, Sequence[Transition]], bool]

BIAS_MODES = ("none", "discrete-count", "sum-tree")
ALLOCATION_MODES = ("largest-remainder", "multinomial")

#: Added to |TD error| before exponentiation so priorities stay positive.
PRIORITY_EPSILON = 1e-6

#: Default TD-priority exponent.
DEFAULT_PRIORITY_EXPONENT = 0.65


@dataclass(frozen=True)
class EventSpec:
    """Event condition plus the history length captured when it fires.

    ``condition(t, history)`` receives the just-inserted transition and the
    open episode up to and including it.  It must be pure: deterministic in
    its arguments and free of side effects.  ``tau`` is the maximum number
    of trailing episode transitions copied into the event table per firing.
    """

    condition: Predicate
    tau: int
    name: str = ""

    def __post_init__(self) -> None:
        if not callable(self.condition):
            raise TypeError("condition must be callable")
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")


@dataclass(frozen=True)
class TableConfig:
    """Sampling proportion, capacity, and minimum-data gate for one table."""

    eta: float
    kappa: int
    d_min: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.kappa < 1:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")
        if not 0 <= self.d_min <= self.kappa:
            raise ValueError(
                f"d_min must lie in [0, kappa={self.kappa}], got {self.d_min}"
            )


@dataclass(frozen=True)
class TableStats:
    """Linearizable snapshot of one table."""

    table_id: int
    size: int
    capacity: int
    inserts: int
    evictions: int
    eta: float
    d_min: int
    eligible: bool


@dataclass(frozen=True)
class BatchSample:
    """One sampled item: the transition, its source table, and bookkeeping.

    ``leaf_id`` is the (table_id, slot) pair accepted by
    :meth:`ReplayBuffer.update_priority`.
    """

    transition: Transition
    table_id: int
    weight: float
    leaf_id: tuple[int, int]


@dataclass(frozen=True)
class SampledBatch:
    samples: tuple[BatchSample, ...]

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[BatchSample]:
        return iter(self.samples)

    def transitions(self) -> list[Transition]:
        return [s.transition for s in self.samples]

    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.samples], dtype=np.float64)

    def table_counts(self, num_tables: int) -> np.ndarray:
        counts = np.zeros(num_tables, dtype=np.int64)
        for s in self.samples:
            counts[s.table_id] += 1
        return counts


class _Table:
    """FIFO ring of shared transitions, optionally with a priority tree."""

    __slots__ = (
        "config", "items", "serials", "inserts", "evictions",
        "tree", "max_priority",
    )

    def __init__(self, config: TableConfig, prioritized: bool):
        self.config = config
        self.items: list[Optional[Transition]] = [None] * config.kappa
        self.serials = [0] * config.kappa
        self.inserts = 0
        self.evictions = 0
        self.tree = SumTree(config.kappa) if prioritized else None
        self.max_priority = 1.0

    @property
    def size(self) -> int:
        return min(self.inserts, self.config.kappa)

    @property
    def eligible(self) -> bool:
        return self.size >= max(1, self.config.d_min)

    def append(self, t: Transition, serial: int) -> Optional[int]:
        """Store ``t``; return the evicted serial if a slot was overwritten."""
        slot = self.inserts % self.config.kappa
        evicted = None
        if self.inserts >= self.config.kappa:
            evicted = self.serials[slot]
            self.evictions += 1
        self.items[slot] = t
        self.serials[slot] = serial
        self.inserts += 1
        if self.tree is not None:
            self.tree.update(slot, self.max_priority)
        return evicted

    def draw_slot(self, rng: np.random.Generator) -> int:
        if self.tree is not None:
            total = self.tree.total
            u = rng.random() * total
            if u >= total:
                u = math.nextafter(total, 0.0)
            return self.tree.prefix_index(u)
        return int(rng.integers(self.size))


def _state_key(state: Any) -> Any:
    if isinstance(state, np.ndarray):
        return (state.shape, state.dtype.str, state.tobytes())
    try:
        hash(state)
    except TypeError:
        raise TypeError(
            f"state of type {type(state).__name__} is not hashable; "
            "discrete-count bias mode needs hashable states"
        ) from None
    return state


class ReplayBuffer:
    """Partitioned replay buffer: one default table plus event tables.

    Parameters
    ----------
    event_specs : sequence of EventSpec
        One per event table, in table order (table ids 1..n).
    table_configs : sequence of TableConfig
        One per table including the default table first (table id 0), so
        ``len(table_configs) == len(event_specs) + 1``.  Sampling
        proportions must sum to 1.
    bias_mode : {"none", "discrete-count", "sum-tree"}
        ``discrete-count`` tracks per-(state, action) counts of episode
        occurrences captured by any event table versus not, and weights
        sampled items ``1 - eta_event * out/total`` when the item is
        currently held by an event table and ``1/(1 - eta_event)``
        otherwise.  Correct for discrete state spaces; deterministic
        domains need no correction.  ``sum-tree`` is an experimental
        continuous-domain variant that weights by total priority mass with
        in-table items at ``1 + eta_event`` and the rest at
        ``1 - eta_event``.
    prioritized : bool
        Attach a per-table sum tree and draw within tables proportionally
        to stored priorities instead of uniformly.
    priority_exponent : float
        Exponent applied as ``(|td| + epsilon) ** exponent`` by
        :meth:`update_priority`.
    allocation : {"largest-remainder", "multinomial"}
        How batch slots are split across eligible tables.  The
        deterministic largest-remainder split also guarantees every
        eligible table at least one slot when the batch is large enough;
        the multinomial mode assigns each slot independently.

    A single writer thread (``insert`` / ``end_episode`` /
    ``update_priority``) and a single sampler thread may run concurrently;
    all public methods take an internal lock, and read-only calls return
    snapshots.
    """

    def __init__(
        self,
        event_specs: Sequence[EventSpec],
        table_configs: Sequence[TableConfig],
        *,
        bias_mode: str = "none",
        prioritized: bool = False,
        priority_exponent: float = DEFAULT_PRIORITY_EXPONENT,
        allocation: str = "largest-remainder",
    ):
        if len(table_configs) != len(event_specs) + 1:
            raise ValueError(
                f"need one config per table including the default: got "
                f"{len(event_specs)} event specs and {len(table_configs)} configs"
            )
        if bias_mode not in BIAS_MODES:
            raise ValueError(f"bias_mode must be one of {BIAS_MODES}, got {bias_mode!r}")
        if allocation not in ALLOCATION_MODES:
            raise ValueError(
                f"allocation must be one of {ALLOCATION_MODES}, got {allocation!r}"
            )
        if not math.isfinite(priority_exponent) or priority_exponent < 0.0:
            raise ValueError(f"priority_exponent must be >= 0, got {priority_exponent}")
        eta_sum = sum(c.eta for c in table_configs)
        if abs(eta_sum - 1.0) > 1e-9:
            raise ValueError(f"table etas must sum to 1, got {eta_sum}")
        self._eta_event = sum(c.eta for c in table_configs[1:])
        if bias_mode != "none" and self._eta_event >= 1.0:
            raise ValueError("bias correction requires the default table eta > 0")

        self.bias_mode = bias_mode
        self.prioritized = bool(prioritized)
        self.priority_exponent = float(priority_exponent)
        self.allocation = allocation
        self._specs = list(event_specs)
        self._tables = [_Table(c, self.prioritized) for c in table_configs]
        self._lock = threading.RLock()

        # Open-episode state.
        self._episode: list[Transition] = []
        self._episode_serials: list[int] = []
        self._episode_captured: list[bool] = []
        self._episode_id: Optional[int] = None
        self._episode_closed = False
        self._last_episode_id: Optional[int] = None
        self._last_capture = [-1] * len(self._specs)
        self._next_serial = 0

        # Event membership: serial -> number of event tables holding it,
        # and (state, action) -> number of live event-table entries.  The
        # (serial, table_id) -> key index lets evictions find their pair.
        self._event_refcount: dict[int, int] = {}
        self._pair_live: dict[Any, int] = {}
        self._serial_pairs: dict[tuple[int, int], Any] = {}
        # Cumulative episode-end counts: key -> [captured, not captured].
        self._pair_counts: dict[Any, list[int]] = {}
        # Live count of default-table items currently held by an event table.
        self._default_in_event = 0

    # ------------------------------------------------------------------
    # Introspection

    @property
    def num_tables(self) -> int:
        return len(self._tables)

    @property
    def num_event_tables(self) -> int:
        return len(self._specs)

    @property
    def eta_event(self) -> float:
        """Total configured sampling proportion of the event tables."""
        return self._eta_event

    @property
    def event_specs(self) -> tuple[EventSpec, ...]:
        return tuple(self._specs)

    def size(self, table_id: int) -> int:
        with self._lock:
            return self._table(table_id).size

    def table_contents(self, table_id: int) -> list[Transition]:
        """Snapshot of one table's live transitions (unspecified order)."""
        with self._lock:
            table = self._table(table_id)
            n = table.size
            return [table.items[i] for i in range(n)]

    def table_stats(self) -> list[TableStats]:
        with self._lock:
            return [
                TableStats(
                    table_id=k,
                    size=t.size,
                    capacity=t.config.kappa,
                    inserts=t.inserts,
                    evictions=t.evictions,
                    eta=t.config.eta,
                    d_min=t.config.d_min,
                    eligible=t.eligible,
                )
                for k, t in enumerate(self._tables)
            ]

    def _table(self, table_id: int) -> _Table:
        if not 0 <= table_id < len(self._tables):
            raise IndexError(f"table_id {table_id} out of range [0, {len(self._tables)})")
        return self._tables[table_id]

    # ------------------------------------------------------------------
    # Writing

    def insert(self, t: Transition) -> None:
        """Store one step of the open episode and run event capture.

        Transitions of one episode must arrive in order with strictly
        increasing ``step_index``; a new ``episode_id`` is only legal after
        :meth:`end_episode`, and episode ids must increase across episodes.
        A terminal transition still participates in capture (events that
        fire on the final step keep their history) but closes the episode.
        """
        if not isinstance(t, Transition):
            raise TypeError(f"expected Transition, got {type(t).__name__}")
        with self._lock:
            if self._episode_id is None:
                if self._last_episode_id is not None and t.episode_id <= self._last_episode_id:
                    raise ValueError(
                        f"episode_id must increase: {t.episode_id} after "
                        f"{self._last_episode_id}"
                    )
                self._episode_id = t.episode_id
            elif t.episode_id != self._episode_id:
                raise ValueError(
                    f"episode {self._episode_id} is still open; call end_episode "
                    f"before inserting episode {t.episode_id}"
                )
            if self._episode_closed:
                raise ValueError("episode already closed by a terminal transition")
            if self._episode and t.step_index <= self._episode[-1].step_index:
                raise ValueError(
                    f"step_index must increase within an episode: {t.step_index} "
                    f"after {self._episode[-1].step_index}"
                )

            serial = self._next_serial
            self._next_serial += 1
            self._episode.append(t)
            self._episode_serials.append(serial)
            self._episode_captured.append(False)
            if t.done:
                self._episode_closed = True

            # Default table sees everything.
            evicted = self._tables[0].append(t, serial)
            if evicted is not None and self._event_refcount.get(evicted, 0) > 0:
                self._default_in_event -= 1

            # Event capture: append the trailing window not already sent.
            pos = len(self._episode) - 1
            for i, spec in enumerate(self._specs):
                if spec.condition(t, self._episode):
                    lo = max(pos - spec.tau + 1, self._last_capture[i] + 1, 0)
                    for j in range(lo, pos + 1):
                        self._event_append(i + 1, j)
                    self._last_capture[i] = pos

    def _event_append(self, table_id: int, episode_pos: int) -> None:
        table = self._tables[table_id]
        t = self._episode[episode_pos]
        serial = self._episode_serials[episode_pos]
        self._episode_captured[episode_pos] = True

        evicted = table.append(t, serial)
        if evicted is not None:
            self._drop_event_ref(evicted, table_id)

        before = self._event_refcount.get(serial, 0)
        self._event_refcount[serial] = before + 1
        if before == 0 and self._default_live(serial):
            self._default_in_event += 1
        key = (_state_key(t.state), t.action)
        self._pair_live[key] = self._pair_live.get(key, 0) + 1
        self._serial_pairs[(serial, table_id)] = key

    def _drop_event_ref(self, serial: int, table_id: int) -> None:
        count = self._event_refcount.get(serial, 0) - 1
        if count <= 0:
            self._event_refcount.pop(serial, None)
            if self._default_live(serial):
                self._default_in_event -= 1
        else:
            self._event_refcount[serial] = count
        key = self._serial_pairs.pop((serial, table_id), None)
        if key is not None:
            live = self._pair_live.get(key, 0) - 1
            if live <= 0:
                self._pair_live.pop(key, None)
            else:
                self._pair_live[key] = live

    def _default_live(self, serial: int) -> bool:
        default = self._tables[0]
        return serial >= default.inserts - default.size

    def end_episode(self) -> None:
        """Close the open episode and fold it into the membership counts.

        In ``discrete-count`` mode every step of the finished episode
        increments the captured/uncaptured counter of its (state, action)
        pair, depending on whether any event table took it.  Clears the
        episode buffer; the next insert may start a higher ``episode_id``.
        """
        with self._lock:
            if self._episode_id is None:
                return
            if self.bias_mode == "discrete-count":
                for t, captured in zip(self._episode, self._episode_captured):
                    key = (_state_key(t.state), t.action)
                    counts = self._pair_counts.setdefault(key, [0, 0])
                    counts[0 if captured else 1] += 1
            self._last_episode_id = self._episode_id
            self._episode_id = None
            self._episode_closed = False
            self._episode = []
            self._episode_serials = []
            self._episode_captured = []
            self._last_capture = [-1] * len(self._specs)

    def update_priority(self, leaf_id: tuple[int, int], td_error: float) -> None:
        """Set the priority of a live slot to ``(|td_error| + eps) ** exponent``."""
        if not self.prioritized:
            raise RuntimeError("buffer was built without priority trees")
        if not math.isfinite(td_error):
            raise ValueError(f"td_error must be finite, got {td_error}")
        table_id, slot = leaf_id
        with self._lock:
            table = self._table(table_id)
            if not 0 <= slot < table.size:
                raise IndexError(
                    f"slot {slot} is not live in table {table_id} (size {table.size})"
                )
            p = (abs(td_error) + PRIORITY_EPSILON) ** self.priority_exponent
            table.tree.update(slot, p)
            if p > table.max_priority:
                table.max_priority = p

    # ------------------------------------------------------------------
    # Sampling

    def eligible_tables(self) -> list[int]:
        with self._lock:
            return [k for k, t in enumerate(self._tables) if t.eligible]

    def allocate(self, batch_size: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Split ``batch_size`` slots over all tables (zeros for ineligible).

        Largest-remainder mode floors the exact shares, hands leftovers out
        by descending fractional part (ties to the lower table id), then
        moves single slots from the largest allocation until every eligible
        table has one, provided ``batch_size`` covers them all.  Multinomial
        mode draws table assignments independently and needs ``rng``.
        """
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        with self._lock:
            eligible = [k for k, t in enumerate(self._tables) if t.eligible]
            if not eligible:
                raise ValueError("no table has reached its minimum data threshold")
            etas = np.array([self._tables[k].config.eta for k in eligible], dtype=np.float64)
            if etas.sum() <= 0.0:
                etas = np.ones_like(etas)
            probs = etas / etas.sum()

            counts = np.zeros(len(self._tables), dtype=np.int64)
            if self.allocation == "multinomial":
                if rng is None:
                    raise ValueError("multinomial allocation needs an rng")
                drawn = rng.multinomial(batch_size, probs)
                counts[eligible] = drawn
                return counts

            exact = probs * batch_size
            base = np.floor(exact).astype(np.int64)
            frac = exact - base
            left = batch_size - int(base.sum())
            if left > 0:
                # Descending fractional part, lower table id wins ties.
                order = sorted(range(len(eligible)), key=lambda i: (-frac[i], i))
                for i in order[:left]:
                    base[i] += 1
            if batch_size >= len(eligible):
                while True:
                    zeros = [i for i in range(len(eligible)) if base[i] == 0]
                    if not zeros:
                        break
                    donor = int(np.argmax(base))
                    base[donor] -= 1
                    base[zeros[0]] += 1
            counts[eligible] = base
            return counts

    def sample_batch(self, batch_size: int, rng: np.random.Generator) -> SampledBatch:
        """Draw a stratified minibatch.

        Slots are split across eligible tables by :meth:`allocate`; within a
        table, items are drawn uniformly, or proportionally to priority when
        the buffer is prioritized.  Importance weights follow the bias mode
        (1.0 everywhere for ``"none"``).
        """
        with self._lock:
            if self._tables[0].size == 0:
                raise ValueError("default table is empty")
            counts = self.allocate(batch_size, rng)
            if self.bias_mode == "sum-tree":
                in_w, out_w = self._mass_ratio_weights()
            samples = []
            for table_id, count in enumerate(counts):
                if count == 0:
                    continue
                table = self._tables[table_id]
                for _ in range(int(count)):
                    slot = table.draw_slot(rng)
                    t = table.items[slot]
                    serial = table.serials[slot]
                    if self.bias_mode == "none":
                        w = 1.0
                    elif self.bias_mode == "discrete-count":
                        w = self._discrete_weight(t, serial)
                    else:
                        w = in_w if self._event_refcount.get(serial, 0) > 0 else out_w
                    samples.append(
                        BatchSample(
                            transition=t,
                            table_id=table_id,
                            weight=w,
                            leaf_id=(table_id, slot),
                        )
                    )
            return SampledBatch(samples=tuple(samples))

    def _discrete_weight(self, t: Transition, serial: int) -> float:
        key = (_state_key(t.state), t.action)
        counts = self._pair_counts.get(key)
        if self._event_refcount.get(serial, 0) > 0:
            if counts is None:
                return 1.0  # no finished episode yet; no evidence to correct with
            captured, missed = counts
            total = captured + missed
            return 1.0 - self._eta_event * (missed / total)
        return 1.0 / (1.0 - self._eta_event)

    def _mass_ratio_weights(self) -> tuple[float, float]:
        default = self._tables[0]
        n = default.size
        if n == 0:
            return 1.0, 1.0
        n_in = self._default_in_event
        n_out = n - n_in
        mass = (1.0 + self._eta_event) * n_in + (1.0 - self._eta_event) * n_out
        return mass / ((1.0 + self._eta_event) * n), mass / ((1.0 - self._eta_event) * n)

    def bias_weight(self, state: Any, action: int) -> float:
        """Bias-correction weight for a (state, action) pair, discrete mode.

        ``1 - eta_event * (uncaptured / total)`` when the pair currently
        appears in an event table, ``1 / (1 - eta_event)`` otherwise.
        Raises ``KeyError`` for pairs with no recorded episode occurrences.
        """
        if self.bias_mode != "discrete-count":
            raise RuntimeError(f"bias_weight needs discrete-count mode, not {self.bias_mode!r}")
        key = (_state_key(state), action)
        with self._lock:
            counts = self._pair_counts.get(key)
            if counts is None:
                raise KeyError(f"no recorded occurrences for state-action pair {key!r}")
            captured, missed = counts
            total = captured + missed
            if self._pair_live.get(key, 0) > 0:
                return 1.0 - self._eta_event * (missed / total)
            return 1.0 / (1.0 - self._eta_event)


def create_buffer(
    event_specs: Sequence[EventSpec],
    table_configs: Sequence[TableConfig],
    bias_mode: str = "none",
    priority_exponent: Optional[float] = None,
    allocation: str = "largest-remainder",
) -> ReplayBuffer:
    """Build a :class:`ReplayBuffer`; a non-None exponent enables priorities."""
    prioritized = priority_exponent is not None
    return ReplayBuffer(
        event_specs,
        table_configs,
        bias_mode=bias_mode,
        prioritized=prioritized,
        priority_exponent=(
            DEFAULT_PRIORITY_EXPONENT if priority_exponent is None else priority_exponent
        ),
        allocation=allocation,
    )
