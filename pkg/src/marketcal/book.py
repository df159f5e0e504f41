"""Limit order book with price-time priority matching.

Prices live on an integer tick grid. Each side keeps FIFO queues per price
level; crossing limit orders execute immediately against the opposite side
(marketable-limit semantics), market orders walk the opposite best levels and
any unfilled remainder is discarded. When a side is empty its quote falls back
to ``reference_price -/+ 1`` so downstream mid-price/spread stay defined.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

BID = "bid"
ASK = "ask"

LIMIT = "limit"
MARKET = "market"


@dataclass(frozen=True)
class Order:
    """An order as submitted by an agent.

    ``price`` is in integer ticks and must be None for market orders (the
    match price is resolved against the opposite best). ``arrival`` is a
    (step, sequence) pair that must be strictly increasing across submissions.
    """

    id: int
    side: str
    kind: str
    price: int | None = None
    volume: int = 1
    arrival: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class Trade:
    taker_order_id: int
    maker_order_id: int
    price: int
    volume: int
    step: int


class _Entry:
    """Mutable resting-order record; tombstoned in place on cancel/fill."""

    __slots__ = ("id", "side", "price", "remaining", "alive")

    def __init__(self, order_id: int, side: str, price: int, volume: int):
        self.id = order_id
        self.side = side
        self.price = price
        self.remaining = volume
        self.alive = True


class OrderBook:
    """Price-time priority book over integer ticks.

    A single instance is not thread safe; independent instances share nothing.
    Set ``track_events=True`` to accumulate a debug event log of
    (step, kind, side, price, volume, order_id) tuples.
    """

    def __init__(self, reference_price: int, track_events: bool = False):
        if reference_price <= 1:
            raise ValueError(f"reference_price must exceed 1 tick, got {reference_price}")
        self.reference_price = int(reference_price)
        self._levels: dict[str, dict[int, deque]] = {BID: {}, ASK: {}}
        self._level_volume: dict[str, dict[int, int]] = {BID: {}, ASK: {}}
        # lazy best-price heaps; bid prices are negated so heap[0] is the best
        self._heaps: dict[str, list[int]] = {BID: [], ASK: []}
        self._orders: dict[int, _Entry] = {}
        self._seen_ids: set[int] = set()
        self._last_arrival: tuple[int, int] | None = None
        self.volume_submitted = 0
        self.volume_traded = 0  # units consumed on both sides (2x trade volume)
        self.volume_cancelled = 0
        self.volume_discarded = 0
        self.events: list[tuple] | None = [] if track_events else None

    # -- queries ------------------------------------------------------------

    def best_bid(self) -> int:
        price = self._best_price(BID)
        return self.reference_price - 1 if price is None else price

    def best_ask(self) -> int:
        price = self._best_price(ASK)
        return self.reference_price + 1 if price is None else price

    def mid_price(self) -> float:
        return (self.best_bid() + self.best_ask()) / 2

    def level_volume(self, side: str, price: int) -> int:
        return self._level_volume[side].get(price, 0)

    def volume_resting(self) -> int:
        total = 0
        for side in (BID, ASK):
            total += sum(self._level_volume[side].values())
        return total

    def resting_ids(self) -> list[int]:
        """Ids of live resting orders, in submission order."""
        return list(self._orders)

    def snapshot(self) -> dict:
        """Deterministic full dump: per-side [(price, [(id, volume), ...]), ...]."""
        out: dict = {"reference_price": self.reference_price}
        for side, reverse in ((BID, True), (ASK, False)):
            levels = []
            for price in sorted(self._levels[side], reverse=reverse):
                queue = [(e.id, e.remaining) for e in self._levels[side][price] if e.alive]
                if queue:
                    levels.append((price, queue))
            out[side + "s"] = levels
        return out

    # -- order entry ---------------------------------------------------------

    def submit_limit(self, order: Order) -> list[Trade]:
        """Match a limit order while it crosses, then rest any remainder.

        Trades execute at the resting (maker) order's price. Raises ValueError
        on duplicate ids, non-increasing arrivals, or an invalid order.
        """
        self._admit(order, LIMIT)
        self._log(order.arrival[0], LIMIT, order.side, order.price, order.volume, order.id)

        opposite = ASK if order.side == BID else BID
        remaining = order.volume
        trades: list[Trade] = []
        while remaining > 0:
            best = self._best_price(opposite)
            if best is None:
                break
            if order.side == BID and best > order.price:
                break
            if order.side == ASK and best < order.price:
                break
            remaining = self._consume_level(opposite, best, order, remaining, trades)
        if remaining > 0:
            self._rest(order, remaining)
        return trades

    def submit_market(self, order: Order) -> list[Trade]:
        """Match a market order against the opposite best levels.

        The unfilled remainder is discarded, never rested; an empty opposite
        side therefore yields an empty trade list.
        """
        self._admit(order, MARKET)
        self._log(order.arrival[0], MARKET, order.side, None, order.volume, order.id)

        opposite = ASK if order.side == BID else BID
        remaining = order.volume
        trades: list[Trade] = []
        while remaining > 0:
            best = self._best_price(opposite)
            if best is None:
                break
            remaining = self._consume_level(opposite, best, order, remaining, trades)
        if remaining > 0:
            self.volume_discarded += remaining
            self._log(order.arrival[0], "discard", order.side, None, remaining, order.id)
        return trades

    def cancel(self, order_id: int, step: int | None = None) -> bool:
        """Remove a resting order (or its unfilled remainder). False if absent.

        ``step`` is only recorded in the event log.
        """
        entry = self._orders.get(order_id)
        if entry is None:
            return False
        entry.alive = False
        del self._orders[order_id]
        self._drain_level(entry.side, entry.price, entry.remaining)
        self.volume_cancelled += entry.remaining
        self._log(step, "cancel", entry.side, entry.price, entry.remaining, order_id)
        entry.remaining = 0
        return True

    # -- internals ------------------------------------------------------------

    def _admit(self, order: Order, kind: str) -> None:
        """Validate fully, then commit; a rejected order leaves no state behind."""
        if order.kind != kind:
            raise ValueError(f"order {order.id} has kind {order.kind!r}, expected {kind!r}")
        if kind == LIMIT and (order.price is None or order.price <= 0):
            raise ValueError(f"limit order {order.id} needs a positive tick price")
        if kind == MARKET and order.price is not None:
            raise ValueError(f"market order {order.id} must not carry a price")
        if order.volume < 1:
            raise ValueError(f"order {order.id} volume must be >= 1, got {order.volume}")
        if order.side not in (BID, ASK):
            raise ValueError(f"order {order.id} side must be bid/ask, got {order.side!r}")
        if order.id in self._seen_ids:
            raise ValueError(f"duplicate order id {order.id}")
        if self._last_arrival is not None and order.arrival <= self._last_arrival:
            raise ValueError(
                f"order {order.id} arrival {order.arrival} does not follow {self._last_arrival}"
            )
        self._seen_ids.add(order.id)
        self._last_arrival = order.arrival
        self.volume_submitted += order.volume

    def _best_price(self, side: str) -> int | None:
        heap = self._heaps[side]
        volumes = self._level_volume[side]
        while heap:
            price = -heap[0] if side == BID else heap[0]
            if volumes.get(price, 0) > 0:
                return price
            heapq.heappop(heap)
        return None

    def _consume_level(
        self, side: str, price: int, taker: Order, remaining: int, trades: list[Trade]
    ) -> int:
        queue = self._levels[side][price]
        volumes = self._level_volume[side]
        while remaining > 0 and volumes.get(price, 0) > 0:
            entry = queue[0]
            if not entry.alive:
                queue.popleft()
                continue
            fill = entry.remaining if entry.remaining < remaining else remaining
            entry.remaining -= fill
            remaining -= fill
            volumes[price] -= fill
            self.volume_traded += 2 * fill
            self.reference_price = price
            if entry.remaining == 0:
                entry.alive = False
                queue.popleft()
                del self._orders[entry.id]
            trades.append(Trade(taker.id, entry.id, price, fill, taker.arrival[0]))
            self._log(taker.arrival[0], "trade", taker.side, price, fill, taker.id)
        if volumes.get(price, 0) == 0:
            volumes.pop(price, None)
            self._levels[side].pop(price, None)
        return remaining

    def _drain_level(self, side: str, price: int, volume: int) -> None:
        volumes = self._level_volume[side]
        volumes[price] -= volume
        if volumes[price] <= 0:
            del volumes[price]
            del self._levels[side][price]

    def _rest(self, order: Order, remaining: int) -> None:
        entry = _Entry(order.id, order.side, order.price, remaining)
        level = self._levels[order.side].get(order.price)
        if level is None:
            self._levels[order.side][order.price] = deque((entry,))
            self._level_volume[order.side][order.price] = remaining
            key = -order.price if order.side == BID else order.price
            heapq.heappush(self._heaps[order.side], key)
        else:
            level.append(entry)
            self._level_volume[order.side][order.price] += remaining
        self._orders[order.id] = entry

    def _log(self, step, kind, side, price, volume, order_id) -> None:
        if self.events is not None:
            self.events.append((step, kind, side, price, volume, order_id))
