"""Compiled single-pass engine for the provider/taker market simulation.

Implements exactly the same matching semantics and generator draw sequence as
the order-book-based reference loop, specialized to unit order volumes. The
test suite holds the two engines to bit-identical output traces; everything
here is observable through that contract.

Book state is flat arrays plus one price -> slot map per side: each live
order is a node in a doubly linked FIFO per price level, best prices come
from lazily cleaned binary heaps, and live order ids sit in a swap-remove
registry so the cancellation sweep can walk them in a stable order.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit, types
    from numba.typed import Dict

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a normal dependency
    HAVE_NUMBA = False


if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _heap_push(heap, n, key):
        heap[n] = key
        i = n
        while i > 0:
            parent = (i - 1) >> 1
            if heap[parent] <= heap[i]:
                break
            heap[parent], heap[i] = heap[i], heap[parent]
            i = parent
        return n + 1

    @njit(cache=True, inline="always")
    def _heap_pop(heap, n):
        n -= 1
        heap[0] = heap[n]
        i = 0
        while True:
            left = 2 * i + 1
            if left >= n:
                break
            child = left
            right = left + 1
            if right < n and heap[right] < heap[left]:
                child = right
            if heap[i] <= heap[child]:
                break
            heap[i], heap[child] = heap[child], heap[i]
            i = child
        return n

    @njit(cache=True, inline="always")
    def _best_price(heap, n, levels, is_bid):
        """Top live price (lazily dropping stale heap keys), -1 if empty."""
        while n > 0:
            price = -heap[0] if is_bid else heap[0]
            if price in levels:
                return price, n
            n = _heap_pop(heap, n)
        return -1, n

    @njit(cache=True)
    def _simulate(
        rng,
        q_path,
        lam_path,
        steps,
        warmup,
        p0,
        delta,
        alpha,
        mu,
        n_prov_agents,
        n_take_agents,
        rec_bb,
        rec_ba,
        rec_tv,
        rec_bbv,
        rec_bav,
    ):
        total = warmup + steps
        cap = total * (n_prov_agents + n_take_agents) + 2

        # per-order node state, indexed by order id
        price_of = np.empty(cap, np.int64)
        is_bid_of = np.empty(cap, np.uint8)
        nxt = np.empty(cap, np.int32)
        prv = np.empty(cap, np.int32)

        # live-order registry with O(1) swap-remove
        live_ids = np.empty(cap, np.int32)
        live_pos = np.empty(cap, np.int32)
        n_live = 0

        # per-price FIFO levels: dict price -> slot into the level arrays
        bid_levels = Dict.empty(types.int64, types.int64)
        ask_levels = Dict.empty(types.int64, types.int64)
        lvl_count = np.empty(cap, np.int32)
        lvl_head = np.empty(cap, np.int32)
        lvl_tail = np.empty(cap, np.int32)
        free_slots = np.empty(cap, np.int32)
        n_free = 0
        next_slot = 0

        bid_heap = np.empty(cap, np.int64)
        ask_heap = np.empty(cap, np.int64)
        nbh = 0
        nah = 0

        kinds = np.empty(n_prov_agents + n_take_agents, np.uint8)
        doomed = np.empty(cap, np.int32)

        rp = p0  # last trade price, seeds the empty-side quote fallbacks
        next_id = 0

        for t in range(total):
            q = q_path[t]
            lam = lam_path[t]

            # each agent submits this step with its own coin flip
            n_prov = 0
            for _ in range(n_prov_agents):
                if rng.random() < alpha:
                    n_prov += 1
            n_take = 0
            for _ in range(n_take_agents):
                if rng.random() < mu:
                    n_take += 1
            n_ev = n_prov + n_take
            traded = 0

            if n_ev > 0:
                for i in range(n_prov):
                    kinds[i] = 0
                for i in range(n_prov, n_ev):
                    kinds[i] = 1
                # Fisher-Yates interleave of the submitting agents
                for i in range(n_ev - 1, 0, -1):
                    j = int(rng.random() * (i + 1))
                    kinds[i], kinds[j] = kinds[j], kinds[i]

                for e in range(n_ev):
                    oid = next_id
                    next_id += 1
                    if kinds[e] == 0:
                        # provider: fair side coin, exponential depth behind
                        # the opposite best, floored at 1 tick
                        buy = rng.random() < 0.5
                        u = 1.0 - rng.random()
                        depth = int(math.floor(-lam * math.log(u)))
                        if buy:
                            ba, nah = _best_price(ask_heap, nah, ask_levels, False)
                            base = ba if ba >= 0 else rp + 1
                            price = base - 1 - depth
                            if price < 1:
                                price = 1
                            # marketable limit: cross if the best ask reaches it
                            ba, nah = _best_price(ask_heap, nah, ask_levels, False)
                            cross = ba >= 0 and ba <= price
                            maker_side = ask_levels
                        else:
                            bb, nbh = _best_price(bid_heap, nbh, bid_levels, True)
                            base = bb if bb >= 0 else rp - 1
                            price = base + 1 + depth
                            if price < 1:
                                price = 1
                            bb, nbh = _best_price(bid_heap, nbh, bid_levels, True)
                            cross = bb >= 0 and bb >= price
                            maker_side = bid_levels
                            ba = bb
                        if cross:
                            # consume the queue head at the opposite best
                            mp = ba
                            slot = maker_side[mp]
                            h = lvl_head[slot]
                            cnt = lvl_count[slot] - 1
                            if cnt == 0:
                                del maker_side[mp]
                                free_slots[n_free] = slot
                                n_free += 1
                            else:
                                lvl_count[slot] = cnt
                                nh = nxt[h]
                                lvl_head[slot] = nh
                                prv[nh] = -1
                            pos = live_pos[h]
                            n_live -= 1
                            last = live_ids[n_live]
                            if last != h:
                                live_ids[pos] = last
                                live_pos[last] = pos
                            rp = mp
                            traded += 1
                        else:
                            # rest in the book
                            price_of[oid] = price
                            is_bid_of[oid] = 1 if buy else 0
                            own = bid_levels if buy else ask_levels
                            if price in own:
                                slot = own[price]
                                tail = lvl_tail[slot]
                                nxt[tail] = oid
                                prv[oid] = tail
                                nxt[oid] = -1
                                lvl_tail[slot] = oid
                                lvl_count[slot] += 1
                            else:
                                if n_free > 0:
                                    n_free -= 1
                                    slot = free_slots[n_free]
                                else:
                                    slot = next_slot
                                    next_slot += 1
                                own[price] = slot
                                lvl_count[slot] = 1
                                lvl_head[slot] = oid
                                lvl_tail[slot] = oid
                                prv[oid] = -1
                                nxt[oid] = -1
                                if buy:
                                    nbh = _heap_push(bid_heap, nbh, -price)
                                else:
                                    nah = _heap_push(ask_heap, nah, price)
                            live_ids[n_live] = oid
                            live_pos[oid] = n_live
                            n_live += 1
                    else:
                        # taker: market order, bid side with probability q;
                        # nothing rests, an unfilled order is discarded
                        buy = rng.random() < q
                        if buy:
                            mp, nah = _best_price(ask_heap, nah, ask_levels, False)
                            maker_side = ask_levels
                        else:
                            mp, nbh = _best_price(bid_heap, nbh, bid_levels, True)
                            maker_side = bid_levels
                        if mp >= 0:
                            slot = maker_side[mp]
                            h = lvl_head[slot]
                            cnt = lvl_count[slot] - 1
                            if cnt == 0:
                                del maker_side[mp]
                                free_slots[n_free] = slot
                                n_free += 1
                            else:
                                lvl_count[slot] = cnt
                                nh = nxt[h]
                                lvl_head[slot] = nh
                                prv[nh] = -1
                            pos = live_pos[h]
                            n_live -= 1
                            last = live_ids[n_live]
                            if last != h:
                                live_ids[pos] = last
                                live_pos[last] = pos
                            rp = mp
                            traded += 1

            # every resting order flips its own cancellation coin; collect in
            # registry order, then remove so the sweep sees a frozen layout
            if n_live > 0:
                m = 0
                for i in range(n_live):
                    if rng.random() < delta:
                        doomed[m] = live_ids[i]
                        m += 1
                for i in range(m):
                    oid = doomed[i]
                    price = price_of[oid]
                    own = bid_levels if is_bid_of[oid] == 1 else ask_levels
                    slot = own[price]
                    cnt = lvl_count[slot] - 1
                    if cnt == 0:
                        del own[price]
                        free_slots[n_free] = slot
                        n_free += 1
                    else:
                        lvl_count[slot] = cnt
                        before = prv[oid]
                        after = nxt[oid]
                        if before == -1:
                            lvl_head[slot] = after
                            prv[after] = -1
                        elif after == -1:
                            lvl_tail[slot] = before
                            nxt[before] = -1
                        else:
                            nxt[before] = after
                            prv[after] = before
                    pos = live_pos[oid]
                    n_live -= 1
                    last = live_ids[n_live]
                    if last != oid:
                        live_ids[pos] = last
                        live_pos[last] = pos

            if t >= warmup:
                k = t - warmup
                bb, nbh = _best_price(bid_heap, nbh, bid_levels, True)
                ba, nah = _best_price(ask_heap, nah, ask_levels, False)
                rec_bb[k] = bb if bb >= 0 else rp - 1
                rec_ba[k] = ba if ba >= 0 else rp + 1
                rec_tv[k] = traded
                rec_bbv[k] = lvl_count[bid_levels[bb]] if bb >= 0 else 0
                rec_bav[k] = lvl_count[ask_levels[ba]] if ba >= 0 else 0

    def simulate(rng, q_path, lam_path, steps, warmup, p0, delta, alpha, mu,
                 n_prov_agents, n_take_agents, rec_bb, rec_ba, rec_tv,
                 rec_bbv, rec_bav) -> None:
        _simulate(
            rng, q_path, lam_path, steps, warmup, p0, delta, alpha, mu,
            n_prov_agents, n_take_agents, rec_bb, rec_ba, rec_tv, rec_bbv,
            rec_bav,
        )
