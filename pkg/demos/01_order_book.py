"""
Price-time priority matching on the limit order book
====================================================

Submit resting limit orders, cross them with marketable orders, cancel, and
inspect quotes. Every order has unit-or-larger integer volume and integer
tick prices; trades always print at the resting (maker) price.
"""

from marketcal import ASK, BID, LIMIT, MARKET, Order, OrderBook

book = OrderBook(reference_price=1000)

# Build both sides of the book. Arrival tuples (step, sequence) fix priority.
book.submit_limit(Order(0, BID, LIMIT, price=998, volume=3, arrival=(0, 0)))
book.submit_limit(Order(1, BID, LIMIT, price=999, volume=2, arrival=(0, 1)))
book.submit_limit(Order(2, ASK, LIMIT, price=1002, volume=2, arrival=(0, 2)))
book.submit_limit(Order(3, ASK, LIMIT, price=1003, volume=4, arrival=(0, 3)))

print("best bid / ask:", book.best_bid(), "/", book.best_ask())
print("mid price:", book.mid_price())

# A market buy walks the ask side best-first and stops when filled.
trades = book.submit_market(Order(4, BID, MARKET, volume=3, arrival=(1, 4)))
for t in trades:
    print(f"trade: {t.volume} @ {t.price} (maker {t.maker_order_id})")
print("ask side after the sweep:", book.best_ask(), "with volume",
      book.level_volume(ASK, book.best_ask()))

# A marketable limit crosses first, then rests any remainder at its own price.
trades = book.submit_limit(Order(5, BID, LIMIT, price=1003, volume=5, arrival=(2, 5)))
print("marketable limit filled", sum(t.volume for t in trades),
      "and rests", book.level_volume(BID, 1003), "at 1003")

# Cancelling removes the remaining volume; earlier arrivals keep priority.
print("cancel order 0:", book.cancel(0))
print("volume accounting: submitted =", book.volume_submitted,
      "traded(x2) =", book.volume_traded,
      "cancelled =", book.volume_cancelled,
      "discarded =", book.volume_discarded)

print("\nfinal book snapshot:")
snap = book.snapshot()
for side in ("bids", "asks"):
    for price, queue in snap[side]:
        print(f"  {side[:-1]} {price}: {queue}")
