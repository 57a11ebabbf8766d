import threading
import time

import pytest

from stereosentry.bus import BusClosed, ComposedFrame, FrameBus, Mailbox


def frame(seq):
    return ComposedFrame(image=None, jpeg=b"j", seq=seq, capture_time_ms=seq)


def test_mailbox_latest_wins():
    box = Mailbox()
    assert box.take() is None
    box.put(1)
    box.put(2)
    assert box.peek() == 2
    assert box.take() == 2
    assert box.take() is None  # take empties the slot


def test_mailbox_holds_falsy_values():
    box = Mailbox()
    box.put(0)
    assert box.peek() == 0
    assert box.take() == 0


def test_bus_rejects_non_increasing_seq():
    bus = FrameBus()
    bus.publish(frame(3))
    with pytest.raises(ValueError):
        bus.publish(frame(3))
    with pytest.raises(ValueError):
        bus.publish(frame(1))


def test_subscriber_skips_to_newest_and_never_repeats():
    bus = FrameBus()
    sub = bus.subscribe()
    bus.publish(frame(0))
    assert sub.next().seq == 0
    for s in (1, 2, 3):
        bus.publish(frame(s))
    assert sub.next().seq == 3  # 1 and 2 were skipped, not queued
    assert sub.next(timeout=0.05) is None  # nothing newer yet


def test_late_subscriber_starts_at_latest():
    bus = FrameBus()
    bus.publish(frame(7))
    assert bus.subscribe().next().seq == 7
    assert bus.latest().seq == 7


def test_close_wakes_and_raises():
    bus = FrameBus()
    bus.publish(frame(0))
    sub = bus.subscribe()
    assert sub.next().seq == 0
    bus.close()
    with pytest.raises(BusClosed):
        sub.next(timeout=1.0)
    with pytest.raises(BusClosed):
        bus.publish(frame(1))


def test_close_lets_subscriber_drain_last_frame():
    bus = FrameBus()
    bus.publish(frame(5))
    bus.close()
    sub = bus.subscribe()
    assert sub.next().seq == 5  # still delivered once
    with pytest.raises(BusClosed):
        sub.next()


def test_concurrent_consumers_see_monotonic_seq():
    bus = FrameBus()
    seen = {0: [], 1: []}
    errors = []

    def consume(idx):
        sub = bus.subscribe()
        try:
            while True:
                f = sub.next(timeout=2.0)
                if f is None:
                    errors.append("timed out")
                    return
                seen[idx].append(f.seq)
        except BusClosed:
            return

    threads = [threading.Thread(target=consume, args=(i,)) for i in (0, 1)]
    for t in threads:
        t.start()
    for s in range(60):
        bus.publish(frame(s))
        time.sleep(0.001)
    bus.close()
    for t in threads:
        t.join(timeout=5.0)

    assert not errors
    for idx in (0, 1):
        seqs = seen[idx]
        assert seqs, "consumer saw nothing"
        assert all(b > a for a, b in zip(seqs, seqs[1:]))
        assert len(set(seqs)) == len(seqs)
