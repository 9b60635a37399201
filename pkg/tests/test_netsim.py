import pytest

from holoproxy.errors import Timeout
from holoproxy.netsim import NetworkProfile, VirtualNetwork


def shaped(profile, seed, n=200):
    net = VirtualNetwork(profile, seed=seed)
    log = []
    for i in range(n):
        net.send("a->b", i, lambda item, sent_at: log.append((item, net.now, sent_at)))
    net.run()
    return net, log


class TestProfiles:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            NetworkProfile(latency_ms=(5, 1))
        with pytest.raises(ValueError):
            NetworkProfile(dup_prob=1.5)


class TestFifoAndDup:
    def test_zero_profile_delivers_in_order_instantly(self):
        net, log = shaped(NetworkProfile(), seed=1)
        assert [item for item, _, _ in log] == list(range(200))
        assert net.frames_duplicated == 0

    def test_per_link_fifo_under_reorder(self):
        profile = NetworkProfile(
            latency_ms=(1, 30), reorder_prob=0.5, reorder_window_ms=50, dup_prob=0.0
        )
        _, log = shaped(profile, seed=7)
        firsts = []
        seen = set()
        for item, _, _ in log:
            if item not in seen:
                seen.add(item)
                firsts.append(item)
        assert firsts == sorted(firsts)  # originals never overtake on one link

    def test_cross_link_interleaving_varies(self):
        profile = NetworkProfile(latency_ms=(1, 30), reorder_prob=0.5, reorder_window_ms=60)
        net = VirtualNetwork(profile, seed=3)
        log = []
        for i in range(50):
            net.send("a->s", ("a", i), lambda item, _: log.append(item))
            net.send("b->s", ("b", i), lambda item, _: log.append(item))
        net.run()
        # Both links stay internally ordered but the merge is shuffled.
        a_items = [i for src, i in log if src == "a"]
        b_items = [i for src, i in log if src == "b"]
        assert a_items == sorted(a_items) and b_items == sorted(b_items)
        merged_sources = [src for src, _ in log]
        assert merged_sources != ["a", "b"] * 50

    def test_duplicates_trail_their_original(self):
        profile = NetworkProfile(latency_ms=(0, 5), dup_prob=1.0, reorder_window_ms=10)
        net, log = shaped(profile, seed=5, n=50)
        assert net.frames_duplicated == 50
        assert len(log) == 100
        first_seen = {}
        for pos, (item, _, _) in enumerate(log):
            first_seen.setdefault(item, pos)
        # Every duplicate appears after its original's first delivery.
        for item, pos in first_seen.items():
            later = [p for p, (it, _, _) in enumerate(log) if it == item]
            assert later[0] == pos and len(later) == 2

    def test_latency_recorded_from_send_time(self):
        profile = NetworkProfile(latency_ms=(10, 10))
        net = VirtualNetwork(profile, seed=2)
        samples = []
        net.at(5.0, lambda: net.send("l", "x", lambda item, sent: samples.append(net.now - sent)))
        net.run()
        assert samples == [pytest.approx(10.0)]


class TestDeterminism:
    def test_same_seed_same_trace(self):
        profile = NetworkProfile(
            latency_ms=(1, 40), reorder_prob=0.3, reorder_window_ms=80, dup_prob=0.2
        )
        _, log_a = shaped(profile, seed=42)
        _, log_b = shaped(profile, seed=42)
        assert log_a == log_b

    def test_different_seed_different_trace(self):
        profile = NetworkProfile(
            latency_ms=(1, 40), reorder_prob=0.3, reorder_window_ms=80, dup_prob=0.2
        )
        _, log_a = shaped(profile, seed=42)
        _, log_b = shaped(profile, seed=43)
        assert log_a != log_b


class TestRunGuard:
    def test_runaway_event_loop_times_out(self):
        net = VirtualNetwork(NetworkProfile(), seed=0, max_events=100)

        def reschedule():
            net.after(1.0, reschedule)

        net.after(0.0, reschedule)
        with pytest.raises(Timeout):
            net.run()
