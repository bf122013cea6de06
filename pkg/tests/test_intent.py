import itertools
import time

import numpy as np
import pytest

from emgteleop import intent
from emgteleop.intent import (
    ArmPipeline,
    CommandEmitter,
    GestureCommand,
    HoldTracker,
    ModeMachine,
    UdpCommandReceiver,
    UdpCommandSender,
    VoteBuffer,
    ema_update,
    gate,
    map_action,
    speed_tier,
)

LABELS = ("rest", "wrist_forward", "wrist_back")


def test_ema_fixed_point():
    p = np.array([0.2, 0.5, 0.3])
    np.testing.assert_allclose(ema_update(p, p), p)


def test_ema_one_hot_symmetry():
    a = np.array([1.0, 0.0])
    b = np.array([0.0, 1.0])
    np.testing.assert_allclose(ema_update(a, b), [0.5, 0.5])


def test_ema_geometric_convergence():
    rng = np.random.default_rng(0)
    prev = rng.dirichlet(np.ones(5))
    p = rng.dirichlet(np.ones(5))
    est = prev
    for k in range(1, 12):
        est = ema_update(est, p)
        assert np.max(np.abs(est - p)) <= 2.0 ** (-k) + 1e-12


def test_ema_preserves_sum():
    rng = np.random.default_rng(1)
    prev = rng.dirichlet(np.ones(4))
    raw = rng.dirichlet(np.ones(4))
    out = ema_update(prev, raw)
    assert abs(out.sum() - 1.0) <= 1e-12
    assert np.all(out >= 0)


def test_gate_threshold():
    assert gate(np.array([0.8, 0.1, 0.1]), LABELS) == "rest"  # class 0 is rest here
    assert gate(np.array([0.1, 0.8, 0.1]), LABELS) == "wrist_forward"
    assert gate(np.array([0.6, 0.3, 0.1]), LABELS) == "rest"
    assert gate(np.array([0.3, 0.6, 0.1]), LABELS) == "rest"  # below 0.75
    assert gate(np.array([0.25, 0.75, 0.0]), LABELS) == "wrist_forward"  # boundary


def test_vote_quorum():
    vb = VoteBuffer()
    for _ in range(11):
        vb.push("A")
    assert vb.vote() == "A"
    vb = VoteBuffer()
    for lbl in ["A"] * 6 + ["B"] * 5:
        vb.push(lbl)
    assert vb.vote() == "A"
    vb = VoteBuffer()
    for lbl in ["A"] * 5 + ["B"] * 5 + ["C"]:
        vb.push(lbl)
    assert vb.vote() is None


def test_vote_requires_full_buffer():
    vb = VoteBuffer()
    for _ in range(10):
        assert vb.push("A") is None
    assert vb.push("A") == "A"


def test_vote_exhaustive_3_labels():
    # every possible 11-slot buffer over 3 labels, against the counting rule
    t0 = time.perf_counter()
    labels = ("R", "A", "B")
    vb = VoteBuffer()
    for combo in itertools.product(range(3), repeat=11):
        vb._ring.clear()
        vb._ring.extend(labels[i] for i in combo)
        expect = None
        for li, lbl in enumerate(labels):
            if combo.count(li) >= 6:
                expect = lbl
                break  # counts sum to 11, so at most one label can reach 6
        assert vb.vote() == expect
    assert time.perf_counter() - t0 < 1.0


def test_dwell_from_rest_is_240ms():
    pipe = ArmPipeline(LABELS)
    first = None
    for k in range(1, 12):
        out = pipe.push_label("wrist_forward")
        if out != "rest" and first is None:
            first = 40 * k
    assert first == 240


def test_non_rest_output_always_has_quorum():
    pipe = ArmPipeline(LABELS)
    rng = np.random.default_rng(3)
    for _ in range(500):
        lbl = LABELS[rng.integers(len(LABELS))]
        out = pipe.push_label(lbl)
        if out != "rest":
            assert list(pipe._votes._ring).count(out) >= 6


def test_alternating_label_quorum_boundary():
    # A,rest,A,rest,... from a rest-warm buffer: A first has 6-of-11 support
    # exactly at the 11th push (440 ms), never before
    pipe = ArmPipeline(LABELS)
    outs = []
    for k in range(11):
        outs.append(pipe.push_label("wrist_forward" if k % 2 == 0 else "rest"))
    assert outs[:10] == ["rest"] * 10
    assert outs[10] == "wrist_forward"


def test_constant_rest_never_emits():
    pipe = ArmPipeline(LABELS)
    for _ in range(30):
        assert pipe.push_label("rest") == "rest"


def test_pipeline_probs_path_gates_at_075():
    pipe = ArmPipeline(LABELS)
    hot = np.array([0.0, 1.0, 0.0])
    for _ in range(20):
        out = pipe.push_probs(hot)
    assert out == "wrist_forward"
    pipe.reset()
    lukewarm = np.array([0.3, 0.7, 0.0])  # EMA converges to 0.7 < 0.75
    for _ in range(20):
        out = pipe.push_probs(lukewarm)
    assert out == "rest"


def step_n(mm, t0, n, left, right, dt=0.04):
    changed = 0
    for i in range(n):
        changed += mm.step(t0 + i * dt, left, right)
    return changed, t0 + n * dt


def test_mode_dual_wristback_cycles_once():
    mm = ModeMachine()
    assert mm.mode == "ArmDrive"
    # 0.25 s of dual wrist-back in 40 ms steps
    changed, t = step_n(mm, 0.0, 7, "wrist_back", "wrist_back")
    assert changed == 1
    assert mm.mode == "ArmGripper"
    # holding a full second longer: no second advance
    changed, t = step_n(mm, t, 25, "wrist_back", "wrist_back")
    assert changed == 0
    # release, then hold again: advances again
    changed, t = step_n(mm, t, 2, "rest", "rest")
    changed, t = step_n(mm, t, 7, "wrist_back", "wrist_back")
    assert mm.mode == "Wrist"


def test_mode_single_arm_no_change():
    mm = ModeMachine()
    changed, _ = step_n(mm, 0.0, 30, "wrist_back", "rest")
    assert changed == 0
    assert mm.mode == "ArmDrive"


def test_mode_voice_event():
    mm = ModeMachine()
    assert mm.step(0.0, "rest", "rest", next_mode_event=True)
    assert mm.mode == "ArmGripper"


def test_mode_cycle_closure():
    mm = ModeMachine()
    start = mm.mode
    for _ in range(3):
        mm.advance()
    assert mm.mode == start


def test_map_action_default_table():
    assert map_action("ArmDrive", "wrist_forward", "rest").actions == ("base_forward",)
    assert map_action("ArmDrive", "rest", "rest").actions == ()
    assert map_action("ArmGripper", "wrist_supination", "rest").actions == ("arm_extend",)
    both = map_action("ArmGripper", "wrist_forward", "wrist_supination")
    assert set(both.actions) == {"lift_up", "gripper_close"}


def test_map_action_unknown_label_warns():
    out = map_action("ArmDrive", "jazz_hands", "rest")
    assert out.actions == ()
    assert "jazz_hands" in out.warnings[0]


def test_map_action_respects_custom_table():
    table = {"ArmDrive": {("left", "wrist_forward"): "lift_up"}}
    assert map_action("ArmDrive", "wrist_forward", "rest", table=table).actions == \
        ("lift_up",)


def test_speed_tier():
    assert speed_tier("base_forward", 2.0) == 1
    assert speed_tier("base_forward", 3.0) == 1  # boundary: three seconds or less
    assert speed_tier("base_forward", 4.0) == 2
    assert speed_tier("base_turn_left", 4.0) == 4
    assert speed_tier("arm_extend", 5.0) == 2
    assert speed_tier("wrist_roll_left", 3.1) == 2


def test_hold_tracker_resets_on_interruption():
    ht = HoldTracker()
    assert ht.update(0.0, ["base_forward"]) == {"base_forward": 0.0}
    assert ht.update(2.0, ["base_forward"]) == {"base_forward": 2.0}
    ht.update(2.1, [])  # released
    assert ht.update(2.2, ["base_forward"]) == {"base_forward": 0.0}


def test_emitter_10hz_count_and_seq():
    em = CommandEmitter()
    cmds = []
    for t_ms in range(0, 5000, 100):
        em.note_window(t_ms)
        cmds.append(em.tick(t_ms, "ArmDrive", "rest", "rest", 1))
    assert 49 <= len(cmds) <= 51
    seqs = [c.seq for c in cmds]
    assert all(b > a for a, b in zip(seqs, seqs[1:]))


def test_emitter_staleness():
    em = CommandEmitter()
    em.note_window(0)
    fresh = em.tick(400, "ArmDrive", "wrist_forward", "rest", 2)
    assert not fresh.stale and fresh.left == "wrist_forward"
    stale = em.tick(600, "ArmDrive", "wrist_forward", "rest", 2)
    assert stale.stale
    assert stale.left == "rest" and stale.right == "rest"
    em.note_window(650)
    again = em.tick(700, "ArmDrive", "wrist_forward", "rest", 2)
    assert not again.stale


def test_command_datagram_round_trip():
    cmd = GestureCommand(7, 1234, "Wrist", "wrist_forward", "rest", 2, stale=False)
    blob = cmd.encode()
    assert len(blob) <= 512
    assert GestureCommand.decode(blob) == cmd


def test_udp_command_link():
    rx = UdpCommandReceiver("127.0.0.1:0")
    tx = UdpCommandSender(f"127.0.0.1:{rx.port}")
    cmd = GestureCommand(1, 100, "ArmDrive", "wrist_forward", "rest", 1)
    tx.send(cmd)
    assert rx.recv() == cmd
    tx.close()
    rx.close()
