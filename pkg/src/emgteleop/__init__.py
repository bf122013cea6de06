"""Bimanual high-density EMG teleoperation stack.

Synthetic or recorded 256-channel EMG streams drive a simulated mobile
manipulator through a gesture classifier, a temporal intent filter, and
three shared-autonomy control laws. Everything is deterministic under a
fixed seed so sessions can be logged, replayed, and verified bit for bit.
"""

__version__ = "0.1.0"
