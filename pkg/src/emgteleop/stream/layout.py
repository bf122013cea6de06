"""Electrode grid geometry for the bimanual sleeves.

Each forearm sleeve carries 128 electrodes in an 8 x 16 grid. Channel
indices within an arm run row-major over the grid; the wire order is all
128 left-arm channels followed by all 128 right-arm channels.
"""

from dataclasses import dataclass, field

LEFT = "left"
RIGHT = "right"
ARMS = (LEFT, RIGHT)

GRID_ROWS = 8
GRID_COLS = 16
CHANNELS_PER_ARM = GRID_ROWS * GRID_COLS  # 128
N_CHANNELS = 2 * CHANNELS_PER_ARM  # 256


def _row_major_table() -> list[tuple[int, int]]:
    return [(ch // GRID_COLS, ch % GRID_COLS) for ch in range(CHANNELS_PER_ARM)]


@dataclass(frozen=True)
class SleeveLayout:
    """Bijective mapping between per-arm channel indices and grid cells."""

    channel_to_cell: tuple[tuple[int, int], ...] = field(
        default_factory=lambda: tuple(_row_major_table())
    )

    def __post_init__(self):
        cells = set(self.channel_to_cell)
        if len(self.channel_to_cell) != CHANNELS_PER_ARM or len(cells) != CHANNELS_PER_ARM:
            raise ValueError("channel_to_cell must be a bijection onto the 8x16 grid")
        for r, c in cells:
            if not (0 <= r < GRID_ROWS and 0 <= c < GRID_COLS):
                raise ValueError(f"cell ({r},{c}) outside the 8x16 grid")

    def cell_of(self, channel: int) -> tuple[int, int]:
        return self.channel_to_cell[channel]

    def channel_of(self, row: int, col: int) -> int:
        return self._cell_to_channel[(row, col)]

    @property
    def _cell_to_channel(self) -> dict[tuple[int, int], int]:
        # tiny table; rebuilt on demand to keep the dataclass frozen/hashable
        return {cell: ch for ch, cell in enumerate(self.channel_to_cell)}

    def global_channel(self, arm: str, channel: int) -> int:
        """Index of an arm-local channel in the 256-channel wire order."""
        if arm == LEFT:
            return channel
        if arm == RIGHT:
            return CHANNELS_PER_ARM + channel
        raise ValueError(f"unknown arm {arm!r}")

    def arm_slice(self, arm: str) -> slice:
        if arm == LEFT:
            return slice(0, CHANNELS_PER_ARM)
        if arm == RIGHT:
            return slice(CHANNELS_PER_ARM, N_CHANNELS)
        raise ValueError(f"unknown arm {arm!r}")


DEFAULT_LAYOUT = SleeveLayout()
