# spiralloc/world/grid.py
"""Plain-text occupancy grid maps.

Format: first line ``cols rows cell_size``, then ``rows`` lines of exactly
``cols`` characters, ``.`` free and ``#`` occupied. Row 0 is the first body
line and covers y in [0, cell_size).
"""
import importlib.resources
from dataclasses import dataclass
from pathlib import Path

from spiralloc.errors import ConfigurationError, GridParseError
from spiralloc.logging_config import get_logger
from spiralloc.world.geometry import Field, Rectangle

logger = get_logger("world.grid")

BUILTIN_PREFIX = "builtin:"
_CELL_CHARS = {".": False, "#": True}


@dataclass(frozen=True)
class OccupancyGrid:
    cols: int
    rows: int
    cell_size: float
    cells: tuple

    def __post_init__(self):
        if self.cols * self.rows != len(self.cells):
            raise GridParseError(1, f"{self.cols}x{self.rows} grid needs {self.cols * self.rows} cells, got {len(self.cells)}")
        if self.cell_size <= 0:
            raise GridParseError(1, "cell_size must be > 0")

    def is_occupied(self, col, row):
        return self.cells[row * self.cols + col]

    @property
    def field(self):
        return Field(self.cols * self.cell_size, self.rows * self.cell_size)

    def occupied_rectangles(self):
        """
        Merge occupied cells into axis-aligned rectangles.

        Horizontal runs are found per row, then runs with identical column
        spans in consecutive rows are stacked into one rectangle.

        Returns:
            List of (row0, col0, row1, col1) inclusive cell spans, in row-major order of their first cell
        """
        open_spans = {}
        finished = []
        for row in range(self.rows):
            runs = []
            col = 0
            while col < self.cols:
                if self.is_occupied(col, row):
                    start = col
                    while col + 1 < self.cols and self.is_occupied(col + 1, row):
                        col += 1
                    runs.append((start, col))
                col += 1
            next_open = {}
            for run in runs:
                row0 = open_spans.pop(run, row)
                next_open[run] = row0
            for (c0, c1), row0 in open_spans.items():
                finished.append((row0, c0, row - 1, c1))
            open_spans = next_open
        for (c0, c1), row0 in open_spans.items():
            finished.append((row0, c0, self.rows - 1, c1))
        finished.sort()
        return finished

    def to_rectangles(self):
        size = self.cell_size
        return [
            Rectangle((c0 * size, r0 * size), ((c1 + 1) * size, (r1 + 1) * size))
            for r0, c0, r1, c1 in self.occupied_rectangles()
        ]


def load_grid_map(text):
    """
    Parse grid-map text into an OccupancyGrid.

    Args:
        text: Map file content

    Returns:
        OccupancyGrid

    Raises:
        GridParseError: malformed header, ragged rows, illegal characters or wrong row count
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise GridParseError(1, "empty map")

    header = lines[0].split()
    if len(header) != 3:
        raise GridParseError(1, f"header must be 'cols rows cell_size', got '{lines[0]}'")
    try:
        cols, rows, cell_size = int(header[0]), int(header[1]), float(header[2])
    except ValueError as e:
        raise GridParseError(1, f"header must be 'cols rows cell_size', got '{lines[0]}'") from e
    if cols < 1 or rows < 1 or not cell_size > 0:
        raise GridParseError(1, "cols and rows must be >= 1 and cell_size > 0")

    body = lines[1:]
    cells = []
    for offset, line in enumerate(body):
        line_number = offset + 2
        if offset >= rows:
            raise GridParseError(line_number, f"expected {rows} rows, found extra content")
        for char in line:
            if char not in _CELL_CHARS:
                raise GridParseError(line_number, f"illegal character '{char}'")
        if len(line) != cols:
            raise GridParseError(line_number, f"row has {len(line)} cells, expected {cols}")
        cells.extend(_CELL_CHARS[char] for char in line)
    if len(body) < rows:
        raise GridParseError(len(body) + 2, f"expected {rows} rows, got {len(body)}")

    return OccupancyGrid(cols, rows, cell_size, tuple(cells))


def read_map_source(map_path):
    """Read map text from a file path or a ``builtin:<name>`` shipped map."""
    if map_path.startswith(BUILTIN_PREFIX):
        name = map_path[len(BUILTIN_PREFIX):]
        try:
            return importlib.resources.read_text("spiralloc.resources.maps", f"{name}.map")
        except FileNotFoundError as e:
            raise ConfigurationError(f"unknown builtin map '{name}'") from e
    try:
        return Path(map_path).read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise ConfigurationError(f"map file not found: {map_path}") from e
