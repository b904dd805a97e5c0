"""Classical item analysis over a binary response matrix: per-item P value
(proportion correct) and the upper/lower-group discrimination index."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from ..errors import TooFewParticipants, UnknownItem


@dataclass
class ResponseMatrix:
    """Complete participants x items matrix of 0/1 scores."""

    participants: list[str]
    items: list[str]
    rows: list[list[int]]

    def __post_init__(self):
        if len(self.participants) < 2:
            raise ValueError("need at least 2 participants")
        if not self.items:
            raise ValueError("need at least 1 item")
        if len(set(self.participants)) != len(self.participants):
            raise ValueError("participant ids must be unique")
        if len(set(self.items)) != len(self.items):
            raise ValueError("item ids must be unique")
        if len(self.rows) != len(self.participants):
            raise ValueError("one row per participant required")
        for pid, row in zip(self.participants, self.rows):
            if len(row) != len(self.items):
                raise ValueError(f"row for {pid!r} has {len(row)} cells, "
                                 f"expected {len(self.items)}")
            if any(cell not in (0, 1) for cell in row):
                raise ValueError(f"row for {pid!r} contains non-binary cells")

    def item_index(self, item: str) -> int:
        try:
            return self.items.index(item)
        except ValueError:
            raise UnknownItem(f"no item {item!r} in matrix") from None

    def column(self, item: str) -> list[int]:
        idx = self.item_index(item)
        return [row[idx] for row in self.rows]

    def total_scores(self) -> dict[str, int]:
        return {pid: sum(row) for pid, row in zip(self.participants, self.rows)}

    @classmethod
    def from_csv(cls, text: str) -> "ResponseMatrix":
        """Parse the response CSV: header ``participant,<item ids...>``,
        then one 0/1 row per participant."""
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty response CSV") from None
        if not header or header[0].strip() != "participant":
            raise ValueError("first CSV column must be 'participant'")
        items = [h.strip() for h in header[1:]]
        participants: list[str] = []
        rows: list[list[int]] = []
        for line_no, record in enumerate(reader, start=2):
            if not record or not any(cell.strip() for cell in record):
                continue
            participants.append(record[0].strip())
            try:
                rows.append([int(cell) for cell in record[1:]])
            except ValueError:
                raise ValueError(f"non-integer cell on line {line_no}") from None
        return cls(participants, items, rows)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["participant", *self.items])
        for pid, row in zip(self.participants, self.rows):
            writer.writerow([pid, *row])
        return out.getvalue()


def item_p_value(matrix: ResponseMatrix, item: str) -> float:
    """Proportion of participants answering the item correctly."""
    column = matrix.column(item)
    return sum(column) / len(column)


def item_discrimination(matrix: ResponseMatrix, item: str,
                        fraction: float = 0.25) -> float:
    """Correct-proportion difference between the top and bottom score
    groups.

    Participants are ranked once by (total score desc, participant id asc);
    ceil(fraction * n) are taken from each end of that ranking.
    """
    if not 0 < fraction <= 0.5:
        raise ValueError(f"fraction must be in (0, 0.5], got {fraction}")
    n = len(matrix.participants)
    if n < 4:
        raise TooFewParticipants(f"discrimination needs >= 4 participants, got {n}")
    idx = matrix.item_index(item)
    totals = matrix.total_scores()
    ranked = sorted(matrix.participants, key=lambda pid: (-totals[pid], pid))
    k = math.ceil(fraction * n)
    by_id = dict(zip(matrix.participants, matrix.rows))
    top = [by_id[pid][idx] for pid in ranked[:k]]
    bottom = [by_id[pid][idx] for pid in ranked[-k:]]
    return sum(top) / k - sum(bottom) / k
