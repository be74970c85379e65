"""The UID -> world coordinate table of ceiling luminaires."""
import math
from collections import OrderedDict
from collections.abc import Mapping

from vlpcal.errors import AnchorFileError, UnknownUid
from vlpcal.geometry import WorldPoint
from vlpcal.io import fmt_float, read_csv, write_csv

ANCHOR_HEADER = ('uid', 'x_mm', 'y_mm', 'z_mm')


class AnchorTable(Mapping):
    """Surveyed LED positions keyed by UID.

    Args:
        entries (list[(str, WorldPoint)]): in file order; uids must be unique
        ceiling_tolerance_mm (float): how far the z-values of LEDs seen together may disagree
    """
    def __init__(self, entries, ceiling_tolerance_mm=1.0):
        self._entries = OrderedDict()
        for uid, point in entries:
            if uid in self._entries:
                raise ValueError('Duplicate LED uid: {}'.format(uid))
            self._entries[uid] = WorldPoint(*[float(c) for c in point])
        plan = {}
        for uid, p in self._entries.items():
            if p.plan in plan:
                raise ValueError('LEDs {} and {} share plan position {}'.format(plan[p.plan], uid, p.plan))
            plan[p.plan] = uid
        self._ceiling_tolerance_mm = float(ceiling_tolerance_mm)

    @property
    def ceiling_tolerance_mm(self):
        return self._ceiling_tolerance_mm

    def __getitem__(self, uid):
        return self._entries[uid]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        return 'AnchorTable({})'.format(', '.join('{}={}'.format(k, tuple(v)) for k, v in self._entries.items()))

    def resolve(self, uid):
        try:
            return self._entries[uid]
        except KeyError:
            raise UnknownUid(uid)

    def with_positions(self, positions):
        """Same uids and tolerance, new coordinates.

        Args:
            positions (dict[str, WorldPoint])
        """
        return AnchorTable([(uid, positions[uid]) for uid in self], self._ceiling_tolerance_mm)

    @property
    def ceiling_z(self):
        return max(p.z for p in self._entries.values())


def load_anchor_table(path, ceiling_tolerance_mm=1.0):
    """Parse a `uid,x_mm,y_mm,z_mm` file.

    Raises:
        AnchorFileError: naming the offending row
    """
    entries = []
    seen = {}
    try:
        for row_num, row in read_csv(path, ANCHOR_HEADER):
            uid = row['uid']
            if not uid:
                raise AnchorFileError(path, row_num, 'empty uid')
            if uid in seen:
                raise AnchorFileError(path, row_num, 'duplicate uid {} (first seen on row {})'.format(
                    uid, seen[uid]))
            seen[uid] = row_num
            try:
                coords = [float(row[k]) for k in ANCHOR_HEADER[1:]]
            except ValueError as e:
                raise AnchorFileError(path, row_num, str(e))
            if not all(math.isfinite(c) for c in coords):
                raise AnchorFileError(path, row_num, 'non-finite coordinate')
            entries.append((uid, WorldPoint(*coords)))
    except ValueError as e:
        raise AnchorFileError(path, None, str(e))
    if len(entries) < 2:
        raise AnchorFileError(path, None, 'a usable table needs at least 2 LEDs, found {}'.format(len(entries)))
    try:
        return AnchorTable(entries, ceiling_tolerance_mm)
    except ValueError as e:
        raise AnchorFileError(path, None, str(e))


def save_anchor_table(table, path):
    rows = [(uid, fmt_float(p.x), fmt_float(p.y), fmt_float(p.z)) for uid, p in table.items()]
    write_csv(path, ANCHOR_HEADER, rows)
