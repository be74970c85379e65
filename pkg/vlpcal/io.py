import csv
import os
import re
from collections import OrderedDict
from collections.abc import Mapping
from os.path import join


def makedirs(directory):
    """If directory does not exist, make it.

    Args:
        directory (str): a path to a directory. Cannot be the empty path.
    """
    if directory != '' and not os.path.exists(directory):
        os.makedirs(directory)


def fmt_float(x):
    """Shortest text that parses back to the same float."""
    return repr(float(x))


def write_csv(path, header, rows):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def read_csv(path, expected_header=None):
    """Read a CSV file with a header row.

    Yields:
        (row_number, dict): row numbers are 1-based file lines, so the first data row is 2
    """
    with open(path, 'r', newline='') as f:
        reader = csv.reader(f)
        header = None
        for i, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            row = [cell.strip() for cell in row]
            if header is None:
                header = row
                if expected_header is not None and header != list(expected_header):
                    raise ValueError('row {}: expected header {}, got {}'.format(
                        i, ','.join(expected_header), ','.join(header)))
                continue
            if len(row) != len(header):
                raise ValueError('row {}: expected {} fields, got {}'.format(i, len(header), len(row)))
            yield i, OrderedDict(zip(header, row))


class IntegerDirectories(Mapping):
    """Numbered run directories, `<n>` or `<n>_<name>`, under one root and keyed by n."""
    NAME = re.compile(r'^(\d+)(?:_.*)?$')

    def __init__(self, root_dir):
        self.root_dir = root_dir
        makedirs(root_dir)

    def _scan(self):
        found = {}
        for entry in os.scandir(self.root_dir):
            m = self.NAME.match(entry.name)
            if not entry.is_dir() or m is None:
                continue
            i = int(m.group(1))
            if i in found:
                raise IOError('Two run directories numbered {}: {} and {}'.format(i, found[i], entry.path))
            found[i] = entry.path
        return OrderedDict(sorted(found.items()))

    def __getitem__(self, i):
        runs = self._scan()
        if i not in runs:
            raise KeyError('Run #{} not found'.format(i))
        return runs[i]

    def __iter__(self):
        return iter(self._scan())

    def __len__(self):
        return len(self._scan())

    def new_dir(self, name=None):
        """Create the next numbered directory and return its path."""
        runs = self._scan()
        idx = max(runs) + 1 if runs else 0
        path = join(self.root_dir, '{}_{}'.format(idx, name) if name else str(idx))
        makedirs(path)
        return path


class Workspace(object):
    """Manage paths underneath a top-level root directory.

    Paths are registered with this Workspace. An IOError is thrown if the path has already been registered before.
    The root is only created on the first call to `create`, so a workspace can be declared before
    a run is validated.
    """
    def __init__(self, root):
        self._root = root
        self._paths = set()
        self._dirs = []

    @property
    def root(self):
        return self._root

    def _add(self, name, relative_path):
        full_path = join(self._root, relative_path)
        if hasattr(self, name):
            raise IOError('Name already registered: {}'.format(name))
        if full_path in self._paths:
            raise IOError('Path already registered: {}'.format(relative_path))
        self._paths.add(full_path)
        setattr(self, name, full_path)

    def add_dir(self, name, relative_path):
        self._add(name, relative_path)
        self._dirs.append(getattr(self, name))

    def add_file(self, name, relative_path):
        self._add(name, relative_path)

    def create(self):
        makedirs(self._root)
        for d in self._dirs:
            makedirs(d)
        return self
