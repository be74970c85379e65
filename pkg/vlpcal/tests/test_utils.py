import os
import threading
import time

import numpy as np
import pytest

from vlpcal.errors import ConfigValidationError
from vlpcal.io import IntegerDirectories, Workspace, fmt_float, read_csv, write_csv
from vlpcal.utils import Config, OrderedExecutor, TrialFailure, trial_rng


class TestConfig(object):
    @pytest.fixture
    def config(self):
        return Config.from_str('scene { room_mm = [1, 2, 3], intrinsics { focal_length_mm = 3 } }\nname = "x"\n')

    def test_attributes(self, config):
        assert config.scene.room_mm == [1, 2, 3]
        assert config.scene.intrinsics.focal_length_mm == 3
        assert config.name == 'x'

    def test_missing_key_names_path(self, config):
        with pytest.raises(ConfigValidationError) as excinfo:
            config.scene.intrinsics.pixel_pitch_mm
        assert excinfo.value.key == 'scene.intrinsics.pixel_pitch_mm'

    def test_require(self, config):
        assert config.require('scene.intrinsics.focal_length_mm') == 3
        with pytest.raises(ConfigValidationError) as excinfo:
            config.scene.require('anchors')
        assert excinfo.value.key == 'scene.anchors'

    def test_key(self, config):
        assert config.scene.intrinsics.key('resolution') == 'scene.intrinsics.resolution'

    def test_merge(self, config):
        merged = Config.merge(config, Config.from_str('scene.intrinsics.focal_length_mm = 4'))
        assert merged.scene.intrinsics.focal_length_mm == 4
        assert merged.scene.room_mm == [1, 2, 3]

    def test_round_trip(self, config, tmpdir):
        path = str(tmpdir.join('config.txt'))
        config.to_file(path)
        loaded = Config.from_file(path)
        assert loaded.to_json() == config.to_json()
        assert loaded.digest() == config.digest()

    def test_digest_changes(self, config):
        before = config.digest()
        config.put('scene.intrinsics.focal_length_mm', 5)
        assert config.digest() != before


class TestTrialRng(object):
    def test_deterministic(self):
        assert trial_rng(1, 2, 3).normal() == trial_rng(1, 2, 3).normal()

    def test_streams_differ(self):
        draws = {trial_rng(1, s, i).normal() for s in range(3) for i in range(3)}
        assert len(draws) == 9

    def test_large_seed(self):
        assert np.isfinite(trial_rng(2 ** 64 - 1, 0, 0).normal())


class TestOrderedExecutor(object):
    def test_order(self):
        def slow_square(x):
            time.sleep(0.001 * (10 - x))
            return x * x

        items = list(enumerate(range(10)))
        assert OrderedExecutor(slow_square, 4).map(items) == [x * x for x in range(10)]
        assert OrderedExecutor(slow_square, 1).map(items) == [x * x for x in range(10)]

    def test_uses_threads(self):
        seen = set()

        def record(x):
            seen.add(threading.current_thread().name)
            time.sleep(0.01)
            return x

        OrderedExecutor(record, 4).map(enumerate(range(16)))
        assert len(seen) > 1


def test_trial_failure():
    try:
        raise ValueError('bad frame')
    except ValueError as e:
        failure = TrialFailure(e)
    assert failure.error_name == 'ValueError'
    assert failure.message == 'bad frame'
    assert 'bad frame' in failure.traceback
    assert failure == TrialFailure(ValueError('bad frame'))


class TestCsv(object):
    def test_round_trip(self, tmpdir):
        path = str(tmpdir.join('t.csv'))
        write_csv(path, ('a', 'b'), [(1, fmt_float(0.1)), (2, fmt_float(1e-17))])
        rows = list(read_csv(path, ('a', 'b')))
        assert [n for n, _ in rows] == [2, 3]
        assert float(rows[0][1]['b']) == 0.1
        assert float(rows[1][1]['b']) == 1e-17

    def test_wrong_header(self, tmpdir):
        path = str(tmpdir.join('t.csv'))
        write_csv(path, ('a', 'c'), [])
        with pytest.raises(ValueError):
            list(read_csv(path, ('a', 'b')))

    def test_blank_lines_skipped(self, tmpdir):
        path = tmpdir.join('t.csv')
        path.write('a,b\n\n1,2\n')
        assert [n for n, _ in read_csv(str(path))] == [3]


class TestDirectories(object):
    def test_integer_directories(self, tmpdir):
        dirs = IntegerDirectories(str(tmpdir))
        first = dirs.new_dir('simulate')
        second = dirs.new_dir()
        assert os.path.basename(first) == '0_simulate'
        assert os.path.basename(second) == '1'
        assert list(dirs) == [0, 1]
        assert dirs[1] == second
        with pytest.raises(KeyError):
            dirs[5]

    def test_workspace_is_lazy(self, tmpdir):
        root = str(tmpdir.join('run'))
        ws = Workspace(root)
        ws.add_file('config', 'config.txt')
        ws.add_dir('frames', 'frames')
        assert ws.config == os.path.join(root, 'config.txt')
        assert not os.path.exists(root)
        ws.create()
        assert os.path.isdir(ws.frames)

    def test_workspace_duplicate(self, tmpdir):
        ws = Workspace(str(tmpdir))
        ws.add_file('config', 'config.txt')
        with pytest.raises(IOError):
            ws.add_file('other', 'config.txt')
