import json
import os
from io import StringIO

import pytest
from numpy.testing import assert_allclose

from vlpcal.calibration import load_calibration
from vlpcal.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, main
from vlpcal.config import preset_names
from vlpcal.report import FRAMES_DIR, SUMMARY_FILE, TRAJECTORY_FILE, TRIALS_FILE, frame_file_name, read_trials_csv
from vlpcal.utils import Config

SMALL_GRID = '''
experiment.static { rows = 2, cols = 3, reps = 2 }
experiment.dispersion.n = 10
'''

ZERO_ERRORS = '''
error {
    true_center_offset_px = [0, 0]
    anchor_position_noise_mm = 0
    pixel_noise_sigma_px = 0
    constant_plan_shift_mm = [0, 0]
}
'''


class CliRunner(object):
    """Runs `vlpcal` in-process and keeps stdout, stderr and the exit code."""

    def __init__(self, tmpdir, capsys):
        self._tmpdir = tmpdir
        self._capsys = capsys
        self.stdout = ''
        self.stderr = ''

    def config(self, name, text):
        path = self._tmpdir.join(name)
        path.write(text)
        return str(path)

    def path(self, *parts):
        return str(self._tmpdir.join(*parts))

    def __call__(self, *argv):
        out = StringIO()
        code = main(list(argv) + ['--log-level', 'WARNING'], stdout=out)
        self.stdout = out.getvalue()
        self.stderr = self._capsys.readouterr().err
        return code

    @property
    def error(self):
        return json.loads(self.stderr.strip().splitlines()[-1])


@pytest.fixture
def vlpcal(tmpdir, capsys):
    return CliRunner(tmpdir, capsys)


def test_presets(vlpcal):
    assert vlpcal('presets') == EXIT_OK
    assert vlpcal.stdout.split() == preset_names()


def test_unknown_command(vlpcal):
    assert vlpcal('fly') == EXIT_VALIDATION
    assert vlpcal.error['error'] == 'UsageError'


def test_bad_argument(vlpcal):
    assert vlpcal('simulate', '--seed', 'abc') == EXIT_VALIDATION
    assert vlpcal.error['error'] == 'UsageError'


class TestSimulate(object):
    def test_static(self, vlpcal):
        out = vlpcal.path('static')
        code = vlpcal('simulate', '--preset', 'static-grid-two-led', '--config', vlpcal.config('small.txt', SMALL_GRID),
                      '--out', out)
        assert code == EXIT_OK
        assert 'mean (cm)' in vlpcal.stdout
        rows = read_trials_csv(os.path.join(out, TRIALS_FILE))
        assert len(rows) == 12
        for name in ('config.txt', 'metadata.txt', SUMMARY_FILE):
            assert os.path.exists(os.path.join(out, name))
        summary = Config.from_file(os.path.join(out, SUMMARY_FILE))
        assert summary.provenance.seed == 0
        assert summary.summary.n + summary.summary.n_failed == 12

    def test_validation_happens_first(self, vlpcal):
        out = vlpcal.path('never')
        bad = vlpcal.config('bad.txt', 'experiment.static.heights_mm = [-50]')
        assert vlpcal('simulate', '--config', bad, '--out', out) == EXIT_VALIDATION
        assert not os.path.exists(out)
        assert vlpcal.error['error'] == 'ConfigValidationError'
        assert 'experiment.static.heights_mm' in vlpcal.error['message']

    def test_numbered_directory(self, vlpcal, tmpdir, monkeypatch):
        monkeypatch.setenv('VLPCAL_DIR', str(tmpdir.join('data')))
        small = vlpcal.config('small.txt', SMALL_GRID)
        assert vlpcal('simulate', '--config', small) == EXIT_OK
        assert vlpcal('simulate', '--config', small) == EXIT_OK
        experiments = tmpdir.join('data', 'experiments')
        assert sorted(os.listdir(str(experiments))) == ['0_simulate', '1_simulate']
        assert experiments.join('1_simulate', TRIALS_FILE).check()

    def test_dynamic(self, vlpcal):
        out = vlpcal.path('dynamic')
        fast = vlpcal.config('fast.txt', 'experiment.dynamic { speed_mm_s = 350, frame_rate_hz = 2 }')
        assert vlpcal('simulate', '--preset', 'dynamic-x', '--config', fast, '--out', out) == EXIT_OK
        assert os.path.exists(os.path.join(out, TRAJECTORY_FILE))
        summary = Config.from_file(os.path.join(out, SUMMARY_FILE))
        assert summary.trajectory.frames == 5
        assert summary.trajectory.angle_to_command_rad < 0.01

    def test_same_seed_same_bytes(self, vlpcal):
        small = vlpcal.config('small.txt', SMALL_GRID)
        outputs = []
        for name, threads in [('a', '1'), ('b', '1'), ('c', '4')]:
            out = vlpcal.path(name)
            assert vlpcal('simulate', '--preset', 'static-grid-two-led', '--config', small, '--seed', '42',
                          '--threads', threads, '--out', out) == EXIT_OK
            outputs.append([open(os.path.join(out, f)).read() for f in (TRIALS_FILE, 'cdf.csv', SUMMARY_FILE)])
        assert outputs[0] == outputs[1] == outputs[2]

        out = vlpcal.path('d')
        assert vlpcal('simulate', '--preset', 'static-grid-two-led', '--config', small, '--seed', '43',
                      '--out', out) == EXIT_OK
        assert open(os.path.join(out, TRIALS_FILE)).read() != outputs[0][0]

    def test_missing_calibration(self, vlpcal):
        assert vlpcal('simulate', '--calibration', vlpcal.path('nope.txt'), '--out', vlpcal.path('x')) == \
            EXIT_VALIDATION
        assert vlpcal.error['error'] == 'ConfigValidationError'


class TestCalibrate(object):
    def test_rotation(self, vlpcal):
        offset = vlpcal.config('offset.txt', ZERO_ERRORS + 'error.true_center_offset_px = [5, 3]\n')
        calib_path = vlpcal.path('calibration.txt')
        out = vlpcal.path('sweep')
        assert vlpcal('calibrate-rotation', '--preset', 'rotation-sweep', '--config', offset,
                      '--calibration', calib_path, '--out', out) == EXIT_OK
        calib = load_calibration(calib_path)
        assert_allclose(calib.rotation_center, (405., 303.), atol=1e-6)
        assert calib.provenance['rotation_samples'] == 12
        assert os.path.exists(os.path.join(out, 'sweep.csv'))
        assert 'rotation center (u1, v1)' in vlpcal.stdout

    def test_rotation_default_output(self, vlpcal):
        out = vlpcal.path('sweep')
        assert vlpcal('calibrate-rotation', '--preset', 'rotation-sweep', '--out', out) == EXIT_OK
        assert os.path.exists(os.path.join(out, 'calibration.txt'))

    def test_too_few_angles(self, vlpcal):
        bad = vlpcal.config('bad.txt', 'experiment.sweep.yaws_deg = [0, 90]')
        out = vlpcal.path('sweep')
        assert vlpcal('calibrate-rotation', '--config', bad, '--out', out) == EXIT_VALIDATION
        assert not os.path.exists(out)

    def test_no_dispersion_samples(self, vlpcal):
        bad = vlpcal.config('bad.txt', 'experiment.dispersion.n = 0')
        assert vlpcal('calibrate-dispersion', '--config', bad, '--out', vlpcal.path('d')) == EXIT_VALIDATION
        assert 'experiment.dispersion.n' in vlpcal.error['message']

    def test_dispersion_then_simulate(self, vlpcal):
        shifted = vlpcal.config('shift.txt', ZERO_ERRORS + 'error.constant_plan_shift_mm = [7, -4]\n' + SMALL_GRID)
        calib_path = vlpcal.path('calibration.txt')
        assert vlpcal('calibrate-dispersion', '--config', shifted, '--calibration', calib_path,
                      '--out', vlpcal.path('disp')) == EXIT_OK
        assert_allclose(load_calibration(calib_path).dispersion_offset, (7., -4.), atol=1e-9)

        out = vlpcal.path('static')
        assert vlpcal('simulate', '--config', shifted, '--calibration', calib_path, '--out', out) == EXIT_OK
        summary = Config.from_file(os.path.join(out, SUMMARY_FILE))
        assert summary.summary.max_mm < 1e-6

    def test_rotation_then_dispersion_accumulate(self, vlpcal):
        both = vlpcal.config('both.txt', ZERO_ERRORS + 'error.true_center_offset_px = [-6, 4]\n'
                             'error.constant_plan_shift_mm = [3, 3]\n' + SMALL_GRID)
        calib_path = vlpcal.path('calibration.txt')
        assert vlpcal('calibrate-rotation', '--config', both, '--calibration', calib_path,
                      '--out', vlpcal.path('r')) == EXIT_OK
        assert vlpcal('calibrate-dispersion', '--config', both, '--calibration', calib_path,
                      '--out', vlpcal.path('d')) == EXIT_OK
        calib = load_calibration(calib_path)
        assert_allclose(calib.rotation_offset, (-6., 4.), atol=1e-6)
        assert_allclose(calib.dispersion_offset, (3., 3.), atol=1e-6)

    def test_dispersion_mode_switch(self, vlpcal):
        shifted = ZERO_ERRORS + 'error.constant_plan_shift_mm = [7, -4]\n' + SMALL_GRID
        literal = vlpcal.config('literal.txt', shifted + 'experiment.dispersion.mode = pixel_literal\n')
        world = vlpcal.config('world.txt', shifted + 'experiment.dispersion.mode = world_plane\n')
        calib_path = vlpcal.path('calibration.txt')
        assert vlpcal('calibrate-dispersion', '--config', literal, '--calibration', calib_path,
                      '--out', vlpcal.path('lit')) == EXIT_OK
        assert load_calibration(calib_path).dispersion_mode == 'pixel_literal'
        assert vlpcal('calibrate-dispersion', '--config', world, '--calibration', calib_path,
                      '--out', vlpcal.path('wp')) == EXIT_OK
        calib = load_calibration(calib_path)
        assert calib.dispersion_mode == 'world_plane'
        assert_allclose(calib.dispersion_offset, (7., -4.), atol=1e-9)


class TestCompare(object):
    def test_arms(self, vlpcal):
        out = vlpcal.path('compare')
        small = vlpcal.config('small.txt', SMALL_GRID)
        assert vlpcal('compare', '--preset', 'comparison-two-led', '--config', small, '--out', out) == EXIT_OK
        for arm in ('uncalibrated', 'rotation-calibrated', 'dispersion-calibrated'):
            assert os.path.exists(os.path.join(out, arm, TRIALS_FILE))
            assert os.path.exists(os.path.join(out, arm, 'calibration.txt'))
            assert arm in vlpcal.stdout


class TestSolve(object):
    def test_dumped_frames(self, vlpcal):
        out = vlpcal.path('static')
        dump = vlpcal.config('dump.txt', SMALL_GRID + 'experiment.dump_frames = true\n')
        assert vlpcal('simulate', '--preset', 'static-grid-two-led', '--config', dump, '--out', out) == EXIT_OK
        rows = read_trials_csv(os.path.join(out, TRIALS_FILE))
        frames = os.path.join(out, FRAMES_DIR)
        assert os.path.exists(os.path.join(frames, 'truth.csv'))
        for row in [r for r in rows if r['status'] == 'ok'][:3]:
            assert vlpcal('solve', os.path.join(frames, frame_file_name(row['trial'])),
                          '--preset', 'static-grid-two-led') == EXIT_OK
            pose = Config.from_str(vlpcal.stdout)
            assert pose.x_mm == row['est_x']
            assert pose.y_mm == row['est_y']

    def test_table(self, vlpcal):
        frame = vlpcal.config('frame.csv', 'uid,u,v\nL1,476.9230769230769,300\nL2,323.0769230769231,300\n')
        assert vlpcal('solve', frame, '--table') == EXIT_OK
        assert 'X (cm)' in vlpcal.stdout
        assert Config.from_str(vlpcal.stdout.split('+')[0]).z_mm == pytest.approx(300., abs=1e-6)

    def test_one_detection(self, vlpcal):
        frame = vlpcal.config('frame.csv', 'uid,u,v\nL1,476.9,300\n')
        assert vlpcal('solve', frame) == EXIT_RUNTIME
        assert vlpcal.error['error'] == 'TooFewAnchors'

    def test_unknown_uid(self, vlpcal):
        frame = vlpcal.config('frame.csv', 'uid,u,v\nL1,476.9,300\nL8,323.1,300\n')
        assert vlpcal('solve', frame) == EXIT_RUNTIME
        assert vlpcal.error['error'] == 'UnknownUid'
        assert 'L8' in vlpcal.error['message']

    def test_malformed_frame(self, vlpcal):
        frame = vlpcal.config('frame.csv', 'uid,u,v\nL1,476.9,300\nL2,abc,300\n')
        assert vlpcal('solve', frame) == EXIT_VALIDATION
        assert vlpcal.error['error'] == 'FrameFileError'
        assert 'row 3' in vlpcal.error['message']

    def test_three_led_layout(self, vlpcal):
        frame = vlpcal.config('frame.csv', 'uid,u,v\nL1,476.9230769230769,346.15384615384613\n'
                                           'L2,323.0769230769231,346.15384615384613\n'
                                           'L3,400,215.3846153846154\n')
        assert vlpcal('solve', frame, '--anchors', 'three-led') == EXIT_OK
        pose = Config.from_str(vlpcal.stdout)
        assert pose.n_leds_used == 3
        assert pose.method == 'n-led'
        assert pose.x_mm == pytest.approx(0., abs=1e-6)
        assert pose.y_mm == pytest.approx(0., abs=1e-6)
