"""Command-line entry point.

    vlpcal <command> [<args>]

Exit codes: 0 on success, 2 when the config, arguments or an input file are invalid, 1 when
the run itself fails. On failure a one-line JSON object {"error": ..., "message": ...} goes
to stderr. All validation happens before any output directory is created.
"""
import argparse
import json
import logging
import math
import sys

from pyhocon.exceptions import ConfigException
from pyparsing import ParseBaseException

from dependency.data_directory import DataDirectory
from vlpcal.config import RunConfig, load_config, preset_names
from vlpcal.errors import (CalibrationFileError, ConfigValidationError, RowError, UsageError,
                           VLPError)
from vlpcal.experiment import Experiment, Experiments
from vlpcal.report import comparison_table, pose_table, pose_to_str
from vlpcal.solver import load_frame, solve_pose
from vlpcal.utils import set_log_level

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2

VALIDATION_ERRORS = (ConfigValidationError, UsageError, RowError, CalibrationFileError, ConfigException,
                     ParseBaseException)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common_args(parser):
    parser.add_argument('--config', action='append', default=[],
                        help='config file merged over the preset (repeatable, later files win)')
    parser.add_argument('--preset', help='bundled preset to start from (see `vlpcal presets`)')
    parser.add_argument('--out', help='output directory (default: a new numbered experiment directory)')
    parser.add_argument('--calibration', help='calibration file')
    parser.add_argument('--seed', type=int, help='master seed (unsigned 64-bit)')
    parser.add_argument('--threads', type=int, help='worker threads for trials')
    parser.add_argument('-v', '--verbose', action='store_true', help='show progress bars')
    parser.add_argument('--log-level', default='INFO')
    return parser


class CommandRunner(object):
    """Dispatches `vlpcal <command>` to the method of the same name (dashes become underscores)."""
    COMMANDS = [
        ('calibrate-rotation', 'yaw sweep -> rotation center (u1, v1)'),
        ('calibrate-dispersion', 'repeated fixes at a reference point -> dispersion offset'),
        ('simulate', 'run the configured static, dynamic or comparison experiment'),
        ('compare', 'static grid uncalibrated vs rotation- vs dispersion-calibrated'),
        ('solve', 'solve one recorded frame (uid,u,v) and print the pose'),
        ('presets', 'list bundled presets'),
    ]

    def __init__(self, argv, stdout=None):
        self._stdout = stdout or sys.stdout
        usage = 'vlpcal <command> [<args>]\n\nSupported commands:\n' + ''.join(
            ' \t{}\t {}\n'.format(name, desc) for name, desc in self.COMMANDS)
        parser = _ArgumentParser(usage=usage)
        parser.add_argument('command', help='subcommand to run')
        args = parser.parse_args(argv[:1])
        name = args.command.replace('-', '_')
        if args.command not in [c for c, _ in self.COMMANDS]:
            raise UsageError('Unrecognized command: {}'.format(args.command))
        self._argv = argv[1:]
        self._command = args.command
        self._method = getattr(self, name)

    def run(self):
        return self._method()

    def _print(self, text):
        self._stdout.write('{}\n'.format(text))

    def _parse(self, description, extra=None):
        parser = _common_args(_ArgumentParser(prog='vlpcal {}'.format(self._command), description=description))
        if extra:
            extra(parser)
        args = parser.parse_args(self._argv)
        set_log_level(args.log_level)
        return args

    def _run_config(self, args, calibration_must_exist=True, overrides=None):
        config = load_config(args.preset, args.config)
        for key, value in (overrides or {}).items():
            config.put(key, value)
        return RunConfig(config, args.calibration, calibration_must_exist, args.seed, args.threads)

    def _experiment(self, args, run_config):
        if args.out:
            exp = Experiment(run_config, args.out, args.verbose)
        else:
            exp = Experiments(DataDirectory.experiments).new(run_config, name=self._command, verbose=args.verbose)
        return exp.start(self._command)

    def calibrate_rotation(self):
        args = self._parse('Estimate the rotation center from a simulated yaw sweep.')
        rc = self._run_config(args, calibration_must_exist=False)
        exp = self._experiment(args, rc)
        calib = exp.calibrate_rotation()
        du, dv = calib.rotation_offset
        self._print('rotation center (u1, v1) = ({:.6f}, {:.6f}) px, offset ({:+.4f}, {:+.4f}) px, '
                    'fit residual {:.3g} px'.format(calib.rotation_center.u, calib.rotation_center.v, du, dv,
                                                   calib.provenance['rotation_residual_px']))
        return EXIT_OK

    def calibrate_dispersion(self):
        args = self._parse('Estimate the dispersion offset from repeated simulated fixes.')
        rc = self._run_config(args, calibration_must_exist=False)
        exp = self._experiment(args, rc)
        calib = exp.calibrate_dispersion()
        self._print('dispersion offset (dx, dy) = ({:.4f}, {:.4f}) cm, radius {:.4f} cm ({})'.format(
            calib.dispersion_offset[0] / 10., calib.dispersion_offset[1] / 10., calib.dispersion_radius / 10.,
            calib.dispersion_mode))
        return EXIT_OK

    def simulate(self):
        args = self._parse('Run the configured experiment and write its report.')
        rc = self._run_config(args)
        exp = self._experiment(args, rc)
        summaries = exp.simulate()
        self._print(comparison_table(summaries))
        return EXIT_OK

    def compare(self):
        args = self._parse('Static grid under three calibrations.')
        rc = self._run_config(args)
        exp = self._experiment(args, rc)
        summaries = exp.compare()
        self._print(comparison_table(summaries))
        return EXIT_OK

    def solve(self):
        def extra(parser):
            parser.add_argument('frame', help='detection file with a uid,u,v header')
            parser.add_argument('--anchors', help='anchor table (bundled layout name or path)')
            parser.add_argument('--table', action='store_true', help='print a table in cm/deg as well')
        args = self._parse('Solve one frame of detections.', extra)
        overrides = {'scene.anchors': args.anchors} if args.anchors else None
        rc = self._run_config(args, overrides=overrides)
        frame = load_frame(args.frame)
        estimate = solve_pose(frame, rc.anchors, rc.intrinsics, rc.calibration)
        self._print(pose_to_str(estimate))
        if args.table:
            self._print(pose_table(estimate))
        logging.info('yaw %.4f deg', math.degrees(estimate.yaw))
        return EXIT_OK

    def presets(self):
        self._parse('List bundled presets.')
        for name in preset_names():
            self._print(name)
        return EXIT_OK


def _fail(e, code):
    sys.stderr.write(json.dumps({'error': type(e).__name__, 'message': str(e)}) + '\n')
    return code


def main(argv=None, stdout=None):
    """Run one command; returns the exit code."""
    if argv is None:
        argv = sys.argv[1:]
    logging.basicConfig(stream=sys.stderr, format='%(levelname)s %(message)s')
    try:
        return CommandRunner(argv, stdout).run()
    except VALIDATION_ERRORS as e:
        return _fail(e, EXIT_VALIDATION)
    except VLPError as e:
        return _fail(e, EXIT_RUNTIME)
    except (ValueError, IOError) as e:
        logging.debug('run failed', exc_info=True)
        return _fail(e, EXIT_RUNTIME)
