"""Experiment directories and the runs that fill them.

An experiment directory holds the merged config (config.txt), provenance (metadata.txt) and
whatever the run produces: report files, calibration files, sweep and dispersion samples.
Unless an explicit output directory is given, experiments are numbered directories under
DataDirectory.experiments.
"""
import logging
import math
import os
from collections import OrderedDict
from collections.abc import Mapping, MutableMapping

from vlpcal.calibration import calibrate_dispersion, calibrate_rotation_center, save_calibration
from vlpcal.config import COMPARISON, DYNAMIC, STATIC
from vlpcal.io import IntegerDirectories, Workspace, fmt_float, write_csv
from vlpcal.metrics import dynamic_errors, line_angle, point_segment_distance, trajectory_line
from vlpcal.report import dump_frames, emit_report, emit_trajectory
from vlpcal.simulator import (run_calibration_comparison, run_dispersion_samples, run_dynamic,
                              run_rotation_sweep, run_static_grid, sweep_yaws)
from vlpcal.utils import Config, cached_property


class RunMetadata(MutableMapping):
    """Provenance of one experiment directory, rewritten to metadata.txt after every change."""
    def __init__(self, path):
        self._path = path
        self._entries = OrderedDict()
        if os.path.exists(path):
            self._entries.update(Config.from_file(path).to_json())

    def _sync(self):
        Config.from_dict(self._entries).to_file(self._path)

    def __getitem__(self, key):
        return self._entries[key]

    def __setitem__(self, key, value):
        self._entries[key] = value
        self._sync()

    def __delitem__(self, key):
        del self._entries[key]
        self._sync()

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)


class ExperimentWorkspace(Workspace):
    def __init__(self, root):
        super(ExperimentWorkspace, self).__init__(root)
        for attr in ['config', 'metadata']:
            self.add_file(attr, '{}.txt'.format(attr))
        self.add_file('calibration', 'calibration.txt')
        self.add_file('sweep', 'sweep.csv')
        self.add_file('dispersion', 'dispersion.csv')


class Experiment(object):
    """One command's worth of work on a validated RunConfig.

    Args:
        run_config (RunConfig)
        save_dir (str): created by `start`, not before
        verbose (bool): progress bars on stderr
    """
    def __init__(self, run_config, save_dir, verbose=False):
        self._rc = run_config
        self._workspace = ExperimentWorkspace(save_dir)
        self._verbose = verbose

    @property
    def run_config(self):
        return self._rc

    @property
    def workspace(self):
        return self._workspace

    @cached_property
    def metadata(self):
        return RunMetadata(self.workspace.metadata)

    @cached_property
    def scene(self):
        return self._rc.build_scene()

    @property
    def provenance(self):
        return OrderedDict([('config_hash', self._rc.config.digest()), ('seed', self._rc.seed)])

    def start(self, command):
        """Create the directory and record config and provenance."""
        self.workspace.create()
        self._rc.config.to_file(self.workspace.config)
        self.metadata['command'] = command
        self.metadata['config_hash'] = self._rc.config.digest()
        self.metadata['seed'] = self._rc.seed
        logging.info('Experiment directory: %s', self.workspace.root)
        return self

    def _calibration_out(self):
        return self._rc.calibration_path or self.workspace.calibration

    ################################
    # Calibration

    def sweep_angles(self):
        sweep = self._rc.sweep
        if sweep.yaws is not None:
            return sweep.yaws
        return sweep_yaws(sweep.n_angles, sweep.jitter_deg, self._rc.seed)

    def calibrate_rotation(self):
        """Yaw sweep, circle fit, calibration file."""
        rc, sweep = self._rc, self._rc.sweep
        yaws = self.sweep_angles()
        samples = run_rotation_sweep(self.scene, rc.error_model, sweep.position, yaws, sweep.tracked_uid,
                                     sweep.height)
        write_csv(self.workspace.sweep, ('yaw_index', 'yaw', 'u', 'v'),
                  [(s.yaw_index, fmt_float(yaws[s.yaw_index]), fmt_float(s.centroid.u), fmt_float(s.centroid.v))
                   for s in samples])
        calib = calibrate_rotation_center(samples, rc.calibration, rc.intrinsics)
        save_calibration(calib, self._calibration_out())
        self.metadata['rotation_center'] = list(calib.rotation_center)
        self.metadata['rotation_residual_px'] = calib.provenance['rotation_residual_px']
        return calib

    def calibrate_dispersion(self):
        """Repeated fixes at the reference point, mean offset, calibration file."""
        rc, disp = self._rc, self._rc.dispersion
        base = rc.calibration
        if base.dispersion_mode != disp.mode:
            logging.info('Switching dispersion mode %s -> %s; the old offset is dropped',
                         base.dispersion_mode, disp.mode)
            base = base.without_dispersion().with_mode(disp.mode)
        samples = run_dispersion_samples(self.scene, rc.error_model, disp.reference, disp.n,
                                         base, disp.yaw, disp.height)
        write_csv(self.workspace.dispersion, ('sample', 'x_mm', 'y_mm'),
                  [(i, fmt_float(s.plan_estimate[0]), fmt_float(s.plan_estimate[1]))
                   for i, s in enumerate(samples)])
        calib = calibrate_dispersion(samples, disp.reference, base, disp.mode)
        save_calibration(calib, self._calibration_out())
        self.metadata['dispersion_offset_mm'] = list(calib.dispersion_offset)
        self.metadata['dispersion_radius_mm'] = calib.dispersion_radius
        return calib

    ################################
    # Simulation

    def simulate(self):
        """Run the configured experiment and write its reports.

        Returns:
            OrderedDict[str, ErrorSummary]
        """
        kind = self._rc.experiment_type
        if kind == STATIC:
            return self._simulate_static()
        elif kind == DYNAMIC:
            return self._simulate_dynamic()
        elif kind == COMPARISON:
            return self.compare()
        raise ValueError('Invalid experiment type: {}'.format(kind))

    def _simulate_static(self):
        rc, static = self._rc, self._rc.static
        records = run_static_grid(self.scene, rc.error_model, static.grid, static.reps, static.heights,
                                  rc.calibration, static.yaw, rc.threads, self._verbose)
        summary = emit_report(self.workspace.root, records, plan_only=rc.plan_only, provenance=self.provenance)
        self._maybe_dump(records)
        return OrderedDict([('static', summary)])

    def _simulate_dynamic(self):
        rc, dyn = self._rc, self._rc.dynamic
        records = run_dynamic(self.scene, rc.error_model, dyn.start, dyn.end, dyn.speed, dyn.frame_rate,
                              rc.calibration, dyn.height, dyn.heading, rc.threads, self._verbose)
        command = (tuple(dyn.start), tuple(dyn.end))
        summary = dynamic_errors(records, command)
        errors = [point_segment_distance(r.estimate.plan, *command) if r.ok else None for r in records]
        line = trajectory_line(records)
        extra = OrderedDict([('trajectory', OrderedDict([
            ('point_mm', list(line.point)),
            ('direction', list(line.direction)),
            ('rms_residual_mm', line.rms_residual_mm),
            ('angle_to_command_rad', line_angle(line, command)),
            ('frames', len(records)),
        ]))])
        emit_report(self.workspace.root, records, summary, errors, provenance=self.provenance, extra=extra)
        emit_trajectory(self.workspace.root, records, command)
        self._maybe_dump(records)
        logging.info('Fitted trajectory is %.4f deg off the command line',
                     math.degrees(extra['trajectory']['angle_to_command_rad']))
        return OrderedDict([('dynamic', summary)])

    def compare(self):
        """The static grid uncalibrated, rotation-calibrated and dispersion-calibrated."""
        rc, static, sweep, disp = self._rc, self._rc.static, self._rc.sweep, self._rc.dispersion
        result = run_calibration_comparison(
            self.scene, rc.error_model, static.grid, static.reps, static.heights, sweep.position,
            disp.reference, disp.n, base_calib=rc.calibration.with_mode(disp.mode),
            yaw_angles=self.sweep_angles(), tracked_uid=sweep.tracked_uid, sweep_height=sweep.height,
            static_yaw=static.yaw, threads=rc.threads, verbose=self._verbose)
        summaries = OrderedDict()
        for arm, records in result.records.items():
            arm_dir = os.path.join(self.workspace.root, arm)
            summaries[arm] = emit_report(arm_dir, records, plan_only=rc.plan_only, provenance=self.provenance)
            save_calibration(result.states[arm], os.path.join(arm_dir, 'calibration.txt'))
        return summaries

    def _maybe_dump(self, records):
        if self._rc.dump_frames:
            dump_frames(self.workspace.root, records)


class Experiments(Mapping):
    """A map from integers to experiment directories."""

    def __init__(self, root_dir):
        self._int_dirs = IntegerDirectories(root_dir)

    def __getitem__(self, i):
        return self._int_dirs[i]

    def __iter__(self):
        return iter(self._int_dirs)

    def __len__(self):
        return len(self._int_dirs)

    def new(self, run_config, name=None, verbose=False):
        """A new numbered experiment directory (created immediately)."""
        save_dir = self._int_dirs.new_dir(name=name)
        return Experiment(run_config, save_dir, verbose)
