"""Report files for simulated runs, and console tables.

Machine files are in mm and radians with floats in shortest round-trip form; console tables
are in cm and degrees.
"""
import logging
import math
import os
from collections import OrderedDict

from prettytable import PrettyTable

from vlpcal.errors import EmptyInput
from vlpcal.io import fmt_float, makedirs, read_csv, write_csv
from vlpcal.metrics import error_stats, point_segment_distance
from vlpcal.solver import save_frame
from vlpcal.utils import Config

TRIALS_HEADER = ('trial', 'true_x', 'true_y', 'true_z', 'true_yaw',
                 'est_x', 'est_y', 'est_z', 'est_yaw', 'err_mm', 'status')
CDF_HEADER = ('error_mm', 'fraction')
TRAJECTORY_HEADER = ('frame', 't', 'true_x', 'true_y', 'est_x', 'est_y', 'command_err_mm',
                     'actual_line_mm', 'status')
TRUTH_HEADER = ('frame', 'x', 'y', 'z', 'yaw')

TRIALS_FILE = 'trials.csv'
CDF_FILE = 'cdf.csv'
SUMMARY_FILE = 'summary.txt'
TRAJECTORY_FILE = 'trajectory.csv'
FRAMES_DIR = 'frames'


def _blank_if_none(x):
    return '' if x is None else fmt_float(x)


def trial_rows(records, errors):
    for r, err in zip(records, errors):
        t = r.true_pose
        row = [r.index, fmt_float(t.position.x), fmt_float(t.position.y), fmt_float(t.position.z),
               fmt_float(t.yaw)]
        if r.ok:
            e = r.estimate
            row += [fmt_float(e.position.x), fmt_float(e.position.y), fmt_float(e.position.z),
                    fmt_float(e.yaw)]
        else:
            row += ['', '', '', '']
        row += [_blank_if_none(err), r.status]
        yield row


def summary_dict(summary):
    return OrderedDict([
        ('n', summary.n),
        ('n_failed', summary.n_failed),
        ('mean_mm', summary.mean_mm),
        ('rms_mm', summary.rms_mm),
        ('std_mm', summary.std_mm),
        ('p50_mm', summary.p50_mm),
        ('p90_mm', summary.p90_mm),
        ('max_mm', summary.max_mm),
    ])


def _plain(d):
    """Numbers as Python int/float so pyhocon writes them in round-trip form."""
    out = OrderedDict()
    for k, v in d.items():
        if isinstance(v, dict):
            out[k] = _plain(v)
        elif isinstance(v, (list, tuple)):
            out[k] = [float(x) if not isinstance(x, (str, bool)) else x for x in v]
        elif isinstance(v, bool) or isinstance(v, str) or isinstance(v, int):
            out[k] = v
        else:
            out[k] = float(v)
    return out


def emit_report(out_dir, records, summary=None, errors=None, plan_only=False, provenance=None, extra=None):
    """Write trials.csv, cdf.csv and summary.txt.

    Args:
        out_dir (str): created if needed
        records (list[TrialRecord])
        summary (ErrorSummary): defaults to error_stats(records, plan_only)
        errors (list[float | None]): per-record error behind `summary`; defaults to
            each record's Euclidean error
        provenance (dict): config hash, seed, ...
        extra (dict): further summary blocks (fitted line, calibration, ...)

    Returns:
        ErrorSummary
    """
    if not records:
        raise EmptyInput('No trial records to report')
    if summary is None:
        summary = error_stats(records, plan_only)
    if errors is None:
        errors = [r.error_mm(plan_only) for r in records]

    makedirs(out_dir)
    write_csv(os.path.join(out_dir, TRIALS_FILE), TRIALS_HEADER, trial_rows(records, errors))
    write_csv(os.path.join(out_dir, CDF_FILE), CDF_HEADER,
              [(fmt_float(e), fmt_float(f)) for e, f in summary.cdf])

    d = OrderedDict([('summary', summary_dict(summary))])
    d['provenance'] = provenance or {}
    for k, v in (extra or {}).items():
        d[k] = v
    Config.from_dict(_plain(d)).to_file(os.path.join(out_dir, SUMMARY_FILE))
    logging.info('Wrote report for %d trials to %s', len(records), out_dir)
    return summary


def emit_trajectory(out_dir, records, command_line):
    """trajectory.csv of a dynamic run.

    command_err_mm is the distance to the command segment; actual_line_mm the distance to the
    segment joining the first and last estimates.
    """
    start, end = command_line
    ok = [r for r in records if r.ok]
    actual = (ok[0].estimate.plan, ok[-1].estimate.plan) if len(ok) >= 2 else None
    if actual is not None and actual[0] == actual[1]:
        actual = None
    rows = []
    for r in records:
        t = r.true_pose.position
        timestamp = r.frame.timestamp if r.frame is not None else float('nan')
        row = [r.index, fmt_float(timestamp), fmt_float(t.x), fmt_float(t.y)]
        if r.ok:
            p = r.estimate.plan
            row += [fmt_float(p[0]), fmt_float(p[1]), fmt_float(point_segment_distance(p, start, end)),
                    _blank_if_none(None if actual is None else point_segment_distance(p, *actual))]
        else:
            row += ['', '', '', '']
        row.append(r.status)
        rows.append(row)
    write_csv(os.path.join(out_dir, TRAJECTORY_FILE), TRAJECTORY_HEADER, rows)


def dump_frames(out_dir, records):
    """frames/NNNNN.csv (uid,u,v) per generated frame, plus frames/truth.csv."""
    frames_dir = os.path.join(out_dir, FRAMES_DIR)
    makedirs(frames_dir)
    truth = []
    for r in records:
        if r.frame is None:
            continue
        save_frame(r.frame, os.path.join(frames_dir, frame_file_name(r.index)))
        p = r.true_pose
        truth.append((r.index, fmt_float(p.position.x), fmt_float(p.position.y), fmt_float(p.position.z),
                      fmt_float(p.yaw)))
    write_csv(os.path.join(frames_dir, 'truth.csv'), TRUTH_HEADER, truth)


def frame_file_name(index):
    return '{:05d}.csv'.format(index)


def read_trials_csv(path):
    """Rows of a trials.csv; numeric fields as floats, blanks as None."""
    rows = []
    for _, row in read_csv(path, TRIALS_HEADER):
        parsed = OrderedDict()
        for k, v in row.items():
            if k == 'status':
                parsed[k] = v
            elif k == 'trial':
                parsed[k] = int(v)
            else:
                parsed[k] = float(v) if v != '' else None
        rows.append(parsed)
    return rows


def read_cdf_csv(path):
    return [(float(row['error_mm']), float(row['fraction'])) for _, row in read_csv(path, CDF_HEADER)]


################################
# Console tables

def _cm(mm):
    return '{:.3f}'.format(mm / 10.)


class TableDrawer(object):
    """Draws console tables of error summaries.

    Args:
        summaries (OrderedDict[str, ErrorSummary]): keyed by row name
    """
    HEADER = ['Run', 'n', 'failed', 'mean (cm)', 'rms (cm)', 'p50 (cm)', 'p90 (cm)', 'max (cm)']

    def __init__(self, summaries):
        self._summaries = summaries

    def summary_table(self):
        table = PrettyTable()
        table.field_names = self.HEADER
        for name, s in self._summaries.items():
            table.add_row([name, s.n, s.n_failed, _cm(s.mean_mm), _cm(s.rms_mm), _cm(s.p50_mm),
                           _cm(s.p90_mm), _cm(s.max_mm)])
        return table


def comparison_table(summaries):
    """Calibration arms (or layout / arm pairs) side by side, in cm."""
    return TableDrawer(summaries).summary_table()


def pose_table(estimate):
    table = PrettyTable()
    table.field_names = ['X (cm)', 'Y (cm)', 'Z (cm)', 'yaw (deg)', 'H (cm)', 'LEDs', 'method']
    p = estimate.position
    table.add_row([_cm(p.x), _cm(p.y), _cm(p.z), '{:.3f}'.format(math.degrees(estimate.yaw)),
                   _cm(estimate.height_H), estimate.n_leds_used, estimate.method])
    return table


def pose_dict(estimate):
    p = estimate.position
    return OrderedDict([
        ('x_mm', p.x), ('y_mm', p.y), ('z_mm', p.z), ('yaw_rad', estimate.yaw),
        ('height_H_mm', estimate.height_H), ('n_leds_used', estimate.n_leds_used),
        ('plan_residual_mm', estimate.plan_residual_mm), ('height_spread_mm', estimate.height_spread_mm),
        ('yaw_residual', estimate.yaw_residual), ('method', estimate.method),
    ])


def pose_to_str(estimate):
    return Config.from_dict(_plain(pose_dict(estimate))).to_str()
