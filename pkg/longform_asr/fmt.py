import json
import sys

from termcolor import colored

from .transcript import format_time


def debug(message):
    sys.stderr.write(message + "\n")


def diagnostic(record):
    """One JSON object per line on stderr."""
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")


def to_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def col_lo(s):
    return colored(s, 'white', attrs=['dark'])


def col_hi(s):
    return colored(s, 'white', attrs=['bold'])


def col_name(s):
    return colored(s, 'blue', attrs=['bold'])


def col_err(s):
    return colored(s, 'red', attrs=['bold'])


def col_val(s):
    return colored(s, 'yellow', attrs=['bold'])


def print_window(window):
    return "%s %s %s" % (str(window.index).rjust(4), format_time(window.start).rjust(9), format_time(window.end).rjust(9))


def layout_to_dict(layout):
    return {
        'kind': layout.kind,
        'utterance_length': layout.utterance_length,
        'window_length': layout.window_length,
        'windows': [{'index': w.index, 'start': w.start, 'end': w.end} for w in layout],
    }


def _pct(value):
    return value if isinstance(value, str) else "%.2f" % value


def print_wer(report):
    d = report.to_dict()
    wer = d['wer'] if isinstance(d['wer'], str) else "%.2f%%" % (100 * report.wer)
    lines = [
        "  words:         %s" % col_hi(report.n_ref),
        "  wer:           %s" % col_val(wer),
        "  substitutions: %s (%s%%)" % (col_hi(report.substitutions), _pct(d['S%'])),
        "  deletions:     %s (%s%%)" % (col_err(report.deletions) if report.deletions else col_hi(0), _pct(d['D%'])),
        "  insertions:    %s (%s%%)" % (col_hi(report.insertions), _pct(d['I%'])),
    ]
    return "\n".join(lines)


def print_study(report):
    """Short human summary of one study report."""
    fixed, overlap = report['fixed'], report['overlap']
    lines = [
        col_name("L=%ss" % report['window_length']) + col_lo(" (%d trials)" % report['trials']),
        "  fixed:    wer %s  S %d  D %d  I %d" % (col_hi(fixed['wer']), fixed['S'], fixed['D'], fixed['I']),
        "  overlap:  wer %s  S %d  D %d  I %d" % (col_hi(overlap['wer']), overlap['S'], overlap['D'], overlap['I']),
        "  wins/ties/losses: %s/%d/%d" % (col_val(report['wins']), report['ties'], report['losses']),
        "  relative reduction: %s" % col_val("%.1f%%" % (100 * report['mean_relative_reduction'])),
    ]
    return "\n".join(lines)
