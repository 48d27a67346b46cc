#!/usr/bin/env python3

import argparse
import configparser
import json
import os
import sys

import colorama
colorama.init()

from . import fmt
from .alignment import score_wer
from .config import SIMULATOR_FLOATS, Config
from .consensus import ALIASES, POSITION_BASED, TIME_BASED, ConfidenceMode, merge_pipeline_detailed
from .errors import KernelError, LongformError, ValidationError
from .fmt import debug
from .kernels import KernelDelegate
from .simulator import (CorruptionConfig, parallel_map, simulate_corpus, study, sweep, synthesize_reference,
                        utterance_length)
from .transcript import (NO_WINDOW, looks_like_jsonl, parse_reference, parse_utterance_lengths, read_transcripts,
                         serialize_ctm, serialize_jsonl, serialize_reference)
from .windowing import FIXED, OVERLAPPING, assign_words, infer_layout, make_layout

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

THREADS_ENV = 'LONGFORM_THREADS'

DEFAULT_WINDOW_LENGTH = 16.0
DEFAULT_TRIALS = 100
DEFAULT_REFERENCE_MINUTES = 5.0
DEFAULT_SWEEP_LENGTHS = (8.0, 16.0, 30.0)

LAYOUT_MODES = {
    'overlap': OVERLAPPING,
    'overlapping': OVERLAPPING,
    'fixed': FIXED,
}

class UsageError(LongformError):
    pass


def positive_float(value):
    try:
        f = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a number, got %r" % value) from None
    if not f > 0 or f == float('inf'):
        raise argparse.ArgumentTypeError("must be a positive number, got %r" % value)
    return f


def positive_int(value):
    try:
        i = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer, got %r" % value) from None
    if i < 1:
        raise argparse.ArgumentTypeError("must be at least 1, got %r" % value)
    return i


def read_text(path):
    with open(path, "r", encoding='utf-8') as f:
        return f.read()


def write_output(path, text):
    if path is None or path == '-':
        sys.stdout.write(text)
        return
    with open(path, "w", encoding='utf-8') as f:
        f.write(text)


def resolve_threads(arguments, config):
    """Worker count: flag, then environment, then config file, then 1."""
    if getattr(arguments, 'threads', None) is not None:
        return arguments.threads
    env = os.environ.get(THREADS_ENV)
    if env is not None and env.strip():
        try:
            return positive_int(env)
        except argparse.ArgumentTypeError as e:
            raise UsageError("%s: %s" % (THREADS_ENV, e)) from None
    return config.merge.getint('threads', 1)


def resolve(flag, section, key, getter, default):
    if flag is not None:
        return flag
    value = getattr(section, getter)(key, None)
    return default if value is None else value


def window_length(arguments, config):
    L = resolve(arguments.L, config.merge, 'window_length', 'getfloat', DEFAULT_WINDOW_LENGTH)
    if not L > 0:
        raise UsageError("window length must be positive, got %r" % L)
    return L


def confidence_mode(arguments, config):
    name = resolve(getattr(arguments, 'confidence', None), config.merge, 'confidence', 'get', TIME_BASED)
    try:
        return ConfidenceMode(name)
    except ValidationError as e:
        raise UsageError(str(e)) from None


def lowercase(arguments, config):
    return bool(getattr(arguments, 'lowercase', False) or config.merge.getbool('lowercase', False))


def corruption_config(arguments, config):
    section = config.simulator
    values = {}
    seed = resolve(getattr(arguments, 'seed', None), section, 'seed', 'getint', None)
    if seed is not None:
        values['seed'] = seed
    for key in SIMULATOR_FLOATS:
        value = resolve(getattr(arguments, key, None), section, key, 'getfloat', None)
        if value is not None:
            values[key] = value
    shared = section.getbool('shared_difficulty', None)
    if getattr(arguments, 'shared_difficulty', False):
        shared = True
    if shared is not None:
        values['shared_difficulty'] = shared
    try:
        return CorruptionConfig(**values)
    except ValidationError as e:
        raise UsageError(str(e)) from None


def reference_corpus(arguments, config, seed):
    """Reference utterances from --ref, else a synthetic one of --reference-minutes."""
    if arguments.ref:
        return parse_reference(read_text(arguments.ref))
    minutes = resolve(arguments.reference_minutes, config.study, 'reference_minutes', 'getfloat',
                      DEFAULT_REFERENCE_MINUTES)
    if not minutes > 0:
        raise UsageError("reference length must be positive, got %r" % minutes)
    return [synthesize_reference(seed, 60.0 * minutes)]


def is_reference_text(text):
    if looks_like_jsonl(text):
        return False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith('#') or line.startswith(';;'):
            continue
        fields = line.split()
        return len(fields) > 1 and fields[1] == NO_WINDOW
    return False


def token_lists(path):
    """(utterance, tokens) in file order, from a reference or hypothesis file."""
    text = read_text(path)
    if is_reference_text(text):
        return [(utt, [w.token for w in words]) for utt, words in parse_reference(text)]
    return [(t.utterance_id, list(t.tokens())) for t in read_transcripts(text)]


def cmd_segment(arguments, config):
    L = window_length(arguments, config)
    kind = LAYOUT_MODES[arguments.mode]

    if arguments.ref:
        references = parse_reference(read_text(arguments.ref))
        lines = []
        listing = []
        for utt, words in references:
            length = arguments.length or utterance_length(words)
            if not length > 0:
                debug("Skipping utterance '%s': no words" % utt)
                continue
            layout = make_layout(kind, length, L)
            assigned = assign_words(words, layout)
            for window, indices in assigned:
                lines.append("%s %s %d" % (utt, fmt.print_window(window), len(indices)))
            listing.append(dict(fmt.layout_to_dict(layout), utt=utt,
                                words=[len(indices) for _, indices in assigned]))
        write_output(arguments.out, fmt.to_json(listing) if arguments.json else "".join(s + "\n" for s in lines))
        return EXIT_OK

    if arguments.length is None:
        raise UsageError("segment needs --len or --ref")
    layout = make_layout(kind, arguments.length, L)
    if arguments.verbose:
        debug("%s layout, L=%ss, %d windows" % (layout.kind, L, len(layout)))
    if arguments.json:
        write_output(arguments.out, fmt.to_json(fmt.layout_to_dict(layout)))
    else:
        write_output(arguments.out, "".join(fmt.print_window(w) + "\n" for w in layout))
    return EXIT_OK


def cmd_merge(arguments, config):
    L = window_length(arguments, config)
    mode = confidence_mode(arguments, config)
    lower = lowercase(arguments, config)
    threads = resolve_threads(arguments, config)

    text = read_text(arguments.ctm_in)
    jsonl = looks_like_jsonl(text)
    transcripts = read_transcripts(text)
    lengths = {} if jsonl else parse_utterance_lengths(text)

    def merge_one(transcript):
        try:
            layout = infer_layout(transcript, L, lengths.get(transcript.utterance_id))
            return merge_pipeline_detailed(transcript, layout, mode, lower), None
        except LongformError as e:
            return None, str(e)

    results = parallel_map(merge_one, transcripts, threads)

    status = EXIT_OK
    merged = []
    for transcript, (result, error) in zip(transcripts, results):
        if error is not None:
            fmt.diagnostic({'utt': transcript.utterance_id, 'error': error})
            status = EXIT_FAILURE
            continue
        fmt.diagnostic(result.diagnostics.to_dict(transcript.utterance_id))
        merged.append(result.transcript)

    write_output(arguments.out, serialize_jsonl(merged) if jsonl else serialize_ctm(merged))
    return status


def cmd_wer(arguments, config):
    lower = lowercase(arguments, config)
    refs = token_lists(arguments.ref)
    hyps = dict(token_lists(arguments.hyp))

    total = None
    for utt, ref_tokens in refs:
        report = score_wer(ref_tokens, hyps.pop(utt, []), lower)
        if arguments.verbose:
            debug("%s: wer %s" % (utt, report.to_dict()['wer']))
        total = report if total is None else total + report
    # hypothesis utterances without a reference are pure insertions
    for utt, hyp_tokens in hyps.items():
        debug("Utterance '%s' has no reference" % utt)
        report = score_wer([], hyp_tokens, lower)
        total = report if total is None else total + report
    if total is None:
        total = score_wer([], [])

    write_output(arguments.out, json.dumps(total.to_dict(), sort_keys=True) + "\n")
    debug(fmt.print_wer(total))
    return EXIT_OK


def cmd_simulate(arguments, config):
    L = window_length(arguments, config)
    corruption = corruption_config(arguments, config)
    threads = resolve_threads(arguments, config)
    references = reference_corpus(arguments, config, corruption.seed)

    results = simulate_corpus(references, LAYOUT_MODES[arguments.mode], L, corruption, threads)
    transcripts = [t for t, layout in results if layout is not None]
    lengths = {t.utterance_id: layout.utterance_length for t, layout in results if layout is not None}

    if arguments.ref_out:
        write_output(arguments.ref_out, serialize_reference(references))
    write_output(arguments.out, serialize_ctm(transcripts, lengths))
    if arguments.verbose:
        for t, layout in results:
            debug("%s: %d words in %d windows" % (t.utterance_id, len(t), len(layout) if layout else 0))
    return EXIT_OK


def _study_setup(arguments, config):
    corruption = corruption_config(arguments, config)
    trials = resolve(arguments.trials, config.study, 'trials', 'getint', DEFAULT_TRIALS)
    if trials < 1:
        raise UsageError("trials must be at least 1, got %r" % trials)
    mode = confidence_mode(arguments, config)
    if mode.variant == POSITION_BASED:
        debug("Note: position-based confidence ignores word timings")
    references = reference_corpus(arguments, config, corruption.seed)
    return corruption, trials, mode, references, resolve_threads(arguments, config)


def cmd_study(arguments, config):
    L = window_length(arguments, config)
    corruption, trials, mode, references, threads = _study_setup(arguments, config)
    report = study(references, L, corruption, trials, threads, mode.variant)
    write_output(arguments.out, fmt.to_json(report))
    debug(fmt.print_study(report))
    return EXIT_OK


def cmd_sweep(arguments, config):
    lengths = arguments.L
    if not lengths:
        try:
            lengths = [positive_float(L) for L in config.study.getlist('window_lengths', [])]
        except argparse.ArgumentTypeError as e:
            raise UsageError("[study] window_lengths: %s" % e) from None
    lengths = lengths or list(DEFAULT_SWEEP_LENGTHS)
    corruption, trials, mode, references, threads = _study_setup(arguments, config)
    reports = sweep(references, lengths, corruption, trials, threads, mode.variant)
    write_output(arguments.out, fmt.to_json(reports))
    for report in reports:
        debug(fmt.print_study(report))
    return EXIT_OK


def cmd_attn(arguments, config):
    source = arguments.spec
    text = source if source.lstrip().startswith('{') else read_text(source)
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError("kernel spec is not valid JSON (%s)" % e.msg) from None
    try:
        delegate = KernelDelegate(spec)
    except KernelError as e:
        raise UsageError(str(e)) from None
    try:
        result = delegate.execute()
    except KernelError:
        raise
    except (TypeError, ValueError, IndexError) as e:
        raise KernelError("kernel '%s': bad parameters (%s)" % (delegate.name, e)) from None
    write_output(arguments.out, json.dumps(result, sort_keys=True) + "\n")
    return EXIT_OK


COMMANDS = {
    'segment': cmd_segment,
    'merge': cmd_merge,
    'wer': cmd_wer,
    'simulate': cmd_simulate,
    'study': cmd_study,
    'sweep': cmd_sweep,
    'attn': cmd_attn,
}


def main(argv=None):
    argument_parser = get_argument_parser()
    try:
        arguments = argument_parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    if arguments.config and not os.path.exists(arguments.config):
        debug("Config file not found")
        return EXIT_FAILURE

    try:
        config = Config(arguments.config)
    except configparser.Error as e:
        debug(fmt.col_err("Invalid config file: %s" % e))
        return EXIT_FAILURE

    if arguments.check:
        problems = config.check()
        for p in problems:
            debug(p)
        if problems:
            return EXIT_FAILURE
        debug("Configuration file is valid")
        return EXIT_OK

    if arguments.command is None:
        argument_parser.print_usage(sys.stderr)
        debug("a subcommand is required")
        return EXIT_USAGE

    for p in config.problems():
        debug("Ignored: %s" % p)

    # few systems are not utf-8, force so we don't bomb out
    if hasattr(sys.stdout, 'reconfigure') and (sys.stdout.encoding or '').lower() != 'utf-8':
        sys.stdout.reconfigure(encoding='utf-8')

    try:
        return COMMANDS[arguments.command](arguments, config)
    except UsageError as e:
        debug(fmt.col_err(str(e)))
        return EXIT_USAGE
    except (LongformError, OSError) as e:
        debug(fmt.col_err(str(e)))
        return EXIT_FAILURE


def add_window_options(parser):
    parser.add_argument("--L",
                        type=positive_float,
                        dest="L",
                        help="(default 16) window length in seconds")
    parser.add_argument("--out",
                        help="output file (default stdout)")


def add_threads_option(parser):
    parser.add_argument("--threads",
                        type=positive_int,
                        help="worker threads (default $%s, [merge] threads or 1)" % THREADS_ENV)


def add_lowercase_option(parser):
    parser.add_argument("--lowercase",
                        action="store_true",
                        help="Compare tokens case-insensitively")


def add_confidence_option(parser):
    parser.add_argument("--confidence",
                        choices=sorted([TIME_BASED, POSITION_BASED] + list(ALIASES)),
                        help="(default time) confidence score used to pick between overlapping windows")


def add_simulator_options(parser):
    parser.add_argument("--seed",
                        type=int,
                        help="(default 0) random seed")
    parser.add_argument("--ref",
                        help="reference CTM (window column '-'); default is a synthetic reference")
    parser.add_argument("--reference-minutes",
                        type=positive_float,
                        dest="reference_minutes",
                        help="(default 5) length of the synthetic reference")
    parser.add_argument("--base-error-rate", type=float, dest="base_error_rate",
                        help="(default 0.05) error rate away from window starts")
    parser.add_argument("--warmup-seconds", type=float, dest="warmup_seconds",
                        help="(default 1) length of the low-context region at each window start")
    parser.add_argument("--warmup-multiplier", type=float, dest="warmup_multiplier",
                        help="(default 3) error rate factor inside the low-context region")
    parser.add_argument("--cut-drop", type=float, dest="boundary_cut_drop_prob",
                        help="(default 0.5) probability that a word cut by a window edge is lost")
    parser.add_argument("--sub-prob", type=float, dest="sub_prob", help="(default 0.5) share of substitutions")
    parser.add_argument("--del-prob", type=float, dest="del_prob", help="(default 0.3) share of deletions")
    parser.add_argument("--ins-prob", type=float, dest="ins_prob", help="(default 0.2) share of insertions")
    parser.add_argument("--shared-difficulty",
                        dest="shared_difficulty",
                        action="store_true",
                        help="Draw recognition errors once per word instead of per window")
    add_threads_option(parser)


def get_argument_parser():
    parser = argparse.ArgumentParser(prog='longform-asr')
    parser.add_argument("-c", "--config",
                        help="path to config file")
    parser.add_argument("--check",
                        dest="check",
                        action="store_true",
                        help="Do not perform actions, only check config file for valid syntax")
    parser.add_argument("-v", "--verbose",
                        action="store_true",
                        help="Be more verbose")
    subparsers = parser.add_subparsers(dest="command", metavar="command")

    segment = subparsers.add_parser("segment", help="List the windows of an utterance")
    segment.add_argument("--len",
                         type=positive_float,
                         dest="length",
                         help="utterance length in seconds")
    segment.add_argument("--mode", "--overlap-mode",
                         choices=sorted(LAYOUT_MODES),
                         default="overlap",
                         dest="mode",
                         help="(default overlap) window layout")
    segment.add_argument("--ref",
                         help="reference CTM; list the words starting in each window")
    segment.add_argument("--json",
                         action="store_true",
                         help="Print the layout as JSON")
    add_window_options(segment)

    merge = subparsers.add_parser("merge", help="Merge per-window hypotheses into one transcript")
    merge.add_argument("ctm_in",
                       help="per-window hypotheses (CTM or JSON lines)")
    add_window_options(merge)
    add_confidence_option(merge)
    add_lowercase_option(merge)
    add_threads_option(merge)

    wer = subparsers.add_parser("wer", help="Score a hypothesis against a reference")
    wer.add_argument("ref", help="reference file")
    wer.add_argument("hyp", help="hypothesis file")
    wer.add_argument("--out",
                     help="output file (default stdout)")
    add_lowercase_option(wer)

    simulate = subparsers.add_parser("simulate", help="Recognize a reference with the seeded simulator")
    simulate.add_argument("--mode", "--overlap-mode",
                          choices=sorted(LAYOUT_MODES),
                          default="overlap",
                          dest="mode",
                          help="(default overlap) window layout")
    simulate.add_argument("--ref-out",
                          dest="ref_out",
                          help="also write the reference used")
    add_window_options(simulate)
    add_simulator_options(simulate)

    study_parser = subparsers.add_parser("study", help="Compare fixed segmentation with overlapping inference")
    study_parser.add_argument("--trials",
                              type=positive_int,
                              help="(default 100) number of seeds")
    add_window_options(study_parser)
    add_confidence_option(study_parser)
    add_simulator_options(study_parser)

    sweep_parser = subparsers.add_parser("sweep", help="Run the study for several window lengths")
    sweep_parser.add_argument("--L",
                              type=positive_float,
                              action="append",
                              dest="L",
                              help="window length in seconds, repeatable (default 8, 16 and 30)")
    sweep_parser.add_argument("--trials",
                              type=positive_int,
                              help="(default 100) number of seeds")
    sweep_parser.add_argument("--out",
                              help="output file (default stdout)")
    add_confidence_option(sweep_parser)
    add_simulator_options(sweep_parser)

    attn = subparsers.add_parser("attn", help="Evaluate an attention kernel")
    attn.add_argument("spec",
                      help="kernel spec: a JSON file, or inline JSON")
    attn.add_argument("--out",
                      help="output file (default stdout)")

    return parser


if __name__ == '__main__':
    sys.exit(main())
