#!/usr/bin/env python3
"""Record types for hypotheses, windows and transcripts, and the on-disk formats.

Two hypothesis formats are read and written:

* CTM-like text, one word per line: ``utt window start duration token``.
  The channel column of classic CTM carries the window index instead.
  Reference transcripts use ``-`` in that column.
* JSON lines, one transcript per line, for hypotheses without timings:
  ``{"utt": "u1", "words": [{"win": 0, "i": 0, "token": "hi"}, ...]}``.
  Flat word records (``{"utt", "win", "i", "token", "start"?, "dur"?}``)
  are accepted as well.
"""
import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from typing import Iterable, List, Optional, Tuple, Union

from .errors import InvalidRecordError, ParseError, SerializationError, ValidationError

EVEN = 'even'
ODD = 'odd'

NO_WINDOW = '-'
UTTERANCE_HEADER = ';; utterance'
TIME_QUANTUM = Decimal('0.01')
# windows that share less than this many seconds do not overlap
TIME_EPSILON = 1e-9


def stream_of(window_index):
    return EVEN if window_index % 2 == 0 else ODD


def normalize_token(token, lowercase=False):
    return token.lower() if lowercase else token


def _check_time(name, value):
    if value is None:
        return
    if not math.isfinite(value):
        raise ValidationError("%s must be finite, got %r" % (name, value))
    if value < 0:
        raise ValidationError("negative %s %r" % (name, value))


def _check_token(token):
    if not token:
        raise ValidationError("empty token")
    if any(c.isspace() for c in token):
        raise ValidationError("token %r contains whitespace" % token)


@dataclass(frozen=True)
class WordHyp:
    token: str
    start: Optional[float] = None
    duration: Optional[float] = None
    window_index: int = 0
    stream: Optional[str] = None

    def __post_init__(self):
        _check_token(self.token)
        _check_time('start', self.start)
        _check_time('duration', self.duration)
        if isinstance(self.window_index, bool) or not isinstance(self.window_index, int) or self.window_index < 0:
            raise ValidationError("window index must be a nonnegative integer, got %r" % (self.window_index,))
        parity = stream_of(self.window_index)
        if self.stream is None:
            object.__setattr__(self, 'stream', parity)
        elif self.stream != parity:
            raise ValidationError("word in window %d cannot belong to the %s stream" % (self.window_index, self.stream))

    @property
    def timed(self):
        return self.start is not None and self.duration is not None

    @property
    def end(self):
        return None if not self.timed else self.start + self.duration


@dataclass(frozen=True)
class WindowSpec:
    index: int
    start: float
    length: float

    def __post_init__(self):
        if self.index < 0:
            raise ValidationError("window index must be nonnegative, got %r" % self.index)
        _check_time('window start', self.start)
        if not self.length > 0:
            raise ValidationError("window length must be positive, got %r" % self.length)

    @property
    def end(self):
        return self.start + self.length

    @property
    def center(self):
        return self.start + self.length / 2

    @property
    def stream(self):
        return stream_of(self.index)

    def contains(self, t):
        return self.start <= t < self.end

    def overlaps(self, other):
        return self.start < other.end - TIME_EPSILON and other.start < self.end - TIME_EPSILON


@dataclass(frozen=True)
class ReferenceWord:
    token: str
    start: float
    duration: float

    def __post_init__(self):
        _check_token(self.token)
        if self.start is None or self.duration is None:
            raise ValidationError("reference word %r needs start and duration" % self.token)
        _check_time('start', self.start)
        _check_time('duration', self.duration)

    @property
    def end(self):
        return self.start + self.duration


@dataclass(frozen=True)
class Transcript:
    utterance_id: str
    words: Tuple[WordHyp, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.utterance_id or any(c.isspace() for c in self.utterance_id):
            raise ValidationError("bad utterance id %r" % (self.utterance_id,))
        object.__setattr__(self, 'words', tuple(self.words))
        last = {EVEN: None, ODD: None}
        for w in self.words:
            if w.start is None:
                continue
            prev = last[w.stream]
            if prev is not None and w.start < prev:
                raise ValidationError("utterance %s: start times decrease within the %s stream (%s after %s)"
                                      % (self.utterance_id, w.stream, w.start, prev))
            last[w.stream] = w.start

    def tokens(self, lowercase=False):
        return [normalize_token(w.token, lowercase) for w in self.words]

    @property
    def timed(self):
        return all(w.timed for w in self.words)

    def __len__(self):
        return len(self.words)


@dataclass(frozen=True)
class WerReport:
    n_ref: int
    substitutions: int
    deletions: int
    insertions: int
    wer: float

    def __post_init__(self):
        if self.substitutions + self.deletions > self.n_ref:
            raise ValidationError("S + D exceeds the reference length")

    @classmethod
    def from_counts(cls, n_ref, substitutions, deletions, insertions):
        errors = substitutions + deletions + insertions
        if n_ref > 0:
            wer = errors / n_ref
        else:
            wer = math.inf if errors else 0.0
        return cls(n_ref, substitutions, deletions, insertions, wer)

    @property
    def errors(self):
        return self.substitutions + self.deletions + self.insertions

    def percent(self, count):
        if self.n_ref == 0:
            return math.inf if count else 0.0
        return 100.0 * count / self.n_ref

    def __add__(self, other):
        return WerReport.from_counts(self.n_ref + other.n_ref,
                                     self.substitutions + other.substitutions,
                                     self.deletions + other.deletions,
                                     self.insertions + other.insertions)

    def to_dict(self, digits=4):
        # JSON has no infinity; the unbounded case is rendered as a string
        def r(x):
            return 'inf' if math.isinf(x) else round(x, digits)
        return {
            'wer': r(self.wer),
            'N': self.n_ref,
            'S': self.substitutions,
            'D': self.deletions,
            'I': self.insertions,
            'S%': r(self.percent(self.substitutions)),
            'D%': r(self.percent(self.deletions)),
            'I%': r(self.percent(self.insertions)),
        }


def format_time(seconds):
    """Render seconds with two decimals, rounding halves up."""
    return str(Decimal(repr(float(seconds))).quantize(TIME_QUANTUM, rounding=ROUND_HALF_UP))


def quantize_time(seconds):
    return float(format_time(seconds))


def _lines(text_stream):
    if isinstance(text_stream, str):
        return text_stream.splitlines()
    return text_stream


def _ctm_records(text_stream):
    for lineno, raw in enumerate(_lines(text_stream), start=1):
        line = raw.strip()
        if not line or line.startswith('#') or line.startswith(';;'):
            continue
        fields = line.split()
        if len(fields) < 5:
            raise ParseError(lineno, "expected 5 fields (utt window start duration token), got %d" % len(fields))
        yield lineno, fields


def _parse_float(lineno, name, value):
    try:
        return float(value)
    except ValueError:
        raise ParseError(lineno, "bad %s %r" % (name, value)) from None


def _group(pairs):
    order = []
    groups = {}
    for utt, item in pairs:
        if utt not in groups:
            groups[utt] = []
            order.append(utt)
        groups[utt].append(item)
    return order, groups


def parse_ctm(text_stream) -> List[Transcript]:
    """Parse windowed CTM; words are grouped by utterance in order of first appearance."""
    records = []
    for lineno, (utt, win, start, dur, token, *_) in _ctm_records(text_stream):
        if win == NO_WINDOW:
            raise ParseError(lineno, "missing window index (reference file?)")
        try:
            window_index = int(win)
        except ValueError:
            raise ParseError(lineno, "bad window index %r" % win) from None
        start = _parse_float(lineno, 'start', start)
        dur = _parse_float(lineno, 'duration', dur)
        try:
            records.append((utt, (lineno, WordHyp(token, start, dur, window_index))))
        except ValidationError as e:
            raise InvalidRecordError(lineno, str(e)) from e
    return _build_transcripts(records)


def _build_transcripts(records):
    order, groups = _group(records)
    transcripts = []
    for utt in order:
        items = groups[utt]
        try:
            transcripts.append(Transcript(utt, tuple(w for _, w in items)))
        except ValidationError as e:
            raise InvalidRecordError(items[0][0], str(e)) from e
    return transcripts


def serialize_ctm(transcripts: Iterable[Transcript], lengths=None) -> str:
    """Render CTM; with `lengths`, each utterance is preceded by a ';; utterance ID length SECONDS' comment."""
    lines = []
    for t in transcripts:
        if lengths and t.utterance_id in lengths:
            lines.append("%s %s length %s" % (UTTERANCE_HEADER, t.utterance_id, format_time(lengths[t.utterance_id])))
        for w in t.words:
            if not w.timed:
                raise SerializationError("utterance %s: word %r has no timing; use the JSON-lines format"
                                         % (t.utterance_id, w.token))
            lines.append("%s %d %s %s %s" % (t.utterance_id, w.window_index,
                                             format_time(w.start), format_time(w.duration), w.token))
    return ''.join(line + '\n' for line in lines)


def parse_utterance_lengths(text_stream):
    lengths = {}
    for lineno, raw in enumerate(_lines(text_stream), start=1):
        line = raw.strip()
        if not line.startswith(UTTERANCE_HEADER):
            continue
        fields = line[len(UTTERANCE_HEADER):].split()
        if len(fields) != 3 or fields[1] != 'length':
            raise ParseError(lineno, "expected '%s ID length SECONDS'" % UTTERANCE_HEADER)
        value = _parse_float(lineno, 'length', fields[2])
        if not value > 0:
            raise InvalidRecordError(lineno, "utterance length must be positive")
        lengths[fields[0]] = value
    return lengths


def parse_reference(text_stream) -> List[Tuple[str, List[ReferenceWord]]]:
    """Parse a reference CTM (window column ``-``) into time-ordered words per utterance."""
    records = []
    for lineno, (utt, win, start, dur, token, *_) in _ctm_records(text_stream):
        if win != NO_WINDOW:
            raise ParseError(lineno, "reference lines carry '-' in the window column, got %r" % win)
        start = _parse_float(lineno, 'start', start)
        dur = _parse_float(lineno, 'duration', dur)
        try:
            word = ReferenceWord(token, start, dur)
        except ValidationError as e:
            raise InvalidRecordError(lineno, str(e)) from e
        records.append((utt, (lineno, word)))
    order, groups = _group(records)
    result = []
    for utt in order:
        items = groups[utt]
        for (_, a), (lineno, b) in zip(items, items[1:]):
            if b.start < a.end - 1e-9:
                raise InvalidRecordError(lineno, "reference words overlap or are out of order")
        result.append((utt, [w for _, w in items]))
    return result


def serialize_reference(references) -> str:
    lines = []
    for utt, words in references:
        for w in words:
            lines.append("%s %s %s %s %s" % (utt, NO_WINDOW, format_time(w.start), format_time(w.duration), w.token))
    return ''.join(line + '\n' for line in lines)


def _jsonl_word(lineno, utt, obj):
    try:
        token = obj['token']
        window_index = obj['win']
    except (KeyError, TypeError):
        raise ParseError(lineno, "word record needs 'win' and 'token'") from None
    if not isinstance(window_index, int) or isinstance(window_index, bool):
        raise ParseError(lineno, "bad window index %r" % (window_index,))
    if not isinstance(token, str):
        raise ParseError(lineno, "bad token %r" % (token,))
    start = obj.get('start')
    dur = obj.get('dur')
    for name, value in (('start', start), ('dur', dur)):
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ParseError(lineno, "bad %s %r" % (name, value))
    try:
        return WordHyp(token, None if start is None else float(start),
                       None if dur is None else float(dur), window_index)
    except ValidationError as e:
        raise InvalidRecordError(lineno, str(e)) from e


def parse_jsonl(text_stream) -> List[Transcript]:
    records = []
    for lineno, raw in enumerate(_lines(text_stream), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(lineno, "invalid JSON (%s)" % e.msg) from None
        if not isinstance(obj, dict) or not isinstance(obj.get('utt'), str):
            raise ParseError(lineno, "expected an object with an 'utt' string")
        utt = obj['utt']
        if 'words' in obj:
            if not isinstance(obj['words'], list):
                raise ParseError(lineno, "'words' must be a list")
            for w in obj['words']:
                records.append((utt, (lineno, _jsonl_word(lineno, utt, w))))
        else:
            records.append((utt, (lineno, _jsonl_word(lineno, utt, obj))))
    return _build_transcripts(records)


def serialize_jsonl(transcripts: Iterable[Transcript]) -> str:
    lines = []
    for t in transcripts:
        words = []
        rank = {}
        for w in t.words:
            i = rank.get(w.window_index, 0)
            rank[w.window_index] = i + 1
            item = {'win': w.window_index, 'i': i, 'token': w.token}
            if w.start is not None:
                item['start'] = w.start
            if w.duration is not None:
                item['dur'] = w.duration
            words.append(item)
        lines.append(json.dumps({'utt': t.utterance_id, 'words': words}, sort_keys=True))
    return ''.join(line + '\n' for line in lines)


def looks_like_jsonl(text):
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith('#'):
            return line.startswith('{')
    return False


def read_transcripts(text: Union[str, Iterable[str]]) -> List[Transcript]:
    """Parse CTM or JSON lines, whichever the first content line looks like."""
    if not isinstance(text, str):
        text = ''.join(text)
    if looks_like_jsonl(text):
        return parse_jsonl(text)
    return parse_ctm(text)
