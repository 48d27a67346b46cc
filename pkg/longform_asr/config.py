#!/usr/bin/env python3
import configparser

from .consensus import ALIASES, POSITION_BASED, TIME_BASED
from .errors import ValidationError

# known properties per section
PROPERTIES = {
    'merge': ('window_length', 'confidence', 'lowercase', 'threads'),
    'simulator': ('seed', 'base_error_rate', 'warmup_seconds', 'warmup_multiplier', 'boundary_cut_drop_prob',
                  'sub_prob', 'del_prob', 'ins_prob', 'shared_difficulty'),
    'study': ('trials', 'reference_minutes', 'window_lengths'),
}

SIMULATOR_FLOATS = ('base_error_rate', 'warmup_seconds', 'warmup_multiplier', 'boundary_cut_drop_prob',
                    'sub_prob', 'del_prob', 'ins_prob')


class Section:
    """Typed read access to one config section; absent keys yield the default."""

    def __init__(self, name, items=None):
        self.name = name
        self.config = dict(items or {})

    def _get(self, key, func, default=None):
        if key not in self.config:
            return default
        try:
            return func(self.config.get(key))
        except ValueError:
            raise ValidationError("[%s] %s: invalid value %r" % (self.name, key, self.config.get(key))) from None

    def get(self, key, default=None):
        return self._get(key, str, default)

    def getint(self, key, default=None):
        return self._get(key, int, default)

    def getfloat(self, key, default=None):
        return self._get(key, float, default)

    def getbool(self, key, default=None):
        return self._get(key, _to_bool, default)

    def getlist(self, key, default=None):
        return self._get(key, _to_list, default)

    def __contains__(self, key):
        return key in self.config


def _to_bool(value):
    state = configparser.ConfigParser.BOOLEAN_STATES.get(str(value).lower())
    if state is None:
        raise ValueError(value)
    return state


def _to_list(value):
    return [i.strip() for i in value.split(',') if i.strip()]


class Config:
    def __init__(self, config_file=None):
        self.config_file = config_file

        self.config = configparser.ConfigParser(
            interpolation=configparser.ExtendedInterpolation()
            )

        if config_file is not None:
            with open(config_file, "r") as f:
                self.config.read_file(f)

    def section(self, name):
        if self.config.has_section(name):
            return Section(name, self.config[name].items())
        return Section(name)

    @property
    def merge(self):
        return self.section('merge')

    @property
    def simulator(self):
        return self.section('simulator')

    @property
    def study(self):
        return self.section('study')

    def problems(self):
        """Unknown sections and properties, one message each."""
        result = []
        for s in self.config.sections():
            if s not in PROPERTIES:
                result.append("Unknown section '%s'" % s)
                continue
            for key in self.config[s]:
                if key not in PROPERTIES[s]:
                    result.append("Unknown property '%s' in section '%s'" % (key, s))
        return result

    def check(self):
        """Every problem found, including values that do not convert to their type."""
        result = self.problems()
        typed = (
            (self.merge, 'getfloat', ('window_length',)),
            (self.merge, 'getbool', ('lowercase',)),
            (self.merge, 'getint', ('threads',)),
            (self.simulator, 'getint', ('seed',)),
            (self.simulator, 'getfloat', SIMULATOR_FLOATS),
            (self.simulator, 'getbool', ('shared_difficulty',)),
            (self.study, 'getint', ('trials',)),
            (self.study, 'getfloat', ('reference_minutes',)),
        )
        for section, getter, keys in typed:
            for key in keys:
                try:
                    getattr(section, getter)(key)
                except ValidationError as e:
                    result.append(str(e))
        confidence = self.merge.get('confidence')
        if confidence is not None and ALIASES.get(confidence, confidence) not in (TIME_BASED, POSITION_BASED):
            result.append("[merge] confidence: unknown mode %r" % confidence)
        try:
            [float(L) for L in self.study.getlist('window_lengths', [])]
        except ValueError:
            result.append("[study] window_lengths: expected a comma separated list of seconds")
        return result
