import pytest

from longform_asr.config import Config, Section
from longform_asr.errors import ValidationError

GOOD = """\
[merge]
window_length = 20
confidence = position
lowercase = yes
threads = 3

[simulator]
seed = 4
base_error_rate = 0.1
shared_difficulty = false

[study]
trials = ${merge:threads}
window_lengths = 8, 16
"""

BAD = """\
[merge]
window_length = long
colour = red
confidence = loudest

[extra]
a = 1

[study]
window_lengths = 8, x
"""


def write(tmp_path, text):
    path = tmp_path / 'longform.ini'
    path.write_text(text)
    return str(path)


def test_typed_getters(tmp_path):
    config = Config(write(tmp_path, GOOD))
    assert config.merge.getfloat('window_length') == 20.0
    assert config.merge.get('confidence') == 'position'
    assert config.merge.getbool('lowercase') is True
    assert config.merge.getint('threads') == 3
    assert config.simulator.getbool('shared_difficulty') is False
    assert config.study.getint('trials') == 3
    assert config.study.getlist('window_lengths') == ['8', '16']
    assert config.problems() == []
    assert config.check() == []


def test_getlist_reads_the_section_values(tmp_path):
    section = Section('study', [('window_lengths', ' 8, ,16 ,'), ('single', '30')])
    assert section.getlist('window_lengths') == ['8', '16']
    assert section.getlist('single') == ['30']
    assert section.getlist('missing', []) == []
    assert not hasattr(Config(write(tmp_path, GOOD)).config, 'getlist')


def test_absent_keys_and_sections():
    config = Config()
    assert config.merge.getfloat('window_length', 16.0) == 16.0
    assert config.study.get('trials') is None
    assert 'seed' not in config.simulator


def test_invalid_value():
    section = Section('merge', {'threads': 'many'})
    with pytest.raises(ValidationError) as e:
        section.getint('threads')
    assert str(e.value) == "[merge] threads: invalid value 'many'"
    with pytest.raises(ValidationError):
        Section('merge', {'lowercase': 'perhaps'}).getbool('lowercase')


def test_problems_and_check(tmp_path):
    config = Config(write(tmp_path, BAD))
    assert config.problems() == [
        "Unknown property 'colour' in section 'merge'",
        "Unknown section 'extra'",
    ]
    problems = config.check()
    assert problems[:2] == config.problems()
    assert "[merge] window_length: invalid value 'long'" in problems
    assert "[merge] confidence: unknown mode 'loudest'" in problems
    assert any(p.startswith('[study] window_lengths') for p in problems)
    assert len(problems) == 5


def test_confidence_aliases_are_accepted():
    config = Config()
    config.config.read_string("[merge]\nconfidence = time_based\n")
    assert config.check() == []
