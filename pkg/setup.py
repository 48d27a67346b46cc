#!/usr/bin/env python3
from setuptools import setup, find_packages

setup(
    name='longform-asr',
    version='0.1.0',
    description='Overlapping-window decoding, hypothesis merging and WER scoring for long-form speech recognition',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Multimedia :: Sound/Audio :: Speech'
        ],
    keywords='speech recognition, asr, long-form, wer, attention',
    packages=find_packages(where='.', exclude=['tests', 'tests.*']),
    python_requires='>=3.8, <4',
    install_requires=['numpy', 'termcolor>=2.1', 'colorama'],
    extras_require={
        'test': ['pytest', 'hypothesis', 'scipy'],
        },
    entry_points={
        'console_scripts' : ['longform-asr=longform_asr.longform_asr:main']
        },
)
