#!/usr/bin/env python

from setuptools import setup
import conespy

try:
    with open('README.md') as file:
        long_description = file.read()
except IOError:
    long_description = ""

setup(
    name='conespy',
    version=conespy.__version__,
    packages=['conespy', 'conespy.test'],
    install_requires=['numpy>=1.20', 'scipy>=1.7', 'matplotlib>=3.3'],
    tests_require=['mock', 'pytest'],
    entry_points={
        'console_scripts': [
            'conespy = conespy.cli:main',
        ],
    },
    keywords=[
        'mean curvature flow',
        'minimal cones',
        'singularities',
    ],
    classifiers=[
        "Programming Language :: Python",
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: BSD License"
    ],
    license='New BSD',
    description="Numerical lab for type II singularities of mean curvature flow near minimizing cones",
    long_description=long_description,
)
