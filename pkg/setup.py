#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import os
from setuptools import setup
from matmi import __version__

pkg = 'matmi'

build_root = os.path.dirname(__file__)


def readme():
    """Get readme content for package long description"""
    with open(os.path.join(build_root, 'README.rst')) as f:
        return f.read()


def requirements():
    """Get package requirements"""
    with open(os.path.join(build_root, 'requirements.txt')) as f:
        return [pname.strip() for pname in f.readlines()]


setup(name='matmi',
      version=__version__,
      description='Cross-property factor reconstruction from MAT-MI '
                  'internal data',
      long_description=readme(),
      classifiers=[
          "Intended Audience :: Science/Research",
          "Operating System :: OS Independent",
          "Programming Language :: Python :: 3",
          "Topic :: Scientific/Engineering :: Mathematics",
          "Topic :: Scientific/Engineering :: Medical Science Apps."],
      license='MIT',
      packages=[pkg, pkg + '.tests'],
      install_requires=requirements(),
      scripts=["matmi/bin/" + i for i in os.listdir("matmi/bin/")],
      include_package_data=True,
      python_requires=">=3.6")
