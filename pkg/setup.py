"""Setup configuration for the vulcan-fem package.

This script uses setuptools to package vulcan-fem, prismatic finite element integration on an
emulated GPU with its planner, verification suites and benchmark harness. It reads a long
description from `docs/README.md`.
"""

from setuptools import find_packages, setup

with open("docs/README.md", "r", encoding="utf-8") as f:
    description = f.read()

setup(
    name="vulcan-fem",
    version="0.1.0",
    description="Prism finite element numerical integration on an emulated GPU",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={
        "vulcan_fem": [
            "profiles/*.json",
            "schemas/*.json",
        ],
    },
    install_requires=[
        "coloredlogs",
        "numpy",
        "pandas",
        "jsonschema",
    ],
    entry_points={
        "console_scripts": [
            "vulcan-fem=vulcan_fem.cli:main",
        ],
    },
    python_requires=">=3.9",
    long_description=description,
    long_description_content_type="text/markdown",
)
