"""Setup configuration for ccpnet."""

from pathlib import Path

from setuptools import find_packages, setup

HERE = Path(__file__).parent


def read_requirements(name: str) -> list:
    """Requirement lines of a requirements file, comments and blanks skipped."""
    path = HERE / name
    if not path.exists():
        return []
    return [
        line.strip()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#")
    ]


readme_file = HERE / "README.md"

setup(
    name="ccpnet",
    version="0.1.0",
    description="Common causes, Bell correlations and past regions for local quantum nets",
    long_description=readme_file.read_text(encoding="utf-8") if readme_file.exists() else "",
    long_description_content_type="text/markdown",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    install_requires=read_requirements("requirements.txt"),
    extras_require={"dev": read_requirements("requirements-dev.txt")},
    entry_points={
        "console_scripts": [
            "ccpnet=ccpnet.cli:main",
        ],
    },
    keywords="quantum probability, common cause, bell inequality, minkowski, local nets",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Physics",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.12",
        "License :: OSI Approved :: MIT License",
    ],
    python_requires=">=3.10",
)
