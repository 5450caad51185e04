"""FloorForge setup configuration."""

from setuptools import setup, find_packages

# Read the README file
with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

# Runtime requirements stop at the development block of requirements.txt
requirements = []
with open("requirements.txt", "r", encoding="utf-8") as fh:
    for line in fh:
        line = line.strip()
        if line.startswith("# Development"):
            break
        if line and not line.startswith("#"):
            requirements.append(line)

# Development requirements
dev_requirements = [
    "black>=23.12.1",
    "pylint>=3.0.3",
    "pytest>=7.4.3",
    "pytest-cov>=4.1.0",
]

setup(
    name="floorforge",
    version="0.1.0",
    author="David Maynor",
    author_email="dmaynor@gmail.com",
    description="Boundary-conditioned vector floorplan generation with two-level VQ-VAE codebooks",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require={
        "dev": dev_requirements,
    },
    entry_points={
        "console_scripts": [
            "floorforge=floorforge.cli:main",
        ],
    },
    include_package_data=True,
    package_data={
        "floorforge": [
            "presets/*.yaml",
            "presets/ablations/*.yaml",
            "templates/*.j2",
        ],
    },
)
