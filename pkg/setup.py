from setuptools import find_packages, setup

setup(
    name="py-ais",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.26.0",  # Pattern arrays and seeded generators
        "scipy>=1.12.0",  # Distance measures
        "numba>=0.59.0",  # Bulk matching kernels
    ],
    extras_require={
        "dev": [
            "pytest>=7.0",
            "pytest-cov>=4.0",
            "black>=23.0",
            "ruff>=0.1.0",
            "mypy>=1.9.0",  # Static type checking
            "types-setuptools>=75.0.0",  # Type stubs for setuptools
        ],
    },
    entry_points={
        "console_scripts": [
            "ais=ais.main:main",
        ],
    },
    # Metadata
    author="Development Team",
    description="Artificial immune system toolkit with a batch CLI",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    keywords="artificial-immune-system, negative-selection, collaborative-filtering",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
