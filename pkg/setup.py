from setuptools import setup, find_packages

setup(
    name="cutpatch",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    install_requires=[
        "numpy>=1.23",
        "scipy>=1.12",
    ],
    entry_points={
        "console_scripts": [
            "cutpatch=cutpatch.harness.cli:main",
        ],
    },
    python_requires=">=3.9",
)
