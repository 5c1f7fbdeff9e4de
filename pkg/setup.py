"""Setup script for Object-Saliency."""

from setuptools import setup, find_packages

with open("requirements.txt", "r") as f:
    requirements = [line.strip() for line in f
                    if line.strip() and not line.startswith("#") and not line.startswith("pytest")]

with open("README.md", "r") as f:
    long_description = f.read()

setup(
    name="object-saliency",
    version="0.4.0",
    description="Saliency prediction from object appearance and size dissimilarity",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="Object-Saliency Development Team",
    packages=find_packages(),
    install_requires=requirements,
    extras_require={"test": ["pytest>=7.0.0"]},
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Image Recognition",
    ],
    entry_points={
        "console_scripts": [
            "object-saliency=object_saliency.main:main",
        ],
    },
)
