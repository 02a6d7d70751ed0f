import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()


def get_version(filename):
    import ast
    version = None
    with open(filename) as f:
        for line in f:
            if line.startswith('__version__'):
                version = ast.parse(line).body[0].value.value
                break
        else:
            raise ValueError('No version found in %r.' % filename)
    if version is None:
        raise ValueError(filename)
    return version


setuptools.setup(
    name="domaindiv",
    version=get_version("domaindiv/__init__.py"),
    description="Known / unknown / uncertain domain division for generalized zero-shot "
                "and open-set recognition",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["test", "test.*"]),
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.7",
        "scikit-learn>=1.0",
        "joblib>=1.0",
        "pydantic>=2.0",
    ],
    entry_points={
        "console_scripts": [
            "domaindiv=domaindiv.cli:main",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3.9",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.9',
)
