"""Build script for the compiled replication kernel.

The package works without the extension (a pure-Python kernel is selected
at import time); building it just makes replications ~50x faster.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "bedtwin._fastpipe",
                ["src/bedtwin/_fastpipe.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
