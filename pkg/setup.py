"""Build script for the optional compiled integrator kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import); building it speeds up Monte Carlo ensembles roughly
an order of magnitude.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "floqryd._kernels",
                ["src/floqryd/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
