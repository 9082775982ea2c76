"""Build script: compiles the optional SMO extension when Cython is available.

The package is fully functional without the extension; `argquality.svr`
falls back to the numpy implementation of the same solver at import time.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "argquality.svr._smo_cy",
                sources=["src/argquality/svr/_smo_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
