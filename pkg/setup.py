"""Build script for the compiled kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so the build is marked optional: if no C compiler
or Cython is available the install proceeds with a warning.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "bosonic_qpe._kernels",
                ["src/bosonic_qpe/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -fcx-limited-range: plain complex multiply (numpy's own
                # semantics) instead of the checked libgcc form.
                extra_compile_args=["-O3", "-fcx-limited-range"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    for ext in extensions:
        ext.optional = True
except ImportError:
    extensions = []

setup(ext_modules=extensions)
