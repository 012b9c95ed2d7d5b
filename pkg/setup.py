"""Build the optional compiled kernels.

The package works without the extension (a numpy fallback is selected at
import time); a failed compile therefore downgrades to a warning.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/ventclass/_fastkernels.pyx",
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        ext.define_macros.append(("NPY_NO_DEPRECATED_API",
                                  "NPY_1_7_API_VERSION"))
except Exception as e:  # pragma: no cover - build-environment dependent
    print(f"warning: building without compiled kernels ({e})",
          file=sys.stderr)

setup(ext_modules=ext_modules)
