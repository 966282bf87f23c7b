import os

from setuptools import Extension, setup

# The compiled kernels are optional: without Cython (or with
# REPDPOS_PURE_BUILD=1) the package installs with the NumPy fallback only.
ext_modules = []
if os.environ.get("REPDPOS_PURE_BUILD") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "repdpos._core",
                    ["src/repdpos/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
