"""Build script: compiles the optional native kernels when a toolchain exists.

The package is fully functional without the extension; `fieldvision._kernels`
falls back to the pure-Python implementations at import time.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise install pure-Python only."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler, broken toolchain, ...
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(f"WARNING: native kernel build failed ({exc}); "
              "falling back to pure-Python kernels")


ext_modules = []
if not os.environ.get("FIELDVISION_SKIP_NATIVE"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "fieldvision._kernels._native",
                    ["src/fieldvision/_kernels/_native.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        print("WARNING: Cython unavailable; building without native kernels")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
