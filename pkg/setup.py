"""Build glue for the optional compiled set kernels.

The package works without the extension: ``dataplore.sets.kernels`` falls
back to the pure-Python twin at import time, so a failed C build only
costs speed, never functionality.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError

ext_modules = []
if os.environ.get("DATAPLORE_NO_EXTENSION") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "dataplore.sets._kernels_c",
                    ["src/dataplore/sets/_kernels_c.pyx"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []


class optional_build_ext(build_ext):
    """Tolerate a missing or broken C toolchain."""

    def run(self):
        try:
            super().run()
        except (CCompilerError, ExecError, PlatformError, FileNotFoundError) as exc:
            print(f"warning: extension build skipped ({exc}); pure-Python kernels will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except (CCompilerError, ExecError, PlatformError, FileNotFoundError) as exc:
            print(f"warning: building {ext.name} failed ({exc}); pure-Python kernels will be used")


setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
