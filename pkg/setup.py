"""Build script for the optional compiled scan kernel.

The compiled extension (dfdscan._scan) accelerates literal keyword scanning.
If Cython or a C toolchain is unavailable the build still succeeds and the
package transparently uses the pure-Python scanner instead.
"""
import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build extensions, but never fail the install over them."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "warning: compiled scan kernel was not built (%s); "
            "falling back to the pure-Python scanner" % exc,
            file=sys.stderr,
        )


def extensions():
    if os.environ.get("DFDSCAN_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension("dfdscan._scan", ["src/dfdscan/_scan.pyx"])
    return cythonize(
        [ext],
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
