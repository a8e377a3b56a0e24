"""Build script: compiles the optional distance/kNN extension when a toolchain is available.

The package works without the extension (a numpy fallback is selected at
import time), so build failures here are downgraded to warnings.
"""
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that tolerates a missing compiler or failed compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"warning: native kernel build failed ({exc}); "
            "falling back to the pure numpy implementation",
            file=sys.stderr,
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print(
            "warning: Cython not installed; skipping native kernel build",
            file=sys.stderr,
        )
        return []
    ext = Extension(
        "batchrefine.kernels._native",
        ["src/batchrefine/kernels/_native.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
