"""Build script for the optional compiled sampling kernel.

The package is fully functional without the extension: montecarlo falls
back to a pure-numpy kernel that produces bit-identical sample streams.
Any failure while compiling therefore downgrades to a warning.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn(f"compiled sampler skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled sampler skipped: {exc}")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available, compiled sampler skipped")
        return []
    ext = Extension(
        "seqmeas._sampler_cy",
        sources=["src/seqmeas/_sampler_cy.pyx"],
        # -ffp-contract=off: the kernel must round exactly like the numpy
        # fallback, so fused multiply-adds are forbidden.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
