"""Build script: compiles the optional acceleration core.

The extension is best-effort.  If no compiler (or no Cython) is available the
package installs anyway and the pure-numpy fallback in ``svekit._accel`` is
selected at import time.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Let the install proceed when the accelerator fails to compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing entirely
            warnings.warn(f"building the acceleration core failed ({exc}); "
                          "svekit will use the pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); "
                          "svekit will use the pure-Python fallback")


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "svekit._accel._core",
        ["src/svekit/_accel/_core.pyx"],
        include_dirs=[numpy.get_include()],
        # fp-contract off: fused multiply-adds would change rounding and
        # break bit-equality with the numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
