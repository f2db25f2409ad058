"""Build script: compiles the trajectory kernels when a toolchain is present.

The extension is optional.  If Cython or a C compiler is unavailable (or
SHANGOPT_NO_EXT is set), the package installs anyway and falls back to the
pure-Python kernels in shangopt._kernels._pyref at import time.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing: install without the ext
            print(f"warning: skipping compiled kernels ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping {ext.name} ({exc})")


ext_modules = []
if not os.environ.get("SHANGOPT_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "shangopt._kernels._fast",
                    ["src/shangopt/_kernels/_fast.pyx"],
                    # -ffp-contract=off: no FMA fusion, so compiled results
                    # are bitwise identical to the pure-Python kernels.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        print("warning: Cython not available, building without compiled kernels")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
