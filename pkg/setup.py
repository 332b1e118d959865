"""Build script for the optional compiled recurrence core.

The extension is a pure speedup: if Cython or a C compiler is unavailable the
package installs without it and the numpy kernels are used instead (see
smilesaug.model.backend).
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "smilesaug.model._core",
                ["src/smilesaug/model/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
