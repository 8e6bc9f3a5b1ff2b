"""Build script: compiles the optional Cython acceleration module.

If Cython or a C compiler is unavailable the build falls back to the
pure-numpy implementation (weaklearn._accel_np); the package selects the
fastest available backend at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "weaklearn._accel",
                ["src/weaklearn/_accel.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"weaklearn: skipping Cython extension ({exc}); pure-numpy fallback will be used")

setup(ext_modules=ext_modules)
