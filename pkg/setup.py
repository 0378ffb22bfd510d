"""Build hook for the optional compiled kernels.

Without Cython the package still installs; ``ctrlrob.kernels`` then falls back
to the pure-Python implementations.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("ctrlrob._kernels", ["src/ctrlrob/_kernels.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
