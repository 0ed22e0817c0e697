"""Build the optional Cython kernels; the package works without them."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "ttodeco._kernels._core",
                ["src/ttodeco/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:  # no Cython at build time: pure numpy fallback only
    pass

setup(ext_modules=ext_modules)
