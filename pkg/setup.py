"""Build script: compiles the optional fast conv kernels.

The package works without the extension (NumPy fallback); a failed
extension build therefore must not fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "msac.kernels._ckernels",
        ["src/msac/kernels/_ckernels.pyx"],
    )
    ext.optional = True
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
