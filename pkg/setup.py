import numpy as np
from Cython.Build import cythonize
from setuptools import setup
from setuptools.extension import Extension

# -ffp-contract=off keeps the compiled kernels bit-identical to the NumPy
# fallback lane (no fused multiply-add in the convolution accumulators).
ext = Extension(
    "sonoguard._fastkernels",
    ["src/sonoguard/_fastkernels.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(
    ext_modules=cythonize([ext], compiler_directives={"language_level": "3"}),
)
