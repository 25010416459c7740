import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# FMA contraction would make the compiled kernel drift from the NumPy twin
# in the last bits, so it stays off
compile_args = ["-O3", "-ffp-contract=off"] if os.name != "nt" else ["/O2"]

extensions = [
    Extension(
        "lips._ckernels",
        ["src/lips/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=compile_args,
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
