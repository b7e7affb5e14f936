"""Build the compiled sweep kernels; the package still works without them."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ROMSN_NO_EXTENSION", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "romsn._sweeps",
                    ["src/romsn/_sweeps.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
