import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; stochtop falls back at import
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "stochtop._core",
                ["src/stochtop/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
