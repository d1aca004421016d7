from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    # no build toolchain: the package falls back to heavytail._kernels_py
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "heavytail._kernels",
                ["src/heavytail/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
