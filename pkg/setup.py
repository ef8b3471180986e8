from setuptools import setup

# The trellis/decoder kernels compile to C when Cython is available; the
# package falls back to the numpy implementation at import otherwise, so a
# missing toolchain must not block installation.
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "coupled_eq._kernels._corex",
                ["src/coupled_eq/_kernels/_corex.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
