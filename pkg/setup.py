from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "tracemin._kernels_c",
                ["src/tracemin/_kernels_c.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    # Pure-Python install; tracemin.kernels falls back to the numpy backend.
    ext_modules = []

setup(ext_modules=ext_modules)
