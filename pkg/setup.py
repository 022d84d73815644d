import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the kernel falls back at import
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("GRADEDLIE_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "gradedlie._elim_cy",
                ["src/gradedlie/_elim_cy.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
