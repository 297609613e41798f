from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    kernel = Extension(
        "tomolab._mlkernel",
        ["src/tomolab/_mlkernel.pyx"],
        optional=True,
    )
    ext_modules = cythonize([kernel], language_level="3")

setup(ext_modules=ext_modules)
