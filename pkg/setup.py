"""Build the optional MPFR/MPC extension.

The extension links against the MPFR and MPC copies that gmpy2 itself
loads, so gmpy2 numbers can be read and written in place.  Without Cython
or the gmpy2 headers the package installs pure-Python only.
"""
import os
import sys

from setuptools import setup


def _bundled(libdir, stem):
    for name in sorted(os.listdir(libdir)):
        if name.startswith(stem + "-") and ".so" in name:
            return name
    return None


def extensions():
    if os.environ.get("PERIODICA_NO_EXT"):
        return []
    try:
        import gmpy2
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"periodica: building without the compiled kernels ({exc})", file=sys.stderr)
        return []
    pkg = os.path.dirname(gmpy2.__file__)
    if not os.path.exists(os.path.join(pkg, "gmpy2.h")):
        print("periodica: gmpy2 headers not found; pure-Python build", file=sys.stderr)
        return []
    libdir = os.path.join(os.path.dirname(pkg), "gmpy2.libs")
    kw = {"libraries": ["mpc", "mpfr", "gmp"]}
    if os.path.isdir(libdir):
        names = [_bundled(libdir, s) for s in ("libmpc", "libmpfr", "libgmp")]
        if all(names):
            kw = {"libraries": [":" + n for n in names], "library_dirs": [libdir],
                  "runtime_library_dirs": [libdir]}
    ext = Extension("periodica._ckernels", ["src/periodica/_ckernels.pyx"],
                    include_dirs=[pkg], extra_compile_args=["-O2"], **kw)
    return cythonize([ext], language_level=3, include_path=[os.path.dirname(pkg)])


setup(ext_modules=extensions())
