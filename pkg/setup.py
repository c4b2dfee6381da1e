from setuptools import Extension, setup
from Cython.Build import cythonize

# -O3 but deliberately no -ffast-math, and fp contraction off: the compiled
# kernel must produce bit-identical trajectories to the pure-Python fallback,
# so no FMA fusing of a*b + c is allowed.
extensions = [
    Extension(
        "noiselab._kernels._ckernels",
        ["src/noiselab/_kernels/_ckernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
