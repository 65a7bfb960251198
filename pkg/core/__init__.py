# Numerical core of the cube-root Loewner toolkit
