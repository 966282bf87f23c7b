import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

# property tests stay randomized (they caught a real subnormal-underflow
# bug); the wall-clock deadline is disabled so slow machines do not flake
settings.register_profile("repdpos", deadline=None)
settings.load_profile("repdpos")
