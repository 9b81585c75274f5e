"""distillkit: teacher-student knowledge distillation with unlabeled data,
built on a small from-scratch CNN/autograd stack."""

__version__ = "0.1.0"

from .autograd import Tensor  # noqa: F401
from .backend import active_backend, set_backend  # noqa: F401
