"""Procedure-code suggestion from diagnosis codes and encounter context.

Three predictors behind one suggest interface: a character-embedding
neural network trained with hand-derived gradients, a count-based
probabilistic model, and association rules mined level-wise. Shared
age/gender post-filtering, a precision/recall@K harness, a CLI, and an
HTTP service tie them together.
"""

__version__ = "0.1.0"
