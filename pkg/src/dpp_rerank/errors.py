"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user-supplied data: malformed files, bad parameters, broken
    preconditions. The CLI maps this to exit code 1."""


class NonPSDKernelError(InputError):
    """A kernel turned out not to be positive semi-definite during
    factorization (residual conditional variance below tolerance)."""
