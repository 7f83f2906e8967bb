"""Exceptions raised by matmi.

The command line maps each family onto an exit status: input problems exit
with 2, numerical failures with 3.
"""


class MatmiError(Exception):
    """Base class of all matmi errors"""


class InputError(MatmiError):
    """Invalid user input: unknown phantom, bad configuration value etc."""


class MeshMismatchError(InputError):
    """Two fields that must share a mesh do not"""


class FieldFileError(InputError):
    """A field file or manifest could not be read

    Parameters
    ----------
    path : :obj:`str`
        The offending file
    message : :obj:`str`
        What is wrong with it
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class CoefficientBoundError(MatmiError):
    """A coefficient violates its admissible bounds at some node

    Parameters
    ----------
    node : :obj:`int`
        Index of the first offending node
    message : :obj:`str`
        Description of the violated bound
    """

    def __init__(self, node, message):
        self.node = node
        super().__init__(f"node {node}: {message}")


class SolverError(MatmiError):
    """An iterative solve did not converge

    Parameters
    ----------
    message : :obj:`str`
        Diagnostic message
    residuals : :obj:`list`
        Relative residual history of the failed solve
    """

    def __init__(self, message, residuals=None):
        self.residuals = list(residuals or [])
        super().__init__(message)


class DegenerateTransportError(SolverError):
    """The transport problem has no unique solution"""


class ReconstructionError(SolverError):
    """A reconstruction run failed

    Parameters
    ----------
    iteration : :obj:`int`
        Iteration at which the run failed
    message : :obj:`str`
        Diagnostic message
    """

    def __init__(self, iteration, message, residuals=None):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}",
                         residuals=residuals)
