"""One-clean-qubit (DQC1) quantum kernel simulation and classification.

Subsystems: dense complex tensor ops (``tensor``), feature-map circuit
compilation (``circuit``), the DQC1 readout engine (``dqc1``), Gram
assembly with classical baselines (``kernel``), an SMO-based SVM (``svm``),
synthetic dataset generation (``datasets``), and the experiment CLI
(``cli``).  The SVM hot loop uses a compiled core when available; see
``dqc1kernel.solver_backend()``.
"""
from ._backend import BACKEND as _solver_backend_name

__version__ = "0.1.0"


def solver_backend() -> str:
    """Name of the active SMO backend: 'compiled' or 'pure-python'."""
    return _solver_backend_name
