"""formflow: exterior-form tools for first-order PDEs, Hamiltonian systems
and closure checks on sampled electromagnetic fields."""

__version__ = "0.1.0"

from .expr import Expression, differentiate, evaluate, evaluate_array, parse, substitute
from .forms import Chart, DifferentialForm, commutator, exterior_derivative, hodge_star, wedge

__all__ = [
    "__version__",
    "Expression",
    "parse",
    "evaluate",
    "evaluate_array",
    "differentiate",
    "substitute",
    "Chart",
    "DifferentialForm",
    "wedge",
    "exterior_derivative",
    "commutator",
    "hodge_star",
]
