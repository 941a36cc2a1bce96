"""Exact symbolic kernel: jets, grammar, calculus and the zero oracle."""

from .calculus import SLOTS, partial, substitute, total_derivative
from .grammar import Grammar, ParseError, parse, to_text
from .jets import (
    DEFAULT_FIELDS,
    FunctionSymbol,
    JetVariable,
    decode,
    default_fields,
    field_symbols,
    function_atoms,
    has_functions,
    jet,
    jet_of,
    jets_in,
)
from .rational import Chart, Frac, Inconclusive, KernelError
from .zero import (
    canonical_zero,
    is_zero,
    normalize,
    random_function_bindings,
    random_point,
    random_polynomial,
    specialized_zero,
)

__all__ = [
    "Chart",
    "DEFAULT_FIELDS",
    "Frac",
    "FunctionSymbol",
    "Grammar",
    "Inconclusive",
    "JetVariable",
    "KernelError",
    "ParseError",
    "SLOTS",
    "canonical_zero",
    "decode",
    "default_fields",
    "field_symbols",
    "function_atoms",
    "has_functions",
    "is_zero",
    "jet",
    "jet_of",
    "jets_in",
    "normalize",
    "parse",
    "partial",
    "random_function_bindings",
    "random_point",
    "random_polynomial",
    "specialized_zero",
    "substitute",
    "to_text",
    "total_derivative",
]
