"""Coefficient fields ``f(x)`` with a stable text descriptor.

The descriptor is what identifies a field in reference-cache metadata, so two
fields with the same descriptor must evaluate identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "cosh", "sinh", "abs", "pi")
}


@dataclass(frozen=True)
class CoefficientField:
    descriptor: str
    func: Callable[[np.ndarray], np.ndarray]
    constant: float | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape).copy()

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def __reduce__(self):
        # closures do not pickle; worker processes rebuild from the descriptor
        return field_from_descriptor, (self.descriptor,)


def constant_field(value: float) -> CoefficientField:
    value = float(value)
    return CoefficientField(f"const:{value!r}", lambda x: np.full_like(x, value), constant=value)


def sin_plus_2() -> CoefficientField:
    return CoefficientField("expr:sin(x)+2", lambda x: np.sin(x) + 2.0)


def expression_field(expr: str) -> CoefficientField:
    """Field from a numpy expression in ``x``, e.g. ``"2 + cos(3*x)"``."""
    code = compile(expr, "<coefficient>", "eval")
    for name in code.co_names:
        if name != "x" and name not in _EXPR_NAMESPACE:
            raise ValueError(f"unknown name {name!r} in coefficient expression")

    def func(x):
        return eval(code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, "x": x})

    return CoefficientField(f"expr:{expr}", func)


def field_from_case(case: str) -> CoefficientField:
    """Resolve the harness names ``const10`` and ``sinp2`` (or an expression)."""
    key = case.strip()
    if key == "const10":
        return constant_field(10.0)
    if key in ("sinp2", "sin_plus_2"):
        return sin_plus_2()
    if key.startswith("expr:"):
        key = key[5:]
    return expression_field(key)


def field_from_descriptor(descriptor: str) -> CoefficientField:
    """Inverse of ``CoefficientField.descriptor``."""
    kind, _, body = descriptor.partition(":")
    if kind == "const":
        return constant_field(float(body))
    if kind == "expr":
        return sin_plus_2() if body == "sin(x)+2" else expression_field(body)
    raise ValueError(f"unknown coefficient descriptor {descriptor!r}")
