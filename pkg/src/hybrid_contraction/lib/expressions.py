"""Declarative JSON system definitions: pydantic schema, a whitelist screen for expressions, sympy compilation.

Expressions are plain arithmetic over the state coordinates ``x1 .. xn`` (1-based) of the mode they belong to, the
time ``t`` and named parameters. Allowed operators are ``+ - * / **`` and unary minus; allowed functions are
``exp log sqrt sin cos tan tanh abs min max``. Every derivative the library needs is taken symbolically.
"""

import ast
import json
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import sympy as sp
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import ValidationError

from .arrays import Vector
from .config import BoxRegion
from .config import box
from .exceptions import ConfigurationError
from .exceptions import DimensionMismatchError
from .exceptions import ExpressionError
from .model import GuardSpec
from .model import HybridSystemSpec
from .model import ModeSpec
from .model import Predicate
from .model import ResetSpec
from .model import Transition
from .norms import NormKind
from .norms import NormSpec

logger = logging.getLogger(__name__)

TIME_SYMBOL = "t"
_FUNCTIONS: dict[str, Any] = {
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "tanh": sp.tanh,
    "abs": sp.Abs,
    "min": sp.Min,
    "max": sp.Max,
}
_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
)


class NormDefinition(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: NormKind = NormKind.L2
    weight: list[list[float]] | None = None


class RegionDefinition(BaseModel):
    model_config = ConfigDict(frozen=True)

    lower: list[float]
    upper: list[float]


class ModeDefinition(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    dim: int = Field(ge=0)
    norm: NormDefinition = NormDefinition()
    field: list[str]
    constraints: list[str] = Field(default_factory=list)
    region: RegionDefinition | None = None


class TransitionDefinition(BaseModel):
    """``active``, when given, is an expression that must be positive for the guard to apply."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    source: str = Field(alias="from")
    target: str = Field(alias="to")
    guard: str
    reset: list[str]
    active: str | None = None


class SystemDefinition(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    parameters: dict[str, float] = Field(default_factory=dict)
    time_window: tuple[float, float] = (0.0, 1.0)
    max_events_per_unit_time: int = Field(default=1000, ge=1)
    modes: list[ModeDefinition]
    transitions: list[TransitionDefinition] = Field(default_factory=list)


def screen_expression(text: str) -> None:
    """Reject anything outside the arithmetic grammar before sympy ever sees the text."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as e:
        raise ExpressionError(f"Cannot parse expression {text!r}: {e.msg}") from e
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ExpressionError(f"Expression {text!r} uses unsupported syntax {type(node).__name__}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, int | float):
            raise ExpressionError(f"Expression {text!r} contains a non-numeric literal {node.value!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ExpressionError(f"Expression {text!r} calls a function outside {sorted(_FUNCTIONS)}")
            if node.keywords:
                raise ExpressionError(f"Expression {text!r} passes keyword arguments")


class _Scope:
    """Symbols visible to the expressions of one mode."""

    def __init__(self, dim: int, parameters: dict[str, float]):
        self.time = sp.Symbol(TIME_SYMBOL, real=True)
        self.states = [sp.Symbol(f"x{index + 1}", real=True) for index in range(dim)]
        reserved = {TIME_SYMBOL, *_FUNCTIONS, *(str(symbol) for symbol in self.states)}
        clashes = sorted(reserved & set(parameters))
        if clashes:
            raise ExpressionError(f"Parameter names {clashes} clash with reserved identifiers")
        self.parameters = parameters
        self.namespace: dict[str, Any] = {**_FUNCTIONS, TIME_SYMBOL: self.time}
        self.namespace.update({str(symbol): symbol for symbol in self.states})
        self.namespace.update({name: sp.Float(value) for name, value in parameters.items()})

    def parse(self, text: str) -> sp.Expr:
        screen_expression(text)
        tree = ast.parse(text.strip(), mode="eval")
        unknown = sorted(
            {node.id for node in ast.walk(tree) if isinstance(node, ast.Name) and node.id not in self.namespace}
        )
        if unknown:
            raise ExpressionError(f"Expression {text!r} references unknown identifiers {unknown}")
        return sp.sympify(text, locals=self.namespace)

    def compile(self, expression: Any) -> Callable[..., Any]:  # noqa: ANN401 # sympy expressions and matrices
        return sp.lambdify((self.time, *self.states), expression, modules="numpy")


def _vector_function(scope: _Scope, entries: list[Any]) -> Callable[[float, Vector], Vector]:
    size = len(entries)
    if size == 0:
        return lambda _t, _x: np.zeros(0)
    compiled = scope.compile(sp.Matrix(entries))
    return lambda t, x: np.asarray(compiled(t, *x), dtype=np.float64).reshape(size)


def _matrix_function(scope: _Scope, entries: list[Any], columns: int) -> Callable[[float, Vector], Any]:
    rows = len(entries)
    if rows == 0 or columns == 0:
        return lambda _t, _x: np.zeros((rows, columns))
    compiled = scope.compile(sp.Matrix(entries).jacobian(scope.states))
    return lambda t, x: np.asarray(compiled(t, *x), dtype=np.float64).reshape(rows, columns)


def _scalar_function(
    scope: _Scope,
    expression: Any,  # noqa: ANN401 # sympy expression
) -> Callable[[float, Vector], float]:
    compiled = scope.compile(expression)
    return lambda t, x: float(compiled(t, *x))


def _positive(function: Callable[[float, Vector], float]) -> Predicate:
    return lambda t, x: function(t, x) > 0.0


def _norm(definition: NormDefinition, dim: int) -> NormSpec:
    weight = None if definition.weight is None else np.asarray(definition.weight, dtype=np.float64)
    return NormSpec(kind=definition.kind, dim=dim, weight=weight)


def _region(definition: RegionDefinition | None) -> BoxRegion | None:
    return None if definition is None else box(definition.lower, definition.upper)


def _build_mode(definition: ModeDefinition, parameters: dict[str, float]) -> ModeSpec:
    if len(definition.field) != definition.dim:
        raise DimensionMismatchError(
            expected=definition.dim, actual=len(definition.field), what=f"field of mode {definition.id}"
        )
    scope = _Scope(definition.dim, parameters)
    entries = [scope.parse(text) for text in definition.field]
    constraints = [scope.parse(text) for text in definition.constraints]
    return ModeSpec(
        id=definition.id,
        dim=definition.dim,
        norm=_norm(definition.norm, definition.dim),
        field=_vector_function(scope, entries),
        jacobian=_matrix_function(scope, entries, definition.dim) if definition.dim > 0 else None,
        time_partial=_vector_function(scope, [sp.diff(entry, scope.time) for entry in entries]),
        constraints=_vector_function(scope, constraints) if constraints else None,
        region=_region(definition.region),
    )


def _build_transition(
    definition: TransitionDefinition, dims: dict[str, int], parameters: dict[str, float]
) -> Transition:
    for endpoint in (definition.source, definition.target):
        if endpoint not in dims:
            raise ConfigurationError(
                f"Transition {definition.source}->{definition.target} names unknown mode {endpoint}"
            )
    source_dim, target_dim = dims[definition.source], dims[definition.target]
    if len(definition.reset) != target_dim:
        raise DimensionMismatchError(
            expected=target_dim, actual=len(definition.reset), what=f"reset {definition.source}->{definition.target}"
        )
    scope = _Scope(source_dim, parameters)
    guard = scope.parse(definition.guard)
    reset = [scope.parse(text) for text in definition.reset]
    active = None if definition.active is None else _positive(_scalar_function(scope, scope.parse(definition.active)))
    gradient = [sp.diff(guard, symbol) for symbol in scope.states]
    return Transition(
        guard=GuardSpec(
            source=definition.source,
            target=definition.target,
            g=_scalar_function(scope, guard),
            grad_x=_vector_function(scope, gradient),
            d_t=_scalar_function(scope, sp.diff(guard, scope.time)),
            active=active,
        ),
        reset=ResetSpec(
            source=definition.source,
            target=definition.target,
            map=_vector_function(scope, reset),
            jac_x=_matrix_function(scope, reset, source_dim),
            d_t=_vector_function(scope, [sp.diff(entry, scope.time) for entry in reset]),
        ),
    )


def build_system(definition: SystemDefinition, overrides: dict[str, float] | None = None) -> HybridSystemSpec:
    """Compile a definition into a system; ``overrides`` replace declared parameter values."""
    parameters = dict(definition.parameters)
    for name, value in (overrides or {}).items():
        if name not in parameters:
            raise ConfigurationError(
                f"System {definition.name} has no parameter {name!r}; known: {sorted(parameters)}"
            )
        parameters[name] = value
    modes = tuple(_build_mode(mode, parameters) for mode in definition.modes)
    dims = {mode.id: mode.dim for mode in definition.modes}
    transitions = tuple(_build_transition(transition, dims, parameters) for transition in definition.transitions)
    logger.info(f"Compiled system {definition.name} with {len(modes)} mode(s) and {len(transitions)} transition(s)")
    return HybridSystemSpec(
        name=definition.name,
        modes=modes,
        transitions=transitions,
        time_window=definition.time_window,
        max_events_per_unit_time=definition.max_events_per_unit_time,
    )


def load_system_definition(path: Path) -> SystemDefinition:
    if not path.is_file():
        raise ConfigurationError(f"System definition file {path} does not exist")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"System definition file {path} is not valid JSON: {e}") from e
    try:
        return SystemDefinition.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"System definition file {path} does not match the schema: {e}") from e
