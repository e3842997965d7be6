"""A workbench for the higher-order pi-calculus with recursive types."""

from .grammar import ParseError, parse, parse_document, parse_type, show, show_type
from .syntax import (
    Abs,
    App,
    Chan,
    Input,
    Lambda,
    Match,
    Name,
    New,
    Nil,
    Output,
    Par,
    Rec,
    Repl,
    Resource,
    Term,
    TriggerCall,
    TypeExpr,
    TypeVar,
    Unit,
    UnitVal,
    Var,
    NIL,
    UNIT,
    UNIT_VAL,
)

__version__ = "0.1.0"
