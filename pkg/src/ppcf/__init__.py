"""Probabilistic PCF workbench: reduction chains, coherence-space semantics,
and testing terms for separating programs."""

import sys

from .syntax import (
    NAT,
    Abs,
    App,
    Arrow,
    Coin,
    Fix,
    Hole,
    If,
    Nat,
    Num,
    ParseError,
    PPCFError,
    Succ,
    TypingError,
    Var,
    alpha_eq,
    canonical,
    fill,
    parse,
    parse_type,
    pretty,
    subst,
    typecheck,
)

# deep fix unfoldings recurse through nested applications
if sys.getrecursionlimit() < 10000:
    sys.setrecursionlimit(10000)

__version__ = "0.1.0"
