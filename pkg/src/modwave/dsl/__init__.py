"""Formula DSL: tokenizer, parser, validation and numeric evaluation."""

from .ast import (
    BinOp,
    Call,
    Const,
    Expr,
    Neg,
    Pow,
    Symbol,
    children,
    depth,
    op_count,
    to_text,
)
from .corpus import (
    CorpusEntry,
    bundled_corpus_path,
    bundled_generated_path,
    load_corpus,
    write_corpus,
)
from .evaluation import EvalContext, EvalResult, evaluate
from .lexer import FUNCTION_ARITY, MAX_FORMULA_CHARS, MAX_FORMULA_TOKENS, Token, tokenize
from .parser import DEFAULT_MAX_DEPTH, parse, parse_formula
from .symbols import CONSTANT, SIGNAL, SymbolTable, default_symbol_table
from .validation import (
    ARITY_FLAG,
    CLASS_ARITY,
    CLASS_OTHER,
    CLASS_UNBALANCED,
    CLASS_UNDEFINED,
    CLASS_VALID,
    CLASSES,
    MISSING_QUADRATURE,
    UNDEFINED_SYMBOL,
    ZERO_LITERAL_DIVISOR,
    ValidationFlag,
    ValidationReport,
    classify,
    validate,
)

__all__ = [
    "ARITY_FLAG",
    "BinOp",
    "CLASSES",
    "CLASS_ARITY",
    "CLASS_OTHER",
    "CLASS_UNBALANCED",
    "CLASS_UNDEFINED",
    "CLASS_VALID",
    "CONSTANT",
    "Call",
    "Const",
    "CorpusEntry",
    "DEFAULT_MAX_DEPTH",
    "EvalContext",
    "EvalResult",
    "Expr",
    "FUNCTION_ARITY",
    "MAX_FORMULA_CHARS",
    "MAX_FORMULA_TOKENS",
    "MISSING_QUADRATURE",
    "Neg",
    "Pow",
    "SIGNAL",
    "Symbol",
    "SymbolTable",
    "Token",
    "UNDEFINED_SYMBOL",
    "ValidationFlag",
    "ValidationReport",
    "ZERO_LITERAL_DIVISOR",
    "bundled_corpus_path",
    "bundled_generated_path",
    "children",
    "classify",
    "default_symbol_table",
    "depth",
    "evaluate",
    "load_corpus",
    "op_count",
    "parse",
    "parse_formula",
    "to_text",
    "tokenize",
    "validate",
    "write_corpus",
]
