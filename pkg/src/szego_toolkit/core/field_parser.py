"""Compile text field descriptions (chart potentials, Gram entries) into jet callables.

Grammar: numbers (``1j`` allowed), names ``z1..zn``, ``zb1..zbn``, ``pi``, the operators
``+ - * / **`` and the functions ``log``, ``exp``, ``sqrt``, ``conj``.  Nothing else is
accepted; the text is never passed to ``eval``.
"""
import ast
import math
import re
import logging
from typing import Callable, Dict, List, Sequence

from . import jet_engine
from .errors import ConfigError

logger = logging.getLogger(__name__)

_FUNCTIONS: Dict[str, Callable] = {
    'log': jet_engine.log,
    'exp': jet_engine.exp,
    'sqrt': jet_engine.sqrt,
    'conj': jet_engine.conj,
}
_NAME = re.compile(r'^(z|zb)([1-9])$')


class CompiledField:
    """A parsed field description, callable as ``field(zs, zbs)``."""

    __slots__ = ('text', 'n', '_tree')

    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        try:
            self._tree = ast.parse(text.strip(), mode='eval').body
        except SyntaxError as e:
            raise ConfigError(f"cannot parse field '{text}': {e.msg}") from None
        # Reject anything outside the grammar before the first evaluation
        self._check(self._tree)

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
                raise ConfigError(f"operator {type(node.op).__name__} not allowed in '{self.text}'")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.UAdd, ast.USub)):
                raise ConfigError(f"operator {type(node.op).__name__} not allowed in '{self.text}'")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS or node.keywords \
                    or len(node.args) != 1:
                raise ConfigError(f"unsupported call in '{self.text}'")
            self._check(node.args[0])
        elif isinstance(node, ast.Name):
            if node.id == 'pi':
                return
            match = _NAME.match(node.id)
            if not match or int(match.group(2)) > self.n:
                raise ConfigError(f"unknown name '{node.id}' in '{self.text}' (n={self.n})")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float, complex)) or isinstance(node.value, bool):
                raise ConfigError(f"unsupported constant {node.value!r} in '{self.text}'")
        else:
            raise ConfigError(f"unsupported syntax {type(node).__name__} in '{self.text}'")

    def _eval(self, node, zs: Sequence, zbs: Sequence):
        if isinstance(node, ast.BinOp):
            left, right = self._eval(node.left, zs, zbs), self._eval(node.right, zs, zbs)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                return left / right
            return left ** right
        if isinstance(node, ast.UnaryOp):
            value = self._eval(node.operand, zs, zbs)
            return -value if isinstance(node.op, ast.USub) else value
        if isinstance(node, ast.Call):
            return _FUNCTIONS[node.func.id](self._eval(node.args[0], zs, zbs))
        if isinstance(node, ast.Name):
            if node.id == 'pi':
                return math.pi
            match = _NAME.match(node.id)
            index = int(match.group(2)) - 1
            # names are 1-based
            return zs[index] if match.group(1) == 'z' else zbs[index]
        # Constant
        return node.value

    def __call__(self, zs: Sequence, zbs: Sequence):
        return self._eval(self._tree, zs, zbs)

    def __repr__(self):
        return f"CompiledField({self.text!r}, n={self.n})"


def compile_field(text: str, n: int) -> CompiledField:
    return CompiledField(text, n)


def compile_matrix(texts: Sequence[Sequence[str]], n: int) -> Callable:
    """Compile an n x n table of entry descriptions into ``(zs, zbs) -> list of rows``."""
    if len(texts) != n or any(len(row) != n for row in texts):
        raise ConfigError(f"Gram description must be {n}x{n}")
    compiled: List[List[CompiledField]] = [[CompiledField(t, n) for t in row] for row in texts]

    def gram(zs, zbs):
        return [[entry(zs, zbs) for entry in row] for row in compiled]

    return gram
