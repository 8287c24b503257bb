"""Documentation and API convention checks over every nrdslab module."""

from __future__ import annotations

import inspect
import pkgutil
from importlib import import_module
from pathlib import Path
from types import ModuleType
from typing import Dict, Iterator, List, Tuple

import pytest
from numpydoc.docscrape import NumpyDocString

import nrdslab
from nrdslab.engine import errors

_NONE_ANNOTATIONS = {"none", "nonetype", "typing.none", "builtins.none", "builtins.nonetype"}


def _walk_modules() -> List[ModuleType]:
    """Import nrdslab and every submodule.

    Returns
    -------
    list of ModuleType
        Modules sorted by dotted name.
    """
    found: Dict[str, ModuleType] = {nrdslab.__name__: nrdslab}
    for info in pkgutil.walk_packages(nrdslab.__path__, prefix="nrdslab."):
        found[info.name] = import_module(info.name)
    return [found[name] for name in sorted(found)]


def _own_members(module: ModuleType) -> Iterator[Tuple[str, object]]:
    """Yield functions and classes defined in ``module`` and the methods of those classes.

    Parameters
    ----------
    module : ModuleType
        Module to scan.

    Yields
    ------
    tuple
        Qualified name and callable.
    """
    for _, obj in inspect.getmembers(module):
        if getattr(obj, "__module__", None) != module.__name__:
            continue
        if inspect.isfunction(obj):
            yield f"{module.__name__}.{obj.__qualname__}", obj
        elif inspect.isclass(obj):
            yield f"{module.__name__}.{obj.__qualname__}", obj
            for meth_name, meth in vars(obj).items():
                if meth_name.startswith("__"):
                    continue
                func = getattr(meth, "__func__", meth)
                if inspect.isfunction(func):
                    yield f"{module.__name__}.{func.__qualname__}", func


MODULES = _walk_modules()
CALLABLES = dict(item for module in MODULES for item in _own_members(module))


def _signature_params(obj: object) -> List[str]:
    """Return the parameter names a docstring must describe.

    Parameters
    ----------
    obj : object
        Function or class.

    Returns
    -------
    list of str
        Names without ``self``, ``cls`` and star arguments.
    """
    signature = inspect.signature(obj)
    skipped = (inspect.Parameter.VAR_POSITIONAL, inspect.Parameter.VAR_KEYWORD)
    return [p.name for p in signature.parameters.values() if p.kind not in skipped and p.name not in {"self", "cls"}]


def _returns_value(obj: object) -> bool:
    """Report whether a callable annotates a return value other than ``None``.

    Parameters
    ----------
    obj : object
        Function or class.

    Returns
    -------
    bool
        ``False`` for classes, missing annotations and ``None``.
    """
    if inspect.isclass(obj):
        return False
    annotation = inspect.signature(obj).return_annotation
    if annotation is inspect.Signature.empty or annotation in (None, type(None)):
        return False
    return not (isinstance(annotation, str) and annotation.strip().lower() in _NONE_ANNOTATIONS)


@pytest.mark.parametrize("module", MODULES, ids=lambda m: m.__name__)
def test_module_has_docstring_and_header(module: ModuleType) -> None:
    """Every module opens with the licence header and carries a summary docstring."""
    assert inspect.getdoc(module), f"{module.__name__} has no module docstring"
    source = Path(inspect.getfile(module)).read_text(encoding="utf-8")
    assert source.startswith("# Copyright (C) 2025 Richard Owen")


@pytest.mark.parametrize("name", sorted(CALLABLES))
def test_parameters_are_documented(name: str) -> None:
    """Every signature parameter appears in the Parameters section."""
    obj = CALLABLES[name]
    params = _signature_params(obj)
    if not params:
        pytest.skip("No parameters requiring documentation")
    docstring = inspect.getdoc(obj)
    documented = {entry.name for entry in NumpyDocString(docstring)["Parameters"]} if docstring else set()
    missing = [param for param in params if param not in documented]
    assert not missing, f"Docstring for {name} is missing parameter entries: {', '.join(missing)}"


@pytest.mark.parametrize("name", sorted(CALLABLES))
def test_returns_are_documented(name: str) -> None:
    """A Returns section accompanies every annotated non-None return value."""
    obj = CALLABLES[name]
    if not _returns_value(obj):
        pytest.skip("Return value does not require documentation")
    docstring = inspect.getdoc(obj)
    assert docstring and NumpyDocString(docstring)["Returns"], f"Docstring for {name} is missing a Returns section"


def test_errors_share_a_base_class() -> None:
    """Every exception raised by the library derives from ``LabError``."""
    classes = [obj for _, obj in inspect.getmembers(errors, inspect.isclass) if issubclass(obj, Exception)]
    assert errors.LabError in classes
    assert all(issubclass(cls, errors.LabError) for cls in classes)
    assert issubclass(errors.ConfigError, ValueError)
    assert issubclass(errors.DivergenceError, ArithmeticError)
