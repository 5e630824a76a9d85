"""
This code is adopted from the PyBaMM project under the BSD-3-Clause

Copyright (c) 2018-2024, the PyBaMM team.
All rights reserved.

Redistribution and use in source and binary forms, with or without
modification, are permitted provided that the following conditions are met:

* Redistributions of source code must retain the above copyright notice, this
  list of conditions and the following disclaimer.

* Redistributions in binary form must reproduce the above copyright notice,
  this list of conditions and the following disclaimer in the documentation
  and/or other materials provided with the distribution.

* Neither the name of the copyright holder nor the names of its
  contributors may be used to endorse or promote products derived from
  this software without specific prior written permission.

THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS"
AND ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE
IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDER OR CONTRIBUTORS BE LIABLE
FOR ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL
DAMAGES (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR
SERVICES; LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER
CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY,
OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE
OF THIS SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.
"""

import contextlib
import importlib.metadata
import re
import sys
import textwrap
from collections.abc import Mapping
from typing import Callable


class EntryPoint(Mapping):
    """
    Dict-like interface to the experiment presets and the domain adaptation
    methods registered as entry points.
    Access via :py:data:`otda.parameter_sets` for experiment presets
    Access via :py:data:`otda.methods` and :py:func:`otda.Method` for methods

    Examples
    --------
    Listing available presets and methods:
        >>> import otda
        >>> list(otda.parameter_sets)
        ['ThreeClusters', ...]
        >>> list(otda.methods)
        ['DeepJDOT', ...]

    Get the docstring of a preset or method:

        >>> print(otda.methods.get_docstring("MixUnBOT"))
        <BLANKLINE>
        MixUp on both domains, symmetric cross-entropy label cost and unbalanced transport.
        ...
    """

    _instances = {}

    def __new__(cls, group):
        """One instance per entry-point group."""
        if group not in cls._instances:
            cls._instances[group] = super().__new__(cls)
        return cls._instances[group]

    def __init__(self, group):
        """Dict of entry points of ``group``, loaded lazily on first access."""
        if not hasattr(self, "group"):
            self.group = group
            self._all_entries = {}
            for entry_point in self.get_entries(self.group):
                self._all_entries[entry_point.name] = entry_point

    @staticmethod
    def get_entries(group_name):
        """Wrapper for the importlib version logic"""
        if sys.version_info < (3, 10):  # pragma: no cover
            return importlib.metadata.entry_points().get(group_name, [])
        return importlib.metadata.entry_points(group=group_name)

    def __getitem__(self, key):
        return self._load_entry_point(key)()

    def _load_entry_point(self, key) -> Callable:
        """Check that ``key`` is registered in the group and return its object,
        loading it if needed."""
        if key not in self._all_entries:
            msg = f"Unknown entry {key!r} in {self.group}, expected one of {sorted(self)}"
            raise KeyError(msg)
        entry = self._all_entries[key]
        with contextlib.suppress(AttributeError):
            entry = self._all_entries[key] = entry.load()
        return entry

    def load(self, key):
        """Registered object of ``key`` without calling it."""
        return self._load_entry_point(key)

    def resolve(self, name):
        """Registered key matching ``name`` up to case and underscores."""
        wanted = _normalize(name)
        for key in self._all_entries:
            if _normalize(key) == wanted:
                return key
        msg = f"Unknown entry {name!r} in {self.group}, expected one of {sorted(self)}"
        raise KeyError(msg)

    def __iter__(self):
        return self._all_entries.__iter__()

    def __len__(self) -> int:
        return len(self._all_entries)

    def get_docstring(self, key):
        """Return the docstring of the ``key`` preset or method"""
        return textwrap.dedent(self._load_entry_point(key).__doc__)


def _normalize(name):
    return re.sub(r"[_\-\s]", "", str(name)).lower()


#: Experiment presets, each a ``get_parameter_values`` function
parameter_sets = EntryPoint(group="otda.parameter_sets")

#: Domain adaptation methods, each a :class:`otda.models.base_method.BaseMethod` subclass
methods = EntryPoint(group="otda.methods")


def Method(name: str, label_loss=None):
    """
    Returns an instance of a registered domain adaptation method

    Parameters
    ----------
    name : str
        Method name, matched without regard to case or underscores, e.g.
        ``"mixunbot"``, ``"MixUnBOT"`` or ``"source_only"``.
    label_loss : str, optional
        ``"ce"`` or ``"sce"`` to override the label loss of the method
        (ablation variants such as ``deepjdot(sce)``).

    Returns
    -------
    otda.models.base_method.BaseMethod

    Examples
    --------
        >>> import otda
        >>> otda.Method("mixot")
        <otda.models.input.MixOT.MixOT object>
    """
    cls = methods.load(methods.resolve(name))
    return cls(label_loss=label_loss)
