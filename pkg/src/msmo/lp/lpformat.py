"""CPLEX-style LP text export and the matching parser.

Only the subset written by :func:`export_lp` is read back: one objective,
terms written as ``coef name`` or a bare ``name`` (coefficient 1),
named constraints with a single relation, a bounds section listing every
variable in column order, and ``End``.  Coefficients are written with
``repr`` so a round trip reproduces the problem bit for bit.
"""

from __future__ import annotations

import re

import numpy as np

from msmo.errors import InvalidNameError, LPParseError
from msmo.lp.problem import LPProblem

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_RESERVED = {"free", "inf", "infinity", "end", "bounds", "st", "subject", "to", "minimize", "maximize", "nan"}


def _check_name(name: str):
    if not isinstance(name, str) or not _NAME_RE.match(name) or name.lower() in _RESERVED:
        raise InvalidNameError(f"invalid LP identifier {name!r}")


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _expr(coeffs, names) -> str:
    parts = []
    for j in np.flatnonzero(coeffs):
        c = float(coeffs[j])
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        parts.append(f"{sign} {names[j]}" if mag == 1.0 else f"{sign} {_num(mag)} {names[j]}")
    if not parts:
        return f"0 {names[0]}" if names else "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[1:]


def _bound_line(name: str, lo: float, hi: float) -> str:
    if lo == -np.inf and hi == np.inf:
        return f"{name} free"
    if hi == np.inf:
        return f"{name} >= {_num(lo)}"
    lo_s = "-inf" if lo == -np.inf else _num(lo)
    return f"{lo_s} <= {name} <= {_num(hi)}"


def export_lp(p: LPProblem, title: str = "msmo") -> str:
    """Render ``p`` as LP interchange text."""
    for name in list(p.var_names) + list(p.row_names):
        _check_name(name)
    if len(set(p.var_names)) != len(p.var_names):
        raise InvalidNameError("variable names must be unique")
    if len(set(p.row_names)) != len(p.row_names):
        raise InvalidNameError("row names must be unique")
    lines = [f"\\ {title}", "Minimize" if p.sense == "min" else "Maximize"]
    lines.append(f" obj: {_expr(p.cost, p.var_names)}")
    lines.append("Subject To")
    for r in range(p.num_rows):
        lines.append(f" {p.row_names[r]}: {_expr(p.A[r], p.var_names)} {p.relations[r]} {_num(p.rhs[r])}")
    lines.append("Bounds")
    for j, name in enumerate(p.var_names):
        lines.append(" " + _bound_line(name, p.lower[j], p.upper[j]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _parse_number(tok: str) -> float:
    low = tok.lower()
    if low in ("inf", "+inf", "infinity", "+infinity"):
        return np.inf
    if low in ("-inf", "-infinity"):
        return -np.inf
    try:
        return float(tok)
    except ValueError:
        raise LPParseError(f"expected a number, got {tok!r}") from None


def _parse_expr(tokens: list) -> list:
    """Return ``[(coef, name), ...]`` from tokens like ``3 x - 2.5 y``."""
    terms = []
    sign = 1.0
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            i += 1
            continue
        if _NAME_RE.match(tok) and tok.lower() not in _RESERVED:
            terms.append((sign, tok))  # unit coefficient
            sign = 1.0
            i += 1
            continue
        if i + 1 >= len(tokens):
            raise LPParseError(f"dangling token {tok!r} in expression")
        coef = _parse_number(tok)
        if tok.startswith("-"):
            coef, sign = -abs(coef), 1.0
        terms.append((sign * coef, tokens[i + 1]))
        sign = 1.0
        i += 2
    return terms


def parse_lp(text: str) -> LPProblem:
    """Parse text produced by :func:`export_lp` back into an :class:`LPProblem`."""
    section = None
    sense = None
    obj_terms = []
    rows = []  # (name, terms, rel, rhs)
    bounds = []  # (name, lo, hi)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        key = line.lower()
        if key in ("minimize", "maximize"):
            sense = "min" if key == "minimize" else "max"
            section = "obj"
            continue
        if key == "subject to":
            section = "st"
            continue
        if key == "bounds":
            section = "bounds"
            continue
        if key == "end":
            section = "end"
            continue
        try:
            if section == "obj":
                _, body = line.split(":", 1)
                obj_terms = _parse_expr(body.split())
            elif section == "st":
                name, body = line.split(":", 1)
                toks = body.split()
                rel = toks[-2]
                rows.append((name.strip(), _parse_expr(toks[:-2]), rel, _parse_number(toks[-1])))
            elif section == "bounds":
                toks = line.split()
                if len(toks) == 2 and toks[1].lower() == "free":
                    bounds.append((toks[0], -np.inf, np.inf))
                elif len(toks) == 3 and toks[1] == ">=":
                    bounds.append((toks[0], _parse_number(toks[2]), np.inf))
                elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                    bounds.append((toks[2], _parse_number(toks[0]), _parse_number(toks[4])))
                else:
                    raise LPParseError(f"unrecognised bound {line!r}")
            else:
                raise LPParseError(f"content outside a section: {line!r}")
        except LPParseError as exc:
            raise LPParseError(f"line {lineno}: {exc}") from None
        except (ValueError, IndexError):
            raise LPParseError(f"line {lineno}: cannot parse {line!r}") from None
    if sense is None:
        raise LPParseError("missing objective section")
    names = [b[0] for b in bounds]
    index = {nm: j for j, nm in enumerate(names)}
    n = len(names)

    def dense(terms):
        v = np.zeros(n)
        for c, nm in terms:
            if nm not in index:
                raise LPParseError(f"variable {nm!r} missing from bounds section")
            v[index[nm]] += c
        return v

    A = np.array([dense(t) for _, t, _, _ in rows]) if rows else np.zeros((0, n))
    return LPProblem(
        cost=dense(obj_terms),
        A=A,
        relations=[r for _, _, r, _ in rows],
        rhs=[b for _, _, _, b in rows],
        lower=[b[1] for b in bounds],
        upper=[b[2] for b in bounds],
        sense=sense,
        var_names=names,
        row_names=[nm for nm, _, _, _ in rows],
    )
