"""
Text, JSON and LaTeX renderings of a command report. All three are built
from the same payload: fractions are stored in their JSON form and turned
into sympy expressions for the human-readable outputs.
"""
import json
from collections import Counter
from typing import TYPE_CHECKING, Any, Callable

import sympy
from rich.console import Console
from rich.table import Table
from sympy.ntheory import divisors

from stringy.arcspace import ArcFraction
from stringy.exactring import CyclotomicMultiset, StringyFraction
from utils.codec import arc_fraction_from_json, fraction_from_json
from utils.settings import OutputFormat

if TYPE_CHECKING:
    from controllers.stringy_controller import Report

u, v, tau, theta = sympy.symbols("u v tau theta")


def _as_binomials(den: CyclotomicMultiset) -> tuple[list[int], Counter]:
    """
    Split a cyclotomic product into factors x^b - 1 where possible; the
    leftover Phi_m are returned separately.
    """
    remaining = Counter(den.factors)
    binomials: list[int] = []
    for m in sorted(remaining, reverse=True):
        while remaining[m] and all(remaining[k] for k in divisors(m)):
            for k in divisors(m):
                remaining[k] -= 1
            binomials.append(m)
    return sorted(binomials), +remaining


def _denominator(den: CyclotomicMultiset, root: sympy.Expr, root_index: int) -> sympy.Expr:
    binomials, rest = _as_binomials(den)
    factors = [root ** sympy.Rational(b, root_index) - 1 for b in binomials]
    w = sympy.Symbol("w")
    for m, mult in sorted(rest.items()):
        phi = sympy.cyclotomic_poly(m, w).subs(w, root ** sympy.Rational(1, root_index))
        factors.extend([phi] * mult)
    return sympy.Mul(*factors, evaluate=False) if factors else sympy.Integer(1)


def _quotient(num: sympy.Expr, den: sympy.Expr) -> sympy.Expr:
    if den == 1:
        return num
    return sympy.Mul(num, sympy.Pow(den, -1, evaluate=False), evaluate=False)


def fraction_expr(f: StringyFraction) -> sympy.Expr:
    num = sympy.Add(
        *(coeff * u ** a * v ** b * (u * v) ** sympy.Rational(c, f.N) for (a, b, c), coeff in sorted(f.num.items()))
    )
    return _quotient(num, _denominator(f.den, u * v, f.N))


def arc_expr(f: ArcFraction) -> sympy.Expr:
    num = sympy.Add(
        *(coeff * tau ** t * theta ** sympy.Rational(s.numerator, s.denominator) for (t, s), coeff in sorted(f.num.items()))
    )
    return _quotient(num, _denominator(f.den, theta, f.M))


def fraction_text(f: StringyFraction) -> str:
    return sympy.sstr(fraction_expr(f))


def arc_text(f: ArcFraction) -> str:
    return sympy.sstr(arc_expr(f))


def _is_fraction(value) -> bool:
    return isinstance(value, dict) and {"N", "num", "den"} <= value.keys()


def _is_arc(value) -> bool:
    return isinstance(value, dict) and {"M", "num", "den"} <= value.keys()


def _is_rational(value) -> bool:
    return isinstance(value, str) and value.count("/") == 1 and value.replace("/", "").lstrip("-").isdigit()


def _convert(value: Any, printer: Callable[[sympy.Expr], str], plain: Callable[[Any], str]) -> str:
    if _is_fraction(value):
        return printer(fraction_expr(fraction_from_json(value)))
    if _is_arc(value):
        return printer(arc_expr(arc_fraction_from_json(value)))
    if _is_rational(value):
        return printer(sympy.Rational(*map(int, value.split("/"))))
    return plain(value)


def text_value(value: Any) -> str:
    return _convert(value, sympy.sstr, lambda x: x if isinstance(x, str) else json.dumps(x))


_LATEX_SPECIAL = {"\\": r"\textbackslash{}", "_": r"\_", "{": r"\{", "}": r"\}", "#": r"\#", "%": r"\%", "&": r"\&", "$": r"\$"}


def _latex_escape(s: str) -> str:
    return "".join(_LATEX_SPECIAL.get(ch, ch) for ch in s)


def latex_value(value: Any) -> str:
    def plain(x):
        s = x if isinstance(x, str) else json.dumps(x)
        return "\\texttt{" + _latex_escape(s) + "}"

    return _convert(value, lambda e: "$" + sympy.latex(e) + "$", plain)


def render_text(report: "Report", console: Console) -> None:
    table = Table(title=report.title)
    table.add_column("check")
    table.add_column("status")
    table.add_column("field")
    table.add_column("value", overflow="fold")
    for entry in report.entries:
        if not entry.payload:
            table.add_row(entry.name, entry.status.value, "", "")
        for i, (key, value) in enumerate(entry.payload.items()):
            table.add_row(entry.name if i == 0 else "", entry.status.value if i == 0 else "", key, text_value(value))
    console.print(table)


def render_json(report: "Report") -> str:
    return json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True)


def render_latex(report: "Report") -> str:
    lines = ["\\begin{itemize}"]
    for entry in report.entries:
        lines.append(f"  \\item \\textbf{{{_latex_escape(entry.name)}}} ({entry.status.value})")
        if entry.payload:
            lines.append("  \\begin{itemize}")
            for key, value in entry.payload.items():
                lines.append(f"    \\item {_latex_escape(key)}: {latex_value(value)}")
            lines.append("  \\end{itemize}")
    lines.append("\\end{itemize}")
    return "\n".join(lines)


def emit(report: "Report", output: OutputFormat, console: Console | None = None) -> None:
    console = console or Console()
    output = OutputFormat(output)
    if output == OutputFormat.JSON:
        console.print(render_json(report), markup=False, highlight=False, soft_wrap=True)
    elif output == OutputFormat.LATEX:
        console.print(render_latex(report), markup=False, highlight=False, soft_wrap=True)
    else:
        render_text(report, console)
