"""
Outcome Gate - Classifies a command's outcome and picks the exit code.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Literal, Optional

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .errors import (
    BudgetExhausted,
    DegenerateNesting,
    DenominatorVanishes,
    Infeasible,
    NoCorrelationFound,
    NonCommuting,
    NotCorrelated,
    NotFound,
    NotSpacelikeSeparated,
    ProductState,
    ZeroConditioningEvent,
)

# Type for decision outcomes
Decision = Literal["success", "negative", "failure"]

EXIT_CODES: Dict[str, int] = {"success": 0, "failure": 1, "negative": 2}

# Errors that are scientific answers rather than software faults
NEGATIVE_ERRORS = (
    BudgetExhausted,
    DegenerateNesting,
    DenominatorVanishes,
    Infeasible,
    NoCorrelationFound,
    NonCommuting,
    NotCorrelated,
    NotFound,
    NotSpacelikeSeparated,
    ProductState,
    ZeroConditioningEvent,
)


@dataclass
class Outcome:
    """What a command produced: a verdict flag, an error, and summary lines."""

    command: str
    valid: Optional[bool] = None
    error: Optional[BaseException] = None
    summary: Dict[str, Any] = field(default_factory=dict)


class OutcomeGate:
    """Maps outcomes to success / negative / failure."""

    def __init__(self, console: Optional[Console] = None):
        """
        Initialize outcome gate.

        Args:
            console: Console for panels. Defaults to stderr so stdout stays machine-readable.
        """
        self.console = console or Console(stderr=True)

    def evaluate(self, outcome: Outcome) -> Decision:
        """
        Classify an outcome.

        Args:
            outcome: Command outcome

        Returns:
            Decision: "success", "negative", or "failure"
        """
        if outcome.error is not None:
            return "negative" if isinstance(outcome.error, NEGATIVE_ERRORS) else "failure"
        if outcome.valid is False:
            return "negative"
        return "success"

    @staticmethod
    def exit_code(decision: Decision) -> int:
        return EXIT_CODES[decision]

    def print_decision(self, decision: Decision, outcome: Outcome) -> None:
        """Print a panel describing the outcome."""
        table = Table(show_header=False, box=None)
        table.add_column("", style="bold")
        table.add_column("")
        for key, value in outcome.summary.items():
            table.add_row(str(key), str(value))

        if decision == "success":
            title, style = "[bold green]✅ SUCCESS[/bold green]", "green"
        elif decision == "negative":
            title, style = "[bold yellow]⚠️  NEGATIVE RESULT[/bold yellow]", "yellow"
        else:
            title, style = "[bold red]❌ FAILURE[/bold red]", "red"

        lines = [title]
        if outcome.error is not None:
            lines.append(f"\n{type(outcome.error).__name__}: {outcome.error}")
        self.console.print()
        self.console.print(Panel("\n".join(lines), title=outcome.command, border_style=style))
        if outcome.summary:
            self.console.print(table)
