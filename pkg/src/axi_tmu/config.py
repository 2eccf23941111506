"""
Software-visible register file and flat ``key=value`` config files.

Register offsets are assigned in 4-byte strides from 0x00 in the order of
``REGISTERS``. Config-file keys and ``--set`` overrides use the lower-case
register names.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .guard import PRESCALER_STEPS, BudgetConfig, Variant, counter_bits


class LogLevel(enum.IntEnum):
    OFF = 0
    ERRORS = 1
    FULL = 2


class RegErrorKind(enum.Enum):
    INVALID_OFFSET = "InvalidOffset"
    IN_FLIGHT_RESTRICTION = "InFlightRestriction"
    RANGE_VIOLATION = "RangeViolation"


class RegError(Exception):
    def __init__(self, kind: RegErrorKind, message: str):
        super().__init__(f"{kind.value}: {message}")
        self.kind = kind


@dataclass(frozen=True)
class Register:
    name: str
    writable: bool
    field: str  # attribute on RegisterFile, or "budgets.<attr>", or "stats.<key>"


REGISTERS = (
    Register("ENABLE", True, "enable"),
    Register("VARIANT", False, "variant"),
    Register("PRESCALER_STEP", True, "prescaler_step"),
    Register("IRQ_ENABLE", True, "irq_enable"),
    Register("LOG_LEVEL", True, "log_level"),
    Register("BUDGET_P1", True, "budgets.p1"),
    Register("BUDGET_P3", True, "budgets.p3"),
    Register("BUDGET_P5", True, "budgets.p5"),
    Register("BUDGET_P6", True, "budgets.p6"),
    Register("BUDGET_R1", True, "budgets.r1"),
    Register("BUDGET_R3", True, "budgets.r3"),
    Register("BUDGET_R5", True, "budgets.r5"),
    Register("TC_BUDGET", True, "budgets.tc_total"),
    Register("UNIT_BUDGET_PER_BEAT", True, "budgets.unit_budget_per_beat"),
    Register("QUEUE_WAIT_BASE", True, "budgets.queue_wait_base"),
    Register("QUEUE_WAIT_PER_OUTSTANDING", True, "budgets.queue_wait_per_outstanding"),
    Register("MAX_BUDGET", False, "budgets.max_budget"),
    Register("COUNTER_BITS", False, "counter_bits"),
    Register("STAT_TXNS_DONE", False, "stats.txns_done"),
    Register("STAT_TXNS_ABORTED", False, "stats.txns_aborted"),
    Register("STAT_FAULTS", False, "stats.faults"),
    Register("STAT_MAX_LATENCY", False, "stats.max_latency"),
    Register("STAT_LAST_FAULT_CYCLE", False, "stats.last_fault_cycle"),
)

REGISTER_MAP = {4 * i: reg for i, reg in enumerate(REGISTERS)}
OFFSET_OF = {reg.name: off for off, reg in REGISTER_MAP.items()}

_BUDGET_MIN_ONE = {"p1", "p3", "p5", "p6", "r1", "r3", "r5", "unit_budget_per_beat"}


class RegisterFile:
    def __init__(
        self,
        variant: Variant = Variant.FULL,
        budgets: Optional[BudgetConfig] = None,
        prescaler_step: int = 1,
        enable: bool = True,
        irq_enable: bool = True,
        log_level: LogLevel = LogLevel.ERRORS,
        max_outstanding: int = 16,
    ):
        self.variant = variant
        self.budgets = budgets if budgets is not None else BudgetConfig()
        self.budgets.validate()
        if prescaler_step not in PRESCALER_STEPS:
            raise ValueError(f"prescaler step {prescaler_step} not in {PRESCALER_STEPS}")
        self.prescaler_step = prescaler_step
        self.enable = bool(enable)
        self.irq_enable = bool(irq_enable)
        self.log_level = LogLevel(log_level)
        self.max_outstanding = max_outstanding
        self.stats = dict(txns_done=0, txns_aborted=0, faults=0, max_latency=0, last_fault_cycle=0)
        self.busy: Callable[[], bool] = lambda: False

    @property
    def counter_bits(self) -> int:
        return counter_bits(self.budgets.counter_range(self.max_outstanding), self.prescaler_step)

    # -- raw access --------------------------------------------------------

    def _get(self, field: str) -> int:
        if field.startswith("budgets."):
            return int(getattr(self.budgets, field.split(".", 1)[1]))
        if field.startswith("stats."):
            return int(self.stats[field.split(".", 1)[1]])
        value = getattr(self, field)
        if isinstance(value, Variant):
            return 1 if value is Variant.FULL else 0
        return int(value)

    def read_reg(self, offset: int) -> int:
        reg = REGISTER_MAP.get(offset)
        if reg is None:
            raise RegError(RegErrorKind.INVALID_OFFSET, f"no register at {offset:#x}")
        return self._get(reg.field)

    def write_reg(self, offset: int, value: int) -> None:
        reg = REGISTER_MAP.get(offset)
        if reg is None:
            raise RegError(RegErrorKind.INVALID_OFFSET, f"no register at {offset:#x}")
        if not reg.writable:
            raise RegError(RegErrorKind.INVALID_OFFSET, f"{reg.name} is read-only")
        value = int(value)
        f = reg.field
        if f == "prescaler_step":
            if value not in PRESCALER_STEPS:
                raise RegError(RegErrorKind.RANGE_VIOLATION, f"prescaler step {value}")
            if self.busy():
                raise RegError(RegErrorKind.IN_FLIGHT_RESTRICTION,
                               "prescaler change with transactions in flight")
            self.prescaler_step = value
        elif f in ("enable", "irq_enable"):
            if value not in (0, 1):
                raise RegError(RegErrorKind.RANGE_VIOLATION, f"{reg.name} takes 0 or 1")
            setattr(self, f, bool(value))
        elif f == "log_level":
            try:
                self.log_level = LogLevel(value)
            except ValueError:
                raise RegError(RegErrorKind.RANGE_VIOLATION, f"log level {value}") from None
        else:
            attr = f.split(".", 1)[1]
            lo = 1 if attr in _BUDGET_MIN_ONE else 0
            if value < lo:
                raise RegError(RegErrorKind.RANGE_VIOLATION, f"{reg.name} must be >= {lo}")
            old = getattr(self.budgets, attr)
            setattr(self.budgets, attr, value)
            try:
                self.budgets.check_fits(self.max_outstanding)
            except ValueError as exc:
                setattr(self.budgets, attr, old)
                raise RegError(RegErrorKind.RANGE_VIOLATION, str(exc)) from None

    # -- by name -----------------------------------------------------------

    def write_name(self, name: str, value) -> None:
        key = name.strip().upper()
        if key == "LOG_LEVEL" and not str(value).strip().isdigit():
            value = LogLevel[str(value).strip().upper()].value
        if key == "VARIANT":
            raise RegError(RegErrorKind.INVALID_OFFSET, "VARIANT is fixed at construction")
        if key not in OFFSET_OF:
            raise RegError(RegErrorKind.INVALID_OFFSET, f"unknown register {name!r}")
        self.write_reg(OFFSET_OF[key], int(value))

    def read_name(self, name: str) -> int:
        return self.read_reg(OFFSET_OF[name.strip().upper()])

    def snapshot(self) -> dict[str, int]:
        return {reg.name.lower(): self._get(reg.field) for reg in REGISTERS}


def register_names() -> list[str]:
    return [reg.name.lower() for reg in REGISTERS]


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse flat ``key=value`` lines; ``#`` starts a comment. Repeated keys accumulate
    into a newline-joined value (used for multiple ``fault=`` lines)."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lower()
        if key in out:
            out[key] = out[key] + "\n" + value
        else:
            out[key] = value
    return out


def load_kv_file(path) -> dict[str, str]:
    return parse_kv_text(Path(path).read_text())
