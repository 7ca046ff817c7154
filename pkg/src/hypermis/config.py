"""Run configuration shared by the solvers and the pipeline."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

# Decomposition constants calibrated once on n = 256 (see demos/calibrate_decomposition.py)
# and frozen: colors <= C_COL * log2 n, strong cluster diameter <= C_DIAM * log2 n.
C_COL = 1.75
C_DIAM = 1.25


@dataclass(frozen=True)
class SolverConfig:
    # equitability and marking exponents of log2 n'
    eq_exponent: float = 5
    idle_exponent: float = 4
    band_exponent: float = 8
    mark_cap_exponent: float = 6  # p0 = min(a_hat, e^-mark_cap_exponent)
    c_eq: int = 16
    inner_cap_factor: int = 1
    outer_cap: int = 10_000
    d: int = 6  # dimension bound for the GMIS solver
    c_msg: int = 8
    # decomposition
    c_decomp: float = 4.0
    m_decomp: int | None = None
    c_r: float = 4.0
    decomp_retries: int = 5

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "SolverConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)
