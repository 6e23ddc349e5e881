"""Multi-term fractional relaxation traces and recovery of the fractional orders."""

from ._fracorder import (
    AccuracyError,
    CheckResult,
    DomainError,
    ExampleCase,
    FitConfig,
    FitResult,
    IdentifiabilityError,
    KernelMethod,
    ModelKind,
    ModelParams,
    Mode,
    OrderSpec,
    PhysicalParams,
    ProblemCase,
    RankDeficiencyError,
    SpectralProblem,
    TraceSample,
    eval_model,
    example_single_mode,
    example_square,
    gamma,
    laplace_trace,
    minimize,
    ml2,
    mml,
    recover,
    run_checks,
    s1_kernel,
    s2_kernel,
    sample_trace,
    trace,
)

__all__ = [name for name in dir() if not name.startswith("_")]
