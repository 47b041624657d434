import argparse
import math
from dataclasses import dataclass, fields

from triple_correlation.density import DensityDeps
from triple_correlation.errors import ConfigError, DomainError
from triple_correlation.primes import MAX_PRIME_LIMIT, build_prime_table
from triple_correlation.util import JOBS_ENV_VAR, jobs_from_env
from triple_correlation.zeta import EulerMaclaurinParams


@dataclass
class EngineConfig(object):
    """Numerical settings shared by all commands.

    Args:
        T (float): Height
        prime_limit (int): Sieve bound for the prime products
        em_depth (int): Number of Euler-Maclaurin correction terms
        mask_band (float): Half-width of the excluded bands around the singular lines
        window (float): Extent of grid axes
        step (float): Grid spacing
        bin (float): Histogram bin width
        switch_radius (float): Radius around s = 1 inside which Laurent branches are used
        jobs (int): Parallel workers
    """

    T: float = 75000.0
    prime_limit: int = 100000
    em_depth: int = 12
    mask_band: float = 0.5
    window: float = 30.0
    step: float = 0.25
    bin: float = 0.2
    switch_radius: float = 1e-3
    jobs: int = 1

    def validate(self) -> "EngineConfig":
        """Check every field before any computation starts.

        Returns:
            EngineConfig: The unchanged config
        """
        for name in ("T", "mask_band", "window", "step", "bin", "switch_radius"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite, got {value}")
        if not self.T > 2 * math.pi:
            raise ConfigError(f"T must exceed 2pi, got {self.T}")
        if self.step > self.window:
            raise ConfigError(f"step {self.step} exceeds the window {self.window}")
        if self.bin >= self.window:
            raise ConfigError(f"bin {self.bin} must be smaller than the window {self.window}")
        if not 2 <= self.prime_limit <= MAX_PRIME_LIMIT:
            raise ConfigError(
                f"prime_limit must be in [2, {MAX_PRIME_LIMIT:g}], got {self.prime_limit}"
            )
        if self.jobs == 0:
            raise ConfigError("jobs must be non-zero")
        try:
            self.euler_maclaurin()
        except DomainError as e:
            raise ConfigError(str(e)) from e
        return self

    def euler_maclaurin(self) -> EulerMaclaurinParams:
        """Zeta accuracy parameters.

        Returns:
            EulerMaclaurinParams: The parameters
        """
        return EulerMaclaurinParams(
            bernoulli_depth=self.em_depth, switch_radius=self.switch_radius
        )

    def deps(self) -> DensityDeps:
        """Sieve the primes and bundle them with the zeta parameters.

        Returns:
            DensityDeps: Shared inputs of the density
        """
        return DensityDeps(build_prime_table(self.prime_limit), self.euler_maclaurin())

    @staticmethod
    def add_arguments(ap: argparse.ArgumentParser):
        """Register one kebab-case flag per field.

        Args:
            ap (argparse.ArgumentParser): Parser to add the flags to
        """
        defaults = EngineConfig()
        ap.add_argument("--T", type=float, default=defaults.T, help="Height")
        ap.add_argument(
            "--prime-limit",
            type=int,
            default=defaults.prime_limit,
            help="Sieve bound for prime sums and products",
        )
        ap.add_argument(
            "--em-depth",
            type=int,
            default=defaults.em_depth,
            help="Number of Euler-Maclaurin correction terms",
        )
        ap.add_argument(
            "--mask-band",
            type=float,
            default=defaults.mask_band,
            help="Half-width of the bands excluded around v1=0, v2=0, v1=v2",
        )
        ap.add_argument("--window", type=float, default=defaults.window, help="Grid extent")
        ap.add_argument("--step", type=float, default=defaults.step, help="Grid spacing")
        ap.add_argument("--bin", type=float, default=defaults.bin, help="Histogram bin width")
        ap.add_argument(
            "--switch-radius",
            type=float,
            default=defaults.switch_radius,
            help="Radius around s=1 for the Laurent branches of zeta'/zeta",
        )
        ap.add_argument(
            "--jobs",
            type=int,
            default=None,
            help=f"Parallel workers (default: ${JOBS_ENV_VAR} or 1)",
        )

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "EngineConfig":
        """Build a validated config from parsed arguments.

        Args:
            args (argparse.Namespace): Parsed arguments

        Returns:
            EngineConfig: The config
        """
        values = {f.name: getattr(args, f.name) for f in fields(cls) if f.name != "jobs"}
        jobs = args.jobs
        if jobs is None:
            try:
                jobs = jobs_from_env()
            except ValueError as e:
                raise ConfigError(f"${JOBS_ENV_VAR} must be an integer") from e
        return cls(jobs=jobs, **values).validate()
