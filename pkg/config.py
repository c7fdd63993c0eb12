"""Configuration management for the toolkit.

Instance-size guards live in ``GuardLimits``; every exhaustive search checks
them before it starts. Fields are read from ``PSEUDOSUB_*`` environment
variables, optionally through a ``.env`` file.
"""
from pathlib import Path
from typing import Literal
from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class GuardLimits(BaseModel):
    """Upper bounds on instance sizes for the exhaustive searches."""

    model_config = ConfigDict(frozen=True)

    agent_contracts: int = Field(5, ge=0, description="|X_a| bound for the sub-preference oracle")
    family: int = Field(12, ge=1, description="|A(P)| bound (including the empty set)")
    analysis_contracts: int = Field(8, ge=0, description="|X_a| bound for single-relation predicates")
    completion_contracts: int = Field(4, ge=0, description="|X_h| bound for the completion search")
    pairwise_contracts: int = Field(12, ge=0, description="|X| bound for allocation enumeration")
    corewise_contracts: int = Field(10, ge=0, description="|X| bound for corewise deviation search")
    refutation_entries: int = Field(64, ge=1, description="Max minimal sub-preferences listed in a refutation")
    synthesis_profiles: int = Field(20000, ge=1, description="Max co-agent profiles tried by the synthesis search")
    gen_agents: int = Field(8, ge=0, description="Max doctors or hospitals per generated market")
    gen_contracts: int = Field(12, ge=0, description="Max contracts per generated market")
    gen_chain_length: int = Field(12, ge=0, description="Max chain length per generated relation")


class Settings(BaseSettings):
    """Application settings."""

    # Output
    color: bool = False
    output_format: Literal["table", "json"] = "table"

    # Generation
    seed: int = 0

    # Paths
    fixtures_dir: Path = Path("./fixtures")
    logs_dir: Path = Path("./logs")
    log_level: str = "WARNING"

    guards: GuardLimits = Field(default_factory=GuardLimits)

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="PSEUDOSUB_",
        case_sensitive=False,
        extra="ignore",
    )

    def with_guards(self, **overrides) -> "Settings":
        """Return a copy with some guard limits replaced (``None`` values are ignored)."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        if not updates:
            return self
        return self.model_copy(update={"guards": self.guards.model_copy(update=updates)})


# Global settings instance
settings = Settings()
