from pathlib import Path
from typing import Any, Dict, Optional, Union

import tomlkit
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from twistred.core.exceptions import TwistredRuntimeError
from twistred.core.logging import logger


class VerifierConfig(BaseSettings):
    # relative tolerances of evaluated identities
    tol_single: float = Field(1e-10, gt=0)
    tol_double: float = Field(1e-8, gt=0)
    tol_veronese: float = Field(1e-7, gt=0)
    tol_torsion: float = Field(1e-8, gt=0)

    # sampling floors
    singular_floor: float = Field(1e-4, ge=0)  # distance to declared singular loci
    frame_floor: float = Field(1.0, gt=0)  # scale floor of restricted residuals

    zero_search_starts: int = Field(64, ge=1)
    max_resample: int = Field(200, ge=1)
    threads: int = Field(1, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="TWISTRED_",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="allow",
    )

    @field_validator("threads")
    def cap_threads(cls, v):
        return min(v, 64)

    def overrides(self) -> Dict[str, Any]:
        """Fields whose values did not come from the defaults."""
        return {
            name: getattr(self, name)
            for name in sorted(self.model_fields_set)
            if name in type(self).model_fields
        }


_config: Optional[VerifierConfig] = None


def load_verifier_config(
    toml_file: Optional[Union[Path, str]] = None,
    env_file: Optional[Union[Path, str]] = None,
    skip_if_loaded: bool = True,
) -> VerifierConfig:
    """Load configuration from environment, an optional .env file and TOML file.

    TOML values take precedence over the environment.
    """
    global _config
    if _config is not None:
        if skip_if_loaded:
            return _config
        logger.warning(
            "VerifierConfig already initialized. This would result in a second time loading."
        )

    file_values: Dict[str, Any] = {}
    if toml_file is not None:
        path = Path(toml_file)
        if not path.exists():
            raise TwistredRuntimeError(f"Config file {path} does not exist.")
        with open(path, "rb") as f:
            doc = tomlkit.load(f)
        # accept both a flat file and a [twistred] table
        table = doc.get("twistred", doc)
        file_values = {str(k): v for k, v in table.unwrap().items()}

    _config = VerifierConfig(_env_file=env_file, **file_values)  # type: ignore[call-arg]
    logger.debug(f"Loaded verifier config with overrides {_config.overrides()}")
    return _config


def get_verifier_config() -> VerifierConfig:
    """Get singleton instance of VerifierConfig, loading defaults on first use."""
    if _config is None:
        return load_verifier_config()
    return _config


def reset_verifier_config():
    global _config
    _config = None
