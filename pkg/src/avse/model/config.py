"""Architecture hyperparameters and their serialization.

A ModelConfig pins every extent in the network, so parameter shapes and
the total parameter count are pure functions of it.  Configs round-trip
through JSON for the training CLI and for embedding in checkpoints.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

from avse.errors import ConfigError


@dataclass(frozen=True)
class ConvSpec:
    """Channel counts, kernel, stride, and padding for one convolution."""

    in_channels: int
    out_channels: int
    kernel: tuple[int, ...]
    stride: tuple[int, ...]
    pad: tuple[int, ...]
    bias: bool = True

    def check(self, name: str) -> None:
        if self.in_channels < 1 or self.out_channels < 1:
            raise ConfigError(f"{name}: channel counts must be positive")
        n = len(self.kernel)
        if n not in (1, 3) or len(self.stride) != n or len(self.pad) != n:
            raise ConfigError(f"{name}: kernel/stride/pad must share 1 or 3 extents")
        if any(k < 1 for k in self.kernel) or any(s < 1 for s in self.stride):
            raise ConfigError(f"{name}: kernel and stride extents must be positive")
        if any(p < 0 for p in self.pad):
            raise ConfigError(f"{name}: padding must be non-negative")
        if any(s > k for s, k in zip(self.stride, self.kernel)):
            raise ConfigError(f"{name}: stride must not exceed kernel on any axis")


def _default_frontend() -> ConvSpec:
    return ConvSpec(1, 16, (5, 7, 7), (1, 2, 2), (2, 3, 3))


@dataclass(frozen=True)
class ModelConfig:
    """Every architectural hyperparameter of the enhancement network."""

    sample_rate_hz: int = 16000
    enc_channels: int = 256
    enc_kernel: int = 16
    enc_stride: int = 8
    visual_embed: int = 256
    vfn_frontend: ConvSpec = field(default_factory=_default_frontend)
    vfn_trunk_channels: tuple[int, ...] = (16, 32, 64, 128)
    vfn_blocks_per_stage: int = 2
    vfn_norm_groups: int = 8
    fusion_channels: int = 256
    sep_units: int = 4
    sep_hidden: int = 128
    chunk_len: int = 100
    chunk_hop: int = 50
    mask_activation: str = "sigmoid"
    frame_hw: tuple[int, int] = (32, 32)

    def __post_init__(self) -> None:
        self.check()

    def check(self) -> None:
        positive = {
            "sample_rate_hz": self.sample_rate_hz,
            "enc_channels": self.enc_channels,
            "enc_kernel": self.enc_kernel,
            "enc_stride": self.enc_stride,
            "visual_embed": self.visual_embed,
            "vfn_blocks_per_stage": self.vfn_blocks_per_stage,
            "vfn_norm_groups": self.vfn_norm_groups,
            "fusion_channels": self.fusion_channels,
            "sep_units": self.sep_units,
            "sep_hidden": self.sep_hidden,
            "chunk_len": self.chunk_len,
            "chunk_hop": self.chunk_hop,
        }
        for name, value in positive.items():
            if value < 1:
                raise ConfigError(f"{name} must be positive, got {value}")
        if self.enc_stride > self.enc_kernel:
            raise ConfigError(
                f"enc_stride {self.enc_stride} exceeds enc_kernel {self.enc_kernel}"
            )
        if self.chunk_len % 2 != 0 or self.chunk_hop != self.chunk_len // 2:
            raise ConfigError(
                f"chunk_hop must be chunk_len/2, got {self.chunk_hop} vs {self.chunk_len}"
            )
        if self.fusion_channels != self.enc_channels:
            raise ConfigError(
                f"fusion_channels {self.fusion_channels} must equal "
                f"enc_channels {self.enc_channels}"
            )
        self.vfn_frontend.check("vfn_frontend")
        if self.vfn_frontend.in_channels != 1:
            raise ConfigError("vfn_frontend must take a single input channel")
        if len(self.vfn_frontend.kernel) != 3:
            raise ConfigError("vfn_frontend must be a 3-D convolution")
        if not self.vfn_trunk_channels:
            raise ConfigError("vfn_trunk_channels must be non-empty")
        if self.vfn_frontend.out_channels != self.vfn_trunk_channels[0]:
            raise ConfigError(
                f"frontend output channels {self.vfn_frontend.out_channels} must match "
                f"first trunk stage {self.vfn_trunk_channels[0]}"
            )
        for c in self.vfn_trunk_channels:
            if c < 1:
                raise ConfigError("trunk channel counts must be positive")
            if c % self.vfn_norm_groups != 0:
                raise ConfigError(
                    f"vfn_norm_groups {self.vfn_norm_groups} does not divide "
                    f"trunk channels {c}"
                )
        if self.mask_activation != "sigmoid":
            raise ConfigError(f"unsupported mask activation {self.mask_activation!r}")
        if len(self.frame_hw) != 2 or any(v < 1 for v in self.frame_hw):
            raise ConfigError(f"frame_hw must be two positive extents, got {self.frame_hw}")

    def audio_frames(self, n_samples: int) -> int:
        """Encoder output length for an input of n_samples."""
        return (n_samples - self.enc_kernel) // self.enc_stride + 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(raw)
        if "vfn_frontend" in kwargs:
            fr = kwargs["vfn_frontend"]
            if not isinstance(fr, dict):
                raise ConfigError("vfn_frontend must be an object")
            spec_known = set(ConvSpec.__dataclass_fields__)
            spec_unknown = set(fr) - spec_known
            if spec_unknown:
                raise ConfigError(f"unknown vfn_frontend fields: {sorted(spec_unknown)}")
            fr = {k: tuple(v) if isinstance(v, list) else v for k, v in fr.items()}
            kwargs["vfn_frontend"] = ConvSpec(**fr)
        for key in ("vfn_trunk_channels", "frame_hw"):
            if key in kwargs and isinstance(kwargs[key], list):
                kwargs[key] = tuple(kwargs[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad config value: {exc}") from exc


def default_config() -> ModelConfig:
    """The full desk-scale network, about 4.6M parameters."""
    return ModelConfig()


def tiny_config() -> ModelConfig:
    """A miniature network small enough for finite-difference checks.

    About two thousand parameters; used by gradient checking and the
    overfit experiment.
    """
    return ModelConfig(
        enc_channels=8,
        visual_embed=8,
        vfn_frontend=ConvSpec(1, 2, (3, 5, 5), (1, 2, 2), (1, 2, 2)),
        vfn_trunk_channels=(2, 4),
        vfn_blocks_per_stage=1,
        vfn_norm_groups=2,
        fusion_channels=8,
        sep_units=1,
        sep_hidden=4,
        chunk_len=4,
        chunk_hop=2,
        frame_hw=(16, 16),
    )


def scaled_config(base: ModelConfig, **overrides) -> ModelConfig:
    """A copy of ``base`` with the given fields replaced (revalidated)."""
    return replace(base, **overrides)
